//! End-to-end simulations: the universal rule, towers of simulations,
//! period transfer and the halting reduction.

use super::rule_checks::NU2;
use super::{ensure, Budget, Runner, SuiteReport};
use crate::encoding::{bin_encode, enumerate_alphabet, sharp_pad, LengthVector, Letter, Word};
use crate::params::{solve_toy_unive, unive_lengths, ToyWitness};
use crate::ppa::{iterate, Automaton, PeriodicConfig, StepReject};
use crate::rules::gamma_u::head_field_len;
use crate::rules::library::{
    intru_fields, make_intru, make_unive, restrict_level, toy_hsim_colony, toy_hsim_layout, LevelSeqs, RuleInstance,
    UniveOptions as BuildOptions,
};
use crate::rules::reductions::HaltingReduction;
use crate::simulation::*;
use crate::turing::{toys, TmProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::str::FromStr;
use std::sync::Arc;

/// Toy machines on two one-symbol fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Toy {
    Identity,
    BitFlip,
    Swap,
}

impl FromStr for Toy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "identity" | "id" => Ok(Toy::Identity),
            "bit-flip" | "flip" => Ok(Toy::BitFlip),
            "swap" => Ok(Toy::Swap),
            _ => Err(format!("unknown toy `{s}` (identity, flip, swap)")),
        }
    }
}

impl Toy {
    pub fn program(self) -> TmProgram {
        match self {
            Toy::Identity => toys::identity(),
            Toy::BitFlip => toys::bit_flip(),
            Toy::Swap => toys::swap11(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniveOptions {
    pub toy: Toy,
    /// Perturbed encodings probed for completeness per direction vector.
    pub perturbations: usize,
    pub seed: u64,
}

impl Default for UniveOptions {
    fn default() -> Self {
        UniveOptions { toy: Toy::Swap, perturbations: 200, seed: 7 }
    }
}

/// `n` copies of `c` with one field of one cell replaced at random.
fn perturbations(c: &PeriodicConfig, k: &[usize], n: usize, seed: u64) -> Vec<PeriodicConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut x = c.clone();
            let cell = rng.gen_range(0..x.period());
            let f = rng.gen_range(0..k.len());
            x.cells[cell][f] = (0..k[f]).map(|_| rng.gen_range(0..5u8)).collect();
            x
        })
        .collect()
}

fn clause_json(r: &SimReport) -> serde_json::Value {
    let clauses: Vec<_> = r
        .clauses
        .iter()
        .map(|c| match &c.status {
            ClauseStatus::Pass => json!({"clause": c.clause, "status": "pass"}),
            ClauseStatus::Fail(m) => {
                json!({"clause": c.clause, "status": "fail", "counterexample": m})
            }
        })
        .collect();
    json!({"clauses": clauses, "survivors": r.survivors})
}

/// The universal rule simulates `σ^{-ν} ∘ f_p` for every `ν` on two fields.
pub fn unive(o: &UniveOptions, budget: Budget) -> SuiteReport {
    let mut r = Runner::new("unive", budget);
    let p = o.toy.program();
    let kprime = [1usize, 1];
    let w = match solve_toy_unive(&kprime, &p, &p, 0) {
        Ok(w) => w,
        Err(e) => {
            r.check("witness", || Err(e.to_string()));
            return r.finish();
        }
    };
    let spec = unive_spec(&w);
    let letters = enumerate_alphabet(&kprime);
    let configs = [
        PeriodicConfig::new(vec![letters[4].clone()]),
        PeriodicConfig::new(vec![letters[7].clone(), letters[20].clone()]),
    ];
    let build = BuildOptions { force: false, son_father_check: true };
    for nu in NU2 {
        r.check(format!("nu={nu:?}"), || {
            let f = make_unive(&w, &nu, &p, &p, build).map_err(|e| e.to_string())?;
            let g = simulated_rule(&nu, &kprime, &p, &p);
            let mut out = vec![];
            for (i, b) in configs.iter().enumerate() {
                let c = spec.encode(b).map_err(|e| e.to_string())?;
                let opts = VerifyOptions {
                    disjointness: true,
                    completeness: if i == 0 { perturbations(&c, &w.k, o.perturbations, o.seed) } else { vec![] },
                    completeness_periods: 2,
                };
                let rep = verify_simulation(&f.rule, &g, &spec, b, &opts);
                ensure(rep.passed(), || format!("b={}: {}", b.to_text(), rep.to_ndjson()))?;
                out.push(clause_json(&rep));
            }
            Ok(json!({"S": w.s, "T": w.t, "U": w.u, "configs": out}))
        });
    }
    r.check("negative control T = 4U + S", || {
        let short = ToyWitness { t: w.t - 1, k: unive_lengths(w.s, w.t - 1, w.measured.head_bound), ..w.clone() };
        let f =
            make_unive(&short, &[1, -1], &p, &p, BuildOptions { force: true, ..build }).map_err(|e| e.to_string())?;
        let g = simulated_rule(&[1, -1], &kprime, &p, &p);
        let rep = verify_simulation(&f.rule, &g, &unive_spec(&short), &configs[0], &VerifyOptions::default());
        ensure(!rep.passed(), || "the simulation holds one step below the bound".into())?;
        Ok(json!({"T": short.t, "report": clause_json(&rep)}))
    });
    r.check("negative control without son-father check", || {
        let f = make_unive(&w, &[1, -1], &p, &p, BuildOptions { son_father_check: false, ..build })
            .map_err(|e| e.to_string())?;
        let g = simulated_rule(&[1, -1], &kprime, &p, &p);
        let c = spec.encode(&configs[0]).map_err(|e| e.to_string())?;
        let opts = VerifyOptions {
            disjointness: false,
            completeness: perturbations(&c, &w.k, o.perturbations, o.seed),
            completeness_periods: 2,
        };
        let rep = verify_simulation(&f.rule, &g, &spec, &configs[0], &opts);
        let failed = rep.clauses.iter().any(|c| c.clause == "completeness" && c.status != ClauseStatus::Pass);
        ensure(failed, || "completeness holds without the check".into())?;
        Ok(clause_json(&rep))
    });
    r.finish()
}

/// `σ^d ∘ G`.
struct Shifted<'a> {
    inner: &'a dyn Automaton,
    d: i64,
}

impl Automaton for Shifted<'_> {
    fn step_forward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        Ok(self.inner.step_forward(c)?.shift(self.d))
    }
    fn step_backward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        self.inner.step_backward(&c.shift(-self.d))
    }
    fn local_rule(&self, _: &[Word], _: &[Word], _: &[Word]) -> Option<Letter> {
        None
    }
}

/// On a two-level tower with a macro-shift at level 0, the composed
/// offset is the one measured on the configurations.
pub fn composition(budget: Budget) -> SuiteReport {
    let mut r = Runner::new("composition", budget);
    let p = toys::swap11();
    let Ok(w) = solve_toy_unive(&[1, 1], &p, &p, 0) else {
        r.check("witness", || Err("no toy witness".into()));
        return r.finish();
    };
    let nu = [1i8, 0];
    let build = BuildOptions { force: false, son_father_check: true };
    for (d0, t1, q1) in [(1i64, 2u64, 1i64), (2, 2, -1), (1, 3, 2)] {
        r.check(format!("D0={d0} T1={t1} Q1={q1}"), || {
            let f = make_unive(&w, &nu, &p, &p, build).map_err(|e| e.to_string())?;
            let g = simulated_rule(&nu, &[1, 1], &p, &p);
            let l = enumerate_alphabet(&[1, 1]);
            let b = PeriodicConfig::new(vec![l[2].clone(), l[9].clone(), l[17].clone()]);
            let c = unive_spec(&w).encode(&b).map_err(|e| e.to_string())?;
            let h1 = Shifted { inner: &g, d: d0 };
            let spec0 = SimulationSpec { q: d0 * w.s as i64, ..unive_spec(&w) };
            let spec1 = SimulationSpec::new(1, t1, q1, Arc::new(IdentityCodec::default()));
            let comp = compose_specs(&[spec0.clone(), spec1]);
            let levels = [(spec0.s, spec0.t, spec0.q), (1, t1, q1)];
            ensure(comp.q == geometric_offset(&levels), || {
                format!("composed Q = {}, geometric {}", comp.q, geometric_offset(&levels))
            })?;
            ensure((comp.s, comp.t) == (w.s, w.t * t1), || "composed S, T".into())?;
            let h2b = iterate(&h1, &b, t1 as i64).map_err(|e| e.to_string())?.shift(q1);
            let end = iterate(&f.rule, &c, comp.t as i64).map_err(|e| e.to_string())?;
            let period = end.period() as i64;
            let hits: Vec<i64> = (0..period).filter(|&s| comp.decode(&end.shift(s)).is_ok_and(|x| x == h2b)).collect();
            ensure(hits == vec![comp.q.rem_euclid(period)], || {
                format!("measured offsets {hits:?}, composed {}", comp.q)
            })?;
            let other = (spec0.q + q1 * spec0.t as i64).rem_euclid(period);
            ensure(other != hits[0], || "the reversed convention also matches".into())?;
            Ok(json!({"S": comp.s, "T": comp.t, "Q": comp.q, "measured": hits[0]}))
        });
    }
    r.finish()
}

/// Periods `(k, l)` of `b` correspond to periods `(kS, lT)` of its
/// encoding; the search runs up to `t_multiple` work periods.
pub fn periods(t_multiple: usize, budget: Budget) -> SuiteReport {
    let mut r = Runner::new("periods", budget);
    let p = toys::swap11();
    let Ok(w) = solve_toy_unive(&[1, 1], &p, &p, 0) else {
        r.check("witness", || Err("no toy witness".into()));
        return r.finish();
    };
    let spec = unive_spec(&w);
    let max_t = t_multiple * w.t as usize;
    let l = enumerate_alphabet(&[1, 1]);
    for nu in [[0i8, 0], [1, 0], [1, -1], [-1, 1]] {
        r.check(format!("nu={nu:?}"), || {
            let f = make_unive(&w, &nu, &p, &p, BuildOptions { force: false, son_father_check: true })
                .map_err(|e| e.to_string())?;
            let g = simulated_rule(&nu, &[1, 1], &p, &p);
            let b = PeriodicConfig::new(vec![l[1].clone(), l[5].clone()]);
            let pt = period_transfer_check(&f.rule, &g, &spec, &b, max_t).map_err(|e| e.to_string())?;
            ensure(!pt.budget_exhausted, || "period search ran out of steps".into())?;
            ensure(pt.matches, || format!("simulated {:?}, simulating {:?}", pt.simulated, pt.simulating))?;
            let c = spec.encode(&b).map_err(|e| e.to_string())?;
            let x = iterate(&f.rule, &c, 5).map_err(|e| e.to_string())?.shift(3);
            let tower = [
                TowerLevel { rule: &f.rule, spec: spec.clone() },
                TowerLevel { rule: &g, spec: SimulationSpec::new(1, 1, 0, Arc::new(IdentityCodec::default())) },
            ];
            let phases = nested_rock_membership(&tower, &x, 2).map_err(|e| format!("{e:?}"))?;
            ensure(phases == vec![(3, 5), (0, 0)], || format!("phases {phases:?}"))?;
            Ok(json!({"simulated": pt.simulated, "simulating": pt.simulating, "phases": phases}))
        });
    }
    r.finish()
}

#[derive(Debug, Clone)]
pub struct HaltingOptions {
    /// The machine halts after exactly `h` steps on `0^n`.
    pub h: usize,
    /// Levels instantiated as rules.
    pub levels: Vec<u64>,
}

impl Default for HaltingOptions {
    fn default() -> Self {
        HaltingOptions { h: 6, levels: vec![0, 5, 6, 9] }
    }
}

/// A level-`n+1` letter with the level constants and empty other fields.
fn upper_letter(k: &LengthVector, labels: &[&str], code: &Word, n: u64) -> Letter {
    let mut u: Letter = k.iter().map(|&l| vec![4; l]).collect();
    let at = |l: &str| labels.iter().position(|x| *x == l).expect("label present");
    u[at("Tape")] = vec![3];
    u[at("Level")] = sharp_pad(k[at("Level")], &bin_encode((n + 1).into())).expect("level fits");
    u[at("Prog")] = code.clone();
    u[at("RevProg")] = code.clone();
    for f in ["OTape_-1", "OTape", "OTape_+1"] {
        u[at(f)] = vec![0];
    }
    u
}

/// `α_n` is defined exactly below the halting time, and level-`n`
/// instances reject within two work periods from it on.
pub fn halting(o: &HaltingOptions, budget: Budget) -> SuiteReport {
    let mut r = Runner::new("halting", budget);
    let red = HaltingReduction::new(toys::halts_at(o.h));
    let depth = o.levels.iter().copied().max().unwrap_or(0).max(o.h as u64) + 1;
    r.check("alpha domains", || {
        for n in 0..=depth {
            ensure(red.alpha(n).is_some() == (n < o.h as u64), || {
                format!("alpha_{n} defined = {}", red.alpha(n).is_some())
            })?;
        }
        ensure(red.first_undefined(depth + 1) == Some(o.h as u64), || "first undefined level".into())?;
        Ok(red.manifest(depth + 1))
    });
    let p = toys::trivial_identity();
    let code = p.encode();
    let (head, pl) = (head_field_len(&p), code.len());
    let (s, t) = toy_hsim_colony(depth, 1, head, pl, Some(1));
    let k = move |n: u64| toy_hsim_layout(n, s, t, head, pl, Some(1));
    let seqs = LevelSeqs::constant(move |n| Some(k(n)), s, t, 1);
    let inst: RuleInstance = match make_intru(&seqs, red.perm_seq()) {
        Ok(i) => i,
        Err(e) => {
            r.check("build", || Err(e.to_string()));
            return r.finish();
        }
    };
    let labels: Vec<&str> = intru_fields().iter().map(|f| f.0).collect();
    for &n in &o.levels {
        r.check(format!("level {n}"), || {
            let rule = restrict_level(inst.clone(), n, k(n), &code, &code).rule;
            let at = |l: &str| labels.iter().position(|x| *x == l).expect("label present");
            let level = sharp_pad(k(n)[at("Level")], &bin_encode(n.into())).map_err(|e| e.to_string())?;
            let mut codec = ColonyCodec::from_labels(&labels, k(n), s as usize, 0, k(n + 1))
                .with_constant(at("Level"), level)
                .with_constant(at("Prog"), code.clone())
                .with_constant(at("RevProg"), code.clone());
            for f in ["OTape_-1", "OTape", "OTape_+1"] {
                codec = codec.with_constant(at(f), vec![0]);
            }
            let b = PeriodicConfig::new(vec![upper_letter(&k(n + 1), &labels, &code, n)]);
            let c = codec.encode(&b).map_err(|e| e.to_string())?;
            let run = iterate(&rule, &c, 2 * t as i64);
            if n < o.h as u64 {
                let end = run.map_err(|e| format!("rejects below the halting time: {e}"))?;
                let d = codec.decode(&end).map_err(|e| e.to_string())?;
                ensure(d == b, || "two work periods do not return to the encoding".into())?;
                Ok(json!({"S": s, "T": t, "outcome": "runs"}))
            } else {
                let e = run.err().ok_or("runs two work periods at or above the halting time")?;
                ensure(e.time < 2 * t as i64, || format!("rejected at {}", e.time))?;
                Ok(json!({"S": s, "T": t, "outcome": "rejects", "time": e.time}))
            }
        });
    }
    r.finish()
}
