//! Embedding fidelity and reversibility of every library rule.

use super::{ensure, Budget, Runner, SuiteReport};
use crate::encoding::{
    bin_encode, chi_encode, chi_len, enumerate_alphabet, sharp_pad, LengthVector, Letter, Word, BLANK,
};
use crate::params::{solve_toy_unive, ToyWitness, HSIM_LABELS, SELF_LABELS, UNIVE_LABELS};
use crate::ppa::{Automaton, PeriodicConfig};
use crate::rules::gamma_u::{embed_config, read_represented, tm_embedding};
use crate::rules::library::*;
use crate::rules::reductions::HaltingReduction;
use crate::simulation::{Codec, ColonyCodec};
use crate::turing::{tm_step, toys, TmConfig, TmProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct GammaOptions {
    pub machines: usize,
    pub steps: usize,
    pub max_states: usize,
    /// Bound on `|Chi(u)|` of the inputs.
    pub max_cells: usize,
    pub seed: u64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions { machines: 100, steps: 30, max_states: 4, max_cells: 10, seed: 1 }
    }
}

/// A random input letter with `|Chi(u)| <= max_cells`.
pub(crate) fn random_input(rng: &mut ChaCha8Rng, max_cells: usize) -> Letter {
    loop {
        let k: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..=2)).collect();
        if chi_len(&k) <= max_cells {
            return k.iter().map(|&l| (0..l).map(|_| rng.gen_range(0..5u8)).collect()).collect();
        }
    }
}

/// Compares the embedding with the interpreter for `steps` steps.
fn compare_embedding(p: &TmProgram, u: &Letter, steps: usize) -> Result<usize, String> {
    let (period, offset) = (2 * steps + 64, steps as i64 + 8);
    let rule = tm_embedding(Arc::new(p.clone()));
    let mut tm = TmConfig::initial(u);
    let mut c = embed_config(p, &tm, period, offset);
    for t in 1..=steps {
        let next_c = rule.step_forward(&c);
        let Some(next_tm) = tm_step(p, &tm) else {
            return ensure(next_c.is_err(), || format!("t={t}: interpreter rejects, embedding steps")).map(|_| t);
        };
        tm = next_tm;
        c = next_c.map_err(|e| format!("t={t}: embedding rejects: {e}"))?;
        let rep = read_represented(p, &c).ok_or_else(|| format!("t={t}: no represented configuration"))?;
        let want: Vec<u8> = (0..period as i64).map(|n| tm.tape.get(n - offset)).collect();
        ensure(rep.tape == want, || format!("t={t}: tape differs"))?;
        match rep.head {
            Some((j, q)) => ensure((j as i64 - offset, &q) == (tm.head, &tm.state), || format!("t={t}: head differs"))?,
            None => ensure(tm.accepted(), || format!("t={t}: head vanished before acceptance"))?,
        }
    }
    Ok(steps)
}

/// The real-time embedding against the direct interpreter.
pub fn gamma_u(o: &GammaOptions, budget: Budget) -> SuiteReport {
    let mut r = Runner::new("gammaU", budget);
    r.check("represents", || {
        let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
        let mut compared = 0;
        for m in 0..o.machines {
            let states = rng.gen_range(1..=o.max_states);
            let p = toys::random_machine(&mut rng, states);
            let u = random_input(&mut rng, o.max_cells);
            compared += compare_embedding(&p, &u, o.steps).map_err(|e| format!("machine {m}: {e}\n{}", p.to_text()))?;
        }
        Ok(json!({"machines": o.machines, "steps_compared": compared, "mismatches": 0}))
    });
    r.finish()
}

#[derive(Debug, Clone)]
pub struct ReversibilityOptions {
    /// Defined samples per rule.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ReversibilityOptions {
    fn default() -> Self {
        ReversibilityOptions { samples: 500, seed: 2 }
    }
}

/// Follows the orbit of `c` while defined, checking each step.
fn orbit(
    rule: &dyn Automaton,
    mut c: PeriodicConfig,
    steps: usize,
    count: &mut usize,
    want: usize,
) -> Result<(), String> {
    for _ in 0..steps {
        if *count >= want {
            break;
        }
        let Ok(n) = rule.step_forward(&c) else { break };
        let back = rule.step_backward(&n).map_err(|e| format!("backward rejects an image: {e}\n{}", c.to_text()))?;
        ensure(back == c, || format!("backward(forward(c)) differs from c\n{}", c.to_text()))?;
        *count += 1;
        c = n;
    }
    Ok(())
}

/// Samples orbits from `starts` until `want` steps were checked.
fn sample(
    rule: &dyn Automaton,
    want: usize,
    steps: usize,
    mut starts: impl FnMut(usize) -> Option<PeriodicConfig>,
) -> Result<serde_json::Value, String> {
    let mut count = 0;
    let mut i = 0;
    while count < want {
        let Some(c) = starts(i) else { break };
        orbit(rule, c, steps, &mut count, want)?;
        i += 1;
        if i > 50 * want {
            break;
        }
    }
    ensure(count >= want, || format!("only {count} defined samples"))?;
    Ok(json!({"samples": count, "starts": i}))
}

fn pad(l: usize, v: u64) -> Word {
    sharp_pad(l, &bin_encode(v.into())).expect("field long enough")
}

fn norm(v: u64) -> usize {
    bin_encode(v.into()).len()
}

fn random_b(rng: &mut ChaCha8Rng, kprime: &[usize]) -> PeriodicConfig {
    let letters = enumerate_alphabet(kprime);
    PeriodicConfig::new((0..rng.gen_range(1..=3)).map(|_| letters[rng.gen_range(0..letters.len())].clone()).collect())
}

fn colony(u: &[Word], s: usize) -> PeriodicConfig {
    let mut w = chi_encode(u);
    w.resize(s, BLANK);
    PeriodicConfig::new(w.iter().enumerate().map(|(j, &x)| vec![pad(norm(s as u64), j as u64), vec![x]]).collect())
}

fn toy_witness() -> (ToyWitness, TmProgram) {
    let p = toys::swap11();
    (solve_toy_unive(&[1, 1], &p, &p, 0).expect("toy witness"), p)
}

/// A hierarchical instance with its codec starting one step into the
/// work period, so the son-father checks at `Clock = 0` are skipped.
struct Lifted {
    rule: crate::ppa::PpaRule,
    codec: ColonyCodec,
    t: u64,
}

fn lifted(inst: RuleInstance, labels: &[&str], k: LengthVector, s: u64, t: u64, consts: &[(&str, Word)]) -> Lifted {
    let mut codec = ColonyCodec::from_labels(labels, k, s as usize, 1, vec![1, 1]);
    for (l, w) in consts {
        let i = labels.iter().position(|x| x == l).expect("label present");
        codec = codec.with_constant(i, w.clone());
    }
    Lifted { rule: inst.rule, codec, t }
}

fn hierarchical(w: &ToyWitness, p: &TmProgram) -> Vec<(&'static str, Lifted)> {
    let code = p.encode();
    let pl = code.len();
    let (s, t, u) = (w.s, w.t, w.u);
    let progs = |v: &mut Vec<(&'static str, Word)>| {
        v.push(("Prog", code.clone()));
        v.push(("RevProg", code.clone()));
    };
    let seqs = LevelSeqs::constant(|_| Some(vec![1, 1]), s, t, u);
    let mut out = Vec::new();

    let mut k = w.k.clone();
    k.extend([norm(s), norm(t), norm(u), pl, pl]);
    let inst = restrict_self(make_self().expect("self"), k.clone(), s, t, u, &code, &code);
    let mut c =
        vec![("MAddr", bin_encode(s.into())), ("MClock", bin_encode(t.into())), ("Alarm", bin_encode(u.into()))];
    progs(&mut c);
    out.push(("self", lifted(inst, &SELF_LABELS, k, s, t, &c)));

    let mut k = w.k.clone();
    k.extend([1, pl, pl]);
    let inst = restrict_level(make_hsim(&seqs).expect("hsim"), 1, k.clone(), &code, &code);
    let mut c = vec![("Level", vec![1])];
    progs(&mut c);
    out.push(("hsim", lifted(inst, &HSIM_LABELS, k, s, t, &c)));

    let labels: Vec<&str> = intru_fields().iter().map(|f| f.0).collect();
    let mut k = w.k.clone();
    k.extend([1, pl, pl, 1, 1, 1]);
    let alpha = HaltingReduction::new(toys::runaway()).perm_seq();
    let inst = restrict_level(make_intru(&seqs, alpha).expect("intru"), 1, k.clone(), &code, &code);
    let mut c = vec![("Level", vec![1]), ("OTape_-1", vec![0]), ("OTape", vec![0]), ("OTape_+1", vec![0])];
    progs(&mut c);
    out.push(("intru", lifted(inst, &labels, k, s, t, &c)));

    let labels: Vec<&str> = syncomp_fields().iter().map(|f| f.0).collect();
    let mut k = w.k.clone();
    k.extend([0, 0, pl, pl]);
    let mut inst = make_syncomp(&seqs, &toys::runaway()).expect("syncomp");
    inst.rule = inst.rule.with_alphabet(k.clone());
    let mut c = vec![("MHist", vec![]), ("MHist_+1", vec![])];
    progs(&mut c);
    out.push(("syncomp", lifted(inst, &labels, k, s, t, &c)));

    // Directive letter 0 is (D, W) = (0, 1): T = 2S + 4U + 1.
    let tr = 2 * s + 4 * u + 1;
    let labels: Vec<&str> = reali_fields().iter().map(|f| f.0).collect();
    let mut k = crate::params::unive_lengths(s, tr, w.measured.head_bound);
    k.extend([0, 1, 1, pl, pl]);
    let mut inst = make_reali(&seqs, &toys::runaway()).expect("reali");
    inst.rule = inst.rule.with_alphabet(k.clone());
    let mut c = vec![("MHist", vec![]), ("MShift", vec![0]), ("MShift_+1", vec![0])];
    progs(&mut c);
    out.push(("reali", lifted(inst, &labels, k, s, tr, &c)));
    out
}

/// `stepBackward ∘ stepForward = id` on defined samples of every rule.
pub fn reversibility(o: &ReversibilityOptions, budget: Budget) -> SuiteReport {
    let mut r = Runner::new("reversibility", budget);
    let want = o.samples;
    let seed = o.seed;

    r.check("gammaU", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut count = 0;
        for _ in 0..50 * want {
            if count >= want {
                break;
            }
            let states = rng.gen_range(1..=4);
            let p = toys::random_machine(&mut rng, states);
            let u = random_input(&mut rng, 10);
            let c = embed_config(&p, &TmConfig::initial(&u), 64, 20);
            orbit(&tm_embedding(Arc::new(p)), c, 30, &mut count, want)?;
        }
        ensure(count >= want, || format!("only {count} defined samples"))?;
        Ok(json!({"samples": count}))
    });

    r.check("coordi", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rules: Vec<_> = (1..=8u64).flat_map(|s| (1..=8u64).map(move |t| (s, t))).collect();
        let mut count = 0;
        for (s, t) in rules {
            let inst = make_coordi(s, t).map_err(|e| e.to_string())?;
            let (ks, kt) = (norm(s), norm(t));
            let (phase, clock) = (rng.gen_range(0..s), rng.gen_range(0..t));
            let p = s * rng.gen_range(1..=2);
            let c = PeriodicConfig::new(
                (0..p)
                    .map(|n| vec![pad(ks, (n + phase) % s), pad(ks, (n + phase) % s), pad(kt, clock), pad(kt, clock)])
                    .collect(),
            );
            orbit(&inst.rule, c, 2 * t as usize, &mut count, usize::MAX)?;
        }
        ensure(count >= want, || format!("only {count} defined samples"))?;
        Ok(json!({"samples": count}))
    });

    let (w, p) = toy_witness();
    let compute_labels = ["Addr", "Addr_+1", "Clock", "Clock_+1", "Tape", "Head_-1", "Head_+1", "NTape"];

    r.check("compute", || {
        let inst = make_compute(&ComputeParams { s: w.s, t: w.t, u: w.u, t0: 0, p: p.clone(), pinv: p.clone() })
            .map_err(|e| e.to_string())?;
        let k = inst.rule.alphabet.clone().expect("alphabet");
        let codec = ColonyCodec::from_labels(&compute_labels, k, w.s as usize, 0, vec![1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample(&inst.rule, want, w.t as usize, |_| codec.encode(&random_b(&mut rng, &[1, 1])).ok())
    });

    r.check("shift", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, t) = (16, 18);
        let labels = ["Addr", "Addr_+1", "Clock", "Clock_+1", "Tape", "Tape_-1", "Tape_+1"];
        let nu = [rng.gen_range(-1..=1i8), rng.gen_range(-1..=1i8)];
        let inst = make_shift(&nu, &[1, 1], s, t, 0).map_err(|e| e.to_string())?;
        let k = inst.rule.alphabet.clone().expect("alphabet");
        let codec = ColonyCodec::from_labels(&labels, k, s as usize, 0, vec![1, 1]);
        sample(&inst.rule, want, t as usize, |_| codec.encode(&random_b(&mut rng, &[1, 1])).ok())
    });

    r.check("unive", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nu = [rng.gen_range(-1..=1i8), rng.gen_range(-1..=1i8)];
        let inst = make_unive(&w, &nu, &p, &p, UniveOptions { force: false, son_father_check: true })
            .map_err(|e| e.to_string())?;
        let codec = ColonyCodec::from_labels(&UNIVE_LABELS, w.k.clone(), w.s as usize, 0, vec![1, 1]);
        sample(&inst.rule, want, w.t as usize, |_| codec.encode(&random_b(&mut rng, &[1, 1])).ok())
    });

    r.check("chekka", || {
        let kprime = [2usize, 2];
        let s = chi_len(&kprime);
        let inst = make_chekka(&kprime, s as u64).map_err(|e| e.to_string())?;
        let letters = enumerate_alphabet(&kprime);
        sample(&inst.rule, want, 1, |i| letters.get(i).map(|u| colony(u, s)))
    });

    r.check("hier", || {
        let kprime = [2usize, 2];
        let s = chi_len(&kprime);
        let letters = enumerate_alphabet(&kprime);
        let mut count = 0;
        for (i, t) in [(1usize, vec![3u8]), (0, vec![])] {
            let inst = make_hier(&kprime, s as u64, i, &t).map_err(|e| e.to_string())?;
            for u in &letters {
                orbit(&inst.rule, colony(u, s), 1, &mut count, usize::MAX)?;
            }
        }
        ensure(count >= want, || format!("only {count} defined samples"))?;
        Ok(json!({"samples": count}))
    });

    for (name, l) in hierarchical(&w, &p) {
        r.check(name, || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = sample(&l.rule, want, l.t as usize, |_| l.codec.encode(&random_b(&mut rng, &[1, 1])).ok())?;
            Ok(json!({"samples": v["samples"], "starts": v["starts"], "S": w.s, "T": l.t}))
        });
    }
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_suite_small() {
        let rep = gamma_u(&GammaOptions { machines: 5, steps: 10, ..Default::default() }, Budget::unlimited());
        assert!(rep.passed(), "{}", rep.to_ndjson());
    }

    #[test]
    fn a_broken_inverse_is_caught() {
        use crate::ppa::{FnPermutation, PpaRule};
        let fwd = |u: &[Word]| Some(vec![vec![(u[0][0] + 1) % 5]]);
        let bwd = |u: &[Word]| Some(u.to_vec());
        let rule = PpaRule::new("broken", vec![0], Arc::new(FnPermutation::new(fwd, bwd))).with_alphabet(vec![1]);
        let mut n = 0;
        assert!(orbit(&rule, PeriodicConfig::new(vec![vec![vec![0]]]), 3, &mut n, 10).is_err());
    }
}
