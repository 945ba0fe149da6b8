//! Slope intervals, the cover enumeration, level sequences and parameter
//! certification.

use super::{ensure, Budget, Runner, SuiteReport};
use crate::directions::*;
use crate::params::*;
use crate::permlang::compile::DEFAULT_COMPILE_BUDGET;
use crate::permlang::{compile_to_tm, parse, Env};
use crate::turing::toys;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn r(p: i64, q: i64) -> Rat {
    Rat::new(p.into(), q.into())
}

fn pow2_inv(n: usize) -> Rat {
    Rat::new(BigInt::one(), BigInt::one() << n)
}

#[derive(Debug, Clone)]
pub struct CoverOptions {
    pub depth: usize,
    pub eps: Vec<Rat>,
    pub seed: u64,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions { depth: 8, eps: vec![r(0, 1), r(1, 10), r(41, 100)], seed: 11 }
    }
}

fn cover_case(eps: &[Rat]) -> Result<serde_json::Value, String> {
    let rep = cover_check(eps);
    ensure(rep.in_domain, || "ε outside the domain".into())?;
    ensure(rep.matches, || format!("union differs from the prediction: {}", rep.to_json()))?;
    let sup = &rep.union[0].hi;
    let gap = (sup - &rep.limit_sup).abs();
    ensure(gap <= pow2_inv(eps.len()), || format!("sup {} is {} from the limit", fmt_rat(sup), fmt_rat(&gap)))?;
    Ok(json!({"words": rep.words, "interval": rep.union[0].to_json(), "limit_sup": fmt_rat(&rep.limit_sup)}))
}

/// The union of `Θ_ε` over all directive words is the predicted interval.
pub fn cover(o: &CoverOptions, budget: Budget) -> SuiteReport {
    let mut run = Runner::new("cover", budget);
    for e in &o.eps {
        for n in 0..=o.depth {
            run.check(format!("eps={} n={n}", fmt_rat(e)), || cover_case(&vec![e.clone(); n]));
        }
    }
    if !o.eps.is_empty() {
        run.check(format!("mixed eps n={}", o.depth), || {
            let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
            let eps: Vec<Rat> = (0..o.depth).map(|_| o.eps[rng.gen_range(0..o.eps.len())].clone()).collect();
            let mut v = cover_case(&eps)?;
            v["eps"] = json!(eps.iter().map(fmt_rat).collect::<Vec<_>>());
            Ok(v)
        });
    }
    run.check(format!("negative control eps=1/2 n={}", o.depth.max(8)), || {
        let rep = cover_check(&vec![r(1, 2); o.depth.max(8)]);
        ensure(!rep.in_domain && !rep.matches && rep.hole.is_some(), || "no hole past the bound".into())?;
        Ok(json!({"pieces": rep.union.len()}))
    });
    run.finish()
}

/// The realization recipe used by the pipeline checks.
fn reali_sequences() -> Sequences {
    make_sequences(Recipe::Reali { q: 2, n0: 3, r: 1 }, 8, 4, TimeModel(Poly::from_ints(&[0, 1])))
        .expect("valid recipe")
}

/// Nested intervals, contraction of the realization levels and their
/// agreement with the directive-word intervals.
pub fn ne_pipeline(depth: usize, seed: u64, budget: Budget) -> SuiteReport {
    let mut run = Runner::new("ne", budget);
    run.check("nested diameter", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let n = rng.gen_range(0..=depth);
            let levels: Vec<Level> = (0..n)
                .map(|_| {
                    let s = rng.gen_range(1..20i64);
                    Level::new(s, rng.gen_range(s..4 * s), rng.gen_range(-2..=2i64))
                })
                .collect();
            let want = levels.iter().fold(r(2, 1), |acc, l| acc * Rat::new(l.s.clone(), l.t.clone()));
            let got = nested_ne_interval(&levels).diameter();
            ensure(got == want, || format!("{levels:?}: diameter {}, expected {}", fmt_rat(&got), fmt_rat(&want)))?;
        }
        Ok(json!({"towers": 200}))
    });
    run.check("hieraB prefix ratio", || {
        let seq = make_sequences(Recipe::HieraB { q: 4, n0: 2 }, 8, 4, TimeModel(Poly::from_ints(&[0, 1])))
            .map_err(|e| e.to_string())?;
        for n in 0..=depth as u64 {
            let got = seq.ratio_prefix(n, None);
            ensure(got == pow2_inv(n as usize), || format!("n={n}: {}", fmt_rat(&got)))?;
        }
        ensure(ratio_product(&seq, depth as u64).verdict == RatioVerdict::TendsToZero, || "verdict".into())?;
        Ok(json!({"depth": depth}))
    });
    run.check("theta limit error", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps_set = [r(0, 1), r(1, 10), r(41, 100)];
        for _ in 0..100 {
            let word: Vec<Directive> = (0..depth).map(|_| DIRECTIVES[rng.gen_range(0..3)]).collect();
            let eps: Vec<Rat> = (0..depth).map(|_| eps_set[rng.gen_range(0..3)].clone()).collect();
            let (limit, _) = theta_limit(&word, &eps, depth).map_err(|e| e.to_string())?;
            for n in 0..=depth {
                let (mid, radius) = theta_limit(&word, &eps, n).map_err(|e| e.to_string())?;
                ensure(radius <= pow2_inv(n), || format!("n={n}: radius {}", fmt_rat(&radius)))?;
                ensure((&mid - &limit).abs() <= radius, || format!("n={n}: deeper midpoint escapes"))?;
            }
        }
        Ok(json!({"words": 100}))
    });
    run.check("reali levels equal theta", || {
        let seq = reali_sequences();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let n = rng.gen_range(0..=depth);
            let letters: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let word: Vec<Directive> = letters.iter().map(|&a| DIRECTIVES[a]).collect();
            // Implemented periods: T = S(D+W+1) + 4U + 1, ε = (4U + 1)/S.
            let levels: Vec<Level> = letters
                .iter()
                .enumerate()
                .map(|(i, &a)| Level::new(seq.s(i as u64), seq.t(i as u64, Some(a)), DIRECTIVES[a].0))
                .collect();
            let eps: Vec<Rat> = (0..n as u64).map(|i| seq.epsilon(i)).collect();
            let theta = theta_interval(&word, &eps).map_err(|e| e.to_string())?;
            ensure(nested_ne_interval(&levels) == theta, || format!("letters {letters:?}"))?;
            // The arithmetic identity with T = S(D+W+1) + 4U, ε = 4U/S.
            let levels: Vec<Level> = letters
                .iter()
                .enumerate()
                .map(|(i, &a)| {
                    let (d, w) = DIRECTIVES[a];
                    let (s, u) = (seq.s(i as u64), seq.u(i as u64));
                    Level::new(s.clone(), &s * (d + w + 1) + 4 * u, d)
                })
                .collect();
            let eps: Vec<Rat> = (0..n as u64).map(|i| Rat::new(4 * seq.u(i), seq.s(i))).collect();
            let theta = theta_interval(&word, &eps).map_err(|e| e.to_string())?;
            ensure(nested_ne_interval(&levels) == theta, || format!("letters {letters:?} with ε = 4U/S"))?;
        }
        Ok(json!({"words": 50}))
    });
    run.finish()
}

/// Recipes whose level inequalities all hold up to level 64.
pub fn certified_recipes() -> Vec<(&'static str, Sequences)> {
    let time = TimeModel(Poly::from_ints(&[0, 0, 1]));
    let (prog_len, head) = (4000, 40);
    vec![
        ("hieraA", make_sequences(Recipe::HieraA { q: 2, n0: 200, r: 4 }, prog_len, head, time.clone())),
        ("hieraB", make_sequences(Recipe::HieraB { q: 4, n0: 20 }, prog_len, head, time.clone())),
        ("reali", make_sequences(Recipe::Reali { q: 2, n0: 200, r: 4 }, prog_len, head, time)),
    ]
    .into_iter()
    .map(|(n, s)| (n, s.expect("valid recipe")))
    .collect()
}

/// Level inequalities of the recipes up to `max_n`, and the ratio verdicts.
pub fn sequences(max_n: u64, budget: Budget) -> SuiteReport {
    let mut run = Runner::new("sequences", budget);
    for (name, seq) in certified_recipes() {
        run.check(format!("{name} levels 0..={max_n}"), || {
            for n in 0..=max_n {
                let rep = seq.level_inequalities(n);
                ensure(rep.passed(), || {
                    format!("n={n}: {:?}", rep.failures().iter().map(|c| &c.name).collect::<Vec<_>>())
                })?;
            }
            let verdict = ratio_product(&seq, max_n).verdict;
            let expected = if matches!(seq.recipe, Recipe::HieraA { .. }) {
                RatioVerdict::BoundedBelow
            } else {
                RatioVerdict::TendsToZero
            };
            ensure(verdict == expected, || format!("ratio verdict {verdict:?}"))?;
            Ok(json!({"recipe": format!("{:?}", seq.recipe), "verdict": verdict}))
        });
    }
    run.check("hieraB at Q = 2 is short by one step", || {
        let seq = make_sequences(Recipe::HieraB { q: 2, n0: 20 }, 4000, 40, TimeModel(Poly::from_ints(&[0, 0, 1])))
            .map_err(|e| e.to_string())?;
        let c = seq.level_inequalities(0);
        let slack = c.get("T >= 4U + S + t0 + 1").map(|c| c.slack()).ok_or("missing constraint")?;
        ensure(slack == BigInt::from(-1), || format!("slack {slack}"))?;
        Ok(json!({"slack": -1}))
    });
    run.finish()
}

/// Steps of a compiled two-field exchange over growing layouts.
fn measured_samples() -> Result<Vec<(u64, u64)>, String> {
    let p = parse("fields A, B\nexch A, B").map_err(|e| e.to_string())?;
    let mut out = vec![];
    for k in [[1usize, 1], [2, 2], [3, 3]] {
        let tm = compile_to_tm(&p, &k, &Env::new(), DEFAULT_COMPILE_BUDGET).map_err(|e| e.to_string())?;
        out.push((crate::encoding::chi_len(&k) as u64, tm.forward_measure.time.max_steps as u64));
    }
    Ok(out)
}

/// Toy witnesses and the self-simulation search re-pass the inequalities.
pub fn params(budget: Budget) -> SuiteReport {
    let mut run = Runner::new("params", budget);
    for (name, p) in [("identity", toys::identity()), ("bit-flip", toys::bit_flip()), ("swap", toys::swap11())] {
        run.check(format!("toy {name}"), || {
            let mut out = vec![];
            for (kprime, t0) in [(vec![1usize, 1], 0u64), (vec![1, 1], 5)] {
                let w = solve_toy_unive(&kprime, &p, &p, t0).map_err(|e| e.to_string())?;
                let rep = w.check();
                ensure(rep.passed(), || format!("{:?}", rep.failures()))?;
                ensure(w.t == 4 * w.u + w.s + t0 + 1, || "T is not tight".into())?;
                out.push(json!({"S": w.s, "T": w.t, "U": w.u, "t0": t0}));
            }
            Ok(json!(out))
        });
    }
    run.check("self-simulation on measured fits", || {
        let samples = measured_samples()?;
        let p2 = fit_polynomial(&samples, 1).map_err(|e| e.to_string())?;
        for &(x, y) in &samples {
            ensure(p2.eval(&BigInt::from(x)) >= Rat::from_integer(y.into()), || {
                format!("the fit undershoots ({x}, {y})")
            })?;
        }
        let model = SelfSimModel {
            prog_len: 4000,
            rev_len: 4000,
            head_bound: 40,
            p1: Poly::from_ints(&[0, 1]),
            p2: p2.clone(),
            source: FitSource::Measured { samples: samples.clone() },
        };
        let target = r(9, 10);
        let SelfSimOutcome::Witness(w) = solve_self_sim(&model, &target, &SelfSimLimits::default()) else {
            return Err("no witness in the search box".into());
        };
        ensure(w.report.passed() && w.ratio >= target, || "witness fails its report".into())?;
        ensure(!w.certified, || "measured fits reported as certified".into())?;
        ensure(!w.executable, || "a work period reported as executable".into())?;
        Ok(json!({
            "fit": p2.to_string_poly(),
            "r": w.r,
            "S": w.s.to_string(),
            "T": w.t.to_string(),
            "ratio": fmt_rat(&w.ratio),
            "certified": w.certified,
            "executable": w.executable,
        }))
    });
    run.check("self-simulation infeasibility is reported", || {
        let model = SelfSimModel {
            prog_len: 4000,
            rev_len: 4000,
            head_bound: 40,
            p1: Poly::from_ints(&[0, 1]),
            p2: Poly(std::iter::repeat_n(Rat::zero(), 9).chain([Rat::one()]).collect()),
            source: FitSource::Supplied,
        };
        let limits = SelfSimLimits { max_r: 6, max_s0_bits: 16, max_s_bits: 80, ..Default::default() };
        match solve_self_sim(&model, &r(1, 2), &limits) {
            SelfSimOutcome::Infeasible(c) => Ok(json!({"reason": c.reason})),
            SelfSimOutcome::Witness(_) => Err("degree 9 time fit reported feasible".into()),
        }
    });
    run.finish()
}
