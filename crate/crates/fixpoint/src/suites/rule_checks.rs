//! Coordinates, computation, macro-shift, son-father checks and the
//! program compiler.

use super::{ensure, Budget, Runner, SuiteReport};
use crate::encoding::{
    bin_decode, bin_encode, chi_encode, chi_len, enumerate_alphabet, sharp_pad, sharp_strip, Letter, Word, BLANK,
};
use crate::params::solve_toy_unive;
use crate::permlang::compile::{step_bound, DEFAULT_COMPILE_BUDGET};
use crate::permlang::{compile_to_tm, eval_program, parse, Env, PermProgram};
use crate::ppa::{iterate, PeriodicConfig, Permutation};
use crate::rules::library::{make_chekka, make_compute, make_coordi, make_hier, make_shift, ComputeParams};
use crate::simulation::{Codec, ColonyCodec};
use crate::turing::{tm_run, toys, RunOutcome, TmProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::sync::Arc;

fn norm(n: u64) -> usize {
    bin_encode(n.into()).len()
}

fn pad(l: usize, v: u64) -> Word {
    sharp_pad(l, &bin_encode(v.into())).expect("field long enough")
}

/// Value of a padded field without leading zeros.
fn canonical(w: &[u8]) -> Option<u64> {
    let s = sharp_strip(w).ok()?;
    if s.first() == Some(&0) {
        return None;
    }
    bin_decode(s).ok().map(|v| v as u64)
}

/// Value of a padded field, leading zeros allowed.
fn value(w: &[u8]) -> Option<u64> {
    sharp_strip(w).ok().and_then(|s| bin_decode(s).ok()).map(|v| v as u64)
}

/// `F²` defined: consistent values, canonical incremented fields and a
/// single grid.
fn koo_oracle(c: &PeriodicConfig, s: u64, t: u64) -> bool {
    let p = c.period();
    let mut addr = Vec::with_capacity(p);
    let mut clock = None;
    for u in &c.cells {
        let (Some(a), Some(a1), Some(k), Some(k1)) =
            (value(&u[0]), canonical(&u[1]), canonical(&u[2]), canonical(&u[3]))
        else {
            return false;
        };
        if a != a1 || k != k1 || a1 >= s || k >= t || clock.is_some_and(|x| x != k) {
            return false;
        }
        clock = Some(k);
        addr.push(a);
    }
    (0..p).all(|n| addr[n] == (addr[(n + p - 1) % p] + 1) % s)
}

fn random_coordi(rng: &mut ChaCha8Rng, s: u64, t: u64) -> PeriodicConfig {
    let (ks, kt) = (norm(s), norm(t));
    let p = rng.gen_range(1..=2 * s as usize + 1);
    let phase = rng.gen_range(0..s);
    let clock = rng.gen_range(0..t);
    let mut cells: Vec<Letter> = (0..p as u64)
        .map(|n| vec![pad(ks, (n + phase) % s), pad(ks, (n + phase) % s), pad(kt, clock), pad(kt, clock)])
        .collect();
    for _ in 0..rng.gen_range(0..4) {
        let n = rng.gen_range(0..p);
        let f = rng.gen_range(0..4);
        let l = if f < 2 { ks } else { kt };
        cells[n][f] = if rng.gen_bool(0.5) {
            (0..l).map(|_| rng.gen_range(0..5u8)).collect()
        } else {
            pad(l, rng.gen_range(0..(1u64 << l)))
        };
    }
    PeriodicConfig::new(cells)
}

#[derive(Debug, Clone)]
pub struct KooOptions {
    pub max_s: u64,
    pub max_t: u64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for KooOptions {
    fn default() -> Self {
        KooOptions { max_s: 8, max_t: 8, samples: 300, seed: 3 }
    }
}

/// Two steps of the coordinate rule are defined exactly on grids.
pub fn koo(o: &KooOptions, budget: Budget) -> SuiteReport {
    let mut r = Runner::new("koo", budget);
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    for s in 1..=o.max_s {
        for t in 1..=o.max_t {
            r.check(format!("S={s} T={t}"), || {
                let rule = make_coordi(s, t).map_err(|e| e.to_string())?;
                let (mut defined, mut undefined) = (0, 0);
                for _ in 0..o.samples {
                    let c = random_coordi(&mut rng, s, t);
                    let two = iterate(&rule.rule, &c, 2);
                    ensure(two.is_ok() == koo_oracle(&c, s, t), || {
                        format!("F^2 defined = {} on {}", two.is_ok(), c.to_text())
                    })?;
                    let Ok(x) = two else {
                        undefined += 1;
                        continue;
                    };
                    defined += 1;
                    let k = canonical(&c.cells[0][2]).expect("oracle checked the clock");
                    ensure(x.cells.iter().all(|u| canonical(&u[2]) == Some((k + 2) % t)), || {
                        format!("clock not advanced by 2 on {}", c.to_text())
                    })?;
                    let addr = |c: &PeriodicConfig| c.cells.iter().map(|u| value(&u[0])).collect::<Vec<_>>();
                    ensure(addr(&x) == addr(&c), || format!("Addr changed on {}", c.to_text()))?;
                }
                Ok(json!({"defined": defined, "undefined": undefined}))
            });
        }
    }
    r.finish()
}

const COMPUTE_LABELS: [&str; 8] = ["Addr", "Addr_+1", "Clock", "Clock_+1", "Tape", "Head_-1", "Head_+1", "NTape"];

/// The computation property for one machine on every one- and two-colony
/// configuration.
fn compute_case(
    p: &TmProgram,
    alpha: impl Fn(&[Word]) -> Option<Letter>,
    kprime: &[usize],
) -> Result<serde_json::Value, String> {
    let w = solve_toy_unive(kprime, p, p, 0).map_err(|e| e.to_string())?;
    let inst = make_compute(&ComputeParams { s: w.s, t: w.t, u: w.u, t0: 0, p: p.clone(), pinv: p.clone() })
        .map_err(|e| e.to_string())?;
    let k = inst.rule.alphabet.clone().expect("alphabet");
    let start = ColonyCodec::from_labels(&COMPUTE_LABELS, k.clone(), w.s as usize, 0, kprime.to_vec());
    let done = ColonyCodec::from_labels(&COMPUTE_LABELS, k, w.s as usize, 4 * w.u + 1, kprime.to_vec());
    let letters = enumerate_alphabet(kprime);
    let mut configs: Vec<Vec<Letter>> = letters.iter().map(|a| vec![a.clone()]).collect();
    configs.extend(letters.iter().zip(letters.iter().rev().skip(3)).map(|(a, b)| vec![a.clone(), b.clone()]));
    let head = inst.field("Head_-1");
    let (mut computed, mut rejected) = (0, 0);
    for cells in configs {
        let b = PeriodicConfig::new(cells);
        let c = start.encode(&b).map_err(|e| e.to_string())?;
        let expect: Option<Vec<Letter>> = b.cells.iter().map(|u| alpha(u)).collect();
        let end = iterate(&inst.rule, &c, 4 * w.u as i64 + 1);
        match expect {
            Some(v) => {
                let end = end.map_err(|e| format!("{}: {e}", b.to_text()))?;
                let got = done.decode(&end).map_err(|e| format!("{}: {e}", b.to_text()))?;
                ensure(got == PeriodicConfig::new(v), || format!("{}: decoded {}", b.to_text(), got.to_text()))?;
                let early = iterate(&inst.rule, &c, 4 * w.u as i64).map_err(|e| e.to_string())?;
                ensure(early.cells.iter().any(|u| u[head].iter().any(|&x| x != 4)), || {
                    "initial state erased early".into()
                })?;
                computed += 1;
            }
            None => {
                ensure(end.is_err(), || format!("{} should reject", b.to_text()))?;
                rejected += 1;
            }
        }
    }
    Ok(json!({"S": w.s, "T": w.t, "U": w.u, "computed": computed, "rejected": rejected}))
}

/// After `4U + 1` applications each colony holds `Chi(α(b_i))`.
pub fn compute(budget: Budget) -> SuiteReport {
    let mut r = Runner::new("compute", budget);
    r.check("identity", || compute_case(&toys::identity(), |u| Some(u.to_vec()), &[1, 1]));
    r.check("bit-flip", || compute_case(&toys::bit_flip(), toys::bit_flip_letter, &[1, 1]));
    r.check("swap", || compute_case(&toys::swap11(), |u| Some(vec![u[1].clone(), u[0].clone()]), &[1, 1]));
    r.finish()
}

#[derive(Debug, Clone)]
pub struct ShiftOptions {
    pub colony_sizes: Vec<u64>,
    pub seed: u64,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        ShiftOptions { colony_sizes: vec![16, 64], seed: 5 }
    }
}

const SHIFT_LABELS: [&str; 7] = ["Addr", "Addr_+1", "Clock", "Clock_+1", "Tape", "Tape_-1", "Tape_+1"];

/// All direction vectors on two fields.
pub(crate) const NU2: [[i8; 2]; 9] = [[-1, -1], [-1, 0], [-1, 1], [0, -1], [0, 0], [0, 1], [1, -1], [1, 0], [1, 1]];

/// Field `j` of colony `i` after the shift is field `j` of colony `i - ν_j`.
pub fn shift(o: &ShiftOptions, budget: Budget) -> SuiteReport {
    let mut r = Runner::new("shift", budget);
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    for kprime in [vec![1usize, 1], vec![2, 1]] {
        let need = chi_len(&kprime) as u64;
        let sizes: Vec<u64> =
            std::iter::once(need).chain(o.colony_sizes.iter().copied().filter(|&s| s > need)).collect();
        for s in sizes {
            r.check(format!("k'={kprime:?} S={s}"), || {
                let t = s + 2;
                let letters = enumerate_alphabet(&kprime);
                for nu in NU2 {
                    let inst = make_shift(&nu, &kprime, s, t, 0).map_err(|e| e.to_string())?;
                    let k = inst.rule.alphabet.clone().expect("alphabet");
                    let start = ColonyCodec::from_labels(&SHIFT_LABELS, k.clone(), s as usize, 0, kprime.clone());
                    let done = ColonyCodec::from_labels(&SHIFT_LABELS, k, s as usize, s + 1, kprime.clone());
                    let n = rng.gen_range(1..=3usize);
                    let b =
                        PeriodicConfig::new((0..n).map(|_| letters[rng.gen_range(0..letters.len())].clone()).collect());
                    let c = start.encode(&b).map_err(|e| e.to_string())?;
                    let end = iterate(&inst.rule, &c, s as i64 + 1).map_err(|e| format!("ν={nu:?}: {e}"))?;
                    let expect: Vec<Letter> = (0..n)
                        .map(|i| {
                            (0..kprime.len())
                                .map(|j| b.cells[(i as i64 - nu[j] as i64).rem_euclid(n as i64) as usize][j].clone())
                                .collect()
                        })
                        .collect();
                    let got = done.decode(&end).map_err(|e| format!("ν={nu:?}: {e}"))?;
                    ensure(got == PeriodicConfig::new(expect), || {
                        format!("ν={nu:?} b={}: got {}", b.to_text(), got.to_text())
                    })?;
                }
                Ok(json!({"directions": NU2.len()}))
            });
        }
    }
    r.finish()
}

/// Every layout with at most `m` fields and total length at most `sum`.
fn layouts(m: usize, sum: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..m {
        let mut next = Vec::new();
        for l in &frontier {
            let used: usize = l.iter().sum();
            for x in 0..=sum - used {
                let mut l2 = l.clone();
                l2.push(x);
                next.push(l2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn colony(u: &[Word], s: usize) -> PeriodicConfig {
    let mut w = chi_encode(u);
    w.resize(s, BLANK);
    PeriodicConfig::new(w.iter().enumerate().map(|(j, &x)| vec![pad(norm(s as u64), j as u64), vec![x]]).collect())
}

/// Layout and prefix checks on colony encodings, exhaustively.
pub fn sonfather(max_s: usize, budget: Budget) -> SuiteReport {
    let mut r = Runner::new("sonfather", budget);
    let all: Vec<(Vec<usize>, Letter)> = layouts(3, 3)
        .into_iter()
        .chain(layouts(2, 4).into_iter().filter(|k| k.len() == 2 && k.iter().sum::<usize>() == 4))
        .flat_map(|k| enumerate_alphabet(&k).into_iter().map(move |u| (k.clone(), u)))
        .collect();
    for kprime in [vec![1usize, 1], vec![2, 1], vec![1, 2], vec![2, 2], vec![0, 3]] {
        r.check(format!("chekka k'={kprime:?}"), || {
            let need = chi_len(&kprime);
            let mut total = 0;
            for s in need..=max_s.max(need) {
                let inst = make_chekka(&kprime, s as u64).map_err(|e| e.to_string())?;
                let mut accepted = 0;
                for (k, u) in all.iter().filter(|(k, _)| chi_len(k) <= s) {
                    let c = colony(u, s);
                    let step = inst.rule.step(&c);
                    ensure(step.is_ok() == (*k == kprime), || {
                        format!("S={s} layout {k:?} u={u:?}: accepted = {}", step.is_ok())
                    })?;
                    if let Ok(x) = step {
                        ensure(x == c, || format!("S={s}: accepted colony changed"))?;
                        accepted += 1;
                    }
                    total += 1;
                }
                let want = 5usize.pow(kprime.iter().sum::<usize>() as u32);
                ensure(accepted == want, || format!("S={s}: {accepted} accepted, expected {want}"))?;
            }
            Ok(json!({"colonies": total}))
        });
    }
    for kprime in [vec![1usize, 1], vec![2, 1], vec![2, 2]] {
        r.check(format!("hier k'={kprime:?}"), || {
            let need = chi_len(&kprime);
            let letters = enumerate_alphabet(&kprime);
            let mut total = 0;
            for s in [need, need + 3, max_s.max(need)] {
                for i in 0..kprime.len() {
                    for len in 0..=kprime[i] {
                        for t in enumerate_alphabet(&[len]).into_iter().map(|l| l[0].clone()) {
                            let inst = make_hier(&kprime, s as u64, i, &t).map_err(|e| e.to_string())?;
                            for u in &letters {
                                let ok = inst.rule.step(&colony(u, s)).is_ok();
                                ensure(ok == u[i].starts_with(&t), || {
                                    format!("S={s} i={i} t={t:?} u={u:?}: accepted = {ok}")
                                })?;
                                total += 1;
                            }
                        }
                    }
                }
            }
            Ok(json!({"colonies": total}))
        });
    }
    r.finish()
}

/// Runs the compiled machines against the interpreter on every letter.
fn differential(p: &PermProgram, k: &[usize], env: Env) -> Result<serde_json::Value, String> {
    let env = Arc::new(env);
    let tm = compile_to_tm(p, k, &env, DEFAULT_COMPILE_BUDGET).map_err(|e| e.to_string())?;
    let inv = p.invert();
    let cap = step_bound(p, k);
    let mut letters = 0;
    for u in enumerate_alphabet(k) {
        for (machine, prog) in [(&tm.forward, p), (&tm.backward, &inv)] {
            let want = eval_program(prog, &u, &env).ok();
            let got = match tm_run(machine, &u, cap) {
                RunOutcome::Accepted { output, .. } => Some(output),
                RunOutcome::Rejected { .. } => None,
                other => return Err(format!("{u:?}: {other:?}")),
            };
            ensure(got == want, || format!("{u:?}: machine {got:?}, interpreter {want:?}"))?;
        }
        letters += 1;
    }
    Ok(json!({"layout": k, "letters": letters, "states": tm.forward_measure.states}))
}

fn parsed(src: &str) -> Result<PermProgram, String> {
    parse(src).map_err(|e| e.to_string())
}

/// Compiled machines agree with the interpreter on every letter, for each
/// primitive and for the coordinate and son-father listings.
pub fn compiler(budget: Budget) -> SuiteReport {
    let mut r = Runner::new("compiler", budget);
    let halting = toys::halts_at(2).encode();
    let code: String = halting.iter().map(|d| char::from(b'0' + d)).collect();
    let primitives: Vec<(&str, String, Vec<usize>)> = vec![
        ("identity", "fields A".into(), vec![1]),
        ("exch", "fields A, B, C\nexch A, C".into(), vec![1, 2, 1]),
        ("check", "fields A, B\ncheck bina(A) >= bina(B)".into(), vec![2, 2]),
        ("incr/decr", "fields A, B\nincr 3 -> A\ndecr bina(B) + 1 -> B".into(), vec![2, 2]),
        ("write/unwrite", "fields A, B\nwrite A -> B\nunwrite '1' -> A".into(), vec![1, 2]),
        ("if", "fields A, B\nif A = '1'\nexch A, B\nendif".into(), vec![1, 1]),
        ("anonymous", "fields A, B, C\nexch A, $9".into(), vec![1, 1, 1]),
        ("run", format!("fields T, M:-1, P:+1\nrun '{code}' on T, M, P"), vec![1, 1, 1]),
        ("halt", format!("fields T\ncheck halt('{code}', bina(T), '1')"), vec![3]),
    ];
    for (name, src, k) in primitives {
        r.check(name, || differential(&parsed(&src)?, &k, Env::new()));
    }
    r.check("apply", || {
        let flip: Arc<dyn Permutation> = Arc::new(
            crate::permlang::Compiled::new(parsed("fields X\nincr 2 -> X")?, Arc::new(Env::new()))
                .map_err(|e| e.join(", "))?,
        );
        let env = Env::new().with_perm("alpha", move |n| (n == 0).then(|| flip.clone()));
        differential(&parsed("fields A, B\napply alpha[len(B) - 1] on A")?, &[2, 1], env)
    });
    r.check("coordi listing", || {
        let mut out = vec![];
        for (s, t) in [(1, 1), (1, 2), (2, 1), (3, 3)] {
            let inst = make_coordi(s, t).map_err(|e| e.to_string())?;
            out.push(differential(&inst.program, &[1, 1, 1, 1], Env::new())?);
        }
        Ok(json!({"cases": out}))
    });
    r.check("chekka listing", || {
        let mut out = vec![];
        for kprime in [vec![1usize], vec![0, 1], vec![1, 1], vec![2], vec![0, 0, 0]] {
            for (s, ka) in [(1u64, 1usize), (3, 2), (5, 3), (7, 3)] {
                let inst = make_chekka(&kprime, s).map_err(|e| e.to_string())?;
                out.push(differential(&inst.program, &[ka, 1], Env::new())?);
            }
        }
        Ok(json!({"cases": out.len()}))
    });
    r.check("hier listing", || {
        let mut out = vec![];
        for (kprime, i, t) in [
            (vec![1usize, 1], 0, vec![1u8]),
            (vec![1, 1], 1, vec![]),
            (vec![2], 0, vec![0, 4]),
            (vec![0, 2], 1, vec![3]),
        ] {
            for (s, ka) in [(3u64, 2usize), (7, 3)] {
                let inst = make_hier(&kprime, s, i, &t).map_err(|e| e.to_string())?;
                out.push(differential(&inst.program, &[ka, 1], Env::new())?);
            }
        }
        Ok(json!({"cases": out.len()}))
    });
    r.finish()
}
