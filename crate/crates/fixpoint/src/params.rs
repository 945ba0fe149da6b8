//! Inequality systems for the universal rule and its hierarchical
//! variants, witness solvers, and level-indexed parameter recipes.

use crate::encoding::{bin_len, chi_len, LengthVector};
use crate::rules::gamma_u::head_field_len;
use crate::turing::{time_complexity_over, TmProgram};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("missing measurement: {0}")]
    MissingMeasurement(String),
    #[error("machine could not be measured: {0}")]
    Unmeasurable(String),
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

/// One inequality `lhs >= rhs` with its slack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub name: String,
    #[serde(serialize_with = "ser_big")]
    pub lhs: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub rhs: BigInt,
    /// `rhs` must be met exactly.
    pub equality: bool,
}

fn ser_big<S: serde::Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl Constraint {
    pub fn ge(name: impl Into<String>, lhs: impl Into<BigInt>, rhs: impl Into<BigInt>) -> Self {
        Constraint { name: name.into(), lhs: lhs.into(), rhs: rhs.into(), equality: false }
    }

    pub fn eq(name: impl Into<String>, lhs: impl Into<BigInt>, rhs: impl Into<BigInt>) -> Self {
        Constraint { name: name.into(), lhs: lhs.into(), rhs: rhs.into(), equality: true }
    }

    pub fn slack(&self) -> BigInt {
        &self.lhs - &self.rhs
    }

    pub fn passed(&self) -> bool {
        if self.equality {
            self.lhs == self.rhs
        } else {
            self.lhs >= self.rhs
        }
    }
}

/// Per-constraint outcome of a check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InequalityReport {
    pub constraints: Vec<Constraint>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.constraints.iter().all(Constraint::passed)
    }

    pub fn failures(&self) -> Vec<&Constraint> {
        self.constraints.iter().filter(|c| !c.passed()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .constraints
            .iter()
            .map(|c| {
                serde_json::json!({
                    "name": c.name,
                    "lhs": c.lhs.to_string(),
                    "rhs": c.rhs.to_string(),
                    "slack": c.slack().to_string(),
                    "equality": c.equality,
                    "pass": c.passed(),
                })
            })
            .collect();
        serde_json::json!({ "pass": self.passed(), "constraints": rows })
    }
}

/// `‖n‖`, the length of the binary representation.
pub fn norm(n: &BigInt) -> usize {
    if n.is_positive() {
        n.bits() as usize
    } else {
        0
    }
}

/// Concrete numbers for the inequality set of the universal rule.
#[derive(Debug, Clone, Default)]
pub struct InequalitySet {
    pub s: BigInt,
    pub t: BigInt,
    pub u: BigInt,
    /// Delay; `None` is `0`.
    pub t0: Option<BigInt>,
    pub t_p: Option<BigInt>,
    pub t_pinv: Option<BigInt>,
    /// `|Chi(5^{k'})|` of the simulated alphabet.
    pub simulated_chi_len: BigInt,
    /// Longest archive over `Q_p ∪ Q_{p⁻¹}`.
    pub head_bound: usize,
    /// Labelled lengths of the simulating alphabet.
    pub lengths: Vec<(String, usize)>,
    /// Exact-length constraints on extra fields.
    pub extra: Vec<Constraint>,
}

/// Checks every constraint of `i`.
pub fn check_inequalities(i: &InequalitySet) -> Result<InequalityReport, ParamError> {
    let t_p = i.t_p.clone().ok_or_else(|| ParamError::MissingMeasurement("t_p".into()))?;
    let t_pinv = i.t_pinv.clone().ok_or_else(|| ParamError::MissingMeasurement("t_pinv".into()))?;
    let t0 = i.t0.clone().unwrap_or_default();
    let mut cs = vec![
        Constraint::ge("U >= max(t_p, t_pinv)", i.u.clone(), t_p.max(t_pinv)),
        Constraint::ge("U >= 1", i.u.clone(), 1),
        Constraint::ge("S >= 2U", i.s.clone(), 2 * &i.u),
        Constraint::ge("S >= |Chi(5^k')|", i.s.clone(), i.simulated_chi_len.clone()),
        Constraint::ge("T >= 4U + S + t0 + 1", i.t.clone(), 4 * &i.u + &i.s + t0 + 1),
    ];
    let len = |label: &str| i.lengths.iter().find(|(l, _)| l == label).map(|&(_, k)| k);
    for (label, bound) in [
        ("Addr", norm(&i.s)),
        ("Addr_+1", norm(&i.s)),
        ("Clock", norm(&i.t)),
        ("Clock_+1", norm(&i.t)),
        ("Head_-1", i.head_bound),
        ("Head_+1", i.head_bound),
        ("Tape", 1),
        ("NTape", 1),
        ("Tape_-1", 1),
        ("Tape_+1", 1),
    ] {
        if let Some(k) = len(label) {
            cs.push(Constraint::ge(format!("k_{label} >= {bound}"), k, bound));
        }
    }
    cs.extend(i.extra.iter().cloned());
    Ok(InequalityReport { constraints: cs })
}

/// Exact step bounds of a pair of machines over `5^{k'}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Measured {
    pub t_p: usize,
    pub t_pinv: usize,
    pub head_bound: usize,
    pub simulated_chi_len: usize,
}

/// Step cap used when measuring toy machines.
pub const MEASURE_STEP_CAP: usize = 100_000;
/// Largest simulated alphabet swept when measuring.
pub const MEASURE_BUDGET: u128 = 5u128.pow(8);

/// Measures `t_p`, `t_{p⁻¹}` and the archive bound over `5^{k'}`.
pub fn measure(kprime: &[usize], p: &TmProgram, pinv: &TmProgram) -> Result<Measured, ParamError> {
    let run = |m: &TmProgram, name: &str| -> Result<usize, ParamError> {
        let tc = time_complexity_over(m, kprime, MEASURE_BUDGET, MEASURE_STEP_CAP)
            .map_err(|e| ParamError::Unmeasurable(format!("{name}: {e}")))?;
        if tc.undetermined > 0 {
            return Err(ParamError::Unmeasurable(format!(
                "{name}: {} inputs still running after {MEASURE_STEP_CAP} steps",
                tc.undetermined
            )));
        }
        Ok(tc.max_steps)
    };
    Ok(Measured {
        t_p: run(p, "p")?,
        t_pinv: run(pinv, "p^-1")?,
        head_bound: head_field_len(p).max(head_field_len(pinv)),
        simulated_chi_len: chi_len(kprime),
    })
}

/// Labels of the universal rule's fields, in order.
pub const UNIVE_LABELS: [&str; 10] =
    ["Addr", "Addr_+1", "Clock", "Clock_+1", "Tape", "Head_-1", "Head_+1", "NTape", "Tape_-1", "Tape_+1"];

/// Lengths of the universal rule's fields with every bound tight.
pub fn unive_lengths(s: u64, t: u64, head: usize) -> LengthVector {
    let (ks, kt) = (bin_len(u128::from(s)), bin_len(u128::from(t)));
    vec![ks, ks, kt, kt, 1, head, head, 1, 1, 1]
}

/// A certified parameter choice for a toy universal rule.
#[derive(Debug, Clone)]
pub struct ToyWitness {
    pub kprime: LengthVector,
    /// Lengths in [`UNIVE_LABELS`] order.
    pub k: LengthVector,
    pub s: u64,
    pub t: u64,
    pub u: u64,
    pub t0: u64,
    pub measured: Measured,
}

impl ToyWitness {
    pub fn inequality_set(&self) -> InequalitySet {
        InequalitySet {
            s: self.s.into(),
            t: self.t.into(),
            u: self.u.into(),
            t0: Some(self.t0.into()),
            t_p: Some(self.measured.t_p.into()),
            t_pinv: Some(self.measured.t_pinv.into()),
            simulated_chi_len: self.measured.simulated_chi_len.into(),
            head_bound: self.measured.head_bound,
            lengths: UNIVE_LABELS.iter().map(|l| l.to_string()).zip(self.k.iter().copied()).collect(),
            extra: vec![],
        }
    }

    pub fn check(&self) -> InequalityReport {
        check_inequalities(&self.inequality_set()).expect("toy witnesses carry their measurements")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kprime": self.kprime,
            "k": self.k,
            "S": self.s,
            "T": self.t,
            "U": self.u,
            "t0": self.t0,
            "measured": self.measured,
            "inequalities": self.check().to_json(),
        })
    }
}

/// The tightest witness: `U` at the measured time, then `S`, then `T`.
pub fn solve_toy_unive(kprime: &[usize], p: &TmProgram, pinv: &TmProgram, t0: u64) -> Result<ToyWitness, ParamError> {
    let measured = measure(kprime, p, pinv)?;
    Ok(toy_witness_from(kprime, measured, t0))
}

/// Solves the toy inequalities from given measurements.
pub fn toy_witness_from(kprime: &[usize], measured: Measured, t0: u64) -> ToyWitness {
    let u = (measured.t_p.max(measured.t_pinv) as u64).max(1);
    let s = (2 * u).max(measured.simulated_chi_len as u64);
    let t = 4 * u + s + t0 + 1;
    let k = unive_lengths(s, t, measured.head_bound);
    ToyWitness { kprime: kprime.to_vec(), k, s, t, u, t0, measured }
}

/// A polynomial with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly(pub Vec<BigRational>);

impl Poly {
    pub fn from_ints(c: &[i64]) -> Self {
        Poly(c.iter().map(|&x| BigRational::from_integer(x.into())).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    pub fn eval(&self, x: &BigInt) -> BigRational {
        let x = BigRational::from_integer(x.clone());
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * &x + c)
    }

    /// `⌈P(x)⌉`.
    pub fn eval_ceil(&self, x: &BigInt) -> BigInt {
        self.eval(x).ceil().to_integer()
    }

    pub fn to_string_poly(&self) -> String {
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => c.to_string(),
                1 => format!("{c}*x"),
                _ => format!("{c}*x^{i}"),
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}

/// Least-squares fit of a polynomial of `degree` to integer samples,
/// solved exactly in rationals.
pub fn fit_polynomial(samples: &[(u64, u64)], degree: usize) -> Result<Poly, ParamError> {
    let n = degree + 1;
    if samples.len() < n {
        return Err(ParamError::Invalid(format!("{} samples cannot fit degree {degree}", samples.len())));
    }
    let r = |v: u64| BigRational::from_integer(v.into());
    let mut a = vec![vec![BigRational::zero(); n + 1]; n];
    for &(x, y) in samples {
        let pows: Vec<BigRational> = (0..2 * n)
            .scan(BigRational::one(), |acc, _| {
                let cur = acc.clone();
                *acc = &*acc * r(x);
                Some(cur)
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                a[i][j] += &pows[i + j];
            }
            a[i][n] += &pows[i] * r(y);
        }
    }
    for col in 0..n {
        let pivot =
            (col..n).find(|&i| !a[i][col].is_zero()).ok_or_else(|| ParamError::Invalid("degenerate samples".into()))?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &p;
        }
        for i in 0..n {
            if i != col && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in 0..=n {
                    let d = &f * &a[col][j];
                    a[i][j] -= d;
                }
            }
        }
    }
    Ok(Poly(a.into_iter().map(|row| row[n].clone()).collect()))
}

/// Where a fitted polynomial came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitSource {
    Supplied,
    /// Regression over `(|Chi|, steps)` samples; exact only on them.
    Measured {
        samples: Vec<(u64, u64)>,
    },
}

/// Program model for the self-simulating rule. The fits bound
/// `|Chi(5^k)|` and `t_p` as polynomials in `x = |Chi(5^k)|`.
#[derive(Debug, Clone)]
pub struct SelfSimModel {
    pub prog_len: usize,
    pub rev_len: usize,
    pub head_bound: usize,
    pub p1: Poly,
    pub p2: Poly,
    pub source: FitSource,
}

/// Search limits of [`solve_self_sim`].
#[derive(Debug, Clone)]
pub struct SelfSimLimits {
    pub max_r: u32,
    pub max_s0_bits: u32,
    pub max_s_bits: u32,
    /// Largest `S·T` considered executable.
    pub execution_budget: u128,
}

impl Default for SelfSimLimits {
    fn default() -> Self {
        SelfSimLimits { max_r: 8, max_s0_bits: 64, max_s_bits: 200, execution_budget: 10_000_000 }
    }
}

/// A witness for the self-simulation inequalities.
#[derive(Debug, Clone)]
pub struct SelfSimWitness {
    pub r: u32,
    pub s0: BigInt,
    pub s: BigInt,
    pub t: BigInt,
    pub u: BigInt,
    /// Lengths of the 15 fields.
    pub k: LengthVector,
    pub ratio: BigRational,
    pub report: InequalityReport,
    /// `false` when the fits were only measured on samples.
    pub certified: bool,
    /// `false` when a work period is far beyond the execution budget.
    pub executable: bool,
}

/// No witness inside the search box.
#[derive(Debug, Clone)]
pub struct InfeasibilityCertificate {
    pub reason: String,
    pub limits: SelfSimLimits,
}

#[derive(Debug, Clone)]
pub enum SelfSimOutcome {
    Witness(Box<SelfSimWitness>),
    Infeasible(InfeasibilityCertificate),
}

/// Labels of the self-simulating rule's fields, in order.
pub const SELF_LABELS: [&str; 15] = [
    "Addr", "Addr_+1", "Clock", "Clock_+1", "Tape", "Head_-1", "Head_+1", "NTape", "Tape_-1", "Tape_+1", "MAddr",
    "MClock", "Alarm", "Prog", "RevProg",
];

fn self_lengths(m: &SelfSimModel, s: &BigInt, t: &BigInt, u: &BigInt) -> LengthVector {
    let (ks, kt, ku) = (norm(s), norm(t), norm(u));
    vec![ks, ks, kt, kt, 1, m.head_bound, m.head_bound, 1, 1, 1, ks, kt, ku, m.prog_len, m.rev_len]
}

/// `⌊log₂ n⌋^r`-style polylog: `‖n‖^r`.
fn polylog(n: &BigInt, r: u32) -> BigInt {
    BigInt::from(norm(n)).pow(r)
}

fn self_report(m: &SelfSimModel, s: &BigInt, t: &BigInt, u: &BigInt) -> (LengthVector, InequalityReport) {
    let k = self_lengths(m, s, t, u);
    let x = BigInt::from(chi_len(&k));
    let tp = m.p2.eval_ceil(&x);
    let set = InequalitySet {
        s: s.clone(),
        t: t.clone(),
        u: u.clone(),
        t0: None,
        t_p: Some(tp.clone()),
        t_pinv: Some(tp),
        simulated_chi_len: x.clone().max(m.p1.eval_ceil(&x)),
        head_bound: m.head_bound,
        lengths: SELF_LABELS.iter().map(|l| l.to_string()).zip(k.iter().copied()).collect(),
        extra: vec![
            Constraint::eq("k_MAddr = ||S||", k[10], norm(s)),
            Constraint::eq("k_MClock = ||T||", k[11], norm(t)),
            Constraint::eq("k_Alarm = ||U||", k[12], norm(u)),
        ],
    };
    (k, check_inequalities(&set).expect("measurements supplied"))
}

/// Searches `(r, S₀, S)` in that order with `U = ‖S+S₀‖^r` and
/// `T = S + 4U + 1`, returning the smallest `S` whose ratio `S/T`
/// reaches `min_ratio`.
pub fn solve_self_sim(m: &SelfSimModel, min_ratio: &BigRational, limits: &SelfSimLimits) -> SelfSimOutcome {
    let certified = matches!(m.source, FitSource::Supplied);
    let feasible = |s: &BigInt, s0: &BigInt, r: u32| -> Option<(BigInt, BigInt, LengthVector, InequalityReport)> {
        let u = polylog(&(s + s0), r).max(BigInt::one());
        let t = s + 4 * &u + 1;
        let (k, rep) = self_report(m, s, &t, &u);
        let ratio = BigRational::new(s.clone(), t.clone());
        (rep.passed() && &ratio >= min_ratio).then_some((u, t, k, rep))
    };
    for r in 1..=limits.max_r {
        for s0_bits in 0..=limits.max_s0_bits {
            let s0 = if s0_bits == 0 { BigInt::zero() } else { BigInt::one() << (s0_bits - 1) };
            // Find a feasible power of two, then binary search below it.
            let Some(hi_bits) = (1..=limits.max_s_bits).find(|&b| feasible(&(BigInt::one() << b), &s0, r).is_some())
            else {
                continue;
            };
            let mut hi = BigInt::one() << hi_bits;
            let mut lo = BigInt::one() << (hi_bits - 1);
            if feasible(&lo, &s0, r).is_some() {
                hi = lo.clone();
                lo = BigInt::one();
            }
            while &hi - &lo > BigInt::one() {
                let mid = (&hi + &lo) / 2;
                if feasible(&mid, &s0, r).is_some() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let s = if feasible(&lo, &s0, r).is_some() { lo } else { hi };
            let (u, t, k, report) = feasible(&s, &s0, r).expect("bracketed feasible point");
            let executable = (&s * &t).to_u128().is_some_and(|st| st <= limits.execution_budget);
            let ratio = BigRational::new(s.clone(), t.clone());
            return SelfSimOutcome::Witness(Box::new(SelfSimWitness {
                r,
                s0,
                s,
                t,
                u,
                k,
                ratio,
                report,
                certified,
                executable,
            }));
        }
    }
    let reason = if m.p2.degree() as u32 >= limits.max_r {
        format!("time fit has degree {} but U = ||S+S0||^r is searched only up to r = {}", m.p2.degree(), limits.max_r)
    } else {
        "no (r, S0, S) inside the search box satisfies every inequality".into()
    };
    SelfSimOutcome::Infeasible(InfeasibilityCertificate { reason, limits: limits.clone() })
}

/// Bound on the running time of the level programs as a function of
/// `x = |Chi(5^{k_{n+1}})|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeModel(pub Poly);

/// A level-indexed parameter recipe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recipe {
    /// `S_n = Q^{n+n₀}`, `U_n = (n+n₀)^r`, `T_n = S_n + 4U_n + 1`.
    HieraA { q: u64, n0: u64, r: u32 },
    /// `S_n = Q^{n+n₀}`, `T_n = 2S_n`, `U_n = S_n/(2Q)`.
    HieraB { q: u64, n0: u64 },
    /// `S_n = Q^{n+n₀}`, `U_n = (n+n₀)^r`; `T` depends on the directive letter.
    Reali { q: u64, n0: u64, r: u32 },
}

/// Level-indexed parameters with fixed program sizes.
#[derive(Debug, Clone)]
pub struct Sequences {
    pub recipe: Recipe,
    pub prog_len: usize,
    pub head_bound: usize,
    pub time: TimeModel,
}

/// Directive letters `(D, W)` in bijection with `0, 1, 2`.
pub const DIRECTIVES: [(u64, u64); 3] = [(0, 1), (1, 1), (1, 0)];

/// Labels of the hierarchical rule's fields, in order.
pub const HSIM_LABELS: [&str; 13] = [
    "Addr", "Addr_+1", "Clock", "Clock_+1", "Tape", "Head_-1", "Head_+1", "NTape", "Tape_-1", "Tape_+1", "Level",
    "Prog", "RevProg",
];

/// Builds the recipe's sequences.
pub fn make_sequences(
    recipe: Recipe,
    prog_len: usize,
    head_bound: usize,
    time: TimeModel,
) -> Result<Sequences, ParamError> {
    let q = match recipe {
        Recipe::HieraA { q, .. } | Recipe::HieraB { q, .. } | Recipe::Reali { q, .. } => q,
    };
    if q < 2 {
        return Err(ParamError::Invalid("Q must be at least 2".into()));
    }
    if let Recipe::HieraB { q, n0 } = recipe {
        // 2Q | Q^{n+n0} for all n requires Q even and n0 >= 2.
        if q % 2 != 0 || n0 < 2 {
            return Err(ParamError::Invalid(format!("U_n = S_n/(2Q) is not an integer for Q = {q}, n0 = {n0}")));
        }
    }
    Ok(Sequences { recipe, prog_len, head_bound, time })
}

impl Sequences {
    pub fn s(&self, n: u64) -> BigInt {
        let (q, n0) = match self.recipe {
            Recipe::HieraA { q, n0, .. } | Recipe::HieraB { q, n0 } | Recipe::Reali { q, n0, .. } => (q, n0),
        };
        BigInt::from(q).pow((n + n0) as u32)
    }

    pub fn u(&self, n: u64) -> BigInt {
        match self.recipe {
            Recipe::HieraA { n0, r, .. } | Recipe::Reali { n0, r, .. } => BigInt::from(n + n0).pow(r),
            Recipe::HieraB { q, .. } => self.s(n) / (2 * q),
        }
    }

    /// `T_n`; for the realization recipe, the work period of letter `a`.
    pub fn t(&self, n: u64, a: Option<usize>) -> BigInt {
        match self.recipe {
            Recipe::HieraA { .. } => self.s(n) + 4 * self.u(n) + 1,
            Recipe::HieraB { .. } => 2 * self.s(n),
            Recipe::Reali { .. } => {
                let (d, w) = DIRECTIVES[a.unwrap_or(1)];
                self.s(n) * (d + w + 1) + 4 * self.u(n) + 1
            }
        }
    }

    /// Largest `T_n` over directive letters.
    pub fn t_max(&self, n: u64) -> BigInt {
        match self.recipe {
            Recipe::Reali { .. } => (0..3).map(|a| self.t(n, Some(a))).max().expect("three letters"),
            _ => self.t(n, None),
        }
    }

    /// Lengths of the level-`n` letters, [`HSIM_LABELS`] order.
    pub fn k(&self, n: u64) -> LengthVector {
        let ks = norm(&self.s(n));
        let kt = norm(&self.t_max(n));
        let h = self.head_bound;
        vec![ks, ks, kt, kt, 1, h, h, 1, 1, 1, norm(&BigInt::from(n)), self.prog_len, self.prog_len]
    }

    /// The inequalities at level `n`, which reference `k_{n+1}`.
    pub fn level_inequalities(&self, n: u64) -> InequalityReport {
        let next = self.k(n + 1);
        let x = BigInt::from(chi_len(&next));
        let tp = self.time.0.eval_ceil(&x);
        let k = self.k(n);
        let set = InequalitySet {
            s: self.s(n),
            t: self.t_min(n),
            u: self.u(n),
            t0: None,
            t_p: Some(tp.clone()),
            t_pinv: Some(tp),
            simulated_chi_len: x,
            head_bound: self.head_bound,
            lengths: HSIM_LABELS.iter().map(|l| l.to_string()).zip(k.iter().copied()).collect(),
            extra: vec![Constraint::eq("k_Level = ||n||", k[10], norm(&BigInt::from(n)))],
        };
        check_inequalities(&set).expect("measurements supplied")
    }

    fn t_min(&self, n: u64) -> BigInt {
        match self.recipe {
            Recipe::Reali { .. } => (0..3).map(|a| self.t(n, Some(a))).min().expect("three letters"),
            _ => self.t(n, None),
        }
    }

    /// `Π_{i<n} S_i/T_i` exactly; the realization recipe uses letter `a`.
    pub fn ratio_prefix(&self, n: u64, a: Option<usize>) -> BigRational {
        (0..n).fold(BigRational::one(), |acc, i| acc * BigRational::new(self.s(i), self.t(i, a)))
    }

    /// `ε_n = (T_n - S_n(D+W+1))/S_n` for the realization recipe.
    pub fn epsilon(&self, n: u64) -> BigRational {
        BigRational::new(4 * self.u(n) + 1, self.s(n))
    }
}

/// Verdict on the limit of `Π S_i/T_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RatioVerdict {
    /// The prefix is bounded by a geometric sequence tending to zero.
    TendsToZero,
    /// The prefix stays above a positive bound.
    BoundedBelow,
}

/// Ratio prefix and its verdict over `n ≤ depth`.
#[derive(Debug, Clone)]
pub struct RatioReport {
    pub prefixes: Vec<BigRational>,
    pub verdict: RatioVerdict,
    /// Lower bound on every prefix when bounded below.
    pub lower_bound: Option<BigRational>,
}

/// Computes the prefixes and checks the verdict the recipe predicts:
/// `2^{-n}`-type decay for `T = 2S`, and otherwise a lower bound
/// `1 - Σ (T_i - S_i)/T_i` that stays positive.
pub fn ratio_product(seq: &Sequences, depth: u64) -> RatioReport {
    let prefixes: Vec<BigRational> = (0..=depth).map(|n| seq.ratio_prefix(n, None)).collect();
    match seq.recipe {
        Recipe::HieraB { .. } => RatioReport { prefixes, verdict: RatioVerdict::TendsToZero, lower_bound: None },
        _ => {
            // Π (1 - x_i) >= 1 - Σ x_i.
            let sum = (0..depth)
                .fold(BigRational::zero(), |acc, i| acc + BigRational::new(seq.t(i, None) - seq.s(i), seq.t(i, None)));
            let lb = BigRational::one() - sum;
            let verdict = if lb.is_positive() { RatioVerdict::BoundedBelow } else { RatioVerdict::TendsToZero };
            RatioReport { prefixes, verdict, lower_bound: Some(lb) }
        }
    }
}

/// `x < √2 - 1` via `(x+1)² < 2`.
pub fn below_sqrt2_minus_1(x: &BigRational) -> bool {
    let y = x + BigRational::one();
    &y * &y < BigRational::from_integer(2.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turing::toys;

    #[test]
    fn toy_witness_passes_and_is_tight() {
        let id = toys::identity();
        let w = solve_toy_unive(&[1, 1], &id, &id, 0).unwrap();
        assert!(w.check().passed(), "{:?}", w.check().failures());
        assert_eq!(w.measured.t_p, chi_len(&[1, 1]) + 1);
        assert_eq!(w.u, w.measured.t_p as u64);
        assert_eq!(w.s, (2 * w.u).max(chi_len(&[1, 1]) as u64));
        assert_eq!(w.t, 4 * w.u + w.s + 1);
    }

    #[test]
    fn delay_grows_t_exactly() {
        let id = toys::identity();
        let a = solve_toy_unive(&[1, 1], &id, &id, 0).unwrap();
        let b = solve_toy_unive(&[1, 1], &id, &id, a.s).unwrap();
        assert_eq!(b.t, a.t + a.s);
        assert!(b.check().passed());
    }

    #[test]
    fn larger_layouts_need_larger_colonies() {
        let id = toys::identity();
        let mut last = 0;
        for k in [vec![1], vec![1, 1], vec![2, 1], vec![2, 2], vec![3, 2]] {
            let w = solve_toy_unive(&k, &id, &id, 0).unwrap();
            assert!(w.s > last);
            last = w.s;
        }
    }

    #[test]
    fn violated_bound_reports_negative_slack() {
        let id = toys::identity();
        let w = solve_toy_unive(&[1, 1], &id, &id, 0).unwrap();
        let mut set = w.inequality_set();
        set.s = 2 * &set.u - 1;
        let rep = check_inequalities(&set).unwrap();
        let c = rep.get("S >= 2U").unwrap();
        assert!(!c.passed());
        assert_eq!(c.slack(), BigInt::from(-1));
    }

    #[test]
    fn missing_measurement_is_a_dependency_error() {
        let set = InequalitySet { t_p: None, ..Default::default() };
        assert_eq!(check_inequalities(&set), Err(ParamError::MissingMeasurement("t_p".into())));
    }

    #[test]
    fn hiera_b_formula_and_ratio() {
        let seq = make_sequences(Recipe::HieraB { q: 2, n0: 3 }, 10, 12, TimeModel(Poly::from_ints(&[0, 1]))).unwrap();
        for n in 0..10 {
            assert_eq!(seq.s(n), BigInt::from(2).pow(n as u32 + 3));
            assert_eq!(seq.t(n, None), BigInt::from(2).pow(n as u32 + 4));
            assert_eq!(seq.u(n), BigInt::from(2).pow(n as u32 + 1));
            assert_eq!(seq.ratio_prefix(n, None), BigRational::new(1.into(), BigInt::from(2).pow(n as u32)));
        }
        // The schedule needs T >= 4U + S + 1 = 2S + 1 at Q = 2.
        let c = seq.level_inequalities(0);
        assert_eq!(c.get("T >= 4U + S + t0 + 1").unwrap().slack(), BigInt::from(-1));
    }

    #[test]
    fn hiera_b_needs_even_q() {
        assert!(make_sequences(Recipe::HieraB { q: 3, n0: 4 }, 1, 1, TimeModel(Poly::from_ints(&[0]))).is_err());
    }

    #[test]
    fn fit_recovers_a_polynomial() {
        let samples: Vec<(u64, u64)> = (1..8).map(|x| (x, 3 * x * x + 2 * x + 7)).collect();
        assert_eq!(fit_polynomial(&samples, 2).unwrap(), Poly::from_ints(&[7, 2, 3]));
    }

    #[test]
    fn self_sim_with_quadratic_fits() {
        let m = SelfSimModel {
            prog_len: 200,
            rev_len: 200,
            head_bound: 30,
            p1: Poly::from_ints(&[0, 0, 1]),
            p2: Poly::from_ints(&[0, 0, 1]),
            source: FitSource::Supplied,
        };
        let target = BigRational::new(9.into(), 10.into());
        let SelfSimOutcome::Witness(w) = solve_self_sim(&m, &target, &SelfSimLimits::default()) else {
            panic!("expected a witness");
        };
        assert!(w.report.passed());
        assert!(w.ratio >= target);
        assert!(!w.executable);
        let tighter = BigRational::one() - BigRational::new(1.into(), BigInt::one() << 150);
        let SelfSimOutcome::Witness(w2) = solve_self_sim(&m, &tighter, &SelfSimLimits::default()) else {
            panic!("expected a witness");
        };
        assert!(w2.s > w.s);
    }

    #[test]
    fn self_sim_degree_mismatch_is_infeasible() {
        let m = SelfSimModel {
            prog_len: 200,
            rev_len: 200,
            head_bound: 30,
            p1: Poly::from_ints(&[0, 1]),
            p2: Poly(vec![BigRational::zero(); 9].into_iter().chain([BigRational::one()]).collect()),
            source: FitSource::Supplied,
        };
        let limits = SelfSimLimits { max_r: 6, max_s0_bits: 16, max_s_bits: 80, ..Default::default() };
        assert!(matches!(
            solve_self_sim(&m, &BigRational::new(1.into(), 2.into()), &limits),
            SelfSimOutcome::Infeasible(_)
        ));
    }

    #[test]
    fn sqrt_test() {
        assert!(below_sqrt2_minus_1(&BigRational::new(41.into(), 100.into())));
        assert!(!below_sqrt2_minus_1(&BigRational::new(42.into(), 100.into())));
    }
}
