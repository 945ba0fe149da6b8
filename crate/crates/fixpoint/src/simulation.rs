//! `(S, T, Q)`-simulations: colony decoding and encoding, verification
//! of the simulation equations on concrete configurations, composition,
//! period transfer and nested phase extraction.

use crate::encoding::{bin_encode, chi_decode_layout, chi_encode, chi_len, sharp_pad, LengthVector, Word, BLANK, PAD};
use crate::ppa::{iterate, Automaton, PeriodicConfig, StepReject};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;
use std::fmt;
use std::sync::Arc;

/// Why a configuration does not decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeError {
    pub colony: Option<usize>,
    pub cell: Option<usize>,
    pub cause: String,
}

impl DecodeError {
    fn new(cause: impl Into<String>) -> Self {
        DecodeError { colony: None, cell: None, cause: cause.into() }
    }

    fn at_cell(cell: usize, s: usize, cause: impl Into<String>) -> Self {
        DecodeError { colony: Some(cell / s.max(1)), cell: Some(cell), cause: cause.into() }
    }
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.colony, self.cell) {
            (Some(k), Some(n)) => write!(f, "colony {k}, cell {n}: {}", self.cause),
            (Some(k), None) => write!(f, "colony {k}: {}", self.cause),
            _ => write!(f, "{}", self.cause),
        }
    }
}

impl std::error::Error for DecodeError {}

/// A decoding function together with a canonical preimage.
pub trait Codec: Send + Sync {
    fn decode(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError>;
    fn encode(&self, b: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError>;
}

/// Values written into fields the decoding ignores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnonymousPolicy {
    Empty,
    /// One raw value per free field.
    Fixed(Vec<Word>),
}

type LetterFilter = Arc<dyn Fn(&[Word]) -> bool + Send + Sync>;

/// Decoding of the `Tape` stream of `S`-cell colonies at grid phase 0.
#[derive(Clone)]
pub struct ColonyCodec {
    pub s: usize,
    /// Clock value of decodable configurations.
    pub clock0: u64,
    /// Simulating letter lengths.
    pub k: LengthVector,
    pub addr: Vec<usize>,
    pub clock: Vec<usize>,
    pub tape: usize,
    /// Fields that must be empty.
    pub aux: Vec<usize>,
    /// Fields with a prescribed raw value.
    pub constants: Vec<(usize, Word)>,
    /// Fields the decoding ignores.
    pub free: Vec<usize>,
    pub policy: AnonymousPolicy,
    /// Simulated letter lengths.
    pub target: LengthVector,
    pub target_filter: Option<LetterFilter>,
}

/// Labels of fields that must be empty in decodable configurations.
pub const AUX_LABELS: [&str; 5] = ["Head_-1", "Head_+1", "NTape", "Tape_-1", "Tape_+1"];

impl ColonyCodec {
    /// Classifies fields by label; unknown labels are free.
    pub fn from_labels(labels: &[&str], k: LengthVector, s: usize, clock0: u64, target: LengthVector) -> Self {
        let find = |l: &str| labels.iter().position(|x| *x == l);
        let addr = ["Addr", "Addr_+1"].iter().filter_map(|l| find(l)).collect();
        let clock = ["Clock", "Clock_+1"].iter().filter_map(|l| find(l)).collect();
        let tape = find("Tape").expect("a Tape field");
        let aux: Vec<usize> = AUX_LABELS.iter().filter_map(|l| find(l)).collect();
        let known = |i: usize| labels[i] == "Tape" || labels[i].starts_with("Addr") || labels[i].starts_with("Clock");
        let free = (0..labels.len()).filter(|&i| !known(i) && !aux.contains(&i)).collect();
        ColonyCodec {
            s,
            clock0,
            k,
            addr,
            clock,
            tape,
            aux,
            constants: vec![],
            free,
            policy: AnonymousPolicy::Empty,
            target,
            target_filter: None,
        }
    }

    /// Fixes field `i` to the raw value `w`.
    pub fn with_constant(mut self, i: usize, w: Word) -> Self {
        self.free.retain(|&j| j != i);
        self.constants.retain(|(j, _)| *j != i);
        self.constants.push((i, w));
        self
    }

    pub fn with_policy(mut self, p: AnonymousPolicy) -> Self {
        self.policy = p;
        self
    }

    pub fn with_target_filter(mut self, f: impl Fn(&[Word]) -> bool + Send + Sync + 'static) -> Self {
        self.target_filter = Some(Arc::new(f));
        self
    }

    fn padded(&self, field: usize, v: u64) -> Word {
        sharp_pad(self.k[field], &bin_encode(v.into())).unwrap_or_default()
    }

    fn free_value(&self, slot: usize, field: usize) -> Word {
        match &self.policy {
            AnonymousPolicy::Empty => vec![PAD; self.k[field]],
            AnonymousPolicy::Fixed(v) => v.get(slot).cloned().unwrap_or_else(|| vec![PAD; self.k[field]]),
        }
    }
}

impl Codec for ColonyCodec {
    fn encode(&self, b: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError> {
        let need = chi_len(&self.target);
        if self.s < need {
            return Err(DecodeError::new(format!("colony size {} below |Chi| = {need}", self.s)));
        }
        let mut cells = Vec::with_capacity(b.period() * self.s);
        for (i, u) in b.cells.iter().enumerate() {
            if u.len() != self.target.len() || u.iter().zip(&self.target).any(|(f, &l)| f.len() != l) {
                return Err(DecodeError {
                    colony: Some(i),
                    cell: None,
                    cause: "letter lengths differ from the layout".into(),
                });
            }
            let mut code = chi_encode(u);
            code.resize(self.s, BLANK);
            for (j, &sym) in code.iter().enumerate() {
                let mut cell: Vec<Word> = self.k.iter().map(|&l| vec![PAD; l]).collect();
                for &f in &self.addr {
                    cell[f] = self.padded(f, j as u64);
                }
                for &f in &self.clock {
                    cell[f] = self.padded(f, self.clock0);
                }
                cell[self.tape] = vec![sym];
                for (f, w) in &self.constants {
                    cell[*f] = w.clone();
                }
                for (slot, &f) in self.free.iter().enumerate() {
                    cell[f] = self.free_value(slot, f);
                }
                cells.push(cell);
            }
        }
        Ok(PeriodicConfig::new(cells))
    }

    fn decode(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError> {
        let s = self.s;
        if !c.period().is_multiple_of(s) {
            return Err(DecodeError::new(format!("period {} is not a multiple of S = {s}", c.period())));
        }
        let mut out = Vec::with_capacity(c.period() / s);
        for (i, colony) in c.cells.chunks(s).enumerate() {
            let mut stream = Vec::with_capacity(s);
            for (j, u) in colony.iter().enumerate() {
                let n = i * s + j;
                if u.len() != self.k.len() || u.iter().zip(&self.k).any(|(f, &l)| f.len() != l) {
                    return Err(DecodeError::at_cell(n, s, "letter lengths differ from the layout"));
                }
                if self.addr.iter().any(|&f| u[f] != self.padded(f, j as u64)) {
                    return Err(DecodeError::at_cell(n, s, "address off the grid"));
                }
                if self.clock.iter().any(|&f| u[f] != self.padded(f, self.clock0)) {
                    return Err(DecodeError::at_cell(n, s, "clock off the work period start"));
                }
                if let Some(&f) = self.aux.iter().find(|&&f| u[f].iter().any(|&x| x != PAD)) {
                    return Err(DecodeError::at_cell(n, s, format!("auxiliary field {f} not empty")));
                }
                if let Some((f, _)) = self.constants.iter().find(|(f, w)| &u[*f] != w) {
                    return Err(DecodeError::at_cell(n, s, format!("field {f} differs from its constant")));
                }
                let t = &u[self.tape];
                if t.len() != 1 || t[0] == PAD {
                    return Err(DecodeError::at_cell(n, s, "Tape is not a single symbol"));
                }
                stream.push(t[0]);
            }
            let end = stream.iter().position(|&x| x == BLANK).unwrap_or(s);
            if stream[end..].iter().any(|&x| x != BLANK) {
                return Err(DecodeError {
                    colony: Some(i),
                    cell: None,
                    cause: "non-blank symbol after the code".into(),
                });
            }
            let b = chi_decode_layout(&stream[..end], &self.target).map_err(|e| DecodeError {
                colony: Some(i),
                cell: None,
                cause: format!("malformed code: {e}"),
            })?;
            if let Some(f) = &self.target_filter {
                if !f(&b) {
                    return Err(DecodeError {
                        colony: Some(i),
                        cell: None,
                        cause: "decoded letter outside the target alphabet".into(),
                    });
                }
            }
            out.push(b);
        }
        Ok(PeriodicConfig::new(out))
    }
}

/// The identity decoding, optionally restricted.
#[derive(Clone, Default)]
pub struct IdentityCodec {
    pub filter: Option<LetterFilter>,
}

impl Codec for IdentityCodec {
    fn decode(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError> {
        if let Some(f) = &self.filter {
            if let Some(n) = c.cells.iter().position(|u| !f(u)) {
                return Err(DecodeError::at_cell(n, 1, "letter outside the domain"));
            }
        }
        Ok(c.clone())
    }

    fn encode(&self, b: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError> {
        self.decode(b)
    }
}

/// Parameters and decoding of a simulation.
#[derive(Clone)]
pub struct SimulationSpec {
    pub s: u64,
    pub t: u64,
    pub q: i64,
    pub codec: Arc<dyn Codec>,
}

impl fmt::Debug for SimulationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimulationSpec(S={}, T={}, Q={})", self.s, self.t, self.q)
    }
}

impl SimulationSpec {
    pub fn new(s: u64, t: u64, q: i64, codec: Arc<dyn Codec>) -> Self {
        assert!(s >= 1 && t >= 1, "S and T must be positive");
        SimulationSpec { s, t, q, codec }
    }

    pub fn decode(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError> {
        self.codec.decode(c)
    }

    pub fn encode(&self, b: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError> {
        self.codec.encode(b)
    }

    /// Nontrivial: `S, T > 1`.
    pub fn nontrivial(&self) -> bool {
        self.s > 1 && self.t > 1
    }
}

/// Composition of decodings, innermost first.
pub struct ComposedCodec(pub Vec<Arc<dyn Codec>>);

impl Codec for ComposedCodec {
    fn decode(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError> {
        self.0.iter().try_fold(c.clone(), |x, k| k.decode(&x))
    }

    fn encode(&self, b: &PeriodicConfig) -> Result<PeriodicConfig, DecodeError> {
        self.0.iter().rev().try_fold(b.clone(), |x, k| k.encode(&x))
    }
}

/// `(ΠS_i, ΠT_i, Σ Q_i Π_{j<i} S_j Π_{j>i} T_j)`.
pub fn compose_params(levels: &[(u64, u64, i64)]) -> (u64, u64, i64) {
    let s = levels.iter().map(|l| l.0).product();
    let t = levels.iter().map(|l| l.1).product();
    let q = (0..levels.len())
        .map(|i| {
            let below: i64 = levels[..i].iter().map(|l| l.0 as i64).product();
            let above: i64 = levels[i + 1..].iter().map(|l| l.1 as i64).product();
            levels[i].2 * below * above
        })
        .sum();
    (s, t, q)
}

/// Composition of a tower of simulations, bottom level first.
pub fn compose_specs(specs: &[SimulationSpec]) -> SimulationSpec {
    assert!(!specs.is_empty(), "empty tower");
    if specs.len() == 1 {
        return specs[0].clone();
    }
    let levels: Vec<_> = specs.iter().map(|s| (s.s, s.t, s.q)).collect();
    let (s, t, q) = compose_params(&levels);
    SimulationSpec::new(s, t, q, Arc::new(ComposedCodec(specs.iter().map(|s| s.codec.clone()).collect())))
}

/// Offset, in bottom cells, of the top-level origin after one top
/// step, found by tracking every level's grid origin step by step.
pub fn geometric_offset(levels: &[(u64, u64, i64)]) -> i64 {
    let n = levels.len();
    // origin[i]: position of the level-(i+1) grid origin in level-i cells.
    let mut origin = vec![0i64; n];
    let mut counters = vec![0u64; n];
    let total: u64 = levels.iter().map(|l| l.1).product();
    for _ in 0..total {
        // One bottom step; carry completed work periods upwards.
        let mut i = 0;
        while i < n {
            counters[i] += 1;
            if counters[i] < levels[i].1 {
                break;
            }
            counters[i] = 0;
            origin[i] += levels[i].2;
            i += 1;
        }
    }
    // Express the top origin in bottom cells.
    let mut pos = 0i64;
    let mut scale = 1i64;
    for i in 0..n {
        pos += origin[i] * scale;
        scale *= levels[i].0 as i64;
    }
    pos
}

/// The convention-exposing form `⌊Q⃗⌋_{1S/T} · ΠT` with inclusive products.
pub fn anib_offset(levels: &[(u64, u64, i64)]) -> BigRational {
    let r = |x: i64| BigRational::from_integer(BigInt::from(x));
    let digits: Vec<BigRational> = levels.iter().map(|l| r(l.2)).collect();
    let mut bases = vec![BigRational::from_integer(1.into()) / r(levels[0].1 as i64)];
    for i in 1..levels.len() {
        bases.push(r(levels[i - 1].0 as i64) / r(levels[i].1 as i64));
    }
    let tt: i64 = levels.iter().map(|l| l.1 as i64).product();
    crate::encoding::adic_value(&digits, &bases) * r(tt)
}

/// The decoding of the universal rule built from `w`.
pub fn unive_spec(w: &crate::params::ToyWitness) -> SimulationSpec {
    let codec =
        ColonyCodec::from_labels(&crate::params::UNIVE_LABELS, w.k.clone(), w.s as usize, w.t0, w.kprime.clone());
    SimulationSpec::new(w.s, w.t, 0, Arc::new(codec))
}

/// The simulated rule `σ^{-ν} ∘ f_p` on `5^{k'}`.
pub fn simulated_rule(
    nu: &[i8],
    kprime: &[usize],
    p: &crate::turing::TmProgram,
    pinv: &crate::turing::TmProgram,
) -> crate::ppa::PpaRule {
    let perm =
        crate::turing::TmPermutation::new(p.clone(), pinv.clone(), kprime.to_vec(), crate::params::MEASURE_STEP_CAP);
    crate::ppa::PpaRule::new("simulated", nu.to_vec(), Arc::new(perm)).with_alphabet(kprime.to_vec())
}

/// Outcome of one clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseStatus {
    Pass,
    Fail(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseResult {
    pub clause: &'static str,
    pub status: ClauseStatus,
}

/// Per-clause verification report.
#[derive(Debug, Clone, Default)]
pub struct SimReport {
    pub clauses: Vec<ClauseResult>,
    /// Completeness samples that survived `2T` steps.
    pub survivors: usize,
}

impl SimReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.status == ClauseStatus::Pass)
    }

    fn push(&mut self, clause: &'static str, r: Result<(), String>) {
        self.clauses.push(ClauseResult { clause, status: r.map_or_else(ClauseStatus::Fail, |_| ClauseStatus::Pass) });
    }

    /// One NDJSON record per clause.
    pub fn to_ndjson(&self) -> String {
        self.clauses
            .iter()
            .map(|c| {
                let (status, cx) = match &c.status {
                    ClauseStatus::Pass => ("pass", None),
                    ClauseStatus::Fail(m) => ("fail", Some(m.clone())),
                };
                json!({"clause": c.clause, "status": status, "counterexample": cx}).to_string() + "\n"
            })
            .collect()
    }
}

/// What [`verify_simulation`] checks.
#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub disjointness: bool,
    /// Candidates for the completeness probe.
    pub completeness: Vec<PeriodicConfig>,
    /// Multiple of `T` a candidate must survive.
    pub completeness_periods: u64,
}

fn describe(e: &StepReject) -> String {
    e.to_string()
}

/// Checks the simulation equations at `c = encode(b)`.
pub fn verify_simulation(
    f: &dyn Automaton,
    g: &dyn Automaton,
    spec: &SimulationSpec,
    b: &PeriodicConfig,
    opts: &VerifyOptions,
) -> SimReport {
    let mut rep = SimReport::default();
    let c = match spec.encode(b) {
        Ok(c) => c,
        Err(e) => {
            rep.push("encode", Err(e.to_string()));
            return rep;
        }
    };
    rep.push(
        "encode",
        spec.decode(&c).map_err(|e| e.to_string()).and_then(|d| {
            if &d == b {
                Ok(())
            } else {
                Err("decode(encode(b)) differs from b".into())
            }
        }),
    );
    let t = spec.t as i64;
    // Forward trajectory, kept for the disjointness sweep.
    let mut traj = vec![c.clone()];
    let mut fwd_err = None;
    for k in 0..t {
        match f.step_forward(traj.last().expect("non-empty")) {
            Ok(n) => traj.push(n),
            Err(e) => {
                fwd_err = Some(e.with_time(k));
                break;
            }
        }
    }
    let gb = g.step_forward(b);
    rep.push(
        "forward",
        match (&gb, &fwd_err) {
            (Ok(gb), None) => {
                let end = traj.last().expect("non-empty").shift(spec.q);
                match spec.decode(&end) {
                    Ok(d) if &d == gb => Ok(()),
                    Ok(d) => Err(format!("decoded {} but G(b) = {}", d.to_text(), gb.to_text())),
                    Err(e) => Err(format!("F^T(c) does not decode: {e}")),
                }
            }
            (Ok(_), Some(e)) => Err(format!("G(b) defined but F^T(c) rejected: {}", describe(e))),
            (Err(_), None) => Err("G(b) undefined but F^T(c) defined".into()),
            (Err(_), Some(_)) => Ok(()),
        },
    );
    let gib = g.step_backward(b);
    let back = iterate(f, &c, -t);
    rep.push(
        "backward",
        match (&gib, &back) {
            (Ok(gb), Ok(x)) => match spec.decode(&x.shift(-spec.q)) {
                Ok(d) if &d == gb => Ok(()),
                Ok(d) => Err(format!("decoded {} but G^-1(b) = {}", d.to_text(), gb.to_text())),
                Err(e) => Err(format!("F^-T(c) does not decode: {e}")),
            },
            (Ok(_), Err(e)) => Err(format!("G^-1(b) defined but F^-T(c) rejected: {}", describe(e))),
            (Err(_), Ok(_)) => Err("G^-1(b) undefined but F^-T(c) defined".into()),
            (Err(_), Err(_)) => Ok(()),
        },
    );
    if opts.disjointness {
        let mut res = Ok(());
        'outer: for (tt, x) in traj.iter().enumerate().take(spec.t as usize) {
            for s in 0..spec.s as i64 {
                if (tt, s) != (0, 0) && spec.decode(&x.shift(s)).is_ok() {
                    res = Err(format!("sigma^{s} F^{tt}(c) decodes"));
                    break 'outer;
                }
            }
        }
        rep.push("disjointness", res);
    }
    if !opts.completeness.is_empty() {
        let horizon = t * opts.completeness_periods.max(1) as i64;
        let mut res = Ok(());
        for cand in &opts.completeness {
            if iterate(f, cand, horizon).is_ok() {
                rep.survivors += 1;
                if let Err(e) = spec.decode(cand) {
                    res = Err(format!("survivor {} does not decode: {e}", cand.to_text()));
                    break;
                }
            }
        }
        rep.push("completeness", res);
    }
    rep
}

/// Result of [`period_transfer_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodTransfer {
    pub simulated: Vec<(usize, usize)>,
    pub simulating: Vec<(usize, usize)>,
    /// `(k, l) ↦ (kS, lT)` is a bijection between the two lists.
    pub matches: bool,
    /// A run stopped early.
    pub budget_exhausted: bool,
}

/// Compares the periods of `b` under `G` within `max_t` with those of
/// `encode(b)` under `F` within `max_t·T`, for `Q = 0`.
pub fn period_transfer_check(
    f: &dyn Automaton,
    g: &dyn Automaton,
    spec: &SimulationSpec,
    b: &PeriodicConfig,
    max_t: usize,
) -> Result<PeriodTransfer, DecodeError> {
    assert_eq!(spec.q, 0, "period transfer is stated for Q = 0");
    let c = spec.encode(b)?;
    let pg = crate::ppa::find_periods(g, b, max_t);
    let pf = crate::ppa::find_periods(f, &c, max_t * spec.t as usize);
    let (s, t) = (spec.s as usize, spec.t as usize);
    let mut mapped: Vec<(usize, usize)> = pg.periods.iter().map(|&(k, l)| (k * s, l * t)).collect();
    mapped.sort_unstable();
    let mut got = pf.periods.clone();
    got.sort_unstable();
    Ok(PeriodTransfer {
        matches: mapped == got,
        simulated: pg.periods,
        simulating: pf.periods,
        budget_exhausted: pg.partial.is_some() || pf.partial.is_some(),
    })
}

/// One level of a simulation tower.
pub struct TowerLevel<'a> {
    pub rule: &'a dyn Automaton,
    pub spec: SimulationSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RockError {
    Reject {
        level: usize,
        cause: String,
    },
    /// Two phases decode at one level.
    Ambiguous {
        level: usize,
        phases: Vec<(u64, u64)>,
    },
}

/// Extracts the phase `(s_i, t_i)` with `c_i = σ^{s_i} F_i^{t_i}(c')`,
/// `c'` decodable, at each of the first `depth` levels.
pub fn nested_rock_membership(
    tower: &[TowerLevel<'_>],
    c: &PeriodicConfig,
    depth: usize,
) -> Result<Vec<(u64, u64)>, RockError> {
    assert!(depth <= tower.len(), "depth beyond the tower");
    let mut cur = c.clone();
    let mut phases = Vec::new();
    for (level, lv) in tower.iter().take(depth).enumerate() {
        let mut found = Vec::new();
        let mut decoded = None;
        let mut x = Some(cur.clone());
        for t in 0..lv.spec.t {
            let Some(y) = x.take() else { break };
            for s in 0..lv.spec.s {
                if let Ok(d) = lv.spec.decode(&y.shift(-(s as i64))) {
                    found.push((s, t));
                    decoded = Some(d);
                }
            }
            x = lv.rule.step_backward(&y).ok();
        }
        match found.len() {
            0 => return Err(RockError::Reject { level, cause: "no phase decodes".into() }),
            1 => {
                phases.push(found[0]);
                cur = decoded.expect("a phase decoded");
            }
            _ => return Err(RockError::Ambiguous { level, phases: found }),
        }
    }
    Ok(phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::enumerate_alphabet;

    fn codec(s: usize) -> ColonyCodec {
        let labels = ["Addr", "Addr_+1", "Clock", "Clock_+1", "Tape", "Head_-1", "Free"];
        ColonyCodec::from_labels(&labels, vec![4, 4, 2, 2, 1, 2, 2], s, 0, vec![1, 1])
    }

    #[test]
    fn round_trip_exhaustive() {
        let c = codec(8);
        let letters = enumerate_alphabet(&[1, 1]);
        for a in &letters {
            for b in letters.iter().step_by(3) {
                let x = PeriodicConfig::new(vec![a.clone(), b.clone()]);
                assert_eq!(c.decode(&c.encode(&x).unwrap()).unwrap(), x);
            }
        }
    }

    #[test]
    fn grid_phase_and_tail_are_checked() {
        let c = codec(10);
        let x = PeriodicConfig::new(vec![vec![vec![0], vec![1]], vec![vec![2], vec![3]]]);
        let e = c.encode(&x).unwrap();
        assert!(c.decode(&e.shift(1)).is_err());
        assert_eq!(c.decode(&e.shift(10)).unwrap(), x.shift(1));
        let mut bad = e.clone();
        bad.cells[9][4] = vec![0];
        assert_eq!(c.decode(&bad).unwrap_err().colony, Some(0));
        let mut aux = e.clone();
        aux.cells[3][5] = vec![4, 1];
        assert!(c.decode(&aux).is_err());
    }

    #[test]
    fn anonymous_policies_decode_alike() {
        let x = PeriodicConfig::new(vec![vec![vec![0], vec![1]]]);
        let a = codec(8);
        let b = codec(8).with_policy(AnonymousPolicy::Fixed(vec![vec![1, 2]]));
        let (ea, eb) = (a.encode(&x).unwrap(), b.encode(&x).unwrap());
        assert_ne!(ea, eb);
        assert_eq!(a.decode(&ea).unwrap(), b.decode(&eb).unwrap());
    }

    #[test]
    fn layout_errors() {
        let x = PeriodicConfig::new(vec![vec![vec![0], vec![1]]]);
        assert!(codec(7).encode(&x).is_err());
        assert!(codec(8).encode(&PeriodicConfig::new(vec![vec![vec![0]]])).is_err());
    }

    #[test]
    fn composition_matches_geometry() {
        assert_eq!(compose_params(&[(3, 4, 0), (5, 6, 0)]), (15, 24, 0));
        for levels in [
            vec![(3, 4, 3)],
            vec![(3, 4, 3), (5, 6, 0)],
            vec![(3, 4, 3), (5, 6, -5), (2, 3, 2)],
            vec![(2, 5, -2), (3, 2, 6)],
        ] {
            let (_, _, q) = compose_params(&levels);
            assert_eq!(q, geometric_offset(&levels), "{levels:?}");
            assert_eq!(anib_offset(&levels), BigRational::from_integer(q.into()));
        }
    }

    #[test]
    fn composition_is_associative() {
        let a = (3, 4, 2);
        let b = (5, 6, -1);
        let c = (2, 7, 3);
        let (s, t, q) = compose_params(&[b, c]);
        assert_eq!(compose_params(&[a, (s, t, q)]), compose_params(&[a, b, c]));
        assert_eq!(compose_params(&[a]), a);
    }
}
