//! Rule generators. Every generator assembles program text from the
//! listing macros, parses it and wraps the result as a restricted
//! partition automaton.

use super::listings::{self as ls, COMPUTE_FIELDS, COORDI_FIELDS, SHIFT_FIELDS};
use crate::encoding::{bin_encode, bin_len, chi_len, format_word, sharp_strip, LengthVector, Word};
use crate::params::{check_inequalities, InequalityReport, ToyWitness};
use crate::permlang::ast::PermProgram;
use crate::permlang::eval::{Compiled, Env, PermSeq};
use crate::permlang::parse::{parse, ParseError};
use crate::permlang::print::print;
use crate::ppa::{LocalReject, Permutation, PpaRule};
use crate::turing::TmProgram;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum RuleError {
    #[error("generated program does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error("unregistered sequence names: {0:?}")]
    Missing(Vec<String>),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("inequalities fail: {failed:?}")]
    Inequalities { failed: Vec<String>, report: InequalityReport },
    #[error("program references anonymous fields")]
    Sealing,
}

/// Generator identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    Coordi,
    GammaU,
    Compute,
    Shift,
    Unive,
    Chekka,
    Hier,
    SelfSim,
    Hsim,
    Intru,
    Syncomp,
    Reali,
}

impl Generator {
    pub fn id(self) -> &'static str {
        match self {
            Generator::Coordi => "coordi",
            Generator::GammaU => "gammaU",
            Generator::Compute => "compute",
            Generator::Shift => "shift",
            Generator::Unive => "unive",
            Generator::Chekka => "chekka",
            Generator::Hier => "hier",
            Generator::SelfSim => "self",
            Generator::Hsim => "hsim",
            Generator::Intru => "intru",
            Generator::Syncomp => "syncomp",
            Generator::Reali => "reali",
        }
    }
}

type Cache = Mutex<HashMap<Vec<Word>, Result<Vec<Word>, LocalReject>>>;

/// Caches both directions of a permutation.
pub struct Memoized<P> {
    inner: P,
    fwd: Cache,
    bwd: Cache,
}

const MEMO_CAP: usize = 1 << 18;

impl<P: Permutation> Memoized<P> {
    pub fn new(inner: P) -> Self {
        Memoized { inner, fwd: Mutex::default(), bwd: Mutex::default() }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn cached(
        cache: &Cache,
        u: &[Word],
        f: impl FnOnce() -> Result<Vec<Word>, LocalReject>,
    ) -> Result<Vec<Word>, LocalReject> {
        if let Some(r) = cache.lock().expect("memo poisoned").get(u) {
            return r.clone();
        }
        let r = f();
        let mut c = cache.lock().expect("memo poisoned");
        if c.len() >= MEMO_CAP {
            c.clear();
        }
        c.insert(u.to_vec(), r.clone());
        r
    }
}

impl<P: Permutation> Permutation for Memoized<P> {
    fn forward(&self, u: &[Word]) -> Result<Vec<Word>, LocalReject> {
        Self::cached(&self.fwd, u, || self.inner.forward(u))
    }

    fn backward(&self, u: &[Word]) -> Result<Vec<Word>, LocalReject> {
        Self::cached(&self.bwd, u, || self.inner.backward(u))
    }
}

/// A generated rule with its provenance.
#[derive(Clone)]
pub struct RuleInstance {
    pub generator: Generator,
    pub params: Value,
    pub program: PermProgram,
    pub perm: Arc<Memoized<Compiled>>,
    pub rule: PpaRule,
    pub sealed: bool,
    pub verified: Option<InequalityReport>,
}

impl std::fmt::Debug for RuleInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RuleInstance")
            .field("generator", &self.generator)
            .field("params", &self.params)
            .field("alphabet", &self.rule.alphabet)
            .finish_non_exhaustive()
    }
}

impl RuleInstance {
    fn build(
        generator: Generator,
        params: Value,
        src: &str,
        env: Env,
        alphabet: Option<LengthVector>,
    ) -> Result<Self, RuleError> {
        let program = parse(src)?;
        let compiled = Compiled::new(program.clone(), Arc::new(env)).map_err(RuleError::Missing)?;
        let perm = Arc::new(Memoized::new(compiled));
        let mut rule = PpaRule::new(generator.id(), program.directions(), perm.clone());
        if let Some(k) = alphabet {
            if k.len() != program.fields.len() {
                return Err(RuleError::Params(format!("{} lengths for {} fields", k.len(), program.fields.len())));
            }
            rule = rule.with_alphabet(k);
        }
        let sealed = !print(&program).contains('$');
        Ok(RuleInstance { generator, params, program, perm, rule, sealed, verified: None })
    }

    /// Index of a field label.
    pub fn field(&self, label: &str) -> usize {
        self.program.field_index(label).unwrap_or_else(|| panic!("no field `{label}`"))
    }

    /// Program source text.
    pub fn source(&self) -> String {
        print(&self.program)
    }

    /// Restricts the alphabet further.
    pub fn restricted(mut self, f: impl Fn(&[Word]) -> bool + Send + Sync + 'static) -> Self {
        let prev = self.rule.filter.take();
        self.rule = match prev {
            Some(g) => self.rule.with_filter(move |u| g(u) && f(u)),
            None => self.rule.with_filter(f),
        };
        self
    }

    /// Fails on anonymous fields.
    pub fn require_sealed(self) -> Result<Self, RuleError> {
        if self.sealed {
            Ok(self)
        } else {
            Err(RuleError::Sealing)
        }
    }

    /// Canonical JSON manifest.
    pub fn manifest(&self) -> Value {
        let fields: Vec<Value> = self
            .program
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| {
                json!({
                    "label": f.label,
                    "direction": f.dir,
                    "length": self.rule.alphabet.as_ref().map(|k| k[i]),
                })
            })
            .collect();
        let canonical = serde_json::to_string(&json!({
            "params": self.params,
            "inequalities": self.verified.as_ref().map(|r| r.to_json()),
        }))
        .expect("JSON values serialize");
        json!({
            "generator": self.generator.id(),
            "params": self.params,
            "fields": fields,
            "sealed": self.sealed,
            "verified": self.verified.as_ref().map(InequalityReport::passed),
            "verification_hash": hex::encode(Sha256::digest(canonical.as_bytes())),
        })
    }
}

fn lit(w: &[u8]) -> String {
    format!("'{}'", format_word(w))
}

fn layout_lit(k: &[usize]) -> String {
    format!("[{}]", k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

fn program_text(fields: &[(&str, i8)], lines: Vec<String>) -> String {
    let mut out = vec![ls::header(fields)];
    out.extend(lines);
    out.join("\n")
}

fn pos(name: &str, v: u64) -> Result<(), RuleError> {
    if v == 0 {
        Err(RuleError::Params(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

fn norm(n: u64) -> usize {
    bin_len(u128::from(n))
}

/// The coordinate rule for `S × T` macro-cells.
pub fn make_coordi(s: u64, t: u64) -> Result<RuleInstance, RuleError> {
    pos("S", s)?;
    pos("T", t)?;
    let src = program_text(&COORDI_FIELDS, ls::coordi(&s.to_string(), &t.to_string()));
    let k = vec![norm(s), norm(s), norm(t), norm(t)];
    RuleInstance::build(Generator::Coordi, json!({"S": s, "T": t}), &src, Env::new(), Some(k))
}

/// Parameters of the computation rule.
#[derive(Debug, Clone)]
pub struct ComputeParams {
    pub s: u64,
    pub t: u64,
    pub u: u64,
    pub t0: u64,
    pub p: TmProgram,
    pub pinv: TmProgram,
}

fn head_len(p: &TmProgram, pinv: &TmProgram) -> usize {
    super::gamma_u::head_field_len(p).max(super::gamma_u::head_field_len(pinv))
}

fn clock_expr(t0: u64) -> String {
    if t0 == 0 {
        "bina(Clock)".into()
    } else {
        format!("bina(Clock) - {t0}")
    }
}

/// The Bennett-schedule computation rule, with coordinates.
pub fn make_compute(c: &ComputeParams) -> Result<RuleInstance, RuleError> {
    pos("S", c.s)?;
    pos("T", c.t)?;
    let fields: Vec<(&str, i8)> = COORDI_FIELDS.iter().chain(&COMPUTE_FIELDS).copied().collect();
    let mut lines =
        ls::compute("bina(Addr)", &clock_expr(c.t0), &c.u.to_string(), &lit(&c.p.encode()), &lit(&c.pinv.encode()));
    lines.extend(ls::coordi(&c.s.to_string(), &c.t.to_string()));
    let h = head_len(&c.p, &c.pinv);
    let k = vec![norm(c.s), norm(c.s), norm(c.t), norm(c.t), 1, h, h, 1];
    let params = json!({"S": c.s, "T": c.t, "U": c.u, "t0": c.t0, "p": format_word(&c.p.encode()), "pinv": format_word(&c.pinv.encode())});
    RuleInstance::build(Generator::Compute, params, &program_text(&fields, lines), Env::new(), Some(k))
}

/// The macro-shift rule, with coordinates.
pub fn make_shift(nu: &[i8], kprime: &[usize], s: u64, t: u64, t0: u64) -> Result<RuleInstance, RuleError> {
    pos("S", s)?;
    pos("T", t)?;
    if nu.len() != kprime.len() || nu.iter().any(|d| !(-1..=1).contains(d)) {
        return Err(RuleError::Params("direction vector must match the layout".into()));
    }
    let fields: Vec<(&str, i8)> =
        COORDI_FIELDS.iter().chain(std::iter::once(&("Tape", 0))).chain(&SHIFT_FIELDS).copied().collect();
    let mut lines = ls::shift(nu, &layout_lit(kprime), "bina(Addr)", &clock_expr(t0), &s.to_string());
    lines.extend(ls::coordi(&s.to_string(), &t.to_string()));
    let k = vec![norm(s), norm(s), norm(t), norm(t), 1, 1, 1];
    let params = json!({"nu": nu, "kprime": kprime, "S": s, "T": t, "t0": t0});
    RuleInstance::build(Generator::Shift, params, &program_text(&fields, lines), Env::new(), Some(k))
}

/// Build options of the universal rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniveOptions {
    /// Build even when the inequalities fail.
    pub force: bool,
    /// Prepend the emptiness and layout checks at the work period start.
    pub son_father_check: bool,
}

/// The universal rule simulating `σ^{-ν} ∘ f_p` on `5^{k'}`.
pub fn make_unive(
    w: &ToyWitness,
    nu: &[i8],
    p: &TmProgram,
    pinv: &TmProgram,
    opts: UniveOptions,
) -> Result<RuleInstance, RuleError> {
    let kprime = &w.kprime;
    if nu.len() != kprime.len() {
        return Err(RuleError::Params("direction vector must match the layout".into()));
    }
    let report = check_inequalities(&w.inequality_set()).map_err(|e| RuleError::Params(e.to_string()))?;
    if !report.passed() && !opts.force {
        let failed = report.failures().iter().map(|c| c.name.clone()).collect();
        return Err(RuleError::Inequalities { failed, report });
    }
    let clock = clock_expr(w.t0);
    let kl = layout_lit(kprime);
    let mut lines = Vec::new();
    if opts.son_father_check {
        lines.push(format!("if {clock} = 0"));
        lines.push(format!("  {}", ls::empty_aux()));
        lines.extend(ls::indent(ls::chekka(kprime.len(), "bina(Addr)", "Tape", &kl)));
        lines.push("endif".into());
    }
    lines.extend(ls::unive(
        nu,
        &kl,
        "bina(Addr)",
        &clock,
        &w.s.to_string(),
        &w.u.to_string(),
        &lit(&p.encode()),
        &lit(&pinv.encode()),
    ));
    lines.extend(ls::coordi(&w.s.to_string(), &w.t.to_string()));
    let params = json!({
        "kprime": kprime, "nu": nu, "S": w.s, "T": w.t, "U": w.u, "t0": w.t0, "k": w.k,
        "p": format_word(&p.encode()), "pinv": format_word(&pinv.encode()),
        "son_father_check": opts.son_father_check,
    });
    let mut inst = RuleInstance::build(
        Generator::Unive,
        params,
        &program_text(&ls::unive_fields(), lines),
        Env::new(),
        Some(w.k.clone()),
    )?;
    inst.verified = Some(report);
    Ok(inst)
}

/// The layout check on a two-field `[Addr, Tape]` rule.
pub fn make_chekka(kprime: &[usize], s: u64) -> Result<RuleInstance, RuleError> {
    pos("S", s)?;
    let fields = [("Addr", 0), ("Tape", 0)];
    let lines = ls::chekka(kprime.len(), "bina(Addr)", "Tape", &layout_lit(kprime));
    let params = json!({"kprime": kprime, "S": s});
    RuleInstance::build(Generator::Chekka, params, &program_text(&fields, lines), Env::new(), Some(vec![norm(s), 1]))
}

/// The prefix check of field `i` against the constant `t`.
pub fn make_hier(kprime: &[usize], s: u64, i: usize, t: &[u8]) -> Result<RuleInstance, RuleError> {
    pos("S", s)?;
    if i >= kprime.len() {
        return Err(RuleError::Params(format!("field {i} outside a layout of {} fields", kprime.len())));
    }
    let fields = [("Addr", 0), ("Tape", 0)];
    let lines = ls::hier("bina(Addr)", "Tape", &layout_lit(kprime), i, &lit(t));
    let params = json!({"kprime": kprime, "S": s, "i": i, "t": format_word(t)});
    RuleInstance::build(Generator::Hier, params, &program_text(&fields, lines), Env::new(), Some(vec![norm(s), 1]))
}

/// Fields of the self-simulating rule.
pub fn self_fields() -> Vec<(&'static str, i8)> {
    let mut f = ls::unive_fields();
    f.extend([("MAddr", 0), ("MClock", 0), ("Alarm", 0), ("Prog", 0), ("RevProg", 0)]);
    f
}

/// The self-simulating rule; unrestricted.
pub fn make_self() -> Result<RuleInstance, RuleError> {
    let fields = self_fields();
    let nu: Vec<i8> = fields.iter().map(|f| f.1).collect();
    let m = fields.len();
    let own = format!("own({m})");
    let mut lines = vec!["if bina(Clock) = 0".to_string(), format!("  {}", ls::empty_aux())];
    lines.extend(ls::indent(ls::chekka(m, "bina(Addr)", "Tape", &own)));
    for label in ["MAddr", "MClock", "Alarm", "Prog", "RevProg"] {
        let i = fields.iter().position(|f| f.0 == label).expect("label present");
        lines.extend(ls::indent(ls::hier("bina(Addr)", "Tape", &own, i, label)));
    }
    lines.push("endif".into());
    lines.extend(ls::unive(&nu, &own, "bina(Addr)", "bina(Clock)", "bina(MAddr)", "bina(Alarm)", "Prog", "RevProg"));
    lines.extend(ls::coordi("bina(MAddr)", "bina(MClock)"));
    RuleInstance::build(Generator::SelfSim, json!({}), &program_text(&fields, lines), Env::new(), None)
}

/// Restricts the self-simulating rule to `A_{k,S,T,U}` with programs.
pub fn restrict_self(
    inst: RuleInstance,
    k: LengthVector,
    s: u64,
    t: u64,
    u: u64,
    p: &[u8],
    pinv: &[u8],
) -> RuleInstance {
    let (p, pinv) = (p.to_vec(), pinv.to_vec());
    let consts = [(10, bin_encode(s.into())), (11, bin_encode(t.into())), (12, bin_encode(u.into()))];
    let mut inst = inst.restricted(move |w| {
        consts.iter().all(|(i, v)| sharp_strip(&w[*i]).is_ok_and(|x| x == v.as_slice()))
            && sharp_strip(&w[13]).is_ok_and(|x| x == p.as_slice())
            && sharp_strip(&w[14]).is_ok_and(|x| x == pinv.as_slice())
    });
    inst.rule = inst.rule.with_alphabet(k);
    inst
}

/// Level-indexed sequences of a hierarchical rule.
#[derive(Clone)]
pub struct LevelSeqs {
    pub k: Arc<dyn Fn(u64) -> Option<LengthVector> + Send + Sync>,
    pub s: Arc<dyn Fn(u64) -> Option<u64> + Send + Sync>,
    pub t: Arc<dyn Fn(u64) -> Option<u64> + Send + Sync>,
    pub u: Arc<dyn Fn(u64) -> Option<u64> + Send + Sync>,
}

impl LevelSeqs {
    /// Constant `S`, `T`, `U`; layouts from `k`.
    pub fn constant(k: impl Fn(u64) -> Option<LengthVector> + Send + Sync + 'static, s: u64, t: u64, u: u64) -> Self {
        LevelSeqs {
            k: Arc::new(k),
            s: Arc::new(move |_| Some(s)),
            t: Arc::new(move |_| Some(t)),
            u: Arc::new(move |_| Some(u)),
        }
    }

    fn env(&self) -> Env {
        let idx = |n: i128| u64::try_from(n).ok();
        let (k, s, t, u) = (self.k.clone(), self.s.clone(), self.t.clone(), self.u.clone());
        Env::new()
            .with_layout("K", move |n| idx(n).and_then(|n| k(n)))
            .with_int("S", move |n| idx(n).and_then(|n| s(n)).map(i128::from))
            .with_int("T", move |n| idx(n).and_then(|n| t(n)).map(i128::from))
            .with_int("U", move |n| idx(n).and_then(|n| u(n)).map(i128::from))
    }
}

/// Fields of the hierarchical rule.
pub fn hsim_fields() -> Vec<(&'static str, i8)> {
    let mut f = ls::unive_fields();
    f.extend([("Level", 0), ("Prog", 0), ("RevProg", 0)]);
    f
}

/// Fields of the intrinsic-universality rule.
pub fn intru_fields() -> Vec<(&'static str, i8)> {
    let mut f = hsim_fields();
    f.extend([("OTape_-1", -1), ("OTape", 0), ("OTape_+1", 1)]);
    f
}

fn hierarchy_lines(
    fields: &[(&str, i8)],
    level: &str,
    extra_checks: Vec<String>,
    hier_checks: &[(&str, String)],
) -> Vec<String> {
    let m = fields.len();
    let next = format!("K[{level} + 1]");
    let idx = |l: &str| fields.iter().position(|f| f.0 == l).expect("label present");
    let mut lines = vec!["if bina(Clock) = 0".to_string()];
    lines.extend(extra_checks.into_iter().map(|l| format!("  {l}")));
    lines.push(format!("  {}", ls::empty_aux()));
    lines.extend(ls::indent(ls::chekka(m, "bina(Addr)", "Tape", &next)));
    for (label, t) in hier_checks {
        lines.extend(ls::indent(ls::hier("bina(Addr)", "Tape", &next, idx(label), t)));
    }
    lines.push("endif".into());
    lines
}

fn nu_of(fields: &[(&str, i8)]) -> Vec<i8> {
    fields.iter().map(|f| f.1).collect()
}

fn hsim_like(fields: &[(&str, i8)], first: Vec<String>) -> Vec<String> {
    let level = "bina(Level)";
    let mut lines = first;
    lines.extend(hierarchy_lines(
        fields,
        level,
        vec![],
        &[("Prog", "Prog".into()), ("RevProg", "RevProg".into()), ("Level", format!("bin({level} + 1)"))],
    ));
    lines.extend(ls::unive(
        &nu_of(fields),
        &format!("K[{level} + 1]"),
        "bina(Addr)",
        "bina(Clock)",
        &format!("S[{level}]"),
        &format!("U[{level}]"),
        "Prog",
        "RevProg",
    ));
    lines.extend(ls::coordi(&format!("S[{level}]"), &format!("T[{level}]")));
    lines
}

/// The hierarchical rule over level-indexed parameters; unrestricted.
pub fn make_hsim(seqs: &LevelSeqs) -> Result<RuleInstance, RuleError> {
    let fields = hsim_fields();
    let lines = hsim_like(&fields, vec![]);
    RuleInstance::build(Generator::Hsim, json!({}), &program_text(&fields, lines), seqs.env(), None)
}

/// The hierarchical rule with a permutation sequence on the `Other` fields.
pub fn make_intru(seqs: &LevelSeqs, alpha: PermSeq) -> Result<RuleInstance, RuleError> {
    let fields = intru_fields();
    let first = vec!["apply alpha[bina(Level)] on OTape_-1, OTape, OTape_+1".to_string()];
    let lines = hsim_like(&fields, first);
    let env = seqs.env().with_perm("alpha", move |n| alpha(n));
    RuleInstance::build(Generator::Intru, json!({}), &program_text(&fields, lines), env, None)
}

/// Fields of the synchronizing-computation rule.
pub fn syncomp_fields() -> Vec<(&'static str, i8)> {
    let mut f = ls::unive_fields();
    f.extend([("MHist", 0), ("MHist_+1", 1), ("Prog", 0), ("RevProg", 0)]);
    f
}

/// The synchronizing-computation rule; `p'` rejects histories.
pub fn make_syncomp(seqs: &LevelSeqs, pprime: &TmProgram) -> Result<RuleInstance, RuleError> {
    let fields = syncomp_fields();
    let level = "len(MHist)";
    let mut lines = vec!["check MHist = MHist_+1".to_string()];
    lines.extend(hierarchy_lines(
        &fields,
        level,
        vec![format!("check halt({}, {level}, MHist)", lit(&pprime.encode()))],
        &[("Prog", "Prog".into()), ("RevProg", "RevProg".into()), ("MHist", "MHist".into())],
    ));
    lines.extend(ls::unive(
        &nu_of(&fields),
        &format!("K[{level} + 1]"),
        "bina(Addr)",
        "bina(Clock)",
        &format!("S[{level}]"),
        &format!("U[{level}]"),
        "Prog",
        "RevProg",
    ));
    lines.extend(ls::coordi(&format!("S[{level}]"), &format!("T[{level}]")));
    let params = json!({"pprime": format_word(&pprime.encode())});
    RuleInstance::build(Generator::Syncomp, params, &program_text(&fields, lines), seqs.env(), None)
}

/// Fields of the realization rule.
pub fn reali_fields() -> Vec<(&'static str, i8)> {
    let mut f = ls::unive_fields();
    f.extend([("MHist", 0), ("MShift", 0), ("MShift_+1", 1), ("Prog", 0), ("RevProg", 0)]);
    f
}

/// Directive letters `(D, W)` indexed by `num(MShift)`.
pub const DIRECTIVE_D: [i128; 3] = [0, 1, 1];
pub const DIRECTIVE_W: [i128; 3] = [1, 1, 0];

/// The realization rule; `T` per level and letter is
/// `S(D+W+1) + 4U + 1`.
pub fn make_reali(seqs: &LevelSeqs, pprime: &TmProgram) -> Result<RuleInstance, RuleError> {
    let fields = reali_fields();
    let level = "len(MHist)";
    let (s, u) = (format!("S[{level}]"), format!("U[{level}]"));
    let delay = format!("D[num(MShift)] * {s}");
    let mut lines = vec!["check MShift = MShift_+1".to_string()];
    lines.extend(hierarchy_lines(
        &fields,
        level,
        vec![format!("check halt({}, {level}, MHist)", lit(&pprime.encode()))],
        &[("Prog", "Prog".into()), ("RevProg", "RevProg".into()), ("MHist", "cat(MHist, MShift)".into())],
    ));
    lines.extend(["if bina(Clock) = 0".into(), "  exch Tape, Tape_+1".into(), "endif".into()]);
    lines.extend([format!("if bina(Clock) = {delay}"), "  exch Tape, Tape_+1".into(), "endif".into()]);
    lines.extend(ls::unive(
        &nu_of(&fields),
        &format!("K[{level} + 1]"),
        "bina(Addr)",
        &format!("bina(Clock) - {delay}"),
        &s,
        &u,
        "Prog",
        "RevProg",
    ));
    lines.extend(ls::coordi(&s, &format!("{s} * (D[num(MShift)] + W[num(MShift)] + 1) + 4 * {u} + 1")));
    let env = seqs
        .env()
        .with_int("D", |a| usize::try_from(a).ok().and_then(|a| DIRECTIVE_D.get(a).copied()))
        .with_int("W", |a| usize::try_from(a).ok().and_then(|a| DIRECTIVE_W.get(a).copied()));
    let params = json!({"pprime": format_word(&pprime.encode())});
    RuleInstance::build(Generator::Reali, params, &program_text(&fields, lines), env, None)
}

/// Restricts a hierarchical rule to level `n` with fixed programs:
/// lengths `k_n`, `Level = bin(n)`, `Prog = p`, `RevProg = p⁻¹`.
pub fn restrict_level(inst: RuleInstance, n: u64, k: LengthVector, p: &[u8], pinv: &[u8]) -> RuleInstance {
    let (lv, pr, rv) = (inst.field("Level"), inst.field("Prog"), inst.field("RevProg"));
    let (level, p, pinv) = (bin_encode(n.into()), p.to_vec(), pinv.to_vec());
    let mut inst = inst.restricted(move |w| {
        sharp_strip(&w[lv]).is_ok_and(|x| x == level.as_slice())
            && sharp_strip(&w[pr]).is_ok_and(|x| x == p.as_slice())
            && sharp_strip(&w[rv]).is_ok_and(|x| x == pinv.as_slice())
    });
    inst.rule = inst.rule.with_alphabet(k);
    inst
}

/// Layout of a level-`n` hierarchical letter for toy parameters.
pub fn toy_hsim_layout(n: u64, s: u64, t: u64, head: usize, prog_len: usize, other: Option<usize>) -> LengthVector {
    let (ks, kt) = (norm(s), norm(t));
    let mut k = vec![ks, ks, kt, kt, 1, head, head, 1, 1, 1, bin_len(n.into()), prog_len, prog_len];
    if let Some(l) = other {
        k.extend([l, l, l]);
    }
    k
}

/// Smallest `S` with `S ≥ |Chi(k_{n+1})|` for all levels up to `depth`.
pub fn toy_hsim_colony(depth: u64, u: u64, head: usize, prog_len: usize, other: Option<usize>) -> (u64, u64) {
    let mut s = 2 * u;
    loop {
        let t = 4 * u + s + 1;
        let need =
            (0..=depth + 1).map(|n| chi_len(&toy_hsim_layout(n, s, t, head, prog_len, other))).max().unwrap_or(0);
        if need as u64 <= s {
            return (s, t);
        }
        s = need as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{enumerate_alphabet, sharp_pad};
    use crate::params::solve_toy_unive;
    use crate::ppa::{iterate, PeriodicConfig};
    use crate::turing::toys;

    fn coordi_cell(s: u64, t: u64, a: u64, c: u64) -> Vec<Word> {
        let pad = |l: u64, v: u64| sharp_pad(norm(l), &bin_encode(v.into())).unwrap();
        vec![pad(s, a), pad(s, a), pad(t, c), pad(t, c)]
    }

    #[test]
    fn coordi_cycles_the_clock() {
        let (s, t) = (3, 4);
        let r = make_coordi(s, t).unwrap();
        let c = PeriodicConfig::new((0..6).map(|n| coordi_cell(s, t, n % s, 0)).collect());
        let mut x = c.clone();
        for step in 1..=t {
            x = r.rule.step(&x).unwrap();
            assert_eq!(x, PeriodicConfig::new((0..6).map(|n| coordi_cell(s, t, n % s, step % t)).collect()));
        }
        assert_eq!(x, c);
    }

    #[test]
    fn coordi_rejects_mismatches() {
        let r = make_coordi(3, 4).unwrap();
        let mut bad = coordi_cell(3, 4, 1, 0);
        bad[1] = coordi_cell(3, 4, 2, 0)[1].clone();
        assert!(r.rule.step(&PeriodicConfig::new(vec![bad])).is_err());
        let jump = PeriodicConfig::new(vec![coordi_cell(3, 4, 0, 0), coordi_cell(3, 4, 2, 0), coordi_cell(3, 4, 2, 0)]);
        let once = r.rule.step(&jump).unwrap();
        assert!(r.rule.step(&once).is_err());
    }

    #[test]
    fn manifest_is_stable_and_sealed() {
        let a = make_coordi(5, 7).unwrap();
        let b = make_coordi(5, 7).unwrap();
        assert!(a.sealed);
        assert_eq!(a.manifest(), b.manifest());
        assert_ne!(a.manifest()["verification_hash"], make_coordi(5, 8).unwrap().manifest()["verification_hash"]);
        assert_eq!(a.manifest()["fields"][1]["direction"], 1);
    }

    #[test]
    fn unive_refuses_failed_inequalities() {
        let id = toys::identity();
        let mut w = solve_toy_unive(&[1, 1], &id, &id, 0).unwrap();
        w.t -= 1;
        let err = make_unive(&w, &[0, 0], &id, &id, UniveOptions::default()).unwrap_err();
        assert!(matches!(err, RuleError::Inequalities { .. }));
        let forced = make_unive(&w, &[0, 0], &id, &id, UniveOptions { force: true, ..Default::default() }).unwrap();
        assert_eq!(forced.verified.as_ref().map(InequalityReport::passed), Some(false));
    }

    #[test]
    fn generated_programs_have_the_listing_shape() {
        let id = toys::identity();
        let w = solve_toy_unive(&[1, 1], &id, &id, 0).unwrap();
        let u = make_unive(&w, &[1, -1], &id, &id, UniveOptions::default()).unwrap();
        assert_eq!(u.program.fields.len(), 10);
        let s = make_self().unwrap();
        assert_eq!(s.program.fields.len(), 15);
        assert!(s.sealed);
        let seqs = LevelSeqs::constant(|n| Some(vec![n as usize; 13]), 8, 20, 2);
        assert_eq!(make_hsim(&seqs).unwrap().program.fields.len(), 13);
        let alpha: PermSeq = Arc::new(|_| None);
        assert_eq!(make_intru(&seqs, alpha).unwrap().program.fields.len(), 16);
        let halt = toys::halts_at(3);
        assert_eq!(make_syncomp(&seqs, &halt).unwrap().program.fields.len(), 14);
        assert_eq!(make_reali(&seqs, &halt).unwrap().program.fields.len(), 15);
        // The source text round-trips through the parser.
        for r in [u, s] {
            assert_eq!(parse(&r.source()).unwrap(), r.program);
        }
    }

    #[test]
    fn hsim_level_alphabet() {
        let seqs = LevelSeqs::constant(|n| Some(toy_hsim_layout(n, 8, 20, 2, 3, None)), 8, 20, 2);
        let k = toy_hsim_layout(2, 8, 20, 2, 3, None);
        let r = restrict_level(make_hsim(&seqs).unwrap(), 2, k.clone(), &[0, 1, 2], &[2, 1, 0]);
        let mut letter: Vec<Word> = k.iter().map(|&l| vec![4; l]).collect();
        letter[10] = vec![1, 0];
        letter[11] = vec![0, 1, 2];
        letter[12] = vec![2, 1, 0];
        assert!(r.rule.in_alphabet(&letter).is_ok());
        letter[10] = vec![1, 1];
        assert!(r.rule.in_alphabet(&letter).is_err());
        letter[10] = vec![1, 0];
        letter[12] = vec![0, 1, 2];
        assert!(r.rule.in_alphabet(&letter).is_err());
    }

    #[test]
    fn chekka_on_single_colony() {
        let k = [1, 1];
        let s = chi_len(&k) as u64 + 2;
        let r = make_chekka(&k, s).unwrap();
        let cells = |tape: &[u8]| {
            PeriodicConfig::new(
                (0..s)
                    .map(|a| vec![sharp_pad(norm(s), &bin_encode(a.into())).unwrap(), vec![tape[a as usize]]])
                    .collect(),
            )
        };
        for u in enumerate_alphabet(&k) {
            let mut tape = crate::encoding::chi_encode(&u);
            tape.resize(s as usize, 3);
            assert_eq!(iterate(&r.rule, &cells(&tape), 1).unwrap(), cells(&tape));
            tape.swap(0, 1);
            assert!(r.rule.step(&cells(&tape)).is_err());
        }
    }
}
