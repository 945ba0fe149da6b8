//! Single-tape Turing machines over tape symbols `{0,1,2,3}` with binary
//! state names, their self-delimiting binary program code, a direct
//! interpreter and a small assembler for hand-written machines.

use crate::encoding::{chi_decode, chi_encode, enumerate_alphabet, Letter, Word, BLANK};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use thiserror::Error;

/// A state name: a binary word. The empty word is the accepting state.
pub type State = Word;

/// The initial state `"0"`.
pub fn initial_state() -> State {
    vec![0]
}

/// One entry of a transition table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub write: u8,
    pub next: State,
    /// Head move, `-1` or `+1`.
    pub mv: i8,
}

/// Reasons a program fails to validate or decode.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("program code is truncated")]
    Truncated,
    #[error("program code has trailing symbols")]
    Trailing,
    #[error("program code contains a non-binary symbol")]
    NonBinary,
    #[error("state list is not in canonical order or has duplicates")]
    StateOrder,
    #[error("initial state 0 is missing")]
    NoInitial,
    #[error("transition references an undeclared state")]
    UnknownState,
    #[error("transition table is not in canonical order or has duplicate keys")]
    TransitionOrder,
    #[error("accepting transition must move right")]
    AcceptMove,
    #[error("tape symbol {0} is outside 0..=3")]
    Symbol(u8),
    #[error("state name is not binary or is empty")]
    StateName,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A Turing machine program: the declared states and a partial table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmProgram {
    states: Vec<State>,
    table: BTreeMap<(State, u8), Transition>,
}

fn state_order(a: &State, b: &State) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl TmProgram {
    /// Builds and validates a program. `states` lists the non-accepting states.
    pub fn new(
        mut states: Vec<State>,
        table: impl IntoIterator<Item = ((State, u8), Transition)>,
    ) -> Result<Self, ProgramError> {
        if states.iter().any(|s| s.is_empty() || s.iter().any(|&b| b > 1)) {
            return Err(ProgramError::StateName);
        }
        states.sort_by(state_order);
        if states.windows(2).any(|w| w[0] == w[1]) {
            return Err(ProgramError::StateOrder);
        }
        if !states.contains(&initial_state()) {
            return Err(ProgramError::NoInitial);
        }
        let mut map = BTreeMap::new();
        for ((q, a), t) in table {
            if a > 3 {
                return Err(ProgramError::Symbol(a));
            }
            if t.write > 3 {
                return Err(ProgramError::Symbol(t.write));
            }
            if states.binary_search_by(|s| state_order(s, &q)).is_err() {
                return Err(ProgramError::UnknownState);
            }
            if !t.next.is_empty() && states.binary_search_by(|s| state_order(s, &t.next)).is_err() {
                return Err(ProgramError::UnknownState);
            }
            if t.mv != 1 && t.mv != -1 {
                return Err(ProgramError::AcceptMove);
            }
            if t.next.is_empty() && t.mv != 1 {
                return Err(ProgramError::AcceptMove);
            }
            if map.insert((q, a), t).is_some() {
                return Err(ProgramError::TransitionOrder);
            }
        }
        Ok(TmProgram { states, table: map })
    }

    /// Non-accepting states in canonical order.
    pub fn states(&self) -> &[State] {
        &self.states
    }

    /// `true` iff `q` is a non-accepting state of the program.
    pub fn is_live_state(&self, q: &[u8]) -> bool {
        !q.is_empty() && self.states.binary_search_by(|s| state_order(s, &q.to_vec())).is_ok()
    }

    /// Table lookup `δ(q, a)`.
    pub fn delta(&self, a: u8, q: &[u8]) -> Option<&Transition> {
        self.table.get(&(q.to_vec(), a))
    }

    /// Iterates the table in canonical order.
    pub fn transitions(&self) -> impl Iterator<Item = (&(State, u8), &Transition)> {
        self.table.iter()
    }

    /// Length of the longest state name.
    pub fn max_state_len(&self) -> usize {
        self.states.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Number of states including the accepting one.
    pub fn state_count(&self) -> usize {
        self.states.len() + 1
    }

    /// The canonical binary program code.
    pub fn encode(&self) -> Word {
        let mut out = Word::new();
        push_unary(&mut out, self.states.len());
        for s in &self.states {
            push_state(&mut out, s);
        }
        push_unary(&mut out, self.table.len());
        let mut entries: Vec<_> = self.table.iter().collect();
        entries.sort_by(|((qa, aa), _), ((qb, ab), _)| state_order(qa, qb).then(aa.cmp(ab)));
        for ((q, a), t) in entries {
            push_bits2(&mut out, *a);
            push_state(&mut out, q);
            push_bits2(&mut out, t.write);
            push_state(&mut out, &t.next);
            out.push(u8::from(t.mv == 1));
        }
        out
    }

    /// Decodes a canonical program code; rejects non-canonical codes.
    pub fn decode(code: &[u8]) -> Result<Self, ProgramError> {
        if code.iter().any(|&b| b > 1) {
            return Err(ProgramError::NonBinary);
        }
        let mut r = Reader { code, pos: 0 };
        let n = r.unary()?;
        let mut states = Vec::with_capacity(n);
        for _ in 0..n {
            states.push(r.state()?);
        }
        if states.windows(2).any(|w| state_order(&w[0], &w[1]) != std::cmp::Ordering::Less) {
            return Err(ProgramError::StateOrder);
        }
        let m = r.unary()?;
        let mut table = Vec::with_capacity(m);
        let mut prev: Option<(State, u8)> = None;
        for _ in 0..m {
            let a = r.bits2()?;
            let q = r.state()?;
            let write = r.bits2()?;
            let next = r.state()?;
            let mv = if r.bit()? == 1 { 1 } else { -1 };
            if let Some((pq, pa)) = &prev {
                if state_order(pq, &q).then(pa.cmp(&a)) != std::cmp::Ordering::Less {
                    return Err(ProgramError::TransitionOrder);
                }
            }
            prev = Some((q.clone(), a));
            table.push(((q, a), Transition { write, next, mv }));
        }
        if r.pos != code.len() {
            return Err(ProgramError::Trailing);
        }
        let p = TmProgram::new(states, table)?;
        debug_assert_eq!(p.encode(), code);
        Ok(p)
    }

    /// Line-oriented text form: a `states` header then `a q -> a' q' m` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::from("states");
        for s in &self.states {
            let _ = write!(out, " {}", state_text(s));
        }
        out.push('\n');
        for ((q, a), t) in &self.table {
            let _ = writeln!(
                out,
                "{} {} -> {} {} {}",
                a,
                state_text(q),
                t.write,
                state_text(&t.next),
                if t.mv == 1 { "+1" } else { "-1" }
            );
        }
        out
    }

    /// Parses the text form produced by [`TmProgram::to_text`].
    pub fn from_text(src: &str) -> Result<Self, ProgramError> {
        let mut states = None;
        let mut table = Vec::new();
        for (idx, raw) in src.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| ProgramError::Parse { line: line_no, msg: msg.to_string() };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks[0] == "states" {
                if states.is_some() {
                    return Err(err("duplicate states header"));
                }
                let parsed = toks[1..]
                    .iter()
                    .map(|t| parse_state_text(t).ok_or_else(|| err("bad state name")))
                    .collect::<Result<Vec<_>, _>>()?;
                states = Some(parsed.into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>());
                continue;
            }
            if toks.len() != 6 || toks[2] != "->" {
                return Err(err("expected `a q -> a' q' m`"));
            }
            let sym = |t: &str| t.parse::<u8>().ok().filter(|&v| v <= 3).ok_or_else(|| err("bad symbol"));
            let a = sym(toks[0])?;
            let q = parse_state_text(toks[1]).ok_or_else(|| err("bad state"))?;
            let write = sym(toks[3])?;
            let next = parse_state_text(toks[4]).ok_or_else(|| err("bad state"))?;
            let mv = match toks[5] {
                "+1" | "+" | "1" => 1,
                "-1" | "-" => -1,
                _ => return Err(err("bad move")),
            };
            table.push(((q, a), Transition { write, next, mv }));
        }
        let states = states.ok_or(ProgramError::Parse { line: 0, msg: "missing states header".into() })?;
        TmProgram::new(states, table)
    }
}

fn state_text(s: &[u8]) -> String {
    if s.is_empty() {
        "e".to_string()
    } else {
        s.iter().map(|&b| char::from(b'0' + b)).collect()
    }
}

fn parse_state_text(t: &str) -> Option<State> {
    if t == "e" {
        return Some(State::new());
    }
    t.bytes()
        .map(|b| match b {
            b'0' => Some(0),
            b'1' => Some(1),
            _ => None,
        })
        .collect()
}

fn push_unary(out: &mut Word, n: usize) {
    out.extend(std::iter::repeat_n(1, n));
    out.push(0);
}

fn push_state(out: &mut Word, s: &[u8]) {
    push_unary(out, s.len());
    out.extend_from_slice(s);
}

fn push_bits2(out: &mut Word, a: u8) {
    out.push(a >> 1);
    out.push(a & 1);
}

struct Reader<'a> {
    code: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn bit(&mut self) -> Result<u8, ProgramError> {
        let b = *self.code.get(self.pos).ok_or(ProgramError::Truncated)?;
        self.pos += 1;
        Ok(b)
    }
    fn unary(&mut self) -> Result<usize, ProgramError> {
        let mut n = 0;
        while self.bit()? == 1 {
            n += 1;
        }
        Ok(n)
    }
    fn state(&mut self) -> Result<State, ProgramError> {
        let n = self.unary()?;
        (0..n).map(|_| self.bit()).collect()
    }
    fn bits2(&mut self) -> Result<u8, ProgramError> {
        Ok(2 * self.bit()? + self.bit()?)
    }
}

/// `δ_U(a, q, p)`: lookup of `δ_p(a, q)` from a program code.
pub fn universal_delta(a: u8, q: &[u8], code: &[u8]) -> Option<Transition> {
    if q.is_empty() {
        return None;
    }
    TmProgram::decode(code).ok()?.delta(a, q).cloned()
}

/// A two-way infinite tape with finite support over the blank symbol `3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tape {
    origin: i64,
    cells: Vec<u8>,
}

impl Tape {
    /// A tape holding `content` from position `0`, blank elsewhere.
    pub fn from_content(content: &[u8]) -> Self {
        Tape { origin: 0, cells: content.to_vec() }
    }

    /// Symbol at position `i`.
    pub fn get(&self, i: i64) -> u8 {
        let idx = i - self.origin;
        if idx < 0 || idx >= self.cells.len() as i64 {
            BLANK
        } else {
            self.cells[idx as usize]
        }
    }

    /// Writes symbol `a` at position `i`.
    pub fn set(&mut self, i: i64, a: u8) {
        if i < self.origin {
            let grow = (self.origin - i) as usize;
            let mut cells = vec![BLANK; grow];
            cells.extend_from_slice(&self.cells);
            self.cells = cells;
            self.origin = i;
        }
        let idx = (i - self.origin) as usize;
        if idx >= self.cells.len() {
            self.cells.resize(idx + 1, BLANK);
        }
        self.cells[idx] = a;
    }

    /// Leftmost and one-past-rightmost non-blank positions.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.cells.iter().position(|&a| a != BLANK)?;
        let last = self.cells.iter().rposition(|&a| a != BLANK)?;
        Some((self.origin + first as i64, self.origin + last as i64 + 1))
    }

    /// Content of positions `[from, to)`.
    pub fn window(&self, from: i64, to: i64) -> Vec<u8> {
        (from..to).map(|i| self.get(i)).collect()
    }
}

/// A machine configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmConfig {
    pub tape: Tape,
    /// Current state; empty once accepted.
    pub state: State,
    pub head: i64,
}

impl TmConfig {
    /// The initial configuration on input tuple `u`.
    pub fn initial(u: &[Word]) -> Self {
        TmConfig { tape: Tape::from_content(&chi_encode(u)), state: initial_state(), head: 0 }
    }

    /// `true` once the accepting state has been reached.
    pub fn accepted(&self) -> bool {
        self.state.is_empty()
    }
}

/// One application of the global map; `None` models rejection.
pub fn tm_step(p: &TmProgram, c: &TmConfig) -> Option<TmConfig> {
    if c.accepted() {
        return Some(c.clone());
    }
    let a = c.tape.get(c.head);
    let t = p.delta(a, &c.state)?;
    let mut next = c.clone();
    next.tape.set(c.head, t.write);
    next.state = t.next.clone();
    next.head = c.head + t.mv as i64;
    Some(next)
}

/// Result of a bounded run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    /// Accepted after `steps` steps with a well-formed output tape.
    Accepted { output: Letter, steps: usize },
    /// Accepted after `steps` steps but the tape is not `Chi(u')3^∞`.
    AcceptedMalformed { steps: usize },
    /// Still running after the step budget.
    Running,
    /// An undefined transition was hit at step `step` (1-based).
    Rejected { step: usize },
}

/// Runs `p` on `∞3 . Chi(input) 3^∞` for at most `max_steps` steps.
pub fn tm_run(p: &TmProgram, input: &[Word], max_steps: usize) -> RunOutcome {
    let mut c = TmConfig::initial(input);
    for step in 1..=max_steps {
        match tm_step(p, &c) {
            None => return RunOutcome::Rejected { step },
            Some(n) => c = n,
        }
        if c.accepted() {
            return match read_output(&c.tape) {
                Some(output) => RunOutcome::Accepted { output, steps: step },
                None => RunOutcome::AcceptedMalformed { steps: step },
            };
        }
    }
    RunOutcome::Running
}

/// Reads `u'` from a tape of the form `∞3 . Chi(u') 3^∞`.
pub fn read_output(tape: &Tape) -> Option<Letter> {
    match tape.support() {
        None => Some(Letter::new()),
        Some((lo, hi)) => {
            if lo < 0 {
                return None;
            }
            let w = tape.window(0, hi);
            let u = chi_decode(&w).ok()?;
            (chi_encode(&u) == w).then_some(u)
        }
    }
}

/// Maximum accepting time over an alphabet, with an empty-set flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeComplexity {
    pub max_steps: usize,
    /// No input was accepted; `max_steps` is `0` by convention.
    pub empty_accepted_set: bool,
    /// Inputs still running at the step cap.
    pub undetermined: usize,
    pub accepted: usize,
}

/// Budget errors for exhaustive sweeps.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BudgetError {
    #[error("alphabet of {size} letters exceeds the budget of {budget}")]
    Alphabet { size: u128, budget: u128 },
}

/// `max_{u accepted} t_p(u)` over `5^k`.
pub fn time_complexity_over(
    p: &TmProgram,
    k: &[usize],
    budget: u128,
    step_cap: usize,
) -> Result<TimeComplexity, BudgetError> {
    let size = 5u128.checked_pow(k.iter().sum::<usize>() as u32).unwrap_or(u128::MAX);
    if size > budget {
        return Err(BudgetError::Alphabet { size, budget });
    }
    let mut tc = TimeComplexity { max_steps: 0, empty_accepted_set: true, undetermined: 0, accepted: 0 };
    for u in enumerate_alphabet(k) {
        match tm_run(p, &u, step_cap) {
            RunOutcome::Accepted { steps, .. } | RunOutcome::AcceptedMalformed { steps } => {
                tc.max_steps = tc.max_steps.max(steps);
                tc.empty_accepted_set = false;
                tc.accepted += 1;
            }
            RunOutcome::Running => tc.undetermined += 1,
            RunOutcome::Rejected { .. } => {}
        }
    }
    Ok(tc)
}

/// Assembler for hand-written machines with symbolic state names.
///
/// The state named `start` becomes `"0"`; the others get distinct
/// binary names `1·b` with `b` of fixed width.
#[derive(Debug, Default)]
pub struct TmBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    rules: Vec<(String, u8, u8, Option<String>, i8)>,
}

impl TmBuilder {
    pub fn new() -> Self {
        let mut b = TmBuilder::default();
        b.intern("start");
        b
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }

    /// `δ(q, a) = (write, next, mv)`; `next = None` accepts.
    pub fn rule(&mut self, q: &str, a: u8, write: u8, next: Option<&str>, mv: i8) -> &mut Self {
        self.intern(q);
        if let Some(n) = next {
            self.intern(n);
        }
        self.rules.push((q.to_string(), a, write, next.map(str::to_string), mv));
        self
    }

    /// Accepts on `(q, a)`, writing `write` and moving right.
    pub fn accept(&mut self, q: &str, a: u8, write: u8) -> &mut Self {
        self.rule(q, a, write, None, 1)
    }

    fn code_of(&self, idx: usize) -> State {
        if idx == 0 {
            return initial_state();
        }
        let others = self.names.len() - 1;
        let width = crate::encoding::bin_len((others.max(2) - 1) as u128);
        let mut s = vec![1u8];
        let v = idx - 1;
        for b in (0..width).rev() {
            s.push(((v >> b) & 1) as u8);
        }
        s
    }

    /// Assembles the program.
    pub fn build(&self) -> Result<TmProgram, ProgramError> {
        let states: Vec<State> = (0..self.names.len()).map(|i| self.code_of(i)).collect();
        let table = self.rules.iter().map(|(q, a, w, n, mv)| {
            let next = n.as_ref().map(|n| self.code_of(self.index[n])).unwrap_or_default();
            ((self.code_of(self.index[q]), *a), Transition { write: *w, next, mv: *mv })
        });
        TmProgram::new(states, table)
    }

    /// Binary name assigned to a symbolic state.
    pub fn state_code(&self, name: &str) -> Option<State> {
        self.index.get(name).map(|&i| self.code_of(i))
    }
}

/// The partial permutation `f_p` with inverse `f_{p'}`, restricted to a layout.
pub struct TmPermutation {
    pub p: TmProgram,
    pub pinv: TmProgram,
    pub layout: Vec<usize>,
    pub max_steps: usize,
}

impl TmPermutation {
    pub fn new(p: TmProgram, pinv: TmProgram, layout: Vec<usize>, max_steps: usize) -> Self {
        TmPermutation { p, pinv, layout, max_steps }
    }

    fn apply(&self, m: &TmProgram, u: &[Word]) -> Result<Letter, crate::ppa::LocalReject> {
        use crate::ppa::LocalReject;
        let fits = |v: &[Word]| v.len() == self.layout.len() && v.iter().zip(&self.layout).all(|(f, &l)| f.len() == l);
        if !fits(u) {
            return Err(LocalReject::new("letter outside the layout"));
        }
        match tm_run(m, u, self.max_steps) {
            RunOutcome::Accepted { output, .. } if fits(&output) => Ok(output),
            RunOutcome::Accepted { .. } | RunOutcome::AcceptedMalformed { .. } => {
                Err(LocalReject::new("output outside the layout"))
            }
            RunOutcome::Running => Err(LocalReject::new("step budget exhausted")),
            RunOutcome::Rejected { step } => Err(LocalReject::new(format!("undefined transition at step {step}"))),
        }
    }
}

impl crate::ppa::Permutation for TmPermutation {
    fn forward(&self, u: &[Word]) -> Result<Letter, crate::ppa::LocalReject> {
        self.apply(&self.p, u)
    }
    fn backward(&self, u: &[Word]) -> Result<Letter, crate::ppa::LocalReject> {
        self.apply(&self.pinv, u)
    }
}

/// Hand-written machines used as toy simulated permutations.
pub mod toys {
    use super::*;

    /// Accepts immediately on the leading separator: one step, no validation.
    pub fn trivial_identity() -> TmProgram {
        let mut b = TmBuilder::new();
        b.accept("start", 2, 2);
        b.build().expect("valid machine")
    }

    /// Scans `Chi(u)`, rewriting each encoded symbol `s` as `f(s)`, and
    /// accepts on the first blank. Only the last bit of a triplet may
    /// change, so `f` must preserve `s >> 1`; `None` rejects.
    fn symbolwise(f: impl Fn(u8) -> Option<u8>) -> TmProgram {
        let mut b = TmBuilder::new();
        b.rule("start", 2, 2, Some("sep"), 1);
        b.accept("start", 3, 3);
        b.rule("sep", 2, 2, Some("sep"), 1);
        b.accept("sep", 3, 3);
        b.rule("sep", 0, 0, Some("b0"), 1);
        b.rule("sep", 1, 1, Some("b1"), 1);
        b.rule("b0", 0, 0, Some("b00"), 1);
        b.rule("b0", 1, 1, Some("b01"), 1);
        b.rule("b1", 0, 0, Some("b10"), 1);
        for (st, hi) in [("b00", 0u8), ("b01", 1u8)] {
            for c in 0..2u8 {
                let s = 2 * hi + c;
                if let Some(t) = f(s) {
                    assert_eq!(t >> 1, s >> 1, "only the last bit may change");
                    b.rule(st, c, t & 1, Some("sep"), 1);
                }
            }
        }
        if let Some(t) = f(4) {
            assert_eq!(t, 4, "symbol 4 may only map to itself");
            b.rule("b10", 0, 0, Some("sep"), 1);
        }
        b.build().expect("valid machine")
    }

    /// Identity that validates the `Chi` format: `|Chi(u)| + 1` steps.
    pub fn identity() -> TmProgram {
        symbolwise(Some)
    }

    /// Flips the last bit of every symbol in `0..=3`; undefined on `4`.
    pub fn bit_flip() -> TmProgram {
        symbolwise(|s| (s < 4).then_some(s ^ 1))
    }

    /// Reference semantics of [`bit_flip`].
    pub fn bit_flip_letter(u: &[Word]) -> Option<Letter> {
        u.iter().map(|f| f.iter().map(|&s| (s < 4).then_some(s ^ 1)).collect()).collect()
    }

    /// Swaps the two fields of a letter of layout `(1,1)`.
    pub fn swap11() -> TmProgram {
        let mut b = TmBuilder::new();
        let name = |p: &str, v: &[u8]| format!("{p}{}", v.iter().map(|d| d.to_string()).collect::<String>());
        b.rule("start", 2, 2, Some("x"), 1);
        // Read the first triplet x into the state.
        let mut prefixes: Vec<Vec<u8>> = vec![vec![]];
        for _ in 0..3 {
            let mut next = Vec::new();
            for p in &prefixes {
                for bit in 0..2u8 {
                    let mut q = p.clone();
                    q.push(bit);
                    if valid_prefix(&q) {
                        let target = if q.len() == 3 { name("xs", &q) } else { name("x", &q) };
                        b.rule(&name("x", p), bit, bit, Some(&target), 1);
                        next.push(q);
                    }
                }
            }
            prefixes = next;
        }
        let triplets = prefixes;
        // Second separator, then read y while writing x.
        for x in &triplets {
            b.rule(&name("xs", x), 2, 2, Some(&format!("{}y", name("w", x))), 1);
            let mut ys: Vec<Vec<u8>> = vec![vec![]];
            for i in 0..3 {
                let mut next = Vec::new();
                for y in &ys {
                    for bit in 0..2u8 {
                        let mut y2 = y.clone();
                        y2.push(bit);
                        if valid_prefix(&y2) {
                            let from = format!("{}y{}", name("w", x), name("", y));
                            let to = if y2.len() == 3 {
                                name("end", &y2)
                            } else {
                                format!("{}y{}", name("w", x), name("", &y2))
                            };
                            b.rule(&from, bit, x[i], Some(&to), 1);
                            next.push(y2);
                        }
                    }
                }
                ys = next;
            }
        }
        // Expect the blank after the second field, then walk back writing y.
        for y in all_triplets() {
            b.rule(&name("end", &y), 3, 3, Some(&name("back4_", &y)), -1);
            b.rule(&name("back4_", &y), 0, 0, Some(&name("back3_", &y)), -1);
            b.rule(&name("back4_", &y), 1, 1, Some(&name("back3_", &y)), -1);
            b.rule(&name("back3_", &y), 0, 0, Some(&name("back2_", &y)), -1);
            b.rule(&name("back3_", &y), 1, 1, Some(&name("back2_", &y)), -1);
            b.rule(&name("back2_", &y), 0, 0, Some(&name("back1_", &y)), -1);
            b.rule(&name("back2_", &y), 1, 1, Some(&name("back1_", &y)), -1);
            b.rule(&name("back1_", &y), 2, 2, Some(&name("put2_", &y)), -1);
            for (i, st) in ["put2_", "put1_", "put0_"].iter().enumerate() {
                let pos = 2 - i;
                let next = if pos == 0 { "home".to_string() } else { name(["", "put0_", "put1_"][pos], &y) };
                for bit in 0..2u8 {
                    b.rule(&name(st, &y), bit, y[pos], Some(&next), -1);
                }
            }
        }
        b.accept("home", 2, 2);
        b.build().expect("valid machine")
    }

    fn valid_prefix(q: &[u8]) -> bool {
        !matches!(q, [1, 1, ..] | [1, 0, 1])
    }

    fn all_triplets() -> Vec<Vec<u8>> {
        (0..5u8).map(|s| [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1], [1, 0, 0]][s as usize].to_vec()).collect()
    }

    /// Moves right for `h - 1` steps then accepts: halts at step `h`.
    pub fn halts_at(h: usize) -> TmProgram {
        assert!(h >= 1);
        let mut b = TmBuilder::new();
        let name = |i: usize| {
            if i == 0 {
                "start".to_string()
            } else {
                format!("s{i}")
            }
        };
        for i in 0..h {
            for a in 0..4u8 {
                if i + 1 == h {
                    b.accept(&name(i), a, a);
                } else {
                    b.rule(&name(i), a, a, Some(&name(i + 1)), 1);
                }
            }
        }
        b.build().expect("valid machine")
    }

    /// A random machine with at most `n_states` states.
    pub fn random_machine<R: rand::Rng>(rng: &mut R, n_states: usize) -> TmProgram {
        let mut b = TmBuilder::new();
        let names: Vec<String> = (0..n_states).map(|i| if i == 0 { "start".into() } else { format!("q{i}") }).collect();
        for q in &names {
            for a in 0..4u8 {
                match rng.gen_range(0..10) {
                    0 => {}
                    1 => {
                        b.accept(q, a, rng.gen_range(0..4));
                    }
                    _ => {
                        let n = &names[rng.gen_range(0..n_states)];
                        b.rule(q, a, rng.gen_range(0..4), Some(n), if rng.gen() { 1 } else { -1 });
                    }
                }
            }
        }
        b.build().unwrap()
    }

    /// Never halts: walks right forever.
    pub fn runaway() -> TmProgram {
        let mut b = TmBuilder::new();
        for a in 0..4u8 {
            b.rule("start", a, a, Some("start"), 1);
        }
        b.build().expect("valid machine")
    }
}

#[cfg(test)]
mod tests {
    use super::toys::*;
    use super::*;
    use crate::encoding::enumerate_alphabet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_examples() {
        let p = trivial_identity();
        let acc = TmConfig { tape: Tape::from_content(&[2]), state: vec![], head: 5 };
        assert_eq!(tm_step(&p, &acc), Some(acc.clone()));
        let c = TmConfig::initial(&[vec![]]);
        let n = tm_step(&p, &c).unwrap();
        assert_eq!((n.state.clone(), n.head, n.tape.get(0)), (vec![], 1, 2));
        let empty = TmProgram::new(vec![initial_state()], []).unwrap();
        assert_eq!(tm_step(&empty, &c), None);
        assert_eq!(tm_run(&empty, &[vec![0]], 10), RunOutcome::Rejected { step: 1 });
        assert_eq!(tm_run(&runaway(), &[vec![0]], 100), RunOutcome::Running);
    }

    #[test]
    fn identity_machine_accepts_unchanged() {
        let p = identity();
        assert_eq!(tm_run(&p, &[vec![0]], 100), RunOutcome::Accepted { output: vec![vec![0]], steps: 5 });
        for u in enumerate_alphabet(&[1, 2]) {
            let steps = crate::encoding::chi_len(&[1, 2]) + 1;
            assert_eq!(tm_run(&p, &u, 100), RunOutcome::Accepted { output: u.clone(), steps });
        }
    }

    #[test]
    fn toy_machines_match_reference() {
        for u in enumerate_alphabet(&[1, 1]) {
            let swapped = vec![u[1].clone(), u[0].clone()];
            match tm_run(&swap11(), &u, 100) {
                RunOutcome::Accepted { output, steps } => {
                    assert_eq!(output, swapped);
                    assert_eq!(steps, 17);
                }
                other => panic!("{u:?}: {other:?}"),
            }
            let flipped = bit_flip_letter(&u);
            match (tm_run(&bit_flip(), &u, 100), flipped) {
                (RunOutcome::Accepted { output, .. }, Some(v)) => assert_eq!(output, v),
                (RunOutcome::Rejected { .. }, None) => {}
                (o, f) => panic!("{u:?}: {o:?} vs {f:?}"),
            }
        }
        assert!(matches!(tm_run(&swap11(), &[vec![0]], 100), RunOutcome::Rejected { .. }));
        assert!(matches!(tm_run(&swap11(), &[vec![0], vec![0], vec![0]], 100), RunOutcome::Rejected { .. }));
    }

    #[test]
    fn validating_machines_reject_unused_triplets() {
        for bad in [[1u8, 0, 1], [1, 1, 0], [1, 1, 1]] {
            let mut w = vec![2];
            w.extend_from_slice(&bad);
            let mut c = TmConfig { tape: Tape::from_content(&w), state: initial_state(), head: 0 };
            let mut rejected = false;
            for _ in 0..10 {
                match tm_step(&identity(), &c) {
                    None => {
                        rejected = true;
                        break;
                    }
                    Some(n) => c = n,
                }
            }
            assert!(rejected);
        }
    }

    #[test]
    fn halts_at_exactly() {
        for h in 1..20 {
            let p = halts_at(h);
            assert!(
                matches!(tm_run(&p, &[vec![0; 3]], h), RunOutcome::Accepted { steps, .. } | RunOutcome::AcceptedMalformed { steps } if steps == h)
            );
            assert_eq!(tm_run(&p, &[vec![0; 3]], h - 1), RunOutcome::Running);
        }
    }

    #[test]
    fn time_complexity_examples() {
        let tc = time_complexity_over(&identity(), &[1], 1000, 100).unwrap();
        assert_eq!(tc.max_steps, 5);
        assert_eq!(tc.accepted, 5);
        let empty = TmProgram::new(vec![initial_state()], []).unwrap();
        let tc = time_complexity_over(&empty, &[1], 1000, 100).unwrap();
        assert_eq!((tc.max_steps, tc.empty_accepted_set), (0, true));
        assert!(time_complexity_over(&identity(), &[10], 1000, 100).is_err());
    }

    #[test]
    fn acceptance_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let p = random_machine(&mut rng, n);
            let mut c = TmConfig::initial(&[vec![rng.gen_range(0..5)]]);
            for _ in 0..40 {
                match tm_step(&p, &c) {
                    Some(n) => c = n,
                    None => break,
                }
                if c.accepted() {
                    break;
                }
            }
            if c.accepted() {
                for _ in 0..20 {
                    assert_eq!(tm_step(&p, &c).as_ref(), Some(&c));
                }
            }
        }
    }

    #[test]
    fn codec_and_universal_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let p = random_machine(&mut rng, n);
            let code = p.encode();
            assert!(p.state_count() <= code.len());
            let back = TmProgram::decode(&code).unwrap();
            assert_eq!(back, p);
            assert_eq!(back.encode(), code);
            assert_eq!(TmProgram::from_text(&p.to_text()).unwrap(), p);
            for q in p.states() {
                for a in 0..4 {
                    assert_eq!(universal_delta(a, q, &code).as_ref(), p.delta(a, q));
                }
            }
            assert_eq!(universal_delta(0, &[], &code), None);
        }
        assert!(universal_delta(0, &[0], &[1, 1]).is_none());
        assert!(TmProgram::decode(&[1, 0, 1, 0, 0, 0, 1]).is_err());
    }

    #[test]
    fn determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_machine(&mut rng, 4);
        let u = vec![vec![1, 2], vec![3]];
        assert_eq!(tm_run(&p, &u, 50), tm_run(&p, &u, 50));
    }
}
