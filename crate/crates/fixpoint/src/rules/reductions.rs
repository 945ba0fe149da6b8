//! Permutation sequences for the halting and enumeration reductions.

use crate::encoding::{chi_decode, chi_encode, format_letter, Letter, Word};
use crate::permlang::eval::PermSeq;
use crate::ppa::{FnPermutation, LocalReject, Permutation};
use crate::turing::{tm_run, tm_step, RunOutcome, State, TmBuilder, TmConfig, TmProgram};
use serde_json::{json, Value};
use std::collections::HashMap;
use std::sync::Arc;

/// The single letter `(0, 0, 0)` of the intruder alphabet.
pub fn zero_triple() -> Letter {
    vec![vec![0], vec![0], vec![0]]
}

/// `α_n` is the identity on `(0,0,0)` while `p'` runs for `n` steps on `0^n`,
/// and nowhere defined afterwards.
#[derive(Debug, Clone)]
pub struct HaltingReduction {
    pub machine: TmProgram,
}

impl HaltingReduction {
    pub fn new(machine: TmProgram) -> Self {
        HaltingReduction { machine }
    }

    /// `p'` has not halted within `n` steps on `0^n`.
    pub fn defined_at(&self, n: u64) -> bool {
        let input = [vec![0u8; n as usize]];
        matches!(tm_run(&self.machine, &input, n as usize), RunOutcome::Running)
    }

    /// `α_n`, or `None` when its domain is empty.
    pub fn alpha(&self, n: u64) -> Option<Arc<dyn Permutation>> {
        self.defined_at(n).then(|| {
            let only = |u: &[Word]| (u == zero_triple().as_slice()).then(zero_triple);
            Arc::new(FnPermutation::new(only, only)) as Arc<dyn Permutation>
        })
    }

    /// The sequence as a program environment entry, memoized per level.
    pub fn perm_seq(&self) -> PermSeq {
        let this = self.clone();
        let cache: Arc<LevelCache> = Arc::default();
        Arc::new(move |n| {
            let n64 = u64::try_from(n).ok()?;
            let mut c = cache.lock().expect("cache lock");
            c.entry(n).or_insert_with(|| this.alpha(n64)).clone()
        })
    }

    /// The first level below `horizon` with an empty domain.
    pub fn first_undefined(&self, horizon: u64) -> Option<u64> {
        (0..horizon).find(|&n| !self.defined_at(n))
    }

    pub fn manifest(&self, levels: u64) -> Value {
        json!({
            "reduction": "halting",
            "levels": levels,
            "defined": (0..levels).map(|n| self.defined_at(n)).collect::<Vec<_>>(),
            "first_undefined": self.first_undefined(levels),
        })
    }
}

type LevelCache = std::sync::Mutex<HashMap<i128, Option<Arc<dyn Permutation>>>>;

/// A finite injective table on letters of one layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TablePermutation {
    pub layout: Vec<usize>,
    pub entries: Vec<(Letter, Letter)>,
}

/// Fields per table entry: a triple in, a triple out.
pub const ENTRY_FIELDS: usize = 6;

impl TablePermutation {
    /// Checks lengths and injectivity in both directions.
    pub fn new(layout: Vec<usize>, entries: Vec<(Letter, Letter)>) -> Result<Self, String> {
        let fits = |u: &Letter| u.len() == layout.len() && u.iter().zip(&layout).all(|(f, &l)| f.len() == l);
        if entries.iter().any(|(a, b)| !fits(a) || !fits(b)) {
            return Err("entry outside the layout".into());
        }
        let mut ins = std::collections::HashSet::new();
        let mut outs = std::collections::HashSet::new();
        for (a, b) in &entries {
            if !ins.insert(a) || !outs.insert(b) {
                return Err("table is not injective".into());
            }
        }
        Ok(TablePermutation { layout, entries })
    }

    /// The serialized form: one letter with six fields per entry.
    pub fn to_letter(&self) -> Letter {
        self.entries.iter().flat_map(|(a, b)| a.iter().chain(b).cloned()).collect()
    }

    /// Parses a serialized table for triples of layout `[l, l, l]`.
    pub fn from_letter(u: &[Word], l: usize) -> Result<Self, String> {
        if !u.len().is_multiple_of(ENTRY_FIELDS) {
            return Err(format!("{} fields is not a whole number of entries", u.len()));
        }
        let entries = u.chunks(ENTRY_FIELDS).map(|e| (e[..3].to_vec(), e[3..].to_vec())).collect();
        TablePermutation::new(vec![l; 3], entries)
    }
}

impl Permutation for TablePermutation {
    fn forward(&self, u: &[Word]) -> Result<Letter, LocalReject> {
        self.entries
            .iter()
            .find(|(a, _)| a.as_slice() == u)
            .map(|(_, b)| b.clone())
            .ok_or_else(|| LocalReject::new("not in the table"))
    }
    fn backward(&self, u: &[Word]) -> Result<Letter, LocalReject> {
        self.entries
            .iter()
            .find(|(_, b)| b.as_slice() == u)
            .map(|(a, _)| a.clone())
            .ok_or_else(|| LocalReject::new("not in the table"))
    }
}

/// An emission seen while running an enumerator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emission {
    pub step: u64,
    pub table: Result<TablePermutation, String>,
}

/// `α_n` is the last well-formed table emitted within `n` steps, else the fallback.
#[derive(Debug, Clone)]
pub struct EnumerationSequence {
    pub emissions: Vec<Emission>,
    pub fallback: TablePermutation,
    pub horizon: u64,
}

impl EnumerationSequence {
    pub fn alpha(&self, n: u64) -> &TablePermutation {
        self.emissions
            .iter()
            .filter(|e| e.step <= n)
            .filter_map(|e| e.table.as_ref().ok())
            .next_back()
            .unwrap_or(&self.fallback)
    }

    pub fn perm_seq(&self) -> PermSeq {
        let this = self.clone();
        Arc::new(move |n| {
            let n = u64::try_from(n).ok()?;
            Some(Arc::new(this.alpha(n).clone()) as Arc<dyn Permutation>)
        })
    }

    pub fn manifest(&self) -> Value {
        json!({
            "reduction": "enumeration",
            "horizon": self.horizon,
            "fallback": format_letter(&self.fallback.to_letter()),
            "emissions": self.emissions.iter().map(|e| match &e.table {
                Ok(t) => json!({"step": e.step, "table": format_letter(&t.to_letter())}),
                Err(m) => json!({"step": e.step, "rejected": m}),
            }).collect::<Vec<_>>(),
        })
    }
}

/// Runs `enumerator` on the empty input for `horizon` steps. Every step
/// that enters a state of `emit_states` emits the table written from
/// cell 0, decoded for triples of layout `[l, l, l]`.
pub fn build_enumeration_sequence(
    enumerator: &TmProgram,
    emit_states: &[State],
    l: usize,
    fallback: TablePermutation,
    horizon: u64,
) -> EnumerationSequence {
    let mut c = TmConfig::initial(&[]);
    let mut emissions = Vec::new();
    for step in 1..=horizon {
        match tm_step(enumerator, &c) {
            Some(n) if !c.accepted() => c = n,
            _ => break,
        }
        if emit_states.contains(&c.state) {
            let hi = c.tape.support().map_or(0, |(_, hi)| hi);
            let w = c.tape.window(0, hi);
            let table = chi_decode(&w)
                .map_err(|e| e.to_string())
                .and_then(|u| if chi_encode(&u) == w { Ok(u) } else { Err("trailing symbols after the code".into()) })
                .and_then(|u| TablePermutation::from_letter(&u, l));
            emissions.push(Emission { step, table });
        }
    }
    EnumerationSequence { emissions, fallback, horizon }
}

/// A machine writing each word from cell 0 in turn and entering
/// `emit{j}` right after word `j`. Word lengths must not decrease.
pub fn writer_machine(words: &[Word]) -> (TmProgram, Vec<State>) {
    assert!(!words.is_empty() && words.windows(2).all(|w| w[0].len() <= w[1].len()), "non-decreasing word lengths");
    let mut b = TmBuilder::new();
    for (j, w) in words.iter().enumerate() {
        let name = |i: usize| {
            if j == 0 && i == 0 {
                "start".to_string()
            } else {
                format!("w{j}_{i}")
            }
        };
        for (i, &x) in w.iter().enumerate() {
            let next = if i + 1 == w.len() { format!("emit{j}") } else { name(i + 1) };
            for a in 0..4u8 {
                b.rule(&name(i), a, x, Some(&next), 1);
            }
        }
        let emit = format!("emit{j}");
        if j + 1 == words.len() {
            b.accept(&emit, crate::encoding::BLANK, crate::encoding::BLANK);
            continue;
        }
        // Walk back to cell 0, then write the next word.
        let back = |c: usize| {
            if c == w.len() {
                format!("w{}_0", j + 1)
            } else {
                format!("back{j}_{c}")
            }
        };
        for a in 0..4u8 {
            b.rule(&emit, a, a, Some(&back(1)), -1);
        }
        for c in 1..w.len() {
            for a in 0..4u8 {
                b.rule(&back(c), a, a, Some(&back(c + 1)), -1);
            }
        }
    }
    let p = b.build().expect("valid writer");
    let emits = (0..words.len()).map(|j| b.state_code(&format!("emit{j}")).expect("emit state")).collect();
    (p, emits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turing::toys;

    #[test]
    fn halting_levels() {
        for h in [1usize, 5, 17, 32] {
            let r = HaltingReduction::new(toys::halts_at(h));
            for n in 0..40u64 {
                assert_eq!(r.defined_at(n), (n as usize) < h, "h={h} n={n}");
                assert_eq!(r.alpha(n).is_some(), (n as usize) < h);
            }
            assert_eq!(r.first_undefined(40), Some(h as u64));
        }
        let r = HaltingReduction::new(toys::runaway());
        assert_eq!(r.first_undefined(64), None);
        let a = r.alpha(3).unwrap();
        assert_eq!(a.forward(&zero_triple()).unwrap(), zero_triple());
        assert!(a.forward(&[vec![1], vec![0], vec![0]]).is_err());
    }

    fn table(pairs: &[(u8, u8)]) -> TablePermutation {
        let t = |x: u8| vec![vec![x], vec![0], vec![0]];
        TablePermutation::new(vec![1; 3], pairs.iter().map(|&(a, b)| (t(a), t(b))).collect()).unwrap()
    }

    #[test]
    fn tables_round_trip_and_reject_collisions() {
        let t = table(&[(0, 1), (1, 0)]);
        assert_eq!(TablePermutation::from_letter(&t.to_letter(), 1).unwrap(), t);
        let (z, o) = (zero_triple(), vec![vec![1], vec![0], vec![0]]);
        let dup = [z, o.clone(), o.clone(), o].concat();
        assert!(TablePermutation::from_letter(&dup, 1).is_err());
        assert_eq!(t.backward(&t.forward(&zero_triple()).unwrap()).unwrap(), zero_triple());
    }

    #[test]
    fn enumeration_keeps_the_last_emission() {
        let first = table(&[(0, 0)]);
        let second = table(&[(0, 1), (1, 0)]);
        let mut bad = chi_encode(&second.to_letter());
        bad[1] = 2;
        let words = vec![chi_encode(&first.to_letter()), bad, chi_encode(&second.to_letter())];
        let (p, emits) = writer_machine(&words);
        let fallback = table(&[]);
        let seq = build_enumeration_sequence(&p, &emits, 1, fallback.clone(), 400);
        assert_eq!(seq.emissions.len(), 3);
        assert!(seq.emissions[1].table.is_err());
        let (s0, s1, s2) = (seq.emissions[0].step, seq.emissions[1].step, seq.emissions[2].step);
        assert_eq!(s0 as usize, words[0].len());
        assert_eq!(seq.alpha(s0 - 1), &fallback);
        assert_eq!(seq.alpha(s0), &first);
        assert_eq!(seq.alpha(s1), &first);
        assert_eq!(seq.alpha(s2), &second);
        assert_eq!(seq.alpha(400), &second);
    }
}
