//! Compilation of programs to Turing machines for a fixed layout, and
//! exact measurement of compiled machines.
//!
//! Each top-level line becomes one tape pass: the machine reads the whole
//! `Chi` code into its finite control while validating the layout, then
//! sweeps back to the origin writing the line's image. A line undefined on
//! the letter has no outgoing transition at the end of the read, so the
//! machine rejects.

use super::ast::PermProgram;
use super::eval::{eval_perm, Env};
use crate::encoding::{chi_decode, chi_encode, chi_len, Word, BLANK, SEP};
use crate::turing::{time_complexity_over, BudgetError, ProgramError, TimeComplexity, TmBuilder, TmProgram};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("layout has {letters} letters, over the compile budget of {budget}")]
    Budget { letters: u128, budget: u128 },
    #[error("assembled machine is invalid: {0}")]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Measure(#[from] BudgetError),
}

/// Exact measurements of a machine over an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measurement {
    /// Length of the program code.
    pub size: usize,
    pub states: usize,
    pub time: TimeComplexity,
}

/// A compiled program and its compiled inverse.
#[derive(Debug, Clone)]
pub struct CompiledTm {
    pub forward: TmProgram,
    pub backward: TmProgram,
    pub forward_measure: Measurement,
    pub backward_measure: Measurement,
}

/// Default bound on the number of letters a layout may have.
pub const DEFAULT_COMPILE_BUDGET: u128 = 5u128.pow(6);

/// Symbols allowed at each position of `Chi(u)` for `u ∈ 5^k`.
fn position_kinds(k: &[usize]) -> Vec<Option<usize>> {
    let mut out = Vec::with_capacity(chi_len(k));
    for &len in k {
        out.push(None);
        for _ in 0..len {
            out.extend([Some(0), Some(1), Some(2)]);
        }
    }
    out
}

fn valid_triplet_prefix(t: &[u8]) -> bool {
    !matches!(t, [1, 1, ..] | [1, 0, 1])
}

fn name(kind: char, line: usize, w: &[u8]) -> String {
    if kind == 'r' && line == 0 && w.is_empty() {
        return "start".to_string();
    }
    let body: String = w.iter().map(|d| char::from(b'0' + d)).collect();
    format!("{kind}{line}:{body}")
}

/// Valid one-symbol extensions of a code prefix `w` of length `pos`.
fn children(kinds: &[Option<usize>], w: &[u8]) -> Vec<(u8, Word)> {
    let candidates: &[u8] = match kinds[w.len()] {
        None => &[SEP],
        Some(_) => &[0, 1],
    };
    candidates
        .iter()
        .filter_map(|&s| {
            let mut x = w.to_vec();
            x.push(s);
            let ok = match kinds[w.len()] {
                None => true,
                Some(j) => valid_triplet_prefix(&x[x.len() - 1 - j..]),
            };
            ok.then_some((s, x))
        })
        .collect()
}

/// All valid prefixes of codes of the layout, by length.
fn prefixes(kinds: &[Option<usize>]) -> Vec<Vec<Word>> {
    let mut levels = vec![vec![Word::new()]];
    for pos in 0..kinds.len() {
        let next = levels[pos].iter().flat_map(|w| children(kinds, w)).map(|(_, x)| x).collect();
        levels.push(next);
    }
    levels
}

/// Assembles the per-line pass machine for `p` on layout `k`.
pub fn compile_program(p: &PermProgram, k: &[usize], env: &Env, budget: u128) -> Result<TmProgram, CompileError> {
    let letters = 5u128.checked_pow(k.iter().sum::<usize>() as u32).unwrap_or(u128::MAX);
    if letters > budget {
        return Err(CompileError::Budget { letters, budget });
    }
    let kinds = position_kinds(k);
    let len = kinds.len();
    let levels = prefixes(&kinds);
    let lines = p.body.lines();
    let passes = lines.len().max(1);
    let symbols_at = |pos: usize| -> &'static [u8] {
        match kinds[pos] {
            None => &[SEP],
            Some(_) => &[0, 1],
        }
    };
    let mut b = TmBuilder::new();
    for l in 0..passes {
        let last = l + 1 == passes;
        for level in levels.iter().take(len) {
            for w in level {
                for (s, x) in children(&kinds, w) {
                    b.rule(&name('r', l, w), s, s, Some(&name('r', l, &x)), 1);
                }
            }
        }
        let mut targets: HashSet<Word> = HashSet::new();
        for w in &levels[len] {
            let u = chi_decode(w).expect("layout prefix decodes");
            let mut v = u.clone();
            let image = if lines.is_empty() {
                Ok(())
            } else if p.fields.len() != u.len() {
                Err(String::new())
            } else {
                eval_perm(&lines[l], &mut v, env)
            };
            if image.is_ok() {
                let out = chi_encode(&v);
                b.rule(&name('r', l, w), BLANK, BLANK, Some(&name('w', l, &out)), -1);
                targets.insert(out);
            }
        }
        let mut pending: HashSet<Word> = targets;
        while !pending.is_empty() {
            let mut next = HashSet::new();
            for y in pending {
                if y.is_empty() {
                    if last {
                        b.accept(&name('w', l, &y), BLANK, BLANK);
                    } else {
                        b.rule(&name('w', l, &y), BLANK, BLANK, Some(&name('r', l + 1, &[])), 1);
                    }
                    continue;
                }
                let pos = y.len() - 1;
                let rest = y[..pos].to_vec();
                for &s in symbols_at(pos) {
                    b.rule(&name('w', l, &y), s, y[pos], Some(&name('w', l, &rest)), -1);
                }
                next.insert(rest);
            }
            pending = next;
        }
    }
    Ok(b.build()?)
}

/// Compiles `p` and its inverse for layout `k` and measures both.
pub fn compile_to_tm(p: &PermProgram, k: &[usize], env: &Env, budget: u128) -> Result<CompiledTm, CompileError> {
    let forward = compile_program(p, k, env, budget)?;
    let backward = compile_program(&p.invert(), k, env, budget)?;
    let step_cap = step_bound(p, k);
    let forward_measure = measure_program(&forward, k, budget, step_cap)?;
    let backward_measure = measure_program(&backward, k, budget, step_cap)?;
    Ok(CompiledTm { forward, backward, forward_measure, backward_measure })
}

/// Running time of a compiled machine on any letter of the layout.
pub fn step_bound(p: &PermProgram, k: &[usize]) -> usize {
    p.body.lines().len().max(1) * (2 * chi_len(k) + 2)
}

/// `(|p|, |Q_p|, t_p)` over the alphabet `5^k`.
pub fn measure_program(p: &TmProgram, k: &[usize], budget: u128, step_cap: usize) -> Result<Measurement, BudgetError> {
    let time = time_complexity_over(p, k, budget, step_cap)?;
    Ok(Measurement { size: p.encode().len(), states: p.state_count(), time })
}
