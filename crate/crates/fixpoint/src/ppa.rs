//! Partial partition automata over spatially periodic configurations.
//!
//! A rule is a partial permutation `α` of letters followed by a per-field
//! shift: after `α`, field `i` of cell `n` is routed to cell `n + δ_i`.

use crate::encoding::{format_letter, sharp_strip, LengthVector, Letter, Word};
use serde_json::json;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

/// Why a permutation is undefined on a letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalReject {
    /// Index of the top-level program line that failed, when known.
    pub line: Option<usize>,
    pub reason: String,
}

impl LocalReject {
    pub fn new(reason: impl Into<String>) -> Self {
        LocalReject { line: None, reason: reason.into() }
    }
}

impl fmt::Display for LocalReject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.reason),
            None => f.write_str(&self.reason),
        }
    }
}

/// A rejected global step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReject {
    pub cell: usize,
    /// Time of the configuration the failing step was applied to.
    pub time: i64,
    pub line: Option<usize>,
    pub reason: String,
}

impl StepReject {
    fn at(cell: usize, r: LocalReject) -> Self {
        StepReject { cell, time: 0, line: r.line, reason: r.reason }
    }

    pub fn with_time(mut self, time: i64) -> Self {
        self.time = time;
        self
    }
}

impl fmt::Display for StepReject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rejected at t={} cell={}", self.time, self.cell)?;
        if let Some(l) = self.line {
            write!(f, " line={l}")?;
        }
        write!(f, ": {}", self.reason)
    }
}

impl std::error::Error for StepReject {}

/// A partial permutation of letters together with its inverse.
pub trait Permutation: Send + Sync {
    fn forward(&self, u: &[Word]) -> Result<Letter, LocalReject>;
    fn backward(&self, u: &[Word]) -> Result<Letter, LocalReject>;
}

type LetterFn = dyn Fn(&[Word]) -> Option<Letter> + Send + Sync;

/// A permutation given by a pair of native closures.
pub struct FnPermutation {
    forward: Box<LetterFn>,
    backward: Box<LetterFn>,
}

impl FnPermutation {
    pub fn new(
        forward: impl Fn(&[Word]) -> Option<Letter> + Send + Sync + 'static,
        backward: impl Fn(&[Word]) -> Option<Letter> + Send + Sync + 'static,
    ) -> Self {
        FnPermutation { forward: Box::new(forward), backward: Box::new(backward) }
    }

    /// The identity.
    pub fn identity() -> Self {
        FnPermutation::new(|u| Some(u.to_vec()), |u| Some(u.to_vec()))
    }
}

impl Permutation for FnPermutation {
    fn forward(&self, u: &[Word]) -> Result<Letter, LocalReject> {
        (self.forward)(u).ok_or_else(|| LocalReject::new("undefined"))
    }
    fn backward(&self, u: &[Word]) -> Result<Letter, LocalReject> {
        (self.backward)(u).ok_or_else(|| LocalReject::new("undefined"))
    }
}

/// A spatially periodic configuration: `cells` repeated bi-infinitely.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicConfig {
    pub cells: Vec<Letter>,
}

impl PeriodicConfig {
    pub fn new(cells: Vec<Letter>) -> Self {
        assert!(!cells.is_empty(), "period must be at least 1");
        PeriodicConfig { cells }
    }

    /// Period length.
    pub fn period(&self) -> usize {
        self.cells.len()
    }

    /// `σ^s`: cell `n` of the result is cell `n + s` of `self`.
    pub fn shift(&self, s: i64) -> PeriodicConfig {
        let p = self.period() as i64;
        let s = s.rem_euclid(p) as usize;
        let mut cells = self.cells[s..].to_vec();
        cells.extend_from_slice(&self.cells[..s]);
        PeriodicConfig { cells }
    }

    /// One line of text: letters joined by spaces.
    pub fn to_text(&self) -> String {
        self.cells.iter().map(|c| format_letter(c)).collect::<Vec<_>>().join(" ")
    }
}

/// Common interface of single rules and disjoint unions.
pub trait Automaton: Send + Sync {
    fn step_forward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject>;
    fn step_backward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject>;
    /// The radius-1 local rule: the new value of a cell from its three
    /// predecessors `(left, centre, right)`.
    fn local_rule(&self, left: &[Word], centre: &[Word], right: &[Word]) -> Option<Letter>;
}

type LetterFilter = dyn Fn(&[Word]) -> bool + Send + Sync;

/// A partial partition automaton `σ^δ ∘ α`.
#[derive(Clone)]
pub struct PpaRule {
    pub name: String,
    pub directions: Vec<i8>,
    pub perm: Arc<dyn Permutation>,
    /// Field lengths every letter must have.
    pub alphabet: Option<LengthVector>,
    /// Extra letter-level restriction of the alphabet.
    pub filter: Option<Arc<LetterFilter>>,
}

impl fmt::Debug for PpaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PpaRule")
            .field("name", &self.name)
            .field("directions", &self.directions)
            .field("alphabet", &self.alphabet)
            .finish_non_exhaustive()
    }
}

impl PpaRule {
    pub fn new(name: impl Into<String>, directions: Vec<i8>, perm: Arc<dyn Permutation>) -> Self {
        assert!(directions.iter().all(|d| (-1..=1).contains(d)));
        PpaRule { name: name.into(), directions, perm, alphabet: None, filter: None }
    }

    /// Restricts the rule to letters of lengths `k`.
    pub fn with_alphabet(mut self, k: LengthVector) -> Self {
        assert_eq!(k.len(), self.directions.len());
        self.alphabet = Some(k);
        self
    }

    /// Restricts the rule to letters accepted by `f`.
    pub fn with_filter(mut self, f: impl Fn(&[Word]) -> bool + Send + Sync + 'static) -> Self {
        self.filter = Some(Arc::new(f));
        self
    }

    pub fn field_count(&self) -> usize {
        self.directions.len()
    }

    /// Membership of a letter in the rule's alphabet.
    pub fn in_alphabet(&self, u: &[Word]) -> Result<(), LocalReject> {
        if u.len() != self.directions.len() {
            return Err(LocalReject::new(format!("letter has {} fields, expected {}", u.len(), self.directions.len())));
        }
        if u.iter().flatten().any(|&s| s > 4) {
            return Err(LocalReject::new("symbol outside 0..=4"));
        }
        if let Some(k) = &self.alphabet {
            if u.iter().zip(k).any(|(f, &l)| f.len() != l) {
                return Err(LocalReject::new("letter lengths differ from the alphabet"));
            }
        }
        if let Some(f) = &self.filter {
            if !f(u) {
                return Err(LocalReject::new("letter outside the restricted alphabet"));
            }
        }
        Ok(())
    }

    fn check_config(&self, c: &PeriodicConfig) -> Result<(), StepReject> {
        for (n, u) in c.cells.iter().enumerate() {
            self.in_alphabet(u).map_err(|r| StepReject::at(n, r))?;
        }
        Ok(())
    }

    fn route(&self, cells: Vec<Letter>, sign: i64) -> Vec<Letter> {
        let p = cells.len() as i64;
        let mut out = cells.clone();
        for (i, &d) in self.directions.iter().enumerate() {
            if d == 0 {
                continue;
            }
            for n in 0..p {
                let dst = (n + sign * d as i64).rem_euclid(p) as usize;
                out[dst][i] = cells[n as usize][i].clone();
            }
        }
        out
    }

    /// `α` then routing.
    pub fn step(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        self.check_config(c)?;
        let mut cells = Vec::with_capacity(c.period());
        for (n, u) in c.cells.iter().enumerate() {
            let v = self.perm.forward(u).map_err(|r| StepReject::at(n, r))?;
            if v.len() != u.len() || v.iter().zip(u).any(|(a, b)| a.len() != b.len()) {
                return Err(StepReject::at(n, LocalReject::new("permutation changed letter lengths")));
            }
            cells.push(v);
        }
        Ok(PeriodicConfig { cells: self.route(cells, 1) })
    }

    /// Inverse routing then `α⁻¹`.
    pub fn unstep(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        self.check_config(c)?;
        let routed = self.route(c.cells.clone(), -1);
        let mut cells = Vec::with_capacity(c.period());
        for (n, u) in routed.iter().enumerate() {
            let v = self.perm.backward(u).map_err(|r| StepReject::at(n, r))?;
            if v.len() != u.len() || v.iter().zip(u).any(|(a, b)| a.len() != b.len()) {
                return Err(StepReject::at(n, LocalReject::new("inverse permutation changed letter lengths")));
            }
            self.in_alphabet(&v).map_err(|r| StepReject::at(n, r))?;
            cells.push(v);
        }
        Ok(PeriodicConfig { cells })
    }
}

impl Automaton for PpaRule {
    fn step_forward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        let next = self.step(c)?;
        self.check_config(&next)?;
        Ok(next)
    }

    fn step_backward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        self.unstep(c)
    }

    fn local_rule(&self, left: &[Word], centre: &[Word], right: &[Word]) -> Option<Letter> {
        let nb = [left, centre, right];
        let mut images: [Option<Letter>; 3] = [None, None, None];
        let mut out = Vec::with_capacity(self.directions.len());
        for (i, &d) in self.directions.iter().enumerate() {
            let src = (1 - d) as usize;
            if images[src].is_none() {
                self.in_alphabet(nb[src]).ok()?;
                images[src] = Some(self.perm.forward(nb[src]).ok()?);
            }
            out.push(images[src].as_ref()?.get(i)?.clone());
        }
        Some(out)
    }
}

/// Disjoint union of rules over pairwise distinct length vectors.
#[derive(Debug, Clone)]
pub struct DisjointUnion {
    pub parts: Vec<PpaRule>,
}

impl DisjointUnion {
    /// Builds the union; fails when two parts may share a letter.
    pub fn new(parts: Vec<PpaRule>) -> Result<Self, String> {
        let mut seen = HashSet::new();
        for p in &parts {
            let k = p.alphabet.clone().ok_or_else(|| format!("rule {} has no fixed alphabet", p.name))?;
            if !seen.insert(k.clone()) {
                return Err(format!("alphabets overlap at lengths {k:?}"));
            }
        }
        Ok(DisjointUnion { parts })
    }

    fn part_of(&self, u: &[Word]) -> Option<usize> {
        self.parts.iter().position(|p| {
            p.alphabet.as_ref().is_some_and(|k| k.len() == u.len() && k.iter().zip(u).all(|(&l, f)| l == f.len()))
        })
    }

    fn classify(&self, c: &PeriodicConfig) -> Result<&PpaRule, StepReject> {
        let idx = self
            .part_of(&c.cells[0])
            .ok_or_else(|| StepReject::at(0, LocalReject::new("letter in no part of the union")))?;
        for (n, u) in c.cells.iter().enumerate() {
            if self.part_of(u) != Some(idx) {
                return Err(StepReject::at(n, LocalReject::new("mixed-alphabet configuration")));
            }
        }
        Ok(&self.parts[idx])
    }
}

impl Automaton for DisjointUnion {
    fn step_forward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        self.classify(c)?.step_forward(c)
    }
    fn step_backward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        self.classify(c)?.step_backward(c)
    }
    fn local_rule(&self, left: &[Word], centre: &[Word], right: &[Word]) -> Option<Letter> {
        let i = self.part_of(centre)?;
        if self.part_of(left) != Some(i) || self.part_of(right) != Some(i) {
            return None;
        }
        self.parts[i].local_rule(left, centre, right)
    }
}

/// `F^t(c)` for `t ≥ 0`, or `F^{-t}(c)` for `t < 0`.
pub fn iterate<A: Automaton + ?Sized>(f: &A, c: &PeriodicConfig, t: i64) -> Result<PeriodicConfig, StepReject> {
    let mut cur = c.clone();
    for k in 0..t.unsigned_abs() as i64 {
        cur = if t >= 0 {
            f.step_forward(&cur).map_err(|e| e.with_time(k))?
        } else {
            f.step_backward(&cur).map_err(|e| e.with_time(-k))?
        };
    }
    Ok(cur)
}

/// `c ∈ F^t(A^Z) ∩ F^{-t}(A^Z)`.
pub fn omega_truncated<A: Automaton + ?Sized>(f: &A, c: &PeriodicConfig, t: usize) -> bool {
    iterate(f, c, t as i64).is_ok() && iterate(f, c, -(t as i64)).is_ok()
}

/// Rows `F^{-down}(c), …, F^{up}(c)`, bottom to top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripPattern {
    pub rows: Vec<PeriodicConfig>,
    /// Time of the bottom row relative to `c`.
    pub start_time: i64,
}

impl StripPattern {
    pub fn height(&self) -> usize {
        self.rows.len()
    }
}

/// Builds the locally valid strip around `c`.
pub fn build_strip<A: Automaton + ?Sized>(
    f: &A,
    c: &PeriodicConfig,
    down: usize,
    up: usize,
) -> Result<StripPattern, StepReject> {
    let mut below = Vec::with_capacity(down);
    let mut cur = c.clone();
    for k in 0..down {
        cur = f.step_backward(&cur).map_err(|e| e.with_time(-(k as i64)))?;
        below.push(cur.clone());
    }
    below.reverse();
    let mut rows = below;
    rows.push(c.clone());
    let mut cur = c.clone();
    for k in 0..up {
        cur = f.step_forward(&cur).map_err(|e| e.with_time(k as i64))?;
        rows.push(cur.clone());
    }
    Ok(StripPattern { rows, start_time: -(down as i64) })
}

/// Local validity of a finite pattern, rows bottom to top.
///
/// In window mode only cells with both horizontal neighbours inside the
/// pattern are constrained; in periodic mode every cell is, with wraparound.
pub fn check_local_validity<A: Automaton + ?Sized>(f: &A, rows: &[Vec<Letter>], periodic: bool) -> bool {
    for t in 1..rows.len() {
        let (below, row) = (&rows[t - 1], &rows[t]);
        let w = below.len();
        if row.len() != w {
            return false;
        }
        let range: Box<dyn Iterator<Item = usize>> =
            if periodic { Box::new(0..w) } else { Box::new(1..w.saturating_sub(1)) };
        for n in range {
            let l = &below[(n + w - 1) % w];
            let r = &below[(n + 1) % w];
            match f.local_rule(l, &below[n], r) {
                Some(v) if v == row[n] => {}
                _ => return false,
            }
        }
    }
    true
}

/// One step of the window semantics: a window of width `w` yields `w - 2`.
pub fn step_window<A: Automaton + ?Sized>(f: &A, window: &[Letter]) -> Option<Vec<Letter>> {
    (1..window.len().saturating_sub(1)).map(|n| f.local_rule(&window[n - 1], &window[n], &window[n + 1])).collect()
}

/// Periods found by [`find_periods`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodReport {
    /// Pairs `(s, t)` with `σ^s F^t(c) = c`, `1 ≤ t ≤ maxT`, `0 ≤ s < P`.
    pub periods: Vec<(usize, usize)>,
    /// Set when a step rejected before `maxT`.
    pub partial: Option<StepReject>,
}

/// All `(s, t)` with `t ≤ max_t` and `σ^s F^t(c) = c`.
pub fn find_periods<A: Automaton + ?Sized>(f: &A, c: &PeriodicConfig, max_t: usize) -> PeriodReport {
    let mut periods = Vec::new();
    let mut cur = c.clone();
    let p = c.period();
    for t in 1..=max_t {
        match f.step_forward(&cur) {
            Ok(n) => cur = n,
            Err(e) => return PeriodReport { periods, partial: Some(e.with_time(t as i64 - 1)) },
        }
        for s in 0..p {
            if (0..p).all(|n| cur.cells[(n + s) % p] == c.cells[n]) {
                periods.push((s, t));
            }
        }
    }
    PeriodReport { periods, partial: None }
}

/// Gray level of a field value: `0` when empty, otherwise
/// `1 + (base-5 value of the stripped word mod 255)`.
pub fn gray_level(field: &[u8]) -> u8 {
    let w = sharp_strip(field).unwrap_or(field);
    if w.is_empty() {
        return 0;
    }
    let v = w.iter().fold(0u32, |acc, &d| (acc * 5 + d as u32) % 255);
    (1 + v) as u8
}

/// Binary PGM (P5) of a strip, one pixel per cell per time, top row last.
pub fn to_pgm(strip: &StripPattern, field: usize) -> Vec<u8> {
    let w = strip.rows.first().map_or(0, |r| r.period());
    let h = strip.rows.len();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for row in strip.rows.iter().rev() {
        out.extend(row.cells.iter().map(|u| u.get(field).map_or(0, |f| gray_level(f))));
    }
    out
}

/// CSV with columns `t,cell,letter`.
pub fn to_csv(strip: &StripPattern) -> String {
    let mut out = String::from("t,cell,letter\n");
    for (i, row) in strip.rows.iter().enumerate() {
        let t = strip.start_time + i as i64;
        for (n, u) in row.cells.iter().enumerate() {
            out.push_str(&format!("{t},{n},{}\n", format_letter(u)));
        }
    }
    out
}

/// NDJSON trace: one record per row, then a rejection record if any.
pub fn to_ndjson(strip: &StripPattern, rejection: Option<&StepReject>) -> String {
    let mut out = String::new();
    for (i, row) in strip.rows.iter().enumerate() {
        let t = strip.start_time + i as i64;
        let cells: Vec<String> = row.cells.iter().map(|u| format_letter(u)).collect();
        out.push_str(&json!({"t": t, "cells": cells}).to_string());
        out.push('\n');
    }
    if let Some(r) = rejection {
        out.push_str(&json!({"t": r.time, "reject": {"cell": r.cell, "line": r.line, "reason": r.reason}}).to_string());
        out.push('\n');
    }
    out
}
