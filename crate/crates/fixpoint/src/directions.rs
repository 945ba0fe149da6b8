//! Exact slope arithmetic: non-expansive interval propagation through
//! simulations, directive words and their slope intervals, and the cover
//! verification over the three-letter directive alphabet.

use crate::encoding::adic_value;
use crate::params::{below_sqrt2_minus_1, DIRECTIVES};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use std::fmt;
use thiserror::Error;

pub type Rat = BigRational;

fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `p/q` or `p` for integers.
pub fn fmt_rat(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p/q`, `p` or a finite decimal such as `0.41`.
pub fn parse_rat(s: &str) -> Result<Rat, DirError> {
    let s = s.trim();
    let bad = || DirError::Parse(s.to_string());
    if let Some((p, q)) = s.split_once('/') {
        let (p, q): (BigInt, BigInt) = (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?);
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(p, q));
    }
    if let Some((i, f)) = s.split_once('.') {
        let neg = i.starts_with('-');
        let digits: BigInt = format!("{}{f}", i.trim_start_matches('-')).parse().map_err(|_| bad())?;
        let v = Rat::new(digits, BigInt::from(10).pow(f.len() as u32));
        return Ok(if neg { -v } else { v });
    }
    Ok(Rat::from_integer(s.parse().map_err(|_| bad())?))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DirError {
    #[error("cannot parse rational {0:?}")]
    Parse(String),
    #[error("empty interval [{0}, {1}]")]
    Empty(String, String),
    #[error("{needed} epsilon values needed, {given} given")]
    ShortEpsilon { needed: usize, given: usize },
    #[error("invalid directive letter ({0}, {1})")]
    Letter(u64, u64),
    #[error("{x} is outside the covered interval {interval}")]
    OutOfRange { x: String, interval: String },
    #[error("no directive letter extends the search at level {0}")]
    NoWord(usize),
}

/// A slope to the vertical: rational or the horizontal direction `∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slope {
    Finite(Rat),
    Infinity,
}

impl Slope {
    /// Homogeneous coordinates `(p, q)` with slope `p/q`; `∞ = (1, 0)`.
    pub fn homogeneous(&self) -> (BigInt, BigInt) {
        match self {
            Slope::Finite(x) => (x.numer().clone(), x.denom().clone()),
            Slope::Infinity => (BigInt::one(), BigInt::zero()),
        }
    }

    pub fn from_homogeneous(p: BigInt, q: BigInt) -> Option<Slope> {
        match (p.is_zero(), q.is_zero()) {
            (true, true) => None,
            (_, true) => Some(Slope::Infinity),
            _ => Some(Slope::Finite(Rat::new(p, q))),
        }
    }
}

/// A closed rational interval.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SlopeInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl fmt::Display for SlopeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_rat(&self.lo), fmt_rat(&self.hi))
    }
}

impl SlopeInterval {
    pub fn new(lo: Rat, hi: Rat) -> Result<Self, DirError> {
        if lo > hi {
            return Err(DirError::Empty(fmt_rat(&lo), fmt_rat(&hi)));
        }
        Ok(SlopeInterval { lo, hi })
    }

    pub fn point(x: Rat) -> Self {
        SlopeInterval { lo: x.clone(), hi: x }
    }

    /// `[-1, 1]`.
    pub fn unit() -> Self {
        SlopeInterval { lo: rat(-1), hi: rat(1) }
    }

    pub fn diameter(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / rat(2)
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn subset_of(&self, other: &SlopeInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// `r · I` for `r ≥ 0`.
    pub fn scale(&self, r: &Rat) -> Self {
        assert!(!r.is_negative(), "negative scale");
        SlopeInterval { lo: &self.lo * r, hi: &self.hi * r }
    }

    pub fn translate(&self, x: &Rat) -> Self {
        SlopeInterval { lo: &self.lo + x, hi: &self.hi + x }
    }

    pub fn to_json(&self) -> Value {
        json!({"lo": fmt_rat(&self.lo), "hi": fmt_rat(&self.hi), "diameter": fmt_rat(&self.diameter())})
    }
}

/// `(Q + S·I) / T`.
pub fn ne_map(i: &SlopeInterval, s: &BigInt, t: &BigInt, q: &BigInt) -> SlopeInterval {
    assert!(t.is_positive() && s.is_positive(), "S and T must be positive");
    let r = Rat::new(s.clone(), t.clone());
    i.scale(&r).translate(&Rat::new(q.clone(), t.clone()))
}

/// One simulation level `(S, T, D)` with `Q = D·S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub s: BigInt,
    pub t: BigInt,
    pub d: BigInt,
}

impl Level {
    pub fn new(s: impl Into<BigInt>, t: impl Into<BigInt>, d: impl Into<BigInt>) -> Self {
        Level { s: s.into(), t: t.into(), d: d.into() }
    }
}

/// Folds [`ne_map`] from `[-1, 1]` at the deepest level up to level 0.
pub fn nested_ne_interval(levels: &[Level]) -> SlopeInterval {
    levels.iter().rev().fold(SlopeInterval::unit(), |i, l| ne_map(&i, &l.s, &l.t, &(&l.d * &l.s)))
}

/// A directive letter `(D, W)`.
pub type Directive = (u64, u64);

fn check_letter(&(d, w): &Directive) -> Result<(), DirError> {
    if d == 0 && w == 0 {
        return Err(DirError::Letter(d, w));
    }
    Ok(())
}

/// `R = 1/(D + W + 1 + ε)`.
pub fn ratio(&(d, w): &Directive, eps: &Rat) -> Rat {
    (rat((d + w + 1) as i64) + eps).recip()
}

/// `Θ_ε(d) = (Π R_i)[-1, 1] + ⌊D⌋_R`.
pub fn theta_interval(word: &[Directive], eps: &[Rat]) -> Result<SlopeInterval, DirError> {
    if eps.len() < word.len() {
        return Err(DirError::ShortEpsilon { needed: word.len(), given: eps.len() });
    }
    word.iter().try_for_each(check_letter)?;
    let r: Vec<Rat> = word.iter().zip(eps).map(|(a, e)| ratio(a, e)).collect();
    let d: Vec<Rat> = word.iter().map(|a| rat(a.0 as i64)).collect();
    let prod = r.iter().fold(Rat::one(), |acc, x| acc * x);
    Ok(SlopeInterval::unit().scale(&prod).translate(&adic_value(&d, &r)))
}

/// Midpoint of `Θ` at depth `n` and the radius bounding its distance to the limit.
pub fn theta_limit(word: &[Directive], eps: &[Rat], n: usize) -> Result<(Rat, Rat), DirError> {
    let n = n.min(word.len());
    let i = theta_interval(&word[..n], eps)?;
    Ok((i.midpoint(), i.diameter() / rat(2)))
}

/// Sorted union of closed intervals, merging overlaps and touching ends.
pub fn ne_union(parts: &[SlopeInterval]) -> Vec<SlopeInterval> {
    let mut v = parts.to_vec();
    v.sort();
    let mut out: Vec<SlopeInterval> = Vec::new();
    for i in v {
        match out.last_mut() {
            Some(last) if i.lo <= last.hi => {
                if i.hi > last.hi {
                    last.hi = i.hi;
                }
            }
            _ => out.push(i),
        }
    }
    out
}

/// `[-Π b_i, ⌊1…12⌋_b]` with `b_i = 1/(2 + ε_i)`; `[-1, 1]` at depth 0.
pub fn predicted_cover(eps: &[Rat]) -> SlopeInterval {
    if eps.is_empty() {
        return SlopeInterval::unit();
    }
    let b: Vec<Rat> = eps.iter().map(|e| (rat(2) + e).recip()).collect();
    let mut digits = vec![Rat::one(); b.len()];
    *digits.last_mut().expect("non-empty") = rat(2);
    let prod = b.iter().fold(Rat::one(), |acc, x| acc * x);
    SlopeInterval { lo: -prod, hi: adic_value(&digits, &b) }
}

/// `⌊111…⌋_b` for `ε` continued by its last value forever.
pub fn cover_limit_sup(eps: &[Rat]) -> Rat {
    let b: Vec<Rat> = eps.iter().map(|e| (rat(2) + e).recip()).collect();
    let last = eps.last().cloned().unwrap_or_else(Rat::zero);
    // Σ_{i≥n} Π_{n≤j≤i} b = b/(1-b) = 1/(1+ε) for a constant tail.
    let tail = (Rat::one() + last).recip();
    let mut acc = tail;
    for bi in b.iter().rev() {
        acc = bi * (Rat::one() + acc);
    }
    acc
}

/// Outcome of [`cover_check`].
#[derive(Debug, Clone)]
pub struct CoverReport {
    pub depth: usize,
    pub eps: Vec<Rat>,
    pub words: usize,
    pub union: Vec<SlopeInterval>,
    pub predicted: SlopeInterval,
    /// The union is exactly the predicted interval.
    pub matches: bool,
    /// Words on both sides of the first hole.
    pub hole: Option<(Vec<Directive>, Vec<Directive>)>,
    /// Every `ε_i` is below `√2 - 1`.
    pub in_domain: bool,
    /// `⌊111…⌋` for the constant continuation of `ε`.
    pub limit_sup: Rat,
}

impl CoverReport {
    pub fn to_json(&self) -> Value {
        json!({
            "depth": self.depth,
            "eps": self.eps.iter().map(fmt_rat).collect::<Vec<_>>(),
            "words": self.words,
            "union": self.union.iter().map(SlopeInterval::to_json).collect::<Vec<_>>(),
            "predicted": self.predicted.to_json(),
            "matches": self.matches,
            "hole": self.hole.as_ref().map(|(a, b)| json!([a, b])),
            "in_domain": self.in_domain,
            "limit_sup": fmt_rat(&self.limit_sup),
        })
    }
}

/// All words of length `n` over the directive alphabet.
pub fn directive_words(n: usize) -> Vec<Vec<Directive>> {
    (0..3usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let a = DIRECTIVES[code % 3];
                    code /= 3;
                    a
                })
                .collect()
        })
        .collect()
}

/// Unions `Θ_ε(d)` over every word of length `|ε|` and compares with the prediction.
pub fn cover_check(eps: &[Rat]) -> CoverReport {
    let words = directive_words(eps.len());
    let mut tagged: Vec<(SlopeInterval, usize)> =
        words.iter().enumerate().map(|(k, w)| (theta_interval(w, eps).expect("valid letters"), k)).collect();
    tagged.sort();
    let union = ne_union(&tagged.iter().map(|t| t.0.clone()).collect::<Vec<_>>());
    let mut hole = None;
    let mut reach = tagged[0].0.hi.clone();
    for pair in tagged.windows(2) {
        if pair[1].0.lo > reach {
            hole = Some((words[pair[0].1].clone(), words[pair[1].1].clone()));
            break;
        }
        if pair[1].0.hi > reach {
            reach = pair[1].0.hi.clone();
        }
    }
    let predicted = predicted_cover(eps);
    let matches = union.len() == 1 && union[0] == predicted;
    CoverReport {
        depth: eps.len(),
        eps: eps.to_vec(),
        words: words.len(),
        union,
        predicted,
        matches,
        hole,
        in_domain: eps.iter().all(|e| !e.is_negative() && below_sqrt2_minus_1(e)),
        limit_sup: cover_limit_sup(eps),
    }
}

/// A word `d` of length `depth` with `x ∈ Θ_ε(d)`, chosen greedily level by level.
pub fn directive_search(x: &Rat, eps: &[Rat], depth: usize) -> Result<Vec<Directive>, DirError> {
    if eps.len() < depth {
        return Err(DirError::ShortEpsilon { needed: depth, given: eps.len() });
    }
    let cover = predicted_cover(&eps[..depth]);
    if !cover.contains(x) {
        return Err(DirError::OutOfRange { x: fmt_rat(x), interval: cover.to_string() });
    }
    let mut word = Vec::with_capacity(depth);
    let mut y = x.clone();
    for level in 0..depth {
        let rest = predicted_cover(&eps[level + 1..depth]);
        // x = R_a (D_a + y') at this level.
        let next = DIRECTIVES.iter().find_map(|a| {
            let y2 = &y / ratio(a, &eps[level]) - rat(a.0 as i64);
            rest.contains(&y2).then_some((*a, y2))
        });
        let (a, y2) = next.ok_or(DirError::NoWord(level))?;
        word.push(a);
        y = y2;
    }
    debug_assert!(theta_interval(&word, eps).is_ok_and(|i| i.contains(x)));
    Ok(word)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rat {
        Rat::new(p.into(), q.into())
    }

    fn iv(a: Rat, b: Rat) -> SlopeInterval {
        SlopeInterval::new(a, b).unwrap()
    }

    #[test]
    fn ne_map_examples() {
        let b = |x: i64| BigInt::from(x);
        assert_eq!(ne_map(&SlopeInterval::unit(), &b(3), &b(3), &b(0)), SlopeInterval::unit());
        assert_eq!(ne_map(&SlopeInterval::unit(), &b(1), &b(2), &b(0)), iv(r(-1, 2), r(1, 2)));
        assert_eq!(ne_map(&SlopeInterval::point(rat(0)), &b(1), &b(1), &b(3)), SlopeInterval::point(rat(3)));
        assert_eq!(nested_ne_interval(&[Level::new(1, 2, 0)]), iv(r(-1, 2), r(1, 2)));
    }

    #[test]
    fn theta_examples_and_recursion() {
        assert_eq!(theta_interval(&[], &[]).unwrap(), SlopeInterval::unit());
        assert_eq!(theta_interval(&[(1, 1)], &[rat(0)]).unwrap(), iv(rat(0), r(2, 3)));
        assert!(theta_interval(&[(0, 0)], &[rat(0)]).is_err());
        let eps = [r(1, 10), rat(0), r(41, 100), r(1, 7), r(1, 3)];
        for w in directive_words(5).iter().step_by(7) {
            let whole = theta_interval(w, &eps).unwrap();
            let tail = theta_interval(&w[1..], &eps[1..]).unwrap();
            let r0 = ratio(&w[0], &eps[0]);
            assert_eq!(whole, tail.translate(&rat(w[0].0 as i64)).scale(&r0));
            assert!(theta_interval(&w[..4], &eps).unwrap().subset_of(&theta_interval(&w[..3], &eps).unwrap()));
        }
    }

    #[test]
    fn theta_limits() {
        let zero = vec![rat(0); 20];
        let (a, e) = theta_limit(&[(0, 1); 20], &zero, 20).unwrap();
        assert_eq!(a, rat(0));
        assert!(e <= r(1, 1 << 20));
        let (a, e) = theta_limit(&[(1, 0); 20], &zero, 20).unwrap();
        assert!((a - rat(1)).abs() <= e);
        for n in 1..12 {
            let (x, en) = theta_limit(&[(1, 1); 12], &zero, n).unwrap();
            let (y, _) = theta_limit(&[(1, 1); 12], &zero, n + 1).unwrap();
            assert!((x - y).abs() <= en);
            assert!(en <= Rat::new(1.into(), BigInt::from(2).pow(n as u32)));
        }
    }

    #[test]
    fn cover_depth_one_by_hand() {
        let rep = cover_check(&[rat(0)]);
        assert!(rep.matches);
        assert_eq!(rep.predicted, iv(r(-1, 2), rat(1)));
    }

    #[test]
    fn cover_fails_past_the_bound() {
        let rep = cover_check(&vec![r(1, 2); 8]);
        assert!(!rep.in_domain);
        assert!(!rep.matches && rep.hole.is_some());
    }

    #[test]
    fn search_examples() {
        let eps = vec![r(1, 10); 12];
        assert_eq!(directive_search(&rat(0), &eps, 6).unwrap().len(), 6);
        for depth in 1..=12 {
            let w = directive_search(&r(1, 2), &eps, depth).unwrap();
            assert!(theta_interval(&w, &eps).unwrap().contains(&r(1, 2)));
        }
        assert!(matches!(directive_search(&r(9, 10), &vec![r(41, 100); 8], 8), Err(DirError::OutOfRange { .. })));
    }

    #[test]
    fn unions() {
        assert_eq!(ne_union(&[SlopeInterval::point(rat(1)), SlopeInterval::point(rat(0))]).len(), 2);
        assert_eq!(ne_union(&[iv(rat(0), rat(2)), iv(rat(1), rat(3))]), vec![iv(rat(0), rat(3))]);
        assert!(ne_union(&[]).is_empty());
    }

    #[test]
    fn rationals_parse() {
        assert_eq!(parse_rat("41/100").unwrap(), r(41, 100));
        assert_eq!(parse_rat("0.41").unwrap(), r(41, 100));
        assert_eq!(parse_rat("-3").unwrap(), rat(-3));
        assert!(parse_rat("1/0").is_err());
        assert_eq!(fmt_rat(&r(2, 4)), "1/2");
        assert_eq!(Slope::from_homogeneous(1.into(), 0.into()), Some(Slope::Infinity));
    }
}
