//! The reversible single-cell Turing machine transition `γ_U[p]` on
//! `(Tape, Head₋₁, Head₊₁)` triples, and its real-time embedding as a
//! three-field partition automaton.

use crate::encoding::{chi_decode, chi_encode, sharp_pad, sharp_strip, Letter, Word, BLANK, PAD};
use crate::ppa::{LocalReject, PeriodicConfig, Permutation, PpaRule};
use crate::turing::{State, TmConfig, TmProgram};
use std::sync::Arc;

/// A `(Tape, Head₋₁, Head₊₁)` triple of unpadded words.
pub type Triple = (Word, Word, Word);

fn dir_code(d: i8) -> Word {
    vec![u8::from(d == 1)]
}

/// The archive `Chi(a, q, δ)` of a transition taken from field `δ`.
pub fn archive(a: u8, q: &[u8], delta: i8) -> Word {
    chi_encode(&[vec![a], q.to_vec(), dir_code(delta)])
}

/// Length of the archive of a state of length `q_len`.
pub fn archive_len(q_len: usize) -> usize {
    3 * q_len + 9
}

/// Decodes an archive into `(a, q, δ)` with `q` a live state of `p`.
pub fn parse_archive(p: &TmProgram, w: &[u8]) -> Option<(u8, State, i8)> {
    let parts = chi_decode(w).ok()?;
    match parts.as_slice() {
        [a, q, d] if a.len() == 1 && a[0] <= 3 && d.len() == 1 && d[0] <= 1 && p.is_live_state(q) => {
            Some((a[0], q.clone(), if d[0] == 1 { 1 } else { -1 }))
        }
        _ => None,
    }
}

fn tape_symbol(a: &[u8]) -> Option<u8> {
    match a {
        [s] if *s <= 3 => Some(*s),
        _ => None,
    }
}

/// `(a, X, X)` where `X` archives an accepting transition that wrote `a`.
fn is_accepting_image(p: &TmProgram, a: &[u8], hm: &[u8], hp: &[u8]) -> Option<(u8, State, i8)> {
    if hm.is_empty() || hm != hp {
        return None;
    }
    let sym = tape_symbol(a)?;
    let (x, q, d) = parse_archive(p, hm)?;
    let t = p.delta(x, &q)?;
    (t.next.is_empty() && t.write == sym).then_some((x, q, d))
}

/// Forward `γ_U[p]`.
pub fn gamma_forward(p: &TmProgram, a: &[u8], hm: &[u8], hp: &[u8]) -> Option<Triple> {
    let (lm, lp) = (p.is_live_state(hm), p.is_live_state(hp));
    match (lm, lp) {
        (true, true) => None,
        (false, false) => {
            if is_accepting_image(p, a, hm, hp).is_some() {
                None
            } else {
                Some((a.to_vec(), hm.to_vec(), hp.to_vec()))
            }
        }
        _ => {
            let (delta, q, other) = if lm { (-1i8, hm, hp) } else { (1i8, hp, hm) };
            if !other.is_empty() {
                return None;
            }
            let sym = tape_symbol(a)?;
            let t = p.delta(sym, q)?;
            let arch = archive(sym, q, delta);
            if t.next.is_empty() {
                Some((vec![t.write], arch.clone(), arch))
            } else if t.mv == 1 {
                Some((vec![t.write], arch, t.next.clone()))
            } else {
                Some((vec![t.write], t.next.clone(), arch))
            }
        }
    }
}

/// Inverse `γ_U[p]⁻¹`.
pub fn gamma_backward(p: &TmProgram, a: &[u8], hm: &[u8], hp: &[u8]) -> Option<Triple> {
    let (lm, lp) = (p.is_live_state(hm), p.is_live_state(hp));
    match (lm, lp) {
        (true, true) => None,
        (false, false) => {
            if let Some((x, q, d)) = is_accepting_image(p, a, hm, hp) {
                return Some(place(x, q, d));
            }
            Some((a.to_vec(), hm.to_vec(), hp.to_vec()))
        }
        _ => {
            let (mv, qn, other) = if lm { (-1i8, hm, hp) } else { (1i8, hp, hm) };
            let sym = tape_symbol(a)?;
            let (x, q, d) = parse_archive(p, other)?;
            let t = p.delta(x, &q)?;
            (t.write == sym && t.next == qn && t.mv == mv).then(|| place(x, q, d))
        }
    }
}

fn place(x: u8, q: State, d: i8) -> Triple {
    if d == -1 {
        (vec![x], q, Word::new())
    } else {
        (vec![x], Word::new(), q)
    }
}

/// Applies `γ` to padded fields, re-padding to the original lengths.
pub fn lift_padded(
    f: impl Fn(&[u8], &[u8], &[u8]) -> Option<Triple>,
    tape: &[u8],
    hm: &[u8],
    hp: &[u8],
) -> Option<Triple> {
    let (a, m, pl) = (sharp_strip(tape).ok()?, sharp_strip(hm).ok()?, sharp_strip(hp).ok()?);
    let (a2, m2, p2) = f(a, m, pl)?;
    Some((sharp_pad(tape.len(), &a2).ok()?, sharp_pad(hm.len(), &m2).ok()?, sharp_pad(hp.len(), &p2).ok()?))
}

/// Minimal head-field length for `p`: the longest archive.
pub fn head_field_len(p: &TmProgram) -> usize {
    archive_len(p.max_state_len())
}

struct GammaPerm(Arc<TmProgram>);

impl Permutation for GammaPerm {
    fn forward(&self, u: &[Word]) -> Result<Letter, LocalReject> {
        let (a, m, p) = lift_padded(|a, m, p| gamma_forward(&self.0, a, m, p), &u[0], &u[1], &u[2])
            .ok_or_else(|| LocalReject::new("transition undefined"))?;
        Ok(vec![a, m, p])
    }
    fn backward(&self, u: &[Word]) -> Result<Letter, LocalReject> {
        let (a, m, p) = lift_padded(|a, m, p| gamma_backward(&self.0, a, m, p), &u[0], &u[1], &u[2])
            .ok_or_else(|| LocalReject::new("inverse transition undefined"))?;
        Ok(vec![a, m, p])
    }
}

/// The real-time embedding of `p`: fields `[Tape, Head₋₁, Head₊₁]`
/// with directions `(0, -1, +1)` and lengths `(1, K, K)`.
pub fn tm_embedding(p: Arc<TmProgram>) -> PpaRule {
    let k = head_field_len(&p);
    PpaRule::new("gammaU", vec![0, -1, 1], Arc::new(GammaPerm(p))).with_alphabet(vec![1, k, k])
}

/// Embeds a finite tape window `[0, period)` with the head at `head`.
pub fn embed_config(p: &TmProgram, c: &TmConfig, period: usize, offset: i64) -> PeriodicConfig {
    let k = head_field_len(p);
    let pad = |w: &[u8]| sharp_pad(k, w).expect("head field long enough");
    let cells = (0..period as i64)
        .map(|n| {
            let pos = n - offset;
            let head = if pos == c.head && !c.accepted() { c.state.clone() } else { Word::new() };
            vec![vec![c.tape.get(pos)], pad(&head), pad(&[])]
        })
        .collect();
    PeriodicConfig::new(cells)
}

/// What an embedded configuration represents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Represented {
    pub tape: Vec<u8>,
    /// Live head position and state, if any.
    pub head: Option<(usize, State)>,
}

/// Reads the tape and the unique live head; `None` if the configuration
/// does not represent a machine configuration.
pub fn read_represented(p: &TmProgram, c: &PeriodicConfig) -> Option<Represented> {
    let mut tape = Vec::with_capacity(c.period());
    let mut head = None;
    for (n, u) in c.cells.iter().enumerate() {
        let t = sharp_strip(&u[0]).ok()?;
        tape.push(if t.is_empty() { PAD } else { t[0] });
        let (m, pl) = (sharp_strip(&u[1]).ok()?, sharp_strip(&u[2]).ok()?);
        for (field, other) in [(m, pl), (pl, m)] {
            if p.is_live_state(field) {
                if head.is_some() || !other.is_empty() {
                    return None;
                }
                head = Some((n, field.to_vec()));
            }
        }
    }
    if let Some((j, _)) = &head {
        for (n, u) in c.cells.iter().enumerate() {
            if n == *j {
                continue;
            }
            let (m, pl) = (sharp_strip(&u[1]).ok()?, sharp_strip(&u[2]).ok()?);
            if (!m.is_empty() && n > *j) || (!pl.is_empty() && n < *j) {
                return None;
            }
        }
    }
    Some(Represented { tape, head })
}

/// Blank symbol used for cells outside the input.
pub const TAPE_BLANK: u8 = BLANK;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::enumerate_alphabet;
    use crate::ppa::Automaton;
    use crate::turing::tm_step;
    use crate::turing::toys::{bit_flip, identity, random_machine, swap11};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn all_triples(p: &TmProgram) -> Vec<Triple> {
        let mut heads: Vec<Word> = vec![vec![]];
        heads.extend(p.states().iter().cloned());
        for q in p.states() {
            for a in 0..4 {
                for d in [-1, 1] {
                    heads.push(archive(a, q, d));
                }
            }
        }
        heads.push(vec![0, 1]);
        let mut out = Vec::new();
        for a in 0..5u8 {
            for m in &heads {
                for pl in &heads {
                    out.push((vec![a], m.clone(), pl.clone()));
                }
            }
        }
        out
    }

    #[test]
    fn gamma_is_a_partial_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut machines = vec![identity(), bit_flip(), swap11()];
        for _ in 0..10 {
            machines.push(random_machine(&mut rng, 3));
        }
        for p in &machines {
            let mut images: HashMap<Triple, Triple> = HashMap::new();
            for (a, m, pl) in all_triples(p) {
                if let Some(img) = gamma_forward(p, &a, &m, &pl) {
                    let back = gamma_backward(p, &img.0, &img.1, &img.2);
                    assert_eq!(back, Some((a.clone(), m.clone(), pl.clone())));
                    assert!(images.insert(img, (a, m, pl)).is_none(), "not injective");
                }
            }
            for (a, m, pl) in all_triples(p) {
                if let Some(pre) = gamma_backward(p, &a, &m, &pl) {
                    assert_eq!(gamma_forward(p, &pre.0, &pre.1, &pre.2), Some((a, m, pl)));
                }
            }
        }
    }

    #[test]
    fn gamma_examples() {
        let p = identity();
        assert_eq!(gamma_forward(&p, &[1], &[], &[]), Some((vec![1], vec![], vec![])));
        let start = crate::turing::initial_state();
        let acc = gamma_forward(&p, &[3], &start, &[]).unwrap();
        let arch = archive(3, &start, -1);
        assert_eq!(acc, (vec![3], arch.clone(), arch.clone()));
        assert_eq!(arch.len(), archive_len(1));
        assert_eq!(gamma_forward(&p, &[0], &start, &[]), None);
        assert_eq!(gamma_forward(&p, &[2], &start, &start), None);
        let moved = gamma_forward(&p, &[2], &start, &[]).unwrap();
        assert_eq!(moved.0, vec![2]);
        assert!(p.is_live_state(&moved.2));
        assert_eq!(moved.1, archive(2, &start, -1));
    }

    #[test]
    fn embedding_matches_interpreter_on_toys() {
        for (p, inputs) in [(identity(), enumerate_alphabet(&[1, 1])), (swap11(), enumerate_alphabet(&[1, 1]))] {
            let rule = tm_embedding(Arc::new(p.clone()));
            for u in inputs {
                let mut tm = TmConfig::initial(&u);
                let mut c = embed_config(&p, &tm, 128, 40);
                for _ in 0..30 {
                    let next_tm = tm_step(&p, &tm);
                    let next_c = rule.step_forward(&c);
                    match next_tm {
                        None => {
                            assert!(next_c.is_err());
                            break;
                        }
                        Some(n) => {
                            tm = n;
                            c = next_c.unwrap();
                        }
                    }
                    let rep = read_represented(&p, &c).unwrap();
                    let want: Vec<u8> = (0..128).map(|n| tm.tape.get(n - 40)).collect();
                    assert_eq!(rep.tape, want);
                    match rep.head {
                        Some((j, q)) => assert_eq!((j as i64 - 40, q), (tm.head, tm.state.clone())),
                        None => assert!(tm.accepted()),
                    }
                }
            }
        }
    }
}
