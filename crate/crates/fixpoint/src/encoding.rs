//! Words over the five-letter alphabet, binary and mixed-radix numerals,
//! the `Chi` tuple code, sharp padding and field layouts.

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

/// A word over `{0,1,2,3,4}`. Symbol `4` is the padding symbol.
pub type Word = Vec<u8>;

/// A tuple of words: one cell state with `M = len()` fields.
pub type Letter = Vec<Word>;

/// A vector of field lengths describing the constant-length alphabet `5^k`.
pub type LengthVector = Vec<usize>;

/// The padding symbol.
pub const PAD: u8 = 4;
/// The field separator in `Chi` encodings.
pub const SEP: u8 = 2;
/// The blank tape symbol.
pub const BLANK: u8 = 3;

/// Reasons a word fails to decode.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("symbol {symbol} at position {pos} is outside the allowed alphabet")]
    BadSymbol { pos: usize, symbol: u8 },
    #[error("non-binary symbol {symbol} at position {pos}")]
    NonBinary { pos: usize, symbol: u8 },
    #[error("malformed triplet at position {pos}")]
    MalformedTriplet { pos: usize },
    #[error("expected separator at position {pos}")]
    MissingSeparator { pos: usize },
    #[error("truncated encoding at position {pos}")]
    Truncated { pos: usize },
    #[error("encoding does not match layout {expected:?}")]
    LayoutMismatch { expected: LengthVector },
    #[error("word of length {len} does not fit in {room} cells")]
    PadOverflow { len: usize, room: usize },
    #[error("padding symbol after data at position {pos}")]
    PadAfterData { pos: usize },
    #[error("field index {index} exceeds field count {count}")]
    FieldIndex { index: usize, count: usize },
}

/// Shortest binary representation of `n`; empty for `0`.
pub fn bin_encode(n: u128) -> Word {
    if n == 0 {
        return Word::new();
    }
    let len = 128 - n.leading_zeros() as usize;
    (0..len).rev().map(|b| ((n >> b) & 1) as u8).collect()
}

/// Shortest binary representation of a big integer.
pub fn bin_encode_big(n: &num_bigint::BigUint) -> Word {
    if n.is_zero() {
        return Word::new();
    }
    let bits = n.bits();
    (0..bits).rev().map(|b| n.bit(b) as u8).collect()
}

/// Value of a binary word; leading zeros are ignored.
pub fn bin_decode(u: &[u8]) -> Result<u128, EncodingError> {
    let mut v: u128 = 0;
    for (pos, &s) in u.iter().enumerate() {
        if s > 1 {
            return Err(EncodingError::NonBinary { pos, symbol: s });
        }
        if v >> 127 != 0 {
            return Err(EncodingError::PadOverflow { len: u.len(), room: 128 });
        }
        v = (v << 1) | s as u128;
    }
    Ok(v)
}

/// Length `‖n‖` of the binary representation of `n`.
pub fn bin_len(n: u128) -> usize {
    128 - n.leading_zeros() as usize
}

/// `Σ t_i Π_{j<i} T_j`; the empty digit sequence has value `0`.
pub fn mixed_radix_value(t: &[BigRational], bases: &[BigRational]) -> BigRational {
    assert!(t.len() <= bases.len(), "more digits than bases");
    let mut acc = BigRational::zero();
    let mut weight = BigRational::one();
    for (d, b) in t.iter().zip(bases) {
        acc += d * &weight;
        weight *= b;
    }
    acc
}

/// `Σ t_i Π_{j≤i} T_j`; the adic value with inclusive product range.
pub fn adic_value(t: &[BigRational], bases: &[BigRational]) -> BigRational {
    assert!(t.len() <= bases.len(), "more digits than bases");
    let mut acc = BigRational::zero();
    let mut weight = BigRational::one();
    for (d, b) in t.iter().zip(bases) {
        weight *= b;
        acc += d * &weight;
    }
    acc
}

/// Integer form of [`mixed_radix_value`].
pub fn mixed_radix_value_int(t: &[i128], bases: &[i128]) -> Option<i128> {
    assert!(t.len() <= bases.len(), "more digits than bases");
    let mut acc: i128 = 0;
    let mut weight: i128 = 1;
    for (i, d) in t.iter().enumerate() {
        acc = acc.checked_add(d.checked_mul(weight)?)?;
        if i + 1 < t.len() {
            weight = weight.checked_mul(bases[i])?;
        }
    }
    Some(acc)
}

const DOUBLE: [[u8; 3]; 5] = [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1], [1, 0, 0]];

/// Appends `2·double(w)` to `out`.
pub fn chi_push_field(out: &mut Word, w: &[u8]) {
    out.reserve(1 + 3 * w.len());
    out.push(SEP);
    for &s in w {
        out.extend_from_slice(&DOUBLE[s as usize]);
    }
}

/// The `Chi` code of a tuple: concatenation of `2·double(field)`.
pub fn chi_encode(u: &[Word]) -> Word {
    let mut out = Word::with_capacity(u.iter().map(|w| 1 + 3 * w.len()).sum());
    for w in u {
        chi_push_field(&mut out, w);
    }
    out
}

/// Length of `Chi(u)` for `u` of lengths `k`.
pub fn chi_len(k: &[usize]) -> usize {
    3 * k.iter().sum::<usize>() + k.len()
}

fn triplet(w: &[u8], pos: usize) -> Result<u8, EncodingError> {
    if pos + 3 > w.len() {
        return Err(EncodingError::Truncated { pos });
    }
    match (w[pos], w[pos + 1], w[pos + 2]) {
        (0, b, c) if b <= 1 && c <= 1 => Ok(2 * b + c),
        (1, 0, 0) => Ok(4),
        _ => Err(EncodingError::MalformedTriplet { pos }),
    }
}

/// Exact left inverse of [`chi_encode`].
pub fn chi_decode(w: &[u8]) -> Result<Letter, EncodingError> {
    let mut fields = Letter::new();
    let mut pos = 0;
    while pos < w.len() {
        if w[pos] != SEP {
            return Err(EncodingError::MissingSeparator { pos });
        }
        pos += 1;
        let mut field = Word::new();
        while pos < w.len() && w[pos] != SEP {
            field.push(triplet(w, pos)?);
            pos += 3;
        }
        fields.push(field);
    }
    Ok(fields)
}

/// Decodes `w` and requires the field lengths to equal `k`.
pub fn chi_decode_layout(w: &[u8], k: &[usize]) -> Result<Letter, EncodingError> {
    let u = chi_decode(w)?;
    if u.len() != k.len() || u.iter().zip(k).any(|(f, &l)| f.len() != l) {
        return Err(EncodingError::LayoutMismatch { expected: k.to_vec() });
    }
    Ok(u)
}

/// `l_{k,i} = 3·Σ_{j<i} k_j + i`, the offset of field `i` inside `Chi(u)`.
pub fn field_offset(k: &[usize], i: usize) -> Result<usize, EncodingError> {
    if i > k.len() {
        return Err(EncodingError::FieldIndex { index: i, count: k.len() });
    }
    Ok(3 * k[..i].iter().sum::<usize>() + i)
}

/// `sh[l]u = 4^{l-|u|} u`.
pub fn sharp_pad(l: usize, u: &[u8]) -> Result<Word, EncodingError> {
    if u.len() > l {
        return Err(EncodingError::PadOverflow { len: u.len(), room: l });
    }
    let mut out = vec![PAD; l - u.len()];
    out.extend_from_slice(u);
    Ok(out)
}

/// Removes the maximal prefix of `4`s; fails if a `4` follows data.
pub fn sharp_strip(w: &[u8]) -> Result<&[u8], EncodingError> {
    let start = w.iter().position(|&s| s != PAD).unwrap_or(w.len());
    let rest = &w[start..];
    if let Some(off) = rest.iter().position(|&s| s == PAD) {
        return Err(EncodingError::PadAfterData { pos: start + off });
    }
    if let Some(off) = rest.iter().position(|&s| s > PAD) {
        return Err(EncodingError::BadSymbol { pos: start + off, symbol: rest[off] });
    }
    Ok(rest)
}

/// Lifts a field-count-preserving partial map to padded tuples:
/// `sh α(w) = sh[|w|](α(hs w))` fieldwise.
pub fn lift_length_preserving<F>(alpha: F) -> impl Fn(&[Word]) -> Option<Letter>
where
    F: Fn(&[Word]) -> Option<Letter>,
{
    move |w: &[Word]| {
        let stripped: Letter = w.iter().map(|f| sharp_strip(f).map(<[u8]>::to_vec)).collect::<Result<_, _>>().ok()?;
        let image = alpha(&stripped)?;
        if image.len() != w.len() {
            return None;
        }
        image.iter().zip(w).map(|(v, f)| sharp_pad(f.len(), v).ok()).collect()
    }
}

/// Parses a digit string such as `"4012"`.
pub fn parse_word(s: &str) -> Result<Word, EncodingError> {
    s.bytes()
        .enumerate()
        .map(|(pos, b)| match b {
            b'0'..=b'4' => Ok(b - b'0'),
            _ => Err(EncodingError::BadSymbol { pos, symbol: b }),
        })
        .collect()
}

/// Canonical digit-string form of a word.
pub fn format_word(w: &[u8]) -> String {
    w.iter().map(|&s| char::from(b'0' + s)).collect()
}

/// Parses digit strings joined by `|`. The empty string is one empty field.
pub fn parse_letter(s: &str) -> Result<Letter, EncodingError> {
    s.split('|').map(parse_word).collect()
}

/// Canonical form of a letter: digit strings joined by `|`.
pub fn format_letter(u: &[Word]) -> String {
    u.iter().map(|w| format_word(w)).collect::<Vec<_>>().join("|")
}

/// Enumerates every letter of `5^k` in lexicographic order.
pub fn enumerate_alphabet(k: &[usize]) -> Vec<Letter> {
    let total: usize = k.iter().sum();
    let count = 5usize.pow(total as u32);
    (0..count)
        .map(|mut idx| {
            let mut flat = vec![0u8; total];
            for s in flat.iter_mut().rev() {
                *s = (idx % 5) as u8;
                idx /= 5;
            }
            let mut out = Letter::with_capacity(k.len());
            let mut pos = 0;
            for &len in k {
                out.push(flat[pos..pos + len].to_vec());
                pos += len;
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn bin_examples() {
        assert_eq!(bin_encode(0), Word::new());
        assert_eq!(bin_encode(1), vec![1]);
        assert_eq!(bin_encode(6), vec![1, 1, 0]);
        assert_eq!(bin_decode(&[0, 0, 1, 1]), Ok(3));
        assert_eq!(bin_decode(&[]), Ok(0));
        assert_eq!(bin_decode(&[1]), Ok(1));
        assert!(bin_decode(&[1, 2]).is_err());
    }

    #[test]
    fn bin_round_trip_to_1e5() {
        for n in 0..100_000u128 {
            let w = bin_encode(n);
            assert_eq!(bin_decode(&w), Ok(n));
            if n >= 1 {
                assert_eq!(w.len(), (n as f64).log2().floor() as usize + 1);
                assert_eq!(w[0], 1);
            }
            assert_eq!(w.len(), bin_len(n));
        }
    }

    #[test]
    fn bin_big_matches_small() {
        for n in [0u128, 1, 2, 255, 1 << 70] {
            assert_eq!(bin_encode_big(&num_bigint::BigUint::from(n)), bin_encode(n));
        }
    }

    #[test]
    fn mixed_radix_examples() {
        assert_eq!(mixed_radix_value(&[], &[r(2), r(3)]), r(0));
        assert_eq!(mixed_radix_value(&[r(1), r(1)], &[r(2), r(3)]), r(3));
        assert_eq!(mixed_radix_value(&[r(1)], &[r(17)]), r(1));
        assert_eq!(mixed_radix_value_int(&[1, 1], &[2, 3]), Some(3));
        assert_eq!(adic_value(&[r(1), r(1)], &[r(2), r(3)]), r(8));
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi_encode(&[vec![]]), vec![2]);
        assert_eq!(chi_encode(&[vec![0]]), vec![2, 0, 0, 0]);
        assert_eq!(chi_encode(&[vec![1], vec![2]]), parse_word("20012010").unwrap());
        assert_eq!(chi_decode(&[2, 0, 0, 0]), Ok(vec![vec![0]]));
        assert!(matches!(chi_decode(&[2, 1, 1, 1]), Err(EncodingError::MalformedTriplet { .. })));
        assert_eq!(chi_decode(&[]), Ok(Letter::new()));
        assert!(chi_decode(&[0, 0, 0]).is_err());
        assert!(chi_decode(&[2, 0, 0]).is_err());
    }

    #[test]
    fn field_offset_examples() {
        assert_eq!(field_offset(&[1, 2], 0), Ok(0));
        assert_eq!(field_offset(&[1, 2], 1), Ok(4));
        assert_eq!(field_offset(&[1, 2], 2), Ok(11));
        assert!(field_offset(&[1, 2], 3).is_err());
    }

    #[test]
    fn sharp_examples() {
        assert_eq!(sharp_pad(3, &[0, 1]), Ok(vec![4, 0, 1]));
        assert_eq!(sharp_pad(2, &[]), Ok(vec![4, 4]));
        assert!(sharp_pad(1, &[0, 1]).is_err());
        assert_eq!(sharp_strip(&[4, 4, 0, 1]), Ok(&[0u8, 1][..]));
        assert_eq!(sharp_strip(&[4, 4]), Ok(&[][..]));
        assert!(sharp_strip(&[0, 4, 1]).is_err());
        let n = 13u128;
        assert_eq!(sharp_pad(bin_len(n), &bin_encode(n)), Ok(bin_encode(n)));
    }

    #[test]
    fn lift_examples() {
        let id = lift_length_preserving(|u: &[Word]| Some(u.to_vec()));
        let w = vec![vec![4, 0], vec![4, 4, 3]];
        assert_eq!(id(&w), Some(w.clone()));

        let swap = lift_length_preserving(|u: &[Word]| Some(vec![u[1].clone(), u[0].clone()]));
        assert_eq!(swap(&[vec![4, 0], vec![4, 1]]), Some(vec![vec![4, 1], vec![4, 0]]));

        let grow = lift_length_preserving(|u: &[Word]| (u[0] == [0]).then(|| vec![vec![1, 1]]));
        assert_eq!(grow(&[vec![4, 0]]), Some(vec![vec![1, 1]]));
        assert_eq!(grow(&[vec![0]]), None);
    }

    #[test]
    fn layout_slices_match_exhaustively() {
        for k in small_vectors(6) {
            for u in enumerate_alphabet(&k) {
                let w = chi_encode(&u);
                assert_eq!(w.len(), field_offset(&k, k.len()).unwrap());
                assert_eq!(w.len(), chi_len(&k));
                for i in 0..k.len() {
                    let a = field_offset(&k, i).unwrap();
                    let b = field_offset(&k, i + 1).unwrap();
                    let mut expect = Word::new();
                    chi_push_field(&mut expect, &u[i]);
                    assert_eq!(&w[a..b], &expect[..]);
                }
                assert_eq!(chi_decode_layout(&w, &k).unwrap(), u);
            }
        }
    }

    #[test]
    fn chi_injective_exhaustively() {
        for k in small_vectors(4) {
            let images: HashSet<Word> = enumerate_alphabet(&k).iter().map(|u| chi_encode(u)).collect();
            assert_eq!(images.len(), 5usize.pow(k.iter().sum::<usize>() as u32));
        }
    }

    #[test]
    fn lift_preserves_injectivity_exhaustively() {
        let k = vec![1, 2];
        let alphabet: Vec<Letter> =
            enumerate_alphabet(&k).into_iter().filter(|u| u.iter().all(|f| sharp_strip(f).is_ok())).collect();
        assert!(alphabet.len() <= 200);
        let alpha = |u: &[Word]| -> Option<Letter> {
            let mut rev = u[1].clone();
            rev.reverse();
            Some(vec![rev, u[0].clone()])
        };
        let lifted = lift_length_preserving(alpha);
        let mut seen = HashSet::new();
        for u in &alphabet {
            if let Some(v) = lifted(u) {
                assert!(seen.insert(v), "collision on {u:?}");
            }
        }
    }

    fn small_vectors(max_total: usize) -> Vec<LengthVector> {
        let mut out = vec![vec![]];
        let mut frontier = vec![vec![]];
        while let Some(k) = frontier.pop() {
            for next in 0..=max_total {
                let mut k2: LengthVector = k.clone();
                k2.push(next);
                if k2.iter().sum::<usize>() <= max_total && k2.len() <= 3 {
                    out.push(k2.clone());
                    frontier.push(k2);
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn chi_round_trip(u in prop::collection::vec(prop::collection::vec(0u8..5, 0..5), 0..5)) {
            prop_assert_eq!(chi_decode(&chi_encode(&u)).unwrap(), u);
        }

        #[test]
        fn sharp_round_trip(u in prop::collection::vec(0u8..4, 0..8), extra in 0usize..5) {
            let padded = sharp_pad(u.len() + extra, &u).unwrap();
            prop_assert_eq!(sharp_strip(&padded).unwrap(), &u[..]);
        }

        #[test]
        fn letter_text_round_trip(u in prop::collection::vec(prop::collection::vec(0u8..5, 0..5), 1..5)) {
            prop_assert_eq!(parse_letter(&format_letter(&u)).unwrap(), u);
        }
    }
}
