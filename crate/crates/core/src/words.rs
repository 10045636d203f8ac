//! Base-`b` words and the word/interval correspondence.
//!
//! Words index the nodes of the `b`-ary tree; the word `w` of length `j`
//! also indexes the closed b-adic interval
//! `[sum w_k b^{-k}, sum w_k b^{-k} + b^{-j}]`. Interval endpoints are kept
//! as exact integers over the denominator `b^j`, so partition and adjacency
//! facts are bit-exact and never hide behind a float tolerance.

use std::fmt;

use crate::error::{Error, Result};

/// Hard cap on the number of nodes any enumeration may materialize.
pub const MAX_TREE_NODES: usize = 1 << 24;

/// A finite word over the alphabet `{0, ..., b-1}`. The empty word is valid.
///
/// Bases are restricted to `2..=10` so that a word always serializes as a
/// plain digit string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    base: u32,
    digits: Vec<u8>,
}

impl Word {
    pub fn empty(base: u32) -> Result<Word> {
        check_base(base)?;
        Ok(Word {
            base,
            digits: Vec::new(),
        })
    }

    pub fn new(base: u32, digits: Vec<u8>) -> Result<Word> {
        check_base(base)?;
        if let Some(&d) = digits.iter().find(|&&d| d as u32 >= base) {
            return Err(Error::input(format!(
                "digit {d} out of range for base {base}"
            )));
        }
        Ok(Word { base, digits })
    }

    /// Parse a digit string; the empty string is the empty word.
    pub fn parse(base: u32, s: &str) -> Result<Word> {
        check_base(base)?;
        let mut digits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let d = ch
                .to_digit(10)
                .ok_or_else(|| Error::input(format!("invalid digit character {ch:?}")))?;
            if d >= base {
                return Err(Error::input(format!("digit {d} out of range for base {base}")));
            }
            digits.push(d as u8);
        }
        Ok(Word { base, digits })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// The prefix of length `k` (`k <= len`); `prefix(0)` is the empty word.
    pub fn prefix(&self, k: usize) -> Word {
        assert!(k <= self.len(), "prefix length {k} exceeds word length");
        Word {
            base: self.base,
            digits: self.digits[..k].to_vec(),
        }
    }

    pub fn child(&self, d: u8) -> Result<Word> {
        if d as u32 >= self.base {
            return Err(Error::input(format!(
                "digit {d} out of range for base {}",
                self.base
            )));
        }
        let mut digits = self.digits.clone();
        digits.push(d);
        Ok(Word {
            base: self.base,
            digits,
        })
    }

    /// Longest common prefix. Words of unequal length are compared after
    /// truncating to the shorter length.
    pub fn meet(&self, other: &Word) -> Result<Word> {
        if self.base != other.base {
            return Err(Error::input(format!(
                "base mismatch: {} vs {}",
                self.base, other.base
            )));
        }
        let k = self
            .digits
            .iter()
            .zip(other.digits.iter())
            .take_while(|(a, b)| a == b)
            .count();
        Ok(self.prefix(k))
    }

    /// Level-order index of the node: `id(eps) = 0`, `id(w d) = id(w)*b + d + 1`.
    /// Used to key deterministic random streams to tree nodes.
    pub(crate) fn node_id(&self) -> u64 {
        node_id_of(self.base, &self.digits)
    }

    /// The closed b-adic interval indexed by this word.
    pub fn interval(&self) -> BAdicInterval {
        let mut index: u128 = 0;
        for &d in &self.digits {
            index = index
                .checked_mul(self.base as u128)
                .and_then(|x| x.checked_add(d as u128))
                .expect("word too long for exact interval arithmetic");
        }
        BAdicInterval {
            base: self.base,
            level: self.len() as u32,
            index,
        }
    }

    pub(crate) fn push_digit(&mut self, d: u8) {
        debug_assert!((d as u32) < self.base);
        self.digits.push(d);
    }

    pub(crate) fn pop_digit(&mut self) {
        self.digits.pop();
    }
}

pub(crate) fn node_id_of(base: u32, digits: &[u8]) -> u64 {
    let mut id: u64 = 0;
    for &d in digits {
        id = id
            .checked_mul(base as u64)
            .and_then(|x| x.checked_add(d as u64 + 1))
            .expect("word too deep for node indexing");
    }
    id
}

/// Largest depth whose node ids stay within u64 for this base.
pub(crate) fn node_id_depth_limit(base: u32) -> u32 {
    let mut depth = 0u32;
    let mut id: u64 = 0;
    loop {
        match id
            .checked_mul(base as u64)
            .and_then(|x| x.checked_add(base as u64))
        {
            Some(next) => {
                id = next;
                depth += 1;
            }
            None => return depth - 1,
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// The closed interval `[index/b^level, (index+1)/b^level]`, exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BAdicInterval {
    base: u32,
    level: u32,
    index: u128,
}

impl BAdicInterval {
    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Numerator of the left endpoint over `b^level`.
    pub fn index(&self) -> u128 {
        self.index
    }

    /// `b^level`, the exact common denominator of both endpoints.
    pub fn denominator(&self) -> u128 {
        (self.base as u128)
            .checked_pow(self.level)
            .expect("interval level too deep for exact arithmetic")
    }

    pub fn lo_f64(&self) -> f64 {
        self.index as f64 / self.denominator() as f64
    }

    pub fn hi_f64(&self) -> f64 {
        (self.index + 1) as f64 / self.denominator() as f64
    }

    pub fn width_f64(&self) -> f64 {
        1.0 / self.denominator() as f64
    }

    /// Exact containment test (works across levels).
    pub fn contains(&self, other: &BAdicInterval) -> bool {
        assert_eq!(self.base, other.base, "base mismatch");
        // lo_self <= lo_other  and  hi_other <= hi_self, cross-multiplied
        let (ds, doo) = (self.denominator(), other.denominator());
        self.index * doo <= other.index * ds && (other.index + 1) * ds <= (self.index + 1) * doo
    }

    /// For two same-level intervals: do they overlap in at most one point?
    pub fn overlaps_at_most_point(&self, other: &BAdicInterval) -> bool {
        assert_eq!(self.base, other.base, "base mismatch");
        assert_eq!(self.level, other.level, "level mismatch");
        self.index != other.index
    }
}

/// All words of length `n` over base `b`, in lexicographic order.
/// Consecutive words index adjacent intervals.
pub fn level(b: u32, n: u32) -> Result<Vec<Word>> {
    check_base(b)?;
    let count = checked_tree_width(b, n)?;
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0u8; n as usize];
    loop {
        out.push(Word {
            base: b,
            digits: digits.clone(),
        });
        // odometer increment
        let mut pos = n as usize;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if (digits[pos] as u32) + 1 < b {
                digits[pos] += 1;
                for x in digits[pos + 1..].iter_mut() {
                    *x = 0;
                }
                break;
            }
        }
    }
}

/// `b^n` as usize, refused above [`MAX_TREE_NODES`].
pub fn checked_tree_width(b: u32, n: u32) -> Result<usize> {
    let mut count: usize = 1;
    for _ in 0..n {
        count = count
            .checked_mul(b as usize)
            .filter(|&c| c <= MAX_TREE_NODES)
            .ok_or_else(|| {
                Error::resource(format!(
                    "{b}^{n} exceeds the node cap of {MAX_TREE_NODES}"
                ))
            })?;
    }
    Ok(count)
}

pub(crate) fn check_base(base: u32) -> Result<()> {
    if !(2..=10).contains(&base) {
        return Err(Error::input(format!(
            "base must be in 2..=10 (digit-string serialization), got {base}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(base: u32, s: &str) -> Word {
        Word::parse(base, s).unwrap()
    }

    #[test]
    fn meet_examples() {
        assert_eq!(w(3, "012").meet(&w(3, "010")).unwrap(), w(3, "01"));
        let v = w(3, "0211");
        assert_eq!(v.meet(&v).unwrap(), v);
        assert_eq!(w(2, "10").meet(&w(2, "01")).unwrap(), w(2, ""));
        // unequal lengths truncate to the shorter
        assert_eq!(w(3, "012").meet(&w(3, "01")).unwrap(), w(3, "01"));
        assert_eq!(w(3, "01").meet(&w(3, "022")).unwrap(), w(3, "0"));
    }

    #[test]
    fn meet_base_mismatch() {
        assert!(matches!(
            w(3, "01").meet(&w(2, "01")),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn interval_examples() {
        let eps = w(3, "").interval();
        assert_eq!((eps.index(), eps.denominator()), (0, 1));
        assert_eq!(eps.lo_f64(), 0.0);
        assert_eq!(eps.hi_f64(), 1.0);

        let one = w(3, "1").interval();
        assert_eq!((one.index(), one.denominator()), (1, 3));

        // 2/3 + 1/9 = 7/9
        let i = w(3, "21").interval();
        assert_eq!((i.index(), i.denominator()), (7, 9));
        assert_eq!(i.hi_f64(), 8.0 / 9.0);
    }

    #[test]
    fn level_examples() {
        let l0 = level(2, 0).unwrap();
        assert_eq!(l0, vec![w(2, "")]);
        let l2 = level(2, 2).unwrap();
        assert_eq!(l2, vec![w(2, "00"), w(2, "01"), w(2, "10"), w(2, "11")]);
        let l3 = level(3, 2).unwrap();
        assert_eq!(l3.len(), 9);
        assert_eq!(l3[0], w(3, "00"));
        assert_eq!(l3[8], w(3, "22"));
    }

    #[test]
    fn level_cap_refused() {
        assert!(matches!(level(2, 25), Err(Error::Resource(_))));
        assert!(level(2, 10).is_ok());
    }

    #[test]
    fn bad_base_and_digits() {
        assert!(Word::parse(1, "").is_err());
        assert!(Word::parse(11, "").is_err());
        assert!(Word::parse(3, "03").is_err());
        assert!(Word::new(3, vec![0, 3]).is_err());
        assert!(w(3, "01").child(3).is_err());
    }

    #[test]
    fn display_roundtrip_and_empty_word() {
        let word = w(3, "0212");
        assert_eq!(word.to_string(), "0212");
        assert_eq!(Word::parse(3, &word.to_string()).unwrap(), word);
        assert_eq!(w(3, "").to_string(), "");
        assert!(w(3, "").is_empty());
    }

    #[test]
    fn node_ids_are_level_order() {
        assert_eq!(w(2, "").node_id(), 0);
        assert_eq!(w(2, "0").node_id(), 1);
        assert_eq!(w(2, "1").node_id(), 2);
        assert_eq!(w(2, "00").node_id(), 3);
        assert_eq!(w(2, "11").node_id(), 6);
        assert!(node_id_depth_limit(2) >= 60);
        assert!(node_id_depth_limit(3) >= 38);
    }

    proptest! {
        #[test]
        fn meet_is_symmetric_and_idempotent(
            a in proptest::collection::vec(0u8..3, 0..12),
            b in proptest::collection::vec(0u8..3, 0..12),
        ) {
            let va = Word::new(3, a).unwrap();
            let vb = Word::new(3, b).unwrap();
            let m1 = va.meet(&vb).unwrap();
            let m2 = vb.meet(&va).unwrap();
            prop_assert_eq!(&m1, &m2);
            prop_assert_eq!(va.meet(&va).unwrap(), va.clone());
            // |meet| = max {k : prefix(a,k) == prefix(b,k)}
            let maxk = (0..=m1.len()).rev()
                .find(|&k| k <= vb.len() && va.prefix(k) == vb.prefix(k))
                .unwrap();
            prop_assert_eq!(m1.len(), maxk);
            // meet is a prefix of both
            prop_assert_eq!(va.prefix(m1.len()), m1.clone());
            prop_assert_eq!(vb.prefix(m1.len()), m1);
        }

        #[test]
        fn intervals_partition_unit_interval(b in 2u32..=4, n in 0u32..=6) {
            let words = level(b, n).unwrap();
            let den = (b as u128).pow(n);
            // lexicographic enumeration indexes 0..b^n in order: exact cover
            for (k, word) in words.iter().enumerate() {
                let iv = word.interval();
                prop_assert_eq!(iv.index(), k as u128);
                prop_assert_eq!(iv.denominator(), den);
            }
            // same-level intervals overlap in at most one point
            for pair in words.windows(2) {
                prop_assert!(pair[0].interval().overlaps_at_most_point(&pair[1].interval()));
            }
        }

        #[test]
        fn prefix_interval_nests(digits in proptest::collection::vec(0u8..3, 0..14)) {
            let word = Word::new(3, digits).unwrap();
            let iv = word.interval();
            for k in 0..=word.len() {
                prop_assert!(word.prefix(k).interval().contains(&iv));
            }
        }
    }
}
