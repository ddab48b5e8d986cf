//! Bitset over contract indices.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{BitAnd, BitOr, Sub};

use crate::market::ContractId;

const WORD: usize = 64;

/// A set of primitive contracts, stored as a bitset over declared contract
/// indices.
///
/// Trailing zero words are always trimmed so that structural equality and
/// hashing coincide with set equality.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ContractSet {
    words: Vec<u64>,
}

impl ContractSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(c: ContractId) -> Self {
        let mut s = Self::new();
        s.insert(c);
        s
    }

    /// All contracts `0..n`.
    pub fn full(n: usize) -> Self {
        (0..n).map(ContractId).collect()
    }

    pub fn insert(&mut self, c: ContractId) -> bool {
        let (w, b) = (c.0 / WORD, c.0 % WORD);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, c: ContractId) -> bool {
        let (w, b) = (c.0 / WORD, c.0 % WORD);
        if w >= self.words.len() {
            return false;
        }
        let present = self.words[w] & (1 << b) != 0;
        self.words[w] &= !(1 << b);
        self.trim();
        present
    }

    pub fn contains(&self, c: ContractId) -> bool {
        let (w, b) = (c.0 / WORD, c.0 % WORD);
        self.words.get(w).is_some_and(|x| x & (1 << b) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, w)| w & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &Self) -> Self {
        let n = self.words.len().max(other.words.len());
        let words = (0..n)
            .map(|i| self.word(i) | other.word(i))
            .collect::<Vec<_>>();
        Self::from_words(words)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let n = self.words.len().min(other.words.len());
        Self::from_words((0..n).map(|i| self.words[i] & other.words[i]).collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self::from_words(
            (0..self.words.len())
                .map(|i| self.words[i] & !other.word(i))
                .collect(),
        )
    }

    /// Ascending iteration over members.
    pub fn iter(&self) -> impl Iterator<Item = ContractId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(ContractId(i * WORD + b))
            })
        })
    }

    /// Canonical order: by cardinality, then lexicographically by the
    /// ascending member list.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }

    fn word(&self, i: usize) -> u64 {
        self.words.get(i).copied().unwrap_or(0)
    }

    fn from_words(words: Vec<u64>) -> Self {
        let mut s = Self { words };
        s.trim();
        s
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

impl FromIterator<ContractId> for ContractSet {
    fn from_iter<I: IntoIterator<Item = ContractId>>(iter: I) -> Self {
        let mut s = Self::new();
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl<'a> FromIterator<&'a ContractSet> for ContractSet {
    /// Union of all sets.
    fn from_iter<I: IntoIterator<Item = &'a ContractSet>>(iter: I) -> Self {
        iter.into_iter().fold(Self::new(), |acc, s| acc.union(s))
    }
}

impl BitOr for &ContractSet {
    type Output = ContractSet;
    fn bitor(self, rhs: Self) -> ContractSet {
        self.union(rhs)
    }
}

impl BitAnd for &ContractSet {
    type Output = ContractSet;
    fn bitand(self, rhs: Self) -> ContractSet {
        self.intersection(rhs)
    }
}

impl Sub for &ContractSet {
    type Output = ContractSet;
    fn sub(self, rhs: Self) -> ContractSet {
        self.difference(rhs)
    }
}

impl fmt::Debug for ContractSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c.0)).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn set(ids: &[usize]) -> ContractSet {
        ids.iter().copied().map(ContractId).collect()
    }

    #[test]
    fn trimming_keeps_equality_structural() {
        let mut a = set(&[3, 130]);
        a.remove(ContractId(130));
        assert_eq!(a, set(&[3]));
        assert!(set(&[]).is_empty());
        assert_eq!(set(&[200]).difference(&set(&[200])), ContractSet::new());
    }

    #[test]
    fn canonical_order() {
        let mut sets = vec![set(&[0, 1]), set(&[2]), set(&[]), set(&[0, 2]), set(&[1])];
        sets.sort_by(|a, b| a.canonical_cmp(b));
        assert_eq!(
            sets,
            vec![set(&[]), set(&[1]), set(&[2]), set(&[0, 1]), set(&[0, 2])]
        );
    }

    proptest! {
        #[test]
        fn agrees_with_btreeset(
            a in proptest::collection::btree_set(0usize..200, 0..20),
            b in proptest::collection::btree_set(0usize..200, 0..20),
        ) {
            let (sa, sb) = (set(&a.iter().copied().collect::<Vec<_>>()), set(&b.iter().copied().collect::<Vec<_>>()));
            let to_vec = |s: &ContractSet| s.iter().map(|c| c.0).collect::<Vec<_>>();
            prop_assert_eq!(to_vec(&(&sa | &sb)), a.union(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(to_vec(&(&sa & &sb)), a.intersection(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(to_vec(&(&sa - &sb)), a.difference(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
            prop_assert_eq!(sa.is_disjoint(&sb), a.is_disjoint(&b));
            prop_assert_eq!(sa.len(), a.len());
            let inter: BTreeSet<_> = a.intersection(&b).copied().collect();
            prop_assert_eq!((&sa & &sb) == sa, inter == a);
        }
    }
}
