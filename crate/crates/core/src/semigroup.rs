//! Right LCM semigroups: the free monoid on `k` letters and the free abelian
//! monoid `N^m`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element of a semigroup. For the free monoid this is a word whose letters
/// run from 1 to the rank; for `N^m` it is a vector of `m` exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Element(pub Vec<u32>);

impl Element {
    pub fn new(v: impl Into<Vec<u32>>) -> Self {
        Element(v.into())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl From<Vec<u32>> for Element {
    fn from(v: Vec<u32>) -> Self {
        Element(v)
    }
}

/// Operations a right LCM semigroup must provide. Generators are indexed
/// from 0; every element factors as a product of generators.
pub trait RightLcmSemigroup {
    fn rank(&self) -> usize;
    fn identity(&self) -> Element;
    fn generator(&self, i: usize) -> Element;
    fn contains(&self, p: &Element) -> bool;
    fn multiply(&self, p: &Element, q: &Element) -> Result<Element>;
    /// Least common upper bound for the prefix order, or `None` when `pS ∩ qS` is empty.
    fn lcm(&self, p: &Element, q: &Element) -> Result<Option<Element>>;
    /// The unique `s` with `p s = r`, if any.
    fn left_divide(&self, p: &Element, r: &Element) -> Result<Option<Element>>;
    fn length(&self, p: &Element) -> usize;
    /// Generator indices whose product, left to right, is `p`.
    fn factorize(&self, p: &Element) -> Result<Vec<usize>>;
    /// All elements of length at most `depth`, shortest first, then lexicographic.
    fn enumerate_up_to(&self, depth: usize, cap: usize) -> Result<Vec<Element>>;
    /// Whether every element is comparable with some member of `f`.
    fn is_foundation_set(&self, f: &[Element], cap: usize) -> Result<bool>;

    fn generators(&self) -> Vec<Element> {
        (0..self.rank()).map(|i| self.generator(i)).collect()
    }

    fn is_identity(&self, p: &Element) -> bool {
        *p == self.identity()
    }

    /// lcm of a family, `None` if some pair has no common upper bound.
    /// The lcm of the empty family is the identity.
    fn lcm_all<'a, I>(&self, items: I) -> Result<Option<Element>>
    where
        I: IntoIterator<Item = &'a Element>,
        Self: Sized,
    {
        let mut acc = self.identity();
        for p in items {
            match self.lcm(&acc, p)? {
                Some(r) => acc = r,
                None => return Ok(None),
            }
        }
        Ok(Some(acc))
    }

    fn check(&self, p: &Element) -> Result<()>
    where
        Self: fmt::Display,
    {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::NotAnElement {
                element: p.to_string(),
                semigroup: self.to_string(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemigroupKind {
    FreeMonoid,
    FreeAbelian,
}

/// The two concrete semigroups, `FreeMonoid(k)` and `FreeAbelian(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Semigroup {
    pub kind: SemigroupKind,
    pub rank: usize,
}

/// Default cap on enumerated elements.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

impl Semigroup {
    pub fn free_monoid(k: usize) -> Result<Self> {
        Self::new(SemigroupKind::FreeMonoid, k)
    }

    pub fn free_abelian(m: usize) -> Result<Self> {
        Self::new(SemigroupKind::FreeAbelian, m)
    }

    pub fn new(kind: SemigroupKind, rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::ZeroRank);
        }
        Ok(Semigroup { kind, rank })
    }

    pub fn is_abelian(&self) -> bool {
        self.kind == SemigroupKind::FreeAbelian
    }

    /// Number of elements of length at most `depth`.
    pub fn count_up_to(&self, depth: usize) -> u128 {
        let r = self.rank as u128;
        let d = depth as u32;
        match self.kind {
            SemigroupKind::FreeMonoid if r == 1 => depth as u128 + 1,
            SemigroupKind::FreeMonoid => {
                (0..=d).fold(0u128, |acc, i| acc.saturating_add(r.saturating_pow(i)))
            }
            SemigroupKind::FreeAbelian => (depth as u128 + 1).saturating_pow(self.rank as u32),
        }
    }

    /// Graded lexicographic comparison used by `enumerate_up_to`.
    pub fn graded_cmp(&self, p: &Element, q: &Element) -> Ordering {
        self.length(p)
            .cmp(&self.length(q))
            .then_with(|| p.0.cmp(&q.0))
    }

    fn word_length_cap(&self, count: u128, cap: usize) -> Result<()> {
        if count > cap as u128 {
            Err(Error::EnumerationCap { count, cap })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Semigroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SemigroupKind::FreeMonoid => write!(f, "FreeMonoid({})", self.rank),
            SemigroupKind::FreeAbelian => write!(f, "FreeAbelian({})", self.rank),
        }
    }
}

fn is_prefix(p: &[u32], q: &[u32]) -> bool {
    p.len() <= q.len() && q[..p.len()] == *p
}

impl RightLcmSemigroup for Semigroup {
    fn rank(&self) -> usize {
        self.rank
    }

    fn identity(&self) -> Element {
        match self.kind {
            SemigroupKind::FreeMonoid => Element(Vec::new()),
            SemigroupKind::FreeAbelian => Element(vec![0; self.rank]),
        }
    }

    fn generator(&self, i: usize) -> Element {
        assert!(i < self.rank, "generator index {i} out of range");
        match self.kind {
            SemigroupKind::FreeMonoid => Element(vec![i as u32 + 1]),
            SemigroupKind::FreeAbelian => {
                let mut v = vec![0; self.rank];
                v[i] = 1;
                Element(v)
            }
        }
    }

    fn contains(&self, p: &Element) -> bool {
        match self.kind {
            SemigroupKind::FreeMonoid => p.0.iter().all(|&l| l >= 1 && l as usize <= self.rank),
            SemigroupKind::FreeAbelian => p.0.len() == self.rank,
        }
    }

    fn multiply(&self, p: &Element, q: &Element) -> Result<Element> {
        self.check(p)?;
        self.check(q)?;
        Ok(match self.kind {
            SemigroupKind::FreeMonoid => {
                let mut w = p.0.clone();
                w.extend_from_slice(&q.0);
                Element(w)
            }
            SemigroupKind::FreeAbelian => {
                Element(p.0.iter().zip(&q.0).map(|(a, b)| a + b).collect())
            }
        })
    }

    fn lcm(&self, p: &Element, q: &Element) -> Result<Option<Element>> {
        self.check(p)?;
        self.check(q)?;
        Ok(match self.kind {
            SemigroupKind::FreeMonoid => {
                if is_prefix(&p.0, &q.0) {
                    Some(q.clone())
                } else if is_prefix(&q.0, &p.0) {
                    Some(p.clone())
                } else {
                    None
                }
            }
            SemigroupKind::FreeAbelian => Some(Element(
                p.0.iter().zip(&q.0).map(|(a, b)| *a.max(b)).collect(),
            )),
        })
    }

    fn left_divide(&self, p: &Element, r: &Element) -> Result<Option<Element>> {
        self.check(p)?;
        self.check(r)?;
        Ok(match self.kind {
            SemigroupKind::FreeMonoid => {
                is_prefix(&p.0, &r.0).then(|| Element(r.0[p.0.len()..].to_vec()))
            }
            SemigroupKind::FreeAbelian => {
                let ok = p.0.iter().zip(&r.0).all(|(a, b)| a <= b);
                ok.then(|| Element(r.0.iter().zip(&p.0).map(|(b, a)| b - a).collect()))
            }
        })
    }

    fn length(&self, p: &Element) -> usize {
        match self.kind {
            SemigroupKind::FreeMonoid => p.0.len(),
            SemigroupKind::FreeAbelian => p.0.iter().copied().max().unwrap_or(0) as usize,
        }
    }

    fn factorize(&self, p: &Element) -> Result<Vec<usize>> {
        self.check(p)?;
        Ok(match self.kind {
            SemigroupKind::FreeMonoid => p.0.iter().map(|&l| l as usize - 1).collect(),
            SemigroupKind::FreeAbelian => {
                p.0.iter()
                    .enumerate()
                    .flat_map(|(i, &n)| std::iter::repeat_n(i, n as usize))
                    .collect()
            }
        })
    }

    fn enumerate_up_to(&self, depth: usize, cap: usize) -> Result<Vec<Element>> {
        self.word_length_cap(self.count_up_to(depth), cap)?;
        let mut out = Vec::new();
        match self.kind {
            SemigroupKind::FreeMonoid => {
                let mut layer = vec![Vec::<u32>::new()];
                out.push(Element(Vec::new()));
                for _ in 0..depth {
                    let mut next = Vec::with_capacity(layer.len() * self.rank);
                    for w in &layer {
                        for l in 1..=self.rank as u32 {
                            let mut v = w.clone();
                            v.push(l);
                            next.push(v);
                        }
                    }
                    out.extend(next.iter().cloned().map(Element));
                    layer = next;
                }
            }
            SemigroupKind::FreeAbelian => {
                let base = depth as u32 + 1;
                let total = (base as usize).pow(self.rank as u32);
                for mut idx in 0..total {
                    let mut v = vec![0u32; self.rank];
                    for slot in v.iter_mut().rev() {
                        *slot = (idx % base as usize) as u32;
                        idx /= base as usize;
                    }
                    out.push(Element(v));
                }
                out.sort_by(|a, b| self.graded_cmp(a, b));
            }
        }
        Ok(out)
    }

    fn is_foundation_set(&self, f: &[Element], cap: usize) -> Result<bool> {
        if f.is_empty() {
            return Err(Error::EmptyFoundationSet);
        }
        for p in f {
            self.check(p)?;
        }
        match self.kind {
            SemigroupKind::FreeAbelian => Ok(true),
            SemigroupKind::FreeMonoid => {
                // Every word is comparable with a member of F exactly when every
                // word of the maximal length L in F has a prefix in F.
                let l = f.iter().map(|p| p.0.len()).max().unwrap_or(0);
                self.word_length_cap((self.rank as u128).saturating_pow(l as u32), cap)?;
                let total = self.rank.pow(l as u32);
                for mut idx in 0..total {
                    let mut w = vec![0u32; l];
                    for slot in w.iter_mut().rev() {
                        *slot = (idx % self.rank) as u32 + 1;
                        idx /= self.rank;
                    }
                    if !f.iter().any(|p| is_prefix(&p.0, &w)) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u32]) -> Element {
        Element(v.to_vec())
    }

    #[test]
    fn free_monoid_lcm_of_incomparable_words_is_none() {
        let s = Semigroup::free_monoid(2).unwrap();
        assert_eq!(s.lcm(&w(&[1, 2]), &w(&[1, 1])).unwrap(), None);
        assert_eq!(s.lcm(&w(&[1]), &w(&[1, 2])).unwrap(), Some(w(&[1, 2])));
    }

    #[test]
    fn abelian_lcm_is_coordinate_max() {
        let s = Semigroup::free_abelian(2).unwrap();
        assert_eq!(s.lcm(&w(&[2, 0]), &w(&[1, 3])).unwrap(), Some(w(&[2, 3])));
    }

    #[test]
    fn enumeration_counts() {
        let s = Semigroup::free_monoid(2).unwrap();
        assert_eq!(s.enumerate_up_to(3, 100).unwrap().len(), 15);
        let a = Semigroup::free_abelian(2).unwrap();
        assert_eq!(a.enumerate_up_to(2, 100).unwrap().len(), 9);
        let one = Semigroup::free_monoid(1).unwrap();
        assert_eq!(one.enumerate_up_to(4, 100).unwrap().len(), 5);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let s = Semigroup::free_monoid(3).unwrap();
        assert!(matches!(
            s.enumerate_up_to(10, 1000),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn foundation_sets() {
        let s = Semigroup::free_monoid(2).unwrap();
        assert!(s.is_foundation_set(&[w(&[1]), w(&[2])], 100).unwrap());
        assert!(!s.is_foundation_set(&[w(&[1])], 100).unwrap());
        assert!(s
            .is_foundation_set(&[w(&[1]), w(&[2, 1]), w(&[2, 2])], 100)
            .unwrap());
        assert!(matches!(
            s.is_foundation_set(&[], 100),
            Err(Error::EmptyFoundationSet)
        ));
        let a = Semigroup::free_abelian(2).unwrap();
        assert!(a.is_foundation_set(&[w(&[3, 1])], 100).unwrap());
    }

    #[test]
    fn rejects_foreign_elements() {
        let s = Semigroup::free_monoid(2).unwrap();
        assert!(s.multiply(&w(&[3]), &w(&[1])).is_err());
        let a = Semigroup::free_abelian(2).unwrap();
        assert!(a.lcm(&w(&[1]), &w(&[1, 0])).is_err());
    }

    #[test]
    fn factorization_round_trips() {
        let a = Semigroup::free_abelian(3).unwrap();
        let p = w(&[2, 0, 1]);
        let mut acc = a.identity();
        for g in a.factorize(&p).unwrap() {
            acc = a.multiply(&acc, &a.generator(g)).unwrap();
        }
        assert_eq!(acc, p);
    }
}
