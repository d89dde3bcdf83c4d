//! Atom bookkeeping for the levelled commutative models.
//!
//! At depth `d` each model's commutative part is spanned by finitely many
//! disjoint projections ("atoms"). Refinement to depth `d + 1` splits atoms,
//! the generators shift them, and every atom is a signed sum of the range
//! projections `E_p`.

use serde::{Deserialize, Serialize};

use crate::semigroup::{Element, Semigroup, SemigroupKind};

/// Which commutative model the system is built on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// No commutative part: the base algebra alone, acted on by spatial maps.
    Flat,
    /// Truncated Toeplitz diagonal over `N^m`.
    ToeplitzAbelian,
    /// Truncated Toeplitz diagonal over the free monoid.
    ToeplitzFree,
    /// Cylinder sets of the one-sided full shift on `k` letters.
    BoundaryFree,
}

impl Model {
    pub fn fits(&self, s: &Semigroup) -> bool {
        match self {
            Model::Flat => true,
            Model::ToeplitzAbelian => s.kind == SemigroupKind::FreeAbelian,
            Model::ToeplitzFree | Model::BoundaryFree => s.kind == SemigroupKind::FreeMonoid,
        }
    }

    pub fn is_levelled(&self) -> bool {
        *self != Model::Flat
    }
}

/// A decoded atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    /// The only atom of the flat model.
    Unit,
    /// `δ_w = E_w − Σ_i E_{wi}`, for words shorter than the depth.
    Defect(Vec<u32>),
    /// `E_w` for a word of full depth (tail in the Toeplitz model,
    /// cylinder in the boundary model).
    Leaf(Vec<u32>),
    /// Product of one-coordinate atoms; a coordinate equal to the depth
    /// stands for the tail `{n ≥ d}`.
    Grid(Vec<u32>),
}

/// Model together with the semigroup rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub model: Model,
    pub rank: usize,
}

fn pow(k: usize, e: usize) -> usize {
    k.pow(e as u32)
}

/// Number of words of length < `l` over `k` letters.
fn words_below(k: usize, l: usize) -> usize {
    (0..l).map(|i| pow(k, i)).sum()
}

fn word_rank(k: usize, w: &[u32]) -> usize {
    w.iter().fold(0, |acc, &l| acc * k + (l as usize - 1))
}

fn word_unrank(k: usize, len: usize, mut r: usize) -> Vec<u32> {
    let mut w = vec![0u32; len];
    for slot in w.iter_mut().rev() {
        *slot = (r % k) as u32 + 1;
        r /= k;
    }
    w
}

fn grid_unrank(m: usize, d: usize, mut r: usize) -> Vec<u32> {
    let base = d + 1;
    let mut v = vec![0u32; m];
    for slot in v.iter_mut().rev() {
        *slot = (r % base) as u32;
        r /= base;
    }
    v
}

fn grid_rank(d: usize, v: &[u32]) -> usize {
    v.iter().fold(0, |acc, &n| acc * (d + 1) + n as usize)
}

fn is_prefix(p: &[u32], w: &[u32]) -> bool {
    p.len() <= w.len() && w[..p.len()] == *p
}

impl Shape {
    pub fn new(model: Model, rank: usize) -> Self {
        Shape { model, rank }
    }

    /// Depth at which `E_p` first appears as a sum of atoms.
    pub fn depth_of(&self, p: &Element) -> usize {
        match self.model {
            Model::Flat => 0,
            Model::ToeplitzAbelian => p.0.iter().copied().max().unwrap_or(0) as usize,
            Model::ToeplitzFree | Model::BoundaryFree => p.0.len(),
        }
    }

    pub fn atom_count(&self, d: usize) -> usize {
        let k = self.rank;
        match self.model {
            Model::Flat => 1,
            Model::ToeplitzAbelian => pow(d + 1, k),
            Model::ToeplitzFree => words_below(k, d) + pow(k, d),
            Model::BoundaryFree => pow(k, d),
        }
    }

    /// Normalised depth: the flat model only has depth 0.
    pub fn depth(&self, d: usize) -> usize {
        if self.model == Model::Flat {
            0
        } else {
            d
        }
    }

    pub fn decode(&self, d: usize, idx: usize) -> Atom {
        let k = self.rank;
        match self.model {
            Model::Flat => Atom::Unit,
            Model::ToeplitzAbelian => Atom::Grid(grid_unrank(k, d, idx)),
            Model::BoundaryFree => Atom::Leaf(word_unrank(k, d, idx)),
            Model::ToeplitzFree => {
                let inner = words_below(k, d);
                if idx >= inner {
                    return Atom::Leaf(word_unrank(k, d, idx - inner));
                }
                let mut l = 0;
                while idx >= words_below(k, l + 1) {
                    l += 1;
                }
                Atom::Defect(word_unrank(k, l, idx - words_below(k, l)))
            }
        }
    }

    pub fn encode(&self, d: usize, atom: &Atom) -> usize {
        let k = self.rank;
        match atom {
            Atom::Unit => 0,
            Atom::Grid(v) => grid_rank(d, v),
            Atom::Leaf(w) => match self.model {
                Model::ToeplitzFree => words_below(k, d) + word_rank(k, w),
                _ => word_rank(k, w),
            },
            Atom::Defect(w) => words_below(k, w.len()) + word_rank(k, w),
        }
    }

    pub fn describe(&self, d: usize, idx: usize) -> String {
        let word = |w: &[u32]| {
            if w.is_empty() {
                "e".to_string()
            } else {
                w.iter().map(u32::to_string).collect::<Vec<_>>().join("")
            }
        };
        match self.decode(d, idx) {
            Atom::Unit => "1".into(),
            Atom::Defect(w) => format!("δ_{}", word(&w)),
            Atom::Leaf(w) => format!("E_{}", word(&w)),
            Atom::Grid(v) => {
                let parts: Vec<String> = v
                    .iter()
                    .map(|&n| {
                        if n as usize == d {
                            format!("≥{n}")
                        } else {
                            n.to_string()
                        }
                    })
                    .collect();
                format!("[{}]", parts.join(","))
            }
        }
    }

    /// Atoms at depth `d + 1` that make up atom `idx` at depth `d`.
    pub fn children(&self, d: usize, idx: usize) -> Vec<usize> {
        match (self.model, self.decode(d, idx)) {
            (Model::Flat, _) => vec![0],
            (_, Atom::Defect(w)) => vec![self.encode(d + 1, &Atom::Defect(w))],
            (Model::ToeplitzFree, Atom::Leaf(w)) => {
                let mut out = vec![self.encode(d + 1, &Atom::Defect(w.clone()))];
                out.extend(self.extensions(d + 1, &w));
                out
            }
            (_, Atom::Leaf(w)) => self.extensions(d + 1, &w),
            (_, Atom::Grid(v)) => {
                let options: Vec<Vec<u32>> = v
                    .iter()
                    .map(|&n| {
                        if n as usize == d {
                            vec![n, n + 1]
                        } else {
                            vec![n]
                        }
                    })
                    .collect();
                grid_product(&options)
                    .into_iter()
                    .map(|g| grid_rank(d + 1, &g))
                    .collect()
            }
            (_, Atom::Unit) => vec![0],
        }
    }

    fn extensions(&self, d: usize, w: &[u32]) -> Vec<usize> {
        (1..=self.rank as u32)
            .map(|i| {
                let mut v = w.to_vec();
                v.push(i);
                self.encode(d, &Atom::Leaf(v))
            })
            .collect()
    }

    /// Depth of `α_p(x)` for `x` at depth `d`.
    pub fn shifted_depth(&self, d: usize, p: &Element) -> usize {
        match self.model {
            Model::Flat => 0,
            _ => d + self.depth_of(p),
        }
    }

    /// Atoms at the shifted depth covered by `α_p` of atom `idx` at depth `d`.
    pub fn shift(&self, d: usize, idx: usize, p: &Element) -> Vec<usize> {
        let nd = self.shifted_depth(d, p);
        match self.decode(d, idx) {
            Atom::Unit => vec![0],
            Atom::Defect(w) => vec![self.encode(nd, &Atom::Defect(concat(&p.0, &w)))],
            Atom::Leaf(w) => vec![self.encode(nd, &Atom::Leaf(concat(&p.0, &w)))],
            Atom::Grid(v) => {
                let options: Vec<Vec<u32>> = v
                    .iter()
                    .zip(&p.0)
                    .map(|(&n, &s)| {
                        if n as usize == d {
                            // tail {≥ d} moves to {≥ d + s}, refined up to depth nd
                            ((d as u32 + s)..=nd as u32).collect()
                        } else {
                            vec![n + s]
                        }
                    })
                    .collect();
                grid_product(&options)
                    .into_iter()
                    .map(|g| grid_rank(nd, &g))
                    .collect()
            }
        }
    }

    /// Depth of `α_{p^{-1}}(x)` for `x` at depth `d ≥ depth_of(p)`.
    pub fn unshifted_depth(&self, d: usize, p: &Element) -> usize {
        match self.model {
            Model::Flat => 0,
            Model::ToeplitzAbelian => d - p.0.iter().copied().min().unwrap_or(0) as usize,
            _ => d - p.0.len(),
        }
    }

    /// Atoms covered by `α_{p^{-1}}` of atom `idx` at depth `d`; empty when the
    /// atom lies outside `E_p`. Requires `d ≥ depth_of(p)`.
    pub fn unshift(&self, d: usize, idx: usize, p: &Element) -> Vec<usize> {
        let nd = self.unshifted_depth(d, p);
        match self.decode(d, idx) {
            Atom::Unit => vec![0],
            Atom::Defect(w) if is_prefix(&p.0, &w) => {
                vec![self.encode(nd, &Atom::Defect(w[p.0.len()..].to_vec()))]
            }
            Atom::Leaf(w) if is_prefix(&p.0, &w) => {
                vec![self.encode(nd, &Atom::Leaf(w[p.0.len()..].to_vec()))]
            }
            Atom::Defect(_) | Atom::Leaf(_) => Vec::new(),
            Atom::Grid(v) => {
                if v.iter().zip(&p.0).any(|(&n, &s)| n < s) {
                    return Vec::new();
                }
                let options: Vec<Vec<u32>> = v
                    .iter()
                    .zip(&p.0)
                    .map(|(&n, &s)| {
                        if n as usize == d {
                            ((d as u32 - s)..=nd as u32).collect()
                        } else {
                            vec![n - s]
                        }
                    })
                    .collect();
                grid_product(&options)
                    .into_iter()
                    .map(|g| grid_rank(nd, &g))
                    .collect()
            }
        }
    }

    /// The atom as a signed sum of range projections `E_p`. The single atom
    /// of the flat model is reported with the empty word.
    pub fn expansion(&self, d: usize, idx: usize) -> Vec<(f64, Element)> {
        match self.decode(d, idx) {
            Atom::Unit => vec![(1.0, Element(Vec::new()))],
            Atom::Leaf(w) => vec![(1.0, Element(w))],
            Atom::Defect(w) => {
                let mut out = vec![(1.0, Element(w.clone()))];
                for i in 1..=self.rank as u32 {
                    out.push((-1.0, Element(concat(&w, &[i]))));
                }
                out
            }
            Atom::Grid(v) => {
                let free: Vec<usize> = (0..v.len()).filter(|&i| v[i] as usize != d).collect();
                let mut out = Vec::with_capacity(1 << free.len());
                for mask in 0u32..(1 << free.len()) {
                    let mut e = v.clone();
                    for (bit, &i) in free.iter().enumerate() {
                        if mask & (1 << bit) != 0 {
                            e[i] += 1;
                        }
                    }
                    let sign = if mask.count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    out.push((sign, Element(e)));
                }
                out
            }
        }
    }

    /// Atoms at depth `d ≥ depth_of(p)` making up `E_p`.
    pub fn range_atoms(&self, d: usize, p: &Element) -> Vec<usize> {
        (0..self.atom_count(d))
            .filter(|&i| !self.unshift(d, i, p).is_empty())
            .collect()
    }
}

fn concat(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v
}

fn grid_product(options: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(options.len())];
    for opts in options {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for &o in opts {
                let mut v = prefix.clone();
                v.push(o);
                next.push(v);
            }
        }
        out = next;
    }
    out
}
