//! Kernel systems `K(p, a, q)` built from covariant pairs, the index
//! catalogs used for truncation, and Gram assembly.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::check::{Check, Worst};
use crate::cpmaps::{ContractionFamily, CovariantPair};
use crate::cstar::{LcmSystem, LevelledElement, Model};
use crate::error::{Error, Result};
use crate::linalg::{c, op_norm, psd_check, CMat, C64};
use crate::semigroup::{Element, RightLcmSemigroup, DEFAULT_ENUMERATION_CAP};

/// Relative residual allowed for corner membership.
pub const CORNER_TOL: f64 = 1e-9;

/// A map on triples `(p, a, q)` with `a ∈ E_p A E_q`.
pub trait Kernel: Sync {
    fn system(&self) -> &LcmSystem;

    /// Dimension of the Hilbert space the values act on.
    fn h(&self) -> usize;

    /// `K(p, a, q)` without the corner-membership check.
    fn evaluate_unchecked(&self, p: &Element, a: &LevelledElement, q: &Element) -> Result<CMat>;

    /// `K(p, a, q)`, rejecting `a` outside the corner `E_p A E_q`.
    fn evaluate(&self, p: &Element, a: &LevelledElement, q: &Element) -> Result<CMat> {
        let sys = self.system();
        let residual = corner_residual(sys, p, a, q)?;
        if residual > CORNER_TOL * sys.frobenius(a).max(1.0) {
            return Err(Error::NotInCorner { residual });
        }
        self.evaluate_unchecked(p, a, q)
    }
}

/// `‖E_p a E_q − a‖` in coordinates.
pub fn corner_residual(
    sys: &LcmSystem,
    p: &Element,
    a: &LevelledElement,
    q: &Element,
) -> Result<f64> {
    let ep = sys.range_projection(p)?;
    let eq = sys.range_projection(q)?;
    let compressed = sys.mul(&sys.mul(&ep, a), &eq);
    Ok(sys.frobenius(&sys.sub(&compressed, a)))
}

type Expansions = Vec<Vec<(f64, Element, CMat)>>;

/// The kernel `K(p,a,q) = T(p^{-1}r) φ̃(α_r^{-1}(a)) T(q^{-1}r)*`, `r = p ∨ q`,
/// and `0` when `p` and `q` have no common upper bound.
#[derive(Debug)]
pub struct PairKernel {
    pair: CovariantPair,
    expansions: Mutex<HashMap<usize, Arc<Expansions>>>,
}

impl Clone for PairKernel {
    fn clone(&self) -> Self {
        PairKernel::new(self.pair.clone())
    }
}

impl PairKernel {
    /// Takes a pair already validated by [`CovariantPair::new`].
    pub fn new(pair: CovariantPair) -> Self {
        PairKernel {
            pair,
            expansions: Mutex::new(HashMap::new()),
        }
    }

    pub fn pair(&self) -> &CovariantPair {
        &self.pair
    }

    pub fn contractions(&self) -> &ContractionFamily {
        &self.pair.t
    }

    /// Signed range-projection expansion of each atom at `depth`, with
    /// `T(p)` for each term.
    fn expansions(&self, depth: usize) -> Result<Arc<Expansions>> {
        if let Some(e) = self.expansions.lock().expect("cache lock").get(&depth) {
            return Ok(e.clone());
        }
        let sys = &self.pair.system;
        let shape = sys.shape();
        let flat = sys.model() == Model::Flat;
        let mut all = Vec::with_capacity(sys.dim(depth));
        for i in 0..sys.dim(depth) {
            let terms = shape
                .expansion(depth, i)
                .into_iter()
                .map(|(sign, p)| {
                    let p = if flat { sys.semigroup().identity() } else { p };
                    let tp = self.pair.t.eval(&p)?;
                    Ok((sign, p, tp))
                })
                .collect::<Result<Vec<_>>>()?;
            all.push(terms);
        }
        let all = Arc::new(all);
        self.expansions
            .lock()
            .expect("cache lock")
            .insert(depth, all.clone());
        Ok(all)
    }

    /// `φ̃(x)`, agreeing with [`CovariantPair::lifted`].
    fn lift(&self, x: &LevelledElement) -> Result<CMat> {
        let sys = &self.pair.system;
        let exps = self.expansions(x.depth)?;
        let mut out = CMat::zeros(self.h(), self.h());
        for (v, terms) in x.values.iter().zip(exps.iter()) {
            if v.is_zero() {
                continue;
            }
            for (sign, p, tp) in terms {
                let inner = self.pair.phi.apply(&sys.beta_inverse(p, v)?);
                out += tp * inner * tp.adjoint() * c(*sign);
            }
        }
        Ok(out)
    }
}

impl Kernel for PairKernel {
    fn system(&self) -> &LcmSystem {
        &self.pair.system
    }

    fn h(&self) -> usize {
        self.pair.h()
    }

    fn evaluate_unchecked(&self, p: &Element, a: &LevelledElement, q: &Element) -> Result<CMat> {
        let sys = &self.pair.system;
        let s = sys.semigroup();
        let Some(r) = s.lcm(p, q)? else {
            return Ok(CMat::zeros(self.h(), self.h()));
        };
        if sys.is_zero(a) {
            return Ok(CMat::zeros(self.h(), self.h()));
        }
        let x = sys.alpha_inverse(&r, a)?;
        let mid = self.lift(&x)?;
        let left = self
            .pair
            .t
            .eval(&s.left_divide(p, &r)?.expect("p divides lcm"))?;
        let right = self
            .pair
            .t
            .eval(&s.left_divide(q, &r)?.expect("q divides lcm"))?;
        Ok(left * mid * right.adjoint())
    }
}

/// One truncation index `(q, α_q(c))`, with `c` the `basis`-th basis element
/// of the depth-`depth` algebra.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexEntry {
    pub word: Element,
    pub depth: usize,
    pub basis: usize,
}

/// The index set used at a given bound: every `(q, c)` with `|q|` within the
/// bound and `c` a basis element at the depth assigned to `q`.
#[derive(Clone, Debug)]
pub struct IndexCatalog {
    pub bound: usize,
    pub entries: Vec<IndexEntry>,
    positions: HashMap<(Element, usize), usize>,
    depths: HashMap<Element, usize>,
}

impl IndexCatalog {
    /// Depth assigned to word `q` when the catalog bound is `bound`: for the
    /// free models the total `|q| + depth` is bounded; for `N^m` every word
    /// gets the full depth so that the catalog is closed under `π`.
    pub fn index_depth(sys: &LcmSystem, q: &Element, bound: usize) -> usize {
        match sys.model() {
            Model::Flat => 0,
            Model::ToeplitzAbelian => bound,
            Model::ToeplitzFree | Model::BoundaryFree => bound - q.0.len(),
        }
    }

    pub fn new(sys: &LcmSystem, bound: usize) -> Result<Self> {
        let words = sys
            .semigroup()
            .enumerate_up_to(bound, DEFAULT_ENUMERATION_CAP)?;
        let mut entries = Vec::new();
        for q in words {
            let d = Self::index_depth(sys, &q, bound);
            for basis in 0..sys.dim(d) {
                entries.push(IndexEntry {
                    word: q.clone(),
                    depth: d,
                    basis,
                });
            }
        }
        Ok(Self::from_entries(bound, entries))
    }

    fn from_entries(bound: usize, entries: Vec<IndexEntry>) -> Self {
        let mut positions = HashMap::with_capacity(entries.len());
        let mut depths = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            positions.insert((e.word.clone(), e.basis), i);
            depths.insert(e.word.clone(), e.depth);
        }
        IndexCatalog {
            bound,
            entries,
            positions,
            depths,
        }
    }

    /// Same entries in the order `order[0], order[1], …`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let entries = order.iter().map(|&i| self.entries[i].clone()).collect();
        Self::from_entries(self.bound, entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, word: &Element, basis: usize) -> Option<usize> {
        self.positions.get(&(word.clone(), basis)).copied()
    }

    /// Depth assigned to `word`, if the word occurs.
    pub fn depth_of(&self, word: &Element) -> Option<usize> {
        self.depths.get(word).copied()
    }

    /// The algebra element `α_q(c)` of entry `i`.
    pub fn element(&self, sys: &LcmSystem, i: usize) -> Result<LevelledElement> {
        let e = &self.entries[i];
        sys.apply_endo(&e.word, &sys.basis_element(e.depth, e.basis))
    }

    pub fn label(&self, sys: &LcmSystem, i: usize) -> String {
        let e = &self.entries[i];
        format!("({}, {})", e.word, sys.describe_basis(e.depth, e.basis))
    }
}

/// Gram matrix of the kernel on an index catalog: block `(i, j)` is
/// `K(q_i, a_i* a_j, q_j)` where `a_i = α_{q_i}(c_i)`.
#[derive(Clone, Debug)]
pub struct Gram {
    pub catalog: IndexCatalog,
    pub h: usize,
    pub matrix: CMat,
    /// `‖G − G*‖` before symmetrisation.
    pub hermitian_residual: f64,
}

/// Default cap on the Gram dimension.
pub const DEFAULT_MAX_DIM: usize = 4096;

pub fn assemble_gram<K: Kernel + ?Sized>(k: &K, bound: usize, max_dim: usize) -> Result<Gram> {
    let catalog = IndexCatalog::new(k.system(), bound)?;
    assemble_gram_on(k, catalog, max_dim)
}

/// Gram matrix on a given catalog, in the catalog's order.
pub fn assemble_gram_on<K: Kernel + ?Sized>(
    k: &K,
    catalog: IndexCatalog,
    max_dim: usize,
) -> Result<Gram> {
    let sys = k.system();
    let h = k.h();
    let n = catalog.len();
    if n * h > max_dim {
        return Err(Error::ResourceCap {
            dim: n * h,
            cap: max_dim,
        });
    }
    let elems: Vec<LevelledElement> = (0..n)
        .map(|i| catalog.element(sys, i))
        .collect::<Result<_>>()?;
    let top = elems.iter().map(|a| a.depth).max().unwrap_or(0);
    let elems: Vec<LevelledElement> = elems.iter().map(|a| sys.refine(a, top)).collect();
    let adjoints: Vec<LevelledElement> = elems.iter().map(|a| sys.adjoint(a)).collect();
    let mut g = CMat::zeros(n * h, n * h);
    for (i, (ai, ei)) in adjoints.iter().zip(&catalog.entries).enumerate() {
        for (j, (aj, ej)) in elems.iter().zip(&catalog.entries).enumerate() {
            let x = sys.mul(ai, aj);
            if sys.is_zero(&x) {
                continue;
            }
            let blk = k.evaluate_unchecked(&ei.word, &x, &ej.word)?;
            g.view_mut((i * h, j * h), (h, h)).copy_from(&blk);
        }
    }
    let hermitian_residual = (&g - g.adjoint()).norm();
    let matrix = (&g + g.adjoint()) * c(0.5);
    Ok(Gram {
        catalog,
        h,
        matrix,
        hermitian_residual,
    })
}

fn random_combination(
    sys: &LcmSystem,
    basis: &[LevelledElement],
    rng: &mut ChaCha8Rng,
) -> LevelledElement {
    let mut acc = sys.zero(basis[0].depth);
    for b in basis {
        let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        acc = sys.add(&acc, &sys.scale(b, z));
    }
    acc
}

/// Tolerance used by [`check_kernel_properties`].
pub const PROPERTY_TOL: f64 = 1e-8;

/// Verifies the kernel axioms on all words up to `depth`: unital, Hermitian,
/// Toeplitz (shifts by every word up to `depth`), linear, pull-out along
/// `r ∈ qP`, norm bound and the boundedness inequality.
pub fn check_kernel_properties<K: Kernel + ?Sized>(
    k: &K,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<Check>> {
    let sys = k.system();
    let s = sys.semigroup();
    let words = s.enumerate_up_to(depth, DEFAULT_ENUMERATION_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = k.h();
    let e = s.identity();
    let d = sys.depth(depth);
    let mut corners: HashMap<(usize, usize), Vec<LevelledElement>> = HashMap::new();
    for (i, p) in words.iter().enumerate() {
        for (j, q) in words.iter().enumerate() {
            corners.insert((i, j), sys.corner_basis(p, q, d)?);
        }
    }
    let mut checks = Vec::new();

    let unital = op_norm(&(k.evaluate(&e, &sys.unit(0), &e)? - CMat::identity(h, h)));
    checks.push(Check::at_most("unital", unital, PROPERTY_TOL));

    let mut herm = Worst::default();
    for (i, p) in words.iter().enumerate() {
        for (j, q) in words.iter().enumerate() {
            for (n, a) in corners[&(i, j)].iter().enumerate() {
                let lhs = k.evaluate(p, a, q)?.adjoint();
                let rhs = k.evaluate(q, &sys.adjoint(a), p)?;
                herm.see_norm(&(lhs - rhs), || {
                    format!("p={p}, q={q}, corner element #{n}")
                });
            }
        }
    }
    checks.push(herm.check("Hermitian", PROPERTY_TOL));

    if !sys.has_stage_maps() {
        let mut toep = Worst::default();
        for r in &words {
            for (i, p) in words.iter().enumerate() {
                for (j, q) in words.iter().enumerate() {
                    let basis = &corners[&(i, j)];
                    let picks: Vec<&LevelledElement> = if basis.len() <= samples {
                        basis.iter().collect()
                    } else {
                        (0..samples)
                            .map(|_| &basis[rng.gen_range(0..basis.len())])
                            .collect()
                    };
                    for a in picks {
                        let lhs = k.evaluate(p, a, q)?;
                        let rp = s.multiply(r, p)?;
                        let rq = s.multiply(r, q)?;
                        let rhs = k.evaluate_unchecked(&rp, &sys.apply_endo(r, a)?, &rq)?;
                        toep.see_norm(&(lhs - rhs), || format!("r={r}, p={p}, q={q}"));
                    }
                }
            }
        }
        checks.push(toep.check("Toeplitz (shifts sampled up to depth)", PROPERTY_TOL));
    }

    let mut lin = Worst::default();
    let mut norm = Worst::default();
    for (i, p) in words.iter().enumerate() {
        for (j, q) in words.iter().enumerate() {
            let basis = &corners[&(i, j)];
            if basis.is_empty() {
                continue;
            }
            for _ in 0..samples {
                let a = random_combination(sys, basis, &mut rng);
                let b = random_combination(sys, basis, &mut rng);
                let lambda = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let ka = k.evaluate(p, &a, q)?;
                let kb = k.evaluate(p, &b, q)?;
                let kab = k.evaluate(p, &sys.add(&a, &sys.scale(&b, lambda)), q)?;
                let r = op_norm(&(kab - &ka - kb * lambda));
                lin.see(r, || format!("p={p}, q={q}"));
                let an = sys.norm(&a);
                let excess = (op_norm(&ka) - an).max(0.0) / an.max(1.0);
                norm.see(excess, || {
                    format!("p={p}, q={q}: ‖K‖ exceeds ‖a‖ = {an:.6}")
                });
            }
        }
    }
    checks.push(lin.check("linear", PROPERTY_TOL));

    let mut pull = Worst::default();
    for (i, p) in words.iter().enumerate() {
        for q in &words {
            for t in &words {
                let r = s.multiply(q, t)?;
                if s.length(&r) > depth {
                    continue;
                }
                let Some(j) = words.iter().position(|w| *w == r) else {
                    continue;
                };
                let basis = &corners[&(i, j)];
                if basis.is_empty() {
                    continue;
                }
                let a = random_combination(sys, basis, &mut rng);
                let lhs = k.evaluate(p, &a, q)?;
                let et = sys.range_projection(t)?;
                let tt = k.evaluate(&e, &et, t)?;
                let rhs = k.evaluate(p, &a, &r)? * tt.adjoint();
                pull.see_norm(&(lhs - rhs), || format!("p={p}, q={q}, r={r}"));
            }
        }
    }
    checks.push(pull.check("pull-out along r ∈ qP", PROPERTY_TOL));
    checks.push(norm.check("norm bound ‖K(p,a,q)‖ ≤ ‖a‖", PROPERTY_TOL));
    checks.push(boundedness(k, &words, d, samples, &mut rng)?);
    Ok(checks)
}

/// `[K(p_i, a_i* x* x a_j, p_j)] ≤ ‖x‖² [K(p_i, a_i* a_j, p_j)]` on random families.
fn boundedness<K: Kernel + ?Sized>(
    k: &K,
    words: &[Element],
    d: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Check> {
    let sys = k.system();
    let h = k.h();
    let full = sys.basis(d);
    let mut worst = Worst::default();
    for trial in 0..samples.max(1) {
        let count = words.len().min(4);
        let picked: Vec<&Element> = (0..count)
            .map(|_| &words[rng.gen_range(0..words.len())])
            .collect();
        let family: Vec<LevelledElement> = picked
            .iter()
            .map(|p| -> Result<LevelledElement> {
                let a = random_combination(sys, &full, rng);
                Ok(sys.mul(&a, &sys.range_projection(p)?))
            })
            .collect::<Result<_>>()?;
        let x = random_combination(sys, &full, rng);
        let xx = sys.mul(&sys.adjoint(&x), &x);
        let xn = sys.norm(&x);
        let n = family.len();
        let mut diff = CMat::zeros(n * h, n * h);
        let mut plain = CMat::zeros(n * h, n * h);
        for i in 0..n {
            let ai = sys.adjoint(&family[i]);
            for j in 0..n {
                let base = sys.mul(&ai, &family[j]);
                let squeezed = sys.mul(&sys.mul(&ai, &xx), &family[j]);
                let kb = k.evaluate_unchecked(picked[i], &base, picked[j])?;
                let ks = k.evaluate_unchecked(picked[i], &squeezed, picked[j])?;
                diff.view_mut((i * h, j * h), (h, h))
                    .copy_from(&(&kb * c(xn * xn) - ks));
                plain.view_mut((i * h, j * h), (h, h)).copy_from(&kb);
            }
        }
        let v = psd_check(&diff, PROPERTY_TOL);
        let scale = op_norm(&plain).max(1.0) * xn * xn;
        let deficit = (-v.min_eigenvalue).max(0.0) / scale.max(1.0);
        worst.see(deficit, || {
            let ws: Vec<String> = picked.iter().map(|p| p.to_string()).collect();
            format!("trial {trial}, words {}", ws.join(" "))
        });
    }
    Ok(worst.check("bounded", PROPERTY_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmaps::OperatorMap;
    use crate::cstar::BaseAlgebra;
    use crate::linalg::real;
    use crate::semigroup::Semigroup;

    fn half_kernel() -> PairKernel {
        let s = Semigroup::free_abelian(1).unwrap();
        let sys =
            LcmSystem::build(s, Model::ToeplitzAbelian, BaseAlgebra::scalars(), vec![]).unwrap();
        let t = ContractionFamily::new(s, vec![real(1, 1, &[0.5])]).unwrap();
        PairKernel::new(CovariantPair::new(sys, OperatorMap::scalar(1), t).unwrap())
    }

    #[test]
    fn unital_at_identity() {
        let k = half_kernel();
        let e = Element(vec![0]);
        let v = k.evaluate(&e, &k.system().unit(0), &e).unwrap();
        assert!((v[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_evaluation_through_lcm() {
        let k = half_kernel();
        let sys = k.system();
        let e2 = sys.range_projection(&Element(vec![2])).unwrap();
        let v = k
            .evaluate(&Element(vec![0]), &e2, &Element(vec![2]))
            .unwrap();
        assert!((v[(0, 0)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cached_lift_matches_direct_lift() {
        let k = half_kernel();
        let sys = k.system();
        for d in 0..4 {
            for x in sys.basis(d) {
                let direct = k.pair().lifted(&x).unwrap();
                assert!((k.lift(&x).unwrap() - direct).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_elements_outside_the_corner() {
        let k = half_kernel();
        let sys = k.system();
        let one = sys.unit(0);
        assert!(matches!(
            k.evaluate(&Element(vec![0]), &one, &Element(vec![1])),
            Err(Error::NotInCorner { .. })
        ));
    }

    #[test]
    fn catalog_sizes() {
        let s = Semigroup::free_monoid(2).unwrap();
        let sys =
            LcmSystem::build(s, Model::BoundaryFree, BaseAlgebra::matrices(2), vec![]).unwrap();
        let cat = IndexCatalog::new(&sys, 3).unwrap();
        // 15 words, word of length l carries 2^(3-l) atoms times 4 matrix units
        assert_eq!(cat.len(), 128);
        let k = half_kernel();
        assert_eq!(IndexCatalog::new(k.system(), 2).unwrap().len(), 9);
    }

    #[test]
    fn properties_hold_for_a_pair_kernel() {
        let k = half_kernel();
        let checks = check_kernel_properties(&k, 3, 3, 7).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }
}
