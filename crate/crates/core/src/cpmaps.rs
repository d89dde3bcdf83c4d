//! Completely positive maps, contraction families, Nica-type defects and
//! covariant pairs.

use std::collections::HashMap;

use crate::cstar::{BaseAlgebra, BaseElement, LcmSystem, LevelledElement, Model};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigen, op_norm, psd_check, unit, CMat, C64};
use crate::semigroup::{Element, RightLcmSemigroup, Semigroup};

/// Largest `|F|` accepted by the inclusion–exclusion sums (`2^|F|` terms).
pub const MAX_SUBSET: usize = 16;

/// Linear map from a finite-dimensional C*-algebra into `M_h`, stored by its
/// values on the matrix units (block by block, row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMap {
    pub domain: BaseAlgebra,
    pub h: usize,
    pub values: Vec<CMat>,
}

/// Result of a complete-positivity test.
#[derive(Clone, Debug)]
pub struct CpVerdict {
    pub completely_positive: bool,
    /// Smallest Choi-matrix eigenvalue over all blocks.
    pub min_eigenvalue: f64,
    pub scale: f64,
    /// Block and eigenvector attaining the minimum, when the test fails.
    pub witness: Option<(usize, Vec<C64>)>,
}

impl OperatorMap {
    pub fn new(domain: BaseAlgebra, h: usize, values: Vec<CMat>) -> Result<Self> {
        if values.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                context: "operator map values".into(),
                expected: domain.dim(),
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| v.shape() != (h, h)) {
            return Err(Error::DimensionMismatch {
                context: "operator map value size".into(),
                expected: h,
                found: bad.nrows().max(bad.ncols()),
            });
        }
        Ok(OperatorMap { domain, h, values })
    }

    /// Build from a closure evaluated on each matrix unit.
    pub fn from_fn(domain: BaseAlgebra, h: usize, f: impl Fn(&BaseElement) -> CMat) -> Self {
        let values = (0..domain.dim())
            .map(|i| f(&domain.basis_element(i)))
            .collect();
        OperatorMap { domain, h, values }
    }

    /// The identity map of `M_n`.
    pub fn identity(n: usize) -> Self {
        let dom = BaseAlgebra::matrices(n);
        Self::from_fn(dom, n, |x| x.blocks[0].clone())
    }

    /// `x ↦ x^T` on `M_n`.
    pub fn transpose(n: usize) -> Self {
        let dom = BaseAlgebra::matrices(n);
        Self::from_fn(dom, n, |x| x.blocks[0].transpose())
    }

    /// Conditional expectation onto the diagonal of `M_n`.
    pub fn diagonal(n: usize) -> Self {
        let dom = BaseAlgebra::matrices(n);
        Self::from_fn(dom, n, |x| {
            CMat::from_fn(
                n,
                n,
                |i, j| if i == j { x.blocks[0][(i, i)] } else { c(0.0) },
            )
        })
    }

    /// `x ↦ x · I_h` on the scalars.
    pub fn scalar(h: usize) -> Self {
        OperatorMap {
            domain: BaseAlgebra::scalars(),
            h,
            values: vec![CMat::identity(h, h)],
        }
    }

    pub fn apply_coords(&self, coords: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.h, self.h);
        for (z, v) in coords.iter().zip(&self.values) {
            if *z != c(0.0) {
                out += v * *z;
            }
        }
        out
    }

    pub fn apply(&self, x: &BaseElement) -> CMat {
        self.apply_coords(&x.coords())
    }

    pub fn unital_residual(&self) -> f64 {
        op_norm(&(self.apply(&self.domain.unit()) - CMat::identity(self.h, self.h)))
    }

    /// Largest `‖φ(e_{kj}) − φ(e_{jk})*‖`.
    pub fn self_adjoint_residual(&self) -> f64 {
        (0..self.values.len())
            .map(|i| {
                let j = self.domain.adjoint_index(i);
                op_norm(&(&self.values[j] - self.values[i].adjoint()))
            })
            .fold(0.0, f64::max)
    }

    /// Choi matrix `Σ_{jk} e_{jk} ⊗ φ(e_{jk})` of one block of the domain.
    pub fn choi(&self, block: usize) -> CMat {
        let n = self.domain.blocks()[block];
        let off = self.domain.basis_offset(block);
        let h = self.h;
        let mut m = CMat::zeros(n * h, n * h);
        for j in 0..n {
            for k in 0..n {
                m.view_mut((j * h, k * h), (h, h))
                    .copy_from(&self.values[off + j * n + k]);
            }
        }
        m
    }

    /// Choi test block by block; passes when every eigenvalue is at least
    /// `-tol * max(λ_max, 1)`.
    pub fn complete_positivity(&self, tol: f64) -> CpVerdict {
        let mut verdict = CpVerdict {
            completely_positive: true,
            min_eigenvalue: f64::INFINITY,
            scale: 1.0,
            witness: None,
        };
        for b in 0..self.domain.blocks().len() {
            let v = psd_check(&self.choi(b), tol);
            verdict.scale = verdict.scale.max(v.scale);
            if v.min_eigenvalue < verdict.min_eigenvalue {
                verdict.min_eigenvalue = v.min_eigenvalue;
                if !v.positive {
                    verdict.witness = v.witness.map(|w| (b, w));
                }
            }
            verdict.completely_positive &= v.positive;
        }
        verdict
    }

    /// Pointwise linear combination `Σ w_i φ_i`.
    pub fn combine(parts: &[(f64, &OperatorMap)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Invalid("empty combination".into()))?
            .1;
        let mut values = vec![CMat::zeros(first.h, first.h); first.values.len()];
        for (w, m) in parts {
            if m.domain != first.domain || m.h != first.h {
                return Err(Error::Invalid("maps have different shapes".into()));
            }
            for (acc, v) in values.iter_mut().zip(&m.values) {
                *acc += v * c(*w);
            }
        }
        Ok(OperatorMap {
            domain: first.domain.clone(),
            h: first.h,
            values,
        })
    }
}

/// Convenience wrapper for [`OperatorMap::complete_positivity`].
pub fn is_completely_positive(phi: &OperatorMap, tol: f64) -> CpVerdict {
    phi.complete_positivity(tol)
}

/// Contractions `T_i` on `C^h`, one per generator, extended
/// multiplicatively to the semigroup.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionFamily {
    semigroup: Semigroup,
    h: usize,
    generators: Vec<CMat>,
}

const CONTRACTION_SLACK: f64 = 1e-12;
const COMMUTATION_TOL: f64 = 1e-10;

impl ContractionFamily {
    pub fn new(semigroup: Semigroup, generators: Vec<CMat>) -> Result<Self> {
        if generators.len() != semigroup.rank {
            return Err(Error::DimensionMismatch {
                context: "contraction generators".into(),
                expected: semigroup.rank,
                found: generators.len(),
            });
        }
        let h = generators[0].nrows();
        for (i, t) in generators.iter().enumerate() {
            if t.shape() != (h, h) {
                return Err(Error::DimensionMismatch {
                    context: format!("T_{}", i + 1),
                    expected: h,
                    found: t.nrows().max(t.ncols()),
                });
            }
            let n = op_norm(t);
            if n > 1.0 + CONTRACTION_SLACK {
                return Err(Error::NotContractive {
                    what: format!("T_{}", i + 1),
                    norm: n,
                });
            }
        }
        if semigroup.is_abelian() {
            for i in 0..generators.len() {
                for j in (i + 1)..generators.len() {
                    let r = op_norm(
                        &(&generators[i] * &generators[j] - &generators[j] * &generators[i]),
                    );
                    if r > COMMUTATION_TOL {
                        return Err(Error::NotCommuting {
                            i: i + 1,
                            j: j + 1,
                            residual: r,
                        });
                    }
                }
            }
        }
        Ok(ContractionFamily {
            semigroup,
            h,
            generators,
        })
    }

    pub fn semigroup(&self) -> &Semigroup {
        &self.semigroup
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    /// `T(p)`, the ordered product over a factorization of `p`.
    pub fn eval(&self, p: &Element) -> Result<CMat> {
        let f = self.semigroup.factorize(p)?;
        let mut m = CMat::identity(self.h, self.h);
        for g in f {
            m *= &self.generators[g];
        }
        Ok(m)
    }

    /// `T(p)` with the convention `T(∞) = 0` for a missing lcm.
    pub fn eval_or_zero(&self, p: Option<&Element>) -> Result<CMat> {
        match p {
            Some(p) => self.eval(p),
            None => Ok(CMat::zeros(self.h, self.h)),
        }
    }
}

fn check_subset(f: &[Element]) -> Result<()> {
    if f.len() > MAX_SUBSET {
        return Err(Error::SubsetCap {
            size: f.len(),
            cap: MAX_SUBSET,
        });
    }
    Ok(())
}

/// lcm of every subset of `f`, indexed by bitmask.
fn subset_lcms(s: &Semigroup, f: &[Element]) -> Result<Vec<Option<Element>>> {
    let n = f.len();
    let mut out: Vec<Option<Element>> = vec![None; 1 << n];
    out[0] = Some(s.identity());
    for mask in 1usize..(1 << n) {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let rest = mask & !(1 << top);
        out[mask] = match &out[rest] {
            Some(r) => s.lcm(r, &f[top])?,
            None => None,
        };
    }
    Ok(out)
}

fn sign(mask: usize) -> f64 {
    if mask.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `Σ_{U ⊆ F} (−1)^{|U|} T(∨U) T(∨U)*`, with `T(∨U) = 0` when the lcm is missing.
pub fn nica_defect(t: &ContractionFamily, f: &[Element]) -> Result<CMat> {
    check_subset(f)?;
    let lcms = subset_lcms(&t.semigroup, f)?;
    let mut cache: HashMap<Element, CMat> = HashMap::new();
    let mut acc = CMat::zeros(t.h, t.h);
    for (mask, r) in lcms.iter().enumerate() {
        let Some(r) = r else { continue };
        if !cache.contains_key(r) {
            let m = t.eval(r)?;
            cache.insert(r.clone(), &m * m.adjoint());
        }
        acc += &cache[r] * c(sign(mask));
    }
    Ok(acc)
}

/// `Π_{p∈W} E_p Π_{p∈F∖W} (1 − E_p)` for `W ⊆ F` given by a bitmask over `f`.
pub fn ewf_projection(sys: &LcmSystem, w_mask: usize, f: &[Element]) -> Result<LevelledElement> {
    let mut acc = sys.unit(0);
    for (i, p) in f.iter().enumerate() {
        let ep = sys.range_projection(p)?;
        let factor = if w_mask & (1 << i) != 0 {
            ep
        } else {
            sys.sub(&sys.unit(ep.depth), &ep)
        };
        acc = sys.mul(&acc, &factor);
    }
    Ok(acc)
}

/// Outcome of extending `T` to the diagonal model.
#[derive(Clone, Debug)]
pub enum PhiTExtension {
    Accepted(OperatorMap),
    Rejected {
        atom: String,
        min_eigenvalue: f64,
        witness: Vec<C64>,
    },
}

/// The map `φ_T` on the depth-`d` diagonal algebra determined by
/// `φ_T(E_p) = T(p)T(p)*`; rejected when some atom is sent to a
/// non-positive matrix.
pub fn extend_phi_t(
    sys: &LcmSystem,
    t: &ContractionFamily,
    depth: usize,
    tol: f64,
) -> Result<PhiTExtension> {
    if !sys.base().is_scalars() || !sys.model().is_levelled() {
        return Err(Error::Unsupported {
            what: "extend_phi_t".into(),
            reason: "needs a levelled model over the scalars".into(),
        });
    }
    let pair = CovariantPair::new_unchecked(sys.clone(), OperatorMap::scalar(t.h), t.clone())?;
    let map = pair.lifted_map(depth)?;
    let shape = sys.shape();
    let d = sys.depth(depth);
    let mut worst: Option<(usize, f64, Vec<C64>)> = None;
    for (i, v) in map.values.iter().enumerate() {
        let verdict = psd_check(v, tol);
        if !verdict.positive && worst.as_ref().is_none_or(|w| verdict.min_eigenvalue < w.1) {
            worst = Some((
                i,
                verdict.min_eigenvalue,
                verdict.witness.unwrap_or_default(),
            ));
        }
    }
    Ok(match worst {
        None => PhiTExtension::Accepted(map),
        Some((i, min_eigenvalue, witness)) => PhiTExtension::Rejected {
            atom: shape.describe(d, i),
            min_eigenvalue,
            witness,
        },
    })
}

/// `φ_F(a) = Σ_{U⊆F} (−1)^{|U|} T(s_U) φ(β_{s_U}^{-1}(a)) T(s_U)*` with
/// `s_U = ∨U`, as a map on the base algebra.
pub fn phi_f(pair: &CovariantPair, f: &[Element]) -> Result<OperatorMap> {
    check_subset(f)?;
    let sys = &pair.system;
    let lcms = subset_lcms(sys.semigroup(), f)?;
    let base = sys.base();
    let mut values = vec![CMat::zeros(pair.h(), pair.h()); base.dim()];
    for (mask, r) in lcms.iter().enumerate() {
        let Some(r) = r else { continue };
        let tr = pair.t.eval(r)?;
        for (j, acc) in values.iter_mut().enumerate() {
            let b = sys.beta_inverse(r, &base.basis_element(j))?;
            *acc += &tr * pair.phi.apply(&b) * tr.adjoint() * c(sign(mask));
        }
    }
    OperatorMap::new(base.clone(), pair.h(), values)
}

/// A unital completely positive map `φ` on the base algebra together with
/// contractions `T`, acting on the levelled algebra through the lifted map
/// `φ̃(E_p ⊗ a) = T(p) φ(β_p^{-1}(a)) T(p)*`.
#[derive(Clone, Debug)]
pub struct CovariantPair {
    pub system: LcmSystem,
    pub phi: OperatorMap,
    pub t: ContractionFamily,
}

/// Tolerance for the covariance, unitality and consistency checks.
pub const PAIR_TOL: f64 = 1e-9;

impl CovariantPair {
    /// Validates shapes, unitality, self-adjointness, covariance on the
    /// generators and (for the boundary model) consistency under refinement.
    pub fn new(system: LcmSystem, phi: OperatorMap, t: ContractionFamily) -> Result<Self> {
        let pair = Self::new_unchecked(system, phi, t)?;
        let r = pair.phi.unital_residual();
        if r > PAIR_TOL {
            return Err(Error::NotUnital { residual: r });
        }
        let r = pair.phi.self_adjoint_residual();
        if r > PAIR_TOL {
            return Err(Error::NotSelfAdjoint { residual: r });
        }
        let (generator, r) = pair.covariance_residual()?;
        if r > PAIR_TOL {
            return Err(Error::NotCovariant {
                generator,
                residual: r,
            });
        }
        let r = pair.refinement_residual()?;
        if r > PAIR_TOL {
            return Err(Error::Inconsistent { residual: r });
        }
        Ok(pair)
    }

    /// Shape checks only.
    pub fn new_unchecked(
        system: LcmSystem,
        phi: OperatorMap,
        t: ContractionFamily,
    ) -> Result<Self> {
        if system.has_stage_maps() {
            return Err(Error::Unsupported {
                what: "covariant pair".into(),
                reason: "generator maps must be endomorphisms".into(),
            });
        }
        if &phi.domain != system.base() {
            return Err(Error::Invalid(
                "φ must be defined on the base algebra of the system".into(),
            ));
        }
        if phi.h != t.h {
            return Err(Error::DimensionMismatch {
                context: "Hilbert space of φ and T".into(),
                expected: t.h,
                found: phi.h,
            });
        }
        if t.semigroup != *system.semigroup() {
            return Err(Error::Invalid(
                "T and the system use different semigroups".into(),
            ));
        }
        Ok(CovariantPair { system, phi, t })
    }

    pub fn h(&self) -> usize {
        self.t.h
    }

    /// `φ̃(x)`.
    pub fn lifted(&self, x: &LevelledElement) -> Result<CMat> {
        let sys = &self.system;
        let shape = sys.shape();
        let mut out = CMat::zeros(self.h(), self.h());
        for (i, v) in x.values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            for (s, p) in shape.expansion(x.depth, i) {
                let p = if sys.model() == Model::Flat {
                    sys.semigroup().identity()
                } else {
                    p
                };
                let tp = self.t.eval(&p)?;
                let inner = self.phi.apply(&sys.beta_inverse(&p, v)?);
                out += &tp * inner * tp.adjoint() * c(s);
            }
        }
        Ok(out)
    }

    /// `φ̃` on the depth-`d` algebra as an operator map.
    pub fn lifted_map(&self, d: usize) -> Result<OperatorMap> {
        let sys = &self.system;
        let domain = levelled_domain(sys, d);
        let values = (0..sys.dim(d))
            .map(|i| self.lifted(&sys.basis_element(d, i)))
            .collect::<Result<_>>()?;
        OperatorMap::new(domain, self.h(), values)
    }

    /// Largest `‖T_i φ̃(x) T_i* − φ̃(α_i(x))‖` over basis elements at depths 0 and 1.
    pub fn covariance_residual(&self) -> Result<(usize, f64)> {
        let sys = &self.system;
        let mut worst = (0, 0.0);
        for d in depths_to_check(sys) {
            for x in sys.basis(d) {
                let fx = self.lifted(&x)?;
                for (i, g) in sys.semigroup().generators().iter().enumerate() {
                    let tg = &self.t.generators[i];
                    let lhs = tg * &fx * tg.adjoint();
                    let rhs = self.lifted(&sys.apply_endo(g, &x)?)?;
                    let r = op_norm(&(lhs - rhs));
                    if r > worst.1 {
                        worst = (i + 1, r);
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Largest `‖φ̃(x) − φ̃(refine(x))‖` over basis elements at depths 0 and 1.
    pub fn refinement_residual(&self) -> Result<f64> {
        let sys = &self.system;
        let mut worst: f64 = 0.0;
        if !sys.model().is_levelled() {
            return Ok(0.0);
        }
        for d in depths_to_check(sys) {
            for x in sys.basis(d) {
                let fine = sys.refine(&x, d + 1);
                worst = worst.max(op_norm(&(self.lifted(&x)? - self.lifted(&fine)?)));
            }
        }
        Ok(worst)
    }
}

fn depths_to_check(sys: &LcmSystem) -> Vec<usize> {
    if sys.model() == Model::Flat {
        vec![0]
    } else {
        vec![0, 1]
    }
}

/// The depth-`d` levelled algebra viewed as a direct sum of matrix blocks,
/// with the same basis order as [`LcmSystem::basis_element`].
pub fn levelled_domain(sys: &LcmSystem, d: usize) -> BaseAlgebra {
    let blocks: Vec<usize> = (0..sys.atom_count(d))
        .flat_map(|_| sys.base().blocks().iter().copied())
        .collect();
    BaseAlgebra::new(blocks).expect("base algebra blocks are positive")
}

/// Matrix units `E_{ij}` of size `n` (1-based indices as in the literature).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    unit(n, i - 1, j - 1)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;

    fn el(v: &[u32]) -> Element {
        Element(v.to_vec())
    }

    #[test]
    fn identity_is_cp_and_transpose_is_not() {
        assert!(
            OperatorMap::identity(2)
                .complete_positivity(1e-8)
                .completely_positive
        );
        let v = OperatorMap::transpose(2).complete_positivity(1e-8);
        assert!(!v.completely_positive);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-12);
        assert!(v.witness.is_some());
    }

    #[test]
    fn composite_contraction_is_ordered_product() {
        let s = Semigroup::free_monoid(2).unwrap();
        let t1 = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let t2 = real(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        let t = ContractionFamily::new(s, vec![t1.clone(), t2.clone()]).unwrap();
        assert_eq!(t.eval(&el(&[1, 2])).unwrap(), &t1 * &t2);
        assert_eq!(t.eval(&el(&[])).unwrap(), CMat::identity(2, 2));
    }

    #[test]
    fn rejects_non_contractions_and_non_commuting_pairs() {
        let s = Semigroup::free_abelian(2).unwrap();
        let big = real(1, 1, &[1.5]);
        assert!(matches!(
            ContractionFamily::new(s, vec![big.clone(), big]),
            Err(Error::NotContractive { .. })
        ));
        let a = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = real(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            ContractionFamily::new(s, vec![a, b]),
            Err(Error::NotCommuting { .. })
        ));
    }

    #[test]
    fn nica_defect_of_cuntz_row_vanishes() {
        let s = Semigroup::free_monoid(2).unwrap();
        let t =
            ContractionFamily::new(s, vec![matrix_unit(2, 1, 1), matrix_unit(2, 2, 1)]).unwrap();
        let d = nica_defect(&t, &[el(&[1]), el(&[2])]).unwrap();
        assert!(d.norm() < 1e-15);
    }

    #[test]
    fn nica_defect_single_contraction() {
        let s = Semigroup::free_abelian(1).unwrap();
        let t = ContractionFamily::new(s, vec![real(1, 1, &[0.5])]).unwrap();
        let d = nica_defect(&t, &[el(&[1])]).unwrap();
        assert!((d[(0, 0)].re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn subset_cap() {
        let s = Semigroup::free_abelian(1).unwrap();
        let t = ContractionFamily::new(s, vec![real(1, 1, &[0.5])]).unwrap();
        let f: Vec<Element> = (0..17).map(|i| el(&[i])).collect();
        assert!(matches!(nica_defect(&t, &f), Err(Error::SubsetCap { .. })));
    }
}
