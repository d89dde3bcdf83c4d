//! Right LCM dynamical systems on finite-depth C*-algebras.
//!
//! A levelled algebra at depth `d` is `C(atoms_d) ⊗ B` for a base algebra
//! `B`; its elements store one base value per atom. The action of a
//! generator shifts atoms and applies a base automorphism `β_i`. The flat
//! model has the base algebra alone and spatial generators.

mod atoms;
mod base;

pub use atoms::{Atom, Model, Shape};
pub use base::{BaseAlgebra, BaseElement};

use crate::check::{Check, Worst};
use crate::error::{Error, Result};
use crate::linalg::{c, range_and_pinv, CMat, C64};
use crate::semigroup::{Element, RightLcmSemigroup, Semigroup, DEFAULT_ENUMERATION_CAP};

/// Spatial map `a ↦ W a W*`. Without a target, `W` is a unitary and the map
/// is an automorphism of the base algebra. With a target, `W` is an isometry
/// into a larger algebra; such maps are only meaningful for validation.
#[derive(Clone, Debug, PartialEq)]
pub struct Spatial {
    pub matrix: CMat,
    pub target: Option<BaseAlgebra>,
}

impl Spatial {
    pub fn unitary(matrix: CMat) -> Self {
        Spatial {
            matrix,
            target: None,
        }
    }

    pub fn into_target(matrix: CMat, target: BaseAlgebra) -> Self {
        Spatial {
            matrix,
            target: Some(target),
        }
    }
}

/// Element of a levelled algebra: a depth and one base value per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelledElement {
    pub depth: usize,
    pub values: Vec<BaseElement>,
}

/// Semigroup, commutative model, base algebra and generator maps.
#[derive(Clone, Debug)]
pub struct LcmSystem {
    semigroup: Semigroup,
    model: Model,
    base: BaseAlgebra,
    generators: Vec<Spatial>,
    shape: Shape,
    trivial: Vec<bool>,
    has_stage_maps: bool,
}

const UNITARY_TOL: f64 = 1e-9;

/// Relative residual allowed when inverting a non-structural endomorphism.
pub const CONFORMITY_TOL: f64 = 1e-9;

impl LcmSystem {
    /// Assemble and sanity-check a system. An empty generator list means
    /// every generator acts trivially on the base algebra.
    pub fn build(
        semigroup: Semigroup,
        model: Model,
        base: BaseAlgebra,
        mut generators: Vec<Spatial>,
    ) -> Result<Self> {
        if !model.fits(&semigroup) {
            return Err(Error::Unsupported {
                what: format!("{model:?} model"),
                reason: format!("not defined over {semigroup}"),
            });
        }
        let n = base.size();
        if generators.is_empty() {
            generators = vec![Spatial::unitary(CMat::identity(n, n)); semigroup.rank];
        }
        if generators.len() != semigroup.rank {
            return Err(Error::DimensionMismatch {
                context: "generator maps".into(),
                expected: semigroup.rank,
                found: generators.len(),
            });
        }
        let mut trivial = Vec::new();
        let mut has_stage_maps = false;
        for (i, g) in generators.iter().enumerate() {
            let what = format!("generator {}", i + 1);
            match &g.target {
                None => {
                    if g.matrix.shape() != (n, n) {
                        return Err(Error::DimensionMismatch {
                            context: what,
                            expected: n,
                            found: g.matrix.nrows(),
                        });
                    }
                    let id = CMat::identity(n, n);
                    let res = (g.matrix.adjoint() * &g.matrix - &id)
                        .norm()
                        .max((&g.matrix * g.matrix.adjoint() - &id).norm());
                    if res > UNITARY_TOL {
                        return Err(Error::NotUnitary {
                            what,
                            residual: res,
                        });
                    }
                    let mut worst: f64 = 0.0;
                    for j in 0..base.dim() {
                        let full = base.to_full(&base.basis_element(j));
                        let (_, off) = base.from_full(&(&g.matrix * full * g.matrix.adjoint()));
                        worst = worst.max(off);
                    }
                    if worst > UNITARY_TOL {
                        return Err(Error::NotBlockPreserving {
                            what,
                            residual: worst,
                        });
                    }
                    trivial.push((&g.matrix - &id).norm() == 0.0);
                }
                Some(t) => {
                    if model.is_levelled() {
                        return Err(Error::Unsupported {
                            what,
                            reason: "levelled models take base automorphisms only".into(),
                        });
                    }
                    if g.matrix.shape() != (t.size(), n) {
                        return Err(Error::DimensionMismatch {
                            context: what,
                            expected: t.size(),
                            found: g.matrix.nrows(),
                        });
                    }
                    let res = (g.matrix.adjoint() * &g.matrix - CMat::identity(n, n)).norm();
                    if res > UNITARY_TOL {
                        return Err(Error::NotUnitary {
                            what,
                            residual: res,
                        });
                    }
                    trivial.push(false);
                    has_stage_maps = true;
                }
            }
        }
        let sys = LcmSystem {
            semigroup,
            model,
            shape: Shape::new(model, semigroup.rank),
            base,
            generators,
            trivial,
            has_stage_maps,
        };
        if semigroup.is_abelian() && !has_stage_maps {
            sys.check_commuting()?;
        }
        Ok(sys)
    }

    fn check_commuting(&self) -> Result<()> {
        for i in 0..self.semigroup.rank {
            for j in (i + 1)..self.semigroup.rank {
                let mut worst: f64 = 0.0;
                for b in 0..self.base.dim() {
                    let x = self.base.basis_element(b);
                    let ij = self.conj_gen(i, &self.conj_gen(j, &x));
                    let ji = self.conj_gen(j, &self.conj_gen(i, &x));
                    worst = worst.max(ij.sub(&ji).frobenius());
                }
                if worst > UNITARY_TOL {
                    return Err(Error::NotCommuting {
                        i: i + 1,
                        j: j + 1,
                        residual: worst,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn semigroup(&self) -> &Semigroup {
        &self.semigroup
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn base(&self) -> &BaseAlgebra {
        &self.base
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn generator_maps(&self) -> &[Spatial] {
        &self.generators
    }

    pub fn has_stage_maps(&self) -> bool {
        self.has_stage_maps
    }

    /// Depth normalised for the model (always 0 for the flat model).
    pub fn depth(&self, d: usize) -> usize {
        self.shape.depth(d)
    }

    /// Depth at which `E_p` is first expressible.
    pub fn depth_of(&self, p: &Element) -> usize {
        self.shape.depth_of(p)
    }

    pub fn atom_count(&self, d: usize) -> usize {
        self.shape.atom_count(self.depth(d))
    }

    /// Vector-space dimension of the depth-`d` algebra.
    pub fn dim(&self, d: usize) -> usize {
        self.atom_count(d) * self.base.dim()
    }

    pub fn zero(&self, d: usize) -> LevelledElement {
        let d = self.depth(d);
        LevelledElement {
            depth: d,
            values: vec![self.base.zero(); self.shape.atom_count(d)],
        }
    }

    pub fn unit(&self, d: usize) -> LevelledElement {
        let d = self.depth(d);
        LevelledElement {
            depth: d,
            values: vec![self.base.unit(); self.shape.atom_count(d)],
        }
    }

    /// `atom ⊗ b` at depth `d`.
    pub fn simple(&self, d: usize, atom: usize, b: BaseElement) -> LevelledElement {
        let mut x = self.zero(d);
        x.values[atom] = b;
        x
    }

    /// Basis elements are ordered by atom, then by base matrix unit.
    pub fn basis_element(&self, d: usize, i: usize) -> LevelledElement {
        let bd = self.base.dim();
        self.simple(d, i / bd, self.base.basis_element(i % bd))
    }

    pub fn basis(&self, d: usize) -> Vec<LevelledElement> {
        (0..self.dim(d)).map(|i| self.basis_element(d, i)).collect()
    }

    pub fn describe_basis(&self, d: usize, i: usize) -> String {
        let bd = self.base.dim();
        let (b, j, k) = self.base.basis_position(i % bd);
        let atom = self.shape.describe(self.depth(d), i / bd);
        if self.base.is_scalars() {
            atom
        } else if self.base.blocks().len() == 1 {
            format!("{atom}⊗e{}{}", j + 1, k + 1)
        } else {
            format!("{atom}⊗e{}{}[{}]", j + 1, k + 1, b + 1)
        }
    }

    pub fn coords(&self, x: &LevelledElement) -> Vec<C64> {
        x.values.iter().flat_map(|v| v.coords()).collect()
    }

    pub fn from_coords(&self, d: usize, coords: &[C64]) -> Result<LevelledElement> {
        let d = self.depth(d);
        let bd = self.base.dim();
        let n = self.shape.atom_count(d);
        if coords.len() != n * bd {
            return Err(Error::DimensionMismatch {
                context: "algebra coordinates".into(),
                expected: n * bd,
                found: coords.len(),
            });
        }
        let values = coords
            .chunks(bd)
            .map(|ch| self.base.from_coords(ch))
            .collect::<Result<_>>()?;
        Ok(LevelledElement { depth: d, values })
    }

    /// Re-express `x` at depth `d ≥ x.depth`.
    pub fn refine(&self, x: &LevelledElement, d: usize) -> LevelledElement {
        let d = self.depth(d);
        let mut cur = x.clone();
        while cur.depth < d {
            let mut next = self.zero(cur.depth + 1);
            for (i, v) in cur.values.iter().enumerate() {
                for j in self.shape.children(cur.depth, i) {
                    next.values[j] = v.clone();
                }
            }
            cur = next;
        }
        cur
    }

    fn align(
        &self,
        x: &LevelledElement,
        y: &LevelledElement,
    ) -> (LevelledElement, LevelledElement) {
        let d = x.depth.max(y.depth);
        (self.refine(x, d), self.refine(y, d))
    }

    fn zip_with(
        &self,
        x: &LevelledElement,
        y: &LevelledElement,
        f: impl Fn(&BaseElement, &BaseElement) -> BaseElement,
    ) -> LevelledElement {
        if x.depth != y.depth {
            let (x, y) = self.align(x, y);
            return self.zip_with(&x, &y, f);
        }
        LevelledElement {
            depth: x.depth,
            values: x
                .values
                .iter()
                .zip(&y.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn mul(&self, x: &LevelledElement, y: &LevelledElement) -> LevelledElement {
        self.zip_with(x, y, |a, b| {
            if a.is_zero() || b.is_zero() {
                self.base.zero()
            } else {
                a.mul(b)
            }
        })
    }

    pub fn add(&self, x: &LevelledElement, y: &LevelledElement) -> LevelledElement {
        self.zip_with(x, y, BaseElement::add)
    }

    pub fn sub(&self, x: &LevelledElement, y: &LevelledElement) -> LevelledElement {
        self.zip_with(x, y, BaseElement::sub)
    }

    pub fn scale(&self, x: &LevelledElement, s: C64) -> LevelledElement {
        LevelledElement {
            depth: x.depth,
            values: x.values.iter().map(|v| v.scale(s)).collect(),
        }
    }

    pub fn adjoint(&self, x: &LevelledElement) -> LevelledElement {
        LevelledElement {
            depth: x.depth,
            values: x.values.iter().map(BaseElement::adjoint).collect(),
        }
    }

    /// C*-norm: the largest norm over atoms.
    pub fn norm(&self, x: &LevelledElement) -> f64 {
        x.values.iter().map(BaseElement::norm).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coordinates.
    pub fn frobenius(&self, x: &LevelledElement) -> f64 {
        x.values
            .iter()
            .map(|v| v.frobenius().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self, x: &LevelledElement) -> bool {
        x.values.iter().all(BaseElement::is_zero)
    }

    fn conj_gen(&self, i: usize, v: &BaseElement) -> BaseElement {
        if self.trivial[i] {
            return v.clone();
        }
        let w = &self.generators[i].matrix;
        let full = self.base.to_full(v);
        self.base.from_full(&(w * full * w.adjoint())).0
    }

    fn conj_gen_inverse(&self, i: usize, v: &BaseElement) -> BaseElement {
        if self.trivial[i] {
            return v.clone();
        }
        let w = &self.generators[i].matrix;
        let full = self.base.to_full(v);
        self.base.from_full(&(w.adjoint() * full * w)).0
    }

    /// `β_p` on a base value: `β_{p_1} ∘ … ∘ β_{p_n}`.
    pub fn beta(&self, p: &Element, v: &BaseElement) -> Result<BaseElement> {
        let f = self.semigroup.factorize(p)?;
        Ok(f.iter()
            .rev()
            .fold(v.clone(), |acc, &g| self.conj_gen(g, &acc)))
    }

    /// `β_p^{-1}` on a base value.
    pub fn beta_inverse(&self, p: &Element, v: &BaseElement) -> Result<BaseElement> {
        let f = self.semigroup.factorize(p)?;
        Ok(f.iter()
            .fold(v.clone(), |acc, &g| self.conj_gen_inverse(g, &acc)))
    }

    fn flat_only_automorphisms(&self) -> Result<()> {
        if self.has_stage_maps {
            return Err(Error::Unsupported {
                what: "composing generator maps".into(),
                reason: "maps into a larger algebra can only be validated".into(),
            });
        }
        Ok(())
    }

    /// `α_p(x)`.
    pub fn apply_endo(&self, p: &Element, x: &LevelledElement) -> Result<LevelledElement> {
        self.semigroup.check(p)?;
        if !self.model.is_levelled() {
            self.flat_only_automorphisms()?;
            return Ok(LevelledElement {
                depth: 0,
                values: vec![self.beta(p, &x.values[0])?],
            });
        }
        let nd = self.shape.shifted_depth(x.depth, p);
        let mut out = self.zero(nd);
        for (i, v) in x.values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let b = self.beta(p, v)?;
            for j in self.shape.shift(x.depth, i, p) {
                out.values[j] = b.clone();
            }
        }
        Ok(out)
    }

    /// The range projection `E_p = α_p(1)`.
    pub fn range_projection(&self, p: &Element) -> Result<LevelledElement> {
        self.apply_endo(p, &self.unit(0))
    }

    /// The left inverse `α_{p^{-1}}(x) = α_p^{-1}(E_p x)`.
    pub fn alpha_inverse(&self, p: &Element, x: &LevelledElement) -> Result<LevelledElement> {
        self.semigroup.check(p)?;
        if !self.model.is_levelled() {
            self.flat_only_automorphisms()?;
            let y = LevelledElement {
                depth: 0,
                values: vec![self.beta_inverse(p, &x.values[0])?],
            };
            let back = self.apply_endo(p, &y)?;
            let ep = self.range_projection(p)?;
            let residual = self.frobenius(&self.sub(&back, &self.mul(&ep, x)));
            if residual > CONFORMITY_TOL * self.frobenius(x).max(1.0) {
                return Err(Error::NotConformable { residual });
            }
            return Ok(y);
        }
        let x = self.refine(x, x.depth.max(self.shape.depth_of(p)));
        let nd = self.shape.unshifted_depth(x.depth, p);
        let mut out = self.zero(nd);
        for (i, v) in x.values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let targets = self.shape.unshift(x.depth, i, p);
            if targets.is_empty() {
                continue;
            }
            let b = self.beta_inverse(p, v)?;
            for j in targets {
                out.values[j] = b.clone();
            }
        }
        Ok(out)
    }

    /// A linearly independent spanning set of `E_p A^{(d)} E_q`, empty when
    /// `p` and `q` have no common upper bound.
    pub fn corner_basis(
        &self,
        p: &Element,
        q: &Element,
        depth: usize,
    ) -> Result<Vec<LevelledElement>> {
        if self.semigroup.lcm(p, q)?.is_none() {
            return Ok(Vec::new());
        }
        let d = self.depth(depth.max(self.depth_of(p)).max(self.depth_of(q)));
        let ep = self.refine(&self.range_projection(p)?, d);
        let eq = self.refine(&self.range_projection(q)?, d);
        let mut kept = Vec::new();
        let mut ortho: Vec<Vec<C64>> = Vec::new();
        for i in 0..self.dim(d) {
            let x = self.mul(&self.mul(&ep, &self.basis_element(d, i)), &eq);
            let mut v = self.coords(&x);
            let n0 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n0 == 0.0 {
                continue;
            }
            for u in &ortho {
                let dot: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= dot * ui;
                }
            }
            let n1 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n1 > 1e-10 * n0 {
                ortho.push(v.iter().map(|z| z / n1).collect());
                kept.push(x);
            }
        }
        Ok(kept)
    }

    /// Checks that the generators act by injective maps with ideal ranges and
    /// that range projections multiply along least common upper bounds.
    pub fn validate(&self, depth: usize) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for i in 0..self.semigroup.rank {
            let (ideal, injective) = if self.has_stage_maps || !self.model.is_levelled() {
                self.spatial_generator_checks(i)
            } else {
                self.levelled_generator_checks(i, depth)?
            };
            checks.push(ideal);
            checks.push(injective);
        }
        if !self.has_stage_maps {
            let elems = self
                .semigroup
                .enumerate_up_to(depth, DEFAULT_ENUMERATION_CAP)?;
            let mut worst = Worst::default();
            for p in &elems {
                let ep = self.range_projection(p)?;
                for q in &elems {
                    let eq = self.range_projection(q)?;
                    let expected = match self.semigroup.lcm(p, q)? {
                        Some(r) => self.range_projection(&r)?,
                        None => self.zero(0),
                    };
                    let r = self.frobenius(&self.sub(&self.mul(&ep, &eq), &expected));
                    worst.see(r, || format!("p={p}, q={q}"));
                }
            }
            checks.push(worst.check("range projections multiply along lcm", 1e-12));
        }
        Ok(checks)
    }

    fn spatial_generator_checks(&self, i: usize) -> (Check, Check) {
        let g = &self.generators[i];
        let target = g.target.clone().unwrap_or_else(|| self.base.clone());
        let w = &g.matrix;
        let images: Vec<CMat> = (0..self.base.dim())
            .map(|j| w * self.base.to_full(&self.base.basis_element(j)) * w.adjoint())
            .collect();
        let columns: Vec<Vec<C64>> = images
            .iter()
            .map(|m| target.from_full(m).0.coords())
            .collect();
        let image_mat = column_matrix(&columns);
        let (q, _) = range_and_pinv(&image_mat, 1e-20);
        let mut worst = Worst::default();
        for a in 0..target.dim() {
            let af = target.to_full(&target.basis_element(a));
            for (j, img) in images.iter().enumerate() {
                for prod in [&af * img, img * &af] {
                    let v = column_matrix(&[target.from_full(&prod).0.coords()]);
                    let n = v.norm();
                    if n == 0.0 {
                        continue;
                    }
                    let r = (&v - &q * (q.adjoint() * &v)).norm() / n;
                    worst.see(r, || {
                        format!(
                            "image not an ideal: a=e{:?} times α(e{:?}) leaves the image",
                            target.basis_position(a),
                            self.base.basis_position(j)
                        )
                    });
                }
            }
        }
        let idx = i + 1;
        (
            worst.check(format!("generator {idx} range is an ideal"), 1e-9),
            injectivity_check(idx, &image_mat),
        )
    }

    fn levelled_generator_checks(&self, i: usize, depth: usize) -> Result<(Check, Check)> {
        let g = self.semigroup.generator(i);
        let mut worst = Worst::default();
        let mut injective = None;
        for ds in 0..=depth {
            let source = self.basis(ds);
            let images: Vec<LevelledElement> = source
                .iter()
                .map(|b| self.apply_endo(&g, b))
                .collect::<Result<_>>()?;
            let nd = images[0].depth;
            let columns: Vec<Vec<C64>> = images.iter().map(|x| self.coords(x)).collect();
            let image_mat = column_matrix(&columns);
            let (q, _) = range_and_pinv(&image_mat, 1e-20);
            for (ai, a) in source.iter().enumerate() {
                for (j, img) in images.iter().enumerate() {
                    for prod in [self.mul(a, img), self.mul(img, a)] {
                        let v = column_matrix(&[self.coords(&self.refine(&prod, nd))]);
                        let n = v.norm();
                        if n == 0.0 {
                            continue;
                        }
                        let r = (&v - &q * (q.adjoint() * &v)).norm() / n;
                        worst.see(r, || {
                            format!(
                                "image not an ideal: {} times α({}) at depth {ds}",
                                self.describe_basis(ds, ai),
                                self.describe_basis(ds, j)
                            )
                        });
                    }
                }
            }
            if ds == depth {
                injective = Some(injectivity_check(i + 1, &image_mat));
            }
        }
        let idx = i + 1;
        Ok((
            worst.check(format!("generator {idx} range is an ideal"), 1e-9),
            injective.expect("depth loop runs at least once"),
        ))
    }
}

fn column_matrix(columns: &[Vec<C64>]) -> CMat {
    let rows = columns.first().map_or(0, Vec::len);
    CMat::from_fn(rows, columns.len(), |i, j| columns[j][i])
}

fn injectivity_check(idx: usize, image_mat: &CMat) -> Check {
    let g = image_mat.adjoint() * image_mat;
    let (vals, _) = crate::linalg::hermitian_eigen(&g);
    let smallest = vals.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    Check::at_least(format!("generator {idx} is injective"), smallest, 1e-8)
}

/// Helper used by tests and fixtures: `c(x)` on a real scalar base element.
pub fn scalar(x: f64) -> BaseElement {
    BaseElement {
        blocks: vec![CMat::from_element(1, 1, c(x))],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real, unit};

    fn el(v: &[u32]) -> Element {
        Element(v.to_vec())
    }

    fn toeplitz_free(k: usize) -> LcmSystem {
        LcmSystem::build(
            Semigroup::free_monoid(k).unwrap(),
            Model::ToeplitzFree,
            BaseAlgebra::scalars(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn boundary_generator_maps_unit_to_cylinder() {
        let sys = LcmSystem::build(
            Semigroup::free_monoid(2).unwrap(),
            Model::BoundaryFree,
            BaseAlgebra::scalars(),
            vec![],
        )
        .unwrap();
        let e1 = sys.range_projection(&el(&[1])).unwrap();
        assert_eq!(e1.depth, 1);
        assert_eq!(e1.values, vec![scalar(1.0), scalar(0.0)]);
    }

    #[test]
    fn toeplitz_range_projections_multiply_along_lcm() {
        let sys = LcmSystem::build(
            Semigroup::free_abelian(1).unwrap(),
            Model::ToeplitzAbelian,
            BaseAlgebra::scalars(),
            vec![],
        )
        .unwrap();
        let e2 = sys.range_projection(&el(&[2])).unwrap();
        let e3 = sys.range_projection(&el(&[3])).unwrap();
        let prod = sys.mul(&e2, &e3);
        assert_eq!(sys.refine(&e3, prod.depth), prod);
        let free = toeplitz_free(2);
        let a = free.range_projection(&el(&[1])).unwrap();
        let b = free.range_projection(&el(&[2])).unwrap();
        assert!(free.is_zero(&free.mul(&a, &b)));
    }

    #[test]
    fn inverse_undoes_forward_map() {
        let u = real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sys = LcmSystem::build(
            Semigroup::free_monoid(2).unwrap(),
            Model::ToeplitzFree,
            BaseAlgebra::matrices(2),
            vec![Spatial::unitary(u), Spatial::unitary(CMat::identity(2, 2))],
        )
        .unwrap();
        let p = el(&[1, 2]);
        for i in 0..sys.dim(1) {
            let x = sys.basis_element(1, i);
            let y = sys.apply_endo(&p, &x).unwrap();
            let back = sys.alpha_inverse(&p, &y).unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn stage_maps_fail_the_ideal_check() {
        let w = crate::linalg::kron(&real(2, 1, &[1.0, 0.0]), &CMat::identity(2, 2));
        let sys = LcmSystem::build(
            Semigroup::free_monoid(1).unwrap(),
            Model::Flat,
            BaseAlgebra::matrices(2),
            vec![Spatial::into_target(w, BaseAlgebra::matrices(4))],
        )
        .unwrap();
        let checks = sys.validate(1).unwrap();
        assert!(!checks[0].passed);
        assert!(checks[0].witness.as_ref().unwrap().contains("not an ideal"));
        assert!(checks[1].passed);
    }

    #[test]
    fn builtin_models_validate() {
        for sys in [
            toeplitz_free(2),
            LcmSystem::build(
                Semigroup::free_abelian(2).unwrap(),
                Model::ToeplitzAbelian,
                BaseAlgebra::scalars(),
                vec![],
            )
            .unwrap(),
        ] {
            let checks = sys.validate(2).unwrap();
            assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        }
    }

    #[test]
    fn non_unitary_generators_are_rejected() {
        let err = LcmSystem::build(
            Semigroup::free_monoid(1).unwrap(),
            Model::ToeplitzFree,
            BaseAlgebra::matrices(2),
            vec![Spatial::unitary(unit(2, 0, 0))],
        );
        assert!(matches!(err, Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn corner_basis_of_identity_is_full_basis() {
        let sys = toeplitz_free(2);
        let e = el(&[]);
        assert_eq!(sys.corner_basis(&e, &e, 1).unwrap().len(), sys.dim(1));
        assert!(sys
            .corner_basis(&el(&[1]), &el(&[2]), 2)
            .unwrap()
            .is_empty());
    }
}
