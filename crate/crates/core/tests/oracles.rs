//! Dilations compared against constructions computed independently of the
//! Gram-matrix engine.

use lcm_dilation::cpmaps::{phi_f, ContractionFamily, CovariantPair, OperatorMap};
use lcm_dilation::cstar::{Atom, BaseAlgebra, LcmSystem, Model, Spatial};
use lcm_dilation::dilation::{
    check_boundary_relation, covariant_dilate, naimark_dilate, Tolerances,
};
use lcm_dilation::kernel::{assemble_gram, PairKernel, DEFAULT_MAX_DIM};
use lcm_dilation::linalg::{c, max_abs, op_norm, random_contraction, real, CMat};
use lcm_dilation::semigroup::{Element, Semigroup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toeplitz_pair(t: CMat) -> CovariantPair {
    let s = Semigroup::free_abelian(1).unwrap();
    let sys = LcmSystem::build(s, Model::ToeplitzAbelian, BaseAlgebra::scalars(), vec![]).unwrap();
    let h = t.nrows();
    let fam = ContractionFamily::new(s, vec![t]).unwrap();
    CovariantPair::new(sys, OperatorMap::scalar(h), fam).unwrap()
}

fn sqrt_psd(m: &CMat) -> CMat {
    let e = m.clone().symmetric_eigen();
    let d = CMat::from_diagonal(&e.eigenvalues.map(|v| c(v.max(0.0).sqrt())));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// Schäffer isometric dilation of `T` on `H ⊕ H^m`:
/// `V(x, d_0, d_1, …) = (Tx, D_T x, d_0, d_1, …)`, cut off after `m` copies.
struct Schaffer {
    v: CMat,
    h: usize,
}

impl Schaffer {
    fn new(t: &CMat, copies: usize) -> Self {
        let h = t.nrows();
        let n = h * (copies + 1);
        let defect = sqrt_psd(&(CMat::identity(h, h) - t.adjoint() * t));
        let mut v = CMat::zeros(n, n);
        v.view_mut((0, 0), (h, h)).copy_from(t);
        v.view_mut((h, 0), (h, h)).copy_from(&defect);
        for k in 1..copies {
            v.view_mut(((k + 1) * h, k * h), (h, h))
                .copy_from(&CMat::identity(h, h));
        }
        Schaffer { v, h }
    }

    fn power(&self, n: usize) -> CMat {
        let mut m = CMat::identity(self.v.nrows(), self.v.nrows());
        for _ in 0..n {
            m = &self.v * m;
        }
        m
    }

    fn range(&self, n: usize) -> CMat {
        let p = self.power(n);
        &p * p.adjoint()
    }

    fn embedding(&self) -> CMat {
        CMat::identity(self.v.nrows(), self.h)
    }
}

/// Gram matrix of the spanning vectors `π(α_q(c)) V^q h` computed inside the
/// Schäffer model, in the order of the engine's catalog.
fn schaffer_gram(t: &CMat, depth: usize) -> (CMat, CMat) {
    let pair = toeplitz_pair(t.clone());
    let kernel = PairKernel::new(pair.clone());
    let gram = assemble_gram(&kernel, depth, DEFAULT_MAX_DIM).unwrap();
    let model = Schaffer::new(t, 2 * depth + 2);
    let shape = pair.system.shape();
    let h = model.h;
    let mut cols = Vec::new();
    for e in &gram.catalog.entries {
        let q = e.word.0[0] as usize;
        let proj = match shape.decode(e.depth, e.basis) {
            Atom::Grid(v) if v[0] as usize == e.depth => model.range(v[0] as usize + q),
            Atom::Grid(v) => {
                let n = v[0] as usize + q;
                model.range(n) - model.range(n + 1)
            }
            other => panic!("unexpected atom {other:?}"),
        };
        cols.push(proj * model.power(q) * model.embedding());
    }
    let n = cols.len();
    let mut g = CMat::zeros(n * h, n * h);
    for i in 0..n {
        for j in 0..n {
            g.view_mut((i * h, j * h), (h, h))
                .copy_from(&(cols[i].adjoint() * &cols[j]));
        }
    }
    (gram.matrix, g)
}

#[test]
fn gram_matches_schaffer_model_for_half() {
    let (engine, oracle) = schaffer_gram(&real(1, 1, &[0.5]), 4);
    assert!(max_abs(&(engine - oracle)) < 1e-12);
}

#[test]
fn gram_matches_schaffer_model_for_random_contractions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let t = random_contraction(2, 0.9, &mut rng);
        let (engine, oracle) = schaffer_gram(&t, 3);
        assert!(max_abs(&(engine - oracle)) < 1e-10);
    }
}

#[test]
fn compressions_of_powers_reproduce_the_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in [real(1, 1, &[0.5]), random_contraction(2, 0.95, &mut rng)] {
        let res = covariant_dilate(
            &toeplitz_pair(t.clone()),
            4,
            Tolerances::default(),
            DEFAULT_MAX_DIM,
        )
        .unwrap();
        assert!(res.passed());
        let j = &res.embedding;
        let mut tn = CMat::identity(t.nrows(), t.nrows());
        for n in 0..=4u32 {
            let v = res.isometry(&Element(vec![n])).unwrap();
            assert!(op_norm(&(j.adjoint() * v * j - &tn)) < 1e-10, "n = {n}");
            tn = &t * tn;
        }
    }
}

#[test]
fn unitary_is_its_own_dilation() {
    let res = covariant_dilate(
        &toeplitz_pair(real(1, 1, &[1.0])),
        3,
        Tolerances::default(),
        DEFAULT_MAX_DIM,
    )
    .unwrap();
    assert!(res.passed());
    assert_eq!(res.dim, 1);
}

#[test]
fn star_commuting_unitaries_are_fixed_points() {
    let s = Semigroup::free_abelian(2).unwrap();
    let sys = LcmSystem::build(s, Model::ToeplitzAbelian, BaseAlgebra::scalars(), vec![]).unwrap();
    let u1 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c(1.0),
        lcm_dilation::linalg::C64::new(0.0, 1.0),
    ]));
    let u2 = real(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    let fam = ContractionFamily::new(s, vec![u1, u2]).unwrap();
    let pair = CovariantPair::new(sys, OperatorMap::scalar(2), fam).unwrap();
    let res = covariant_dilate(&pair, 2, Tolerances::default(), DEFAULT_MAX_DIM).unwrap();
    let failed: Vec<_> = res.report.iter().filter(|c| !c.passed).collect();
    assert!(failed.is_empty(), "{failed:?}");
    assert_eq!(res.dim, 2);
}

#[test]
fn scalar_row_coisometry_gives_cuntz_isometries() {
    let s = Semigroup::free_monoid(2).unwrap();
    let sys = LcmSystem::build(s, Model::BoundaryFree, BaseAlgebra::scalars(), vec![]).unwrap();
    let fam = ContractionFamily::new(s, vec![real(1, 1, &[0.6]), real(1, 1, &[0.8])]).unwrap();
    let pair = CovariantPair::new(sys, OperatorMap::scalar(1), fam).unwrap();
    let tol = Tolerances::default();
    let res = covariant_dilate(&pair, 3, tol, DEFAULT_MAX_DIM).unwrap();
    assert!(res.passed());
    let f = [Element(vec![1]), Element(vec![2])];
    let checks = check_boundary_relation(&res, &pair, &f, tol).unwrap();
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");
}

#[test]
fn toeplitz_half_does_not_satisfy_the_boundary_relation() {
    let pair = toeplitz_pair(real(1, 1, &[0.5]));
    let tol = Tolerances::default();
    let res = covariant_dilate(&pair, 3, tol, DEFAULT_MAX_DIM).unwrap();
    let checks = check_boundary_relation(&res, &pair, &[Element(vec![1])], tol).unwrap();
    let premise = checks.iter().find(|c| c.name == "φ_F vanishes").unwrap();
    assert!((premise.value - 0.75).abs() < 1e-12);
    let relation = checks.last().unwrap();
    assert!(!relation.passed && relation.value > 0.5);
}

#[test]
fn compressions_do_not_depend_on_depth() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = Semigroup::free_monoid(2).unwrap();
    let sys = LcmSystem::build(s, Model::ToeplitzFree, BaseAlgebra::scalars(), vec![]).unwrap();
    let t1 = random_contraction(2, 0.6, &mut rng);
    let t2 = random_contraction(2, 0.6, &mut rng);
    let fam = ContractionFamily::new(s, vec![t1, t2]).unwrap();
    let pair = CovariantPair::new(sys, OperatorMap::scalar(2), fam).unwrap();
    let tol = Tolerances::default();
    let small = covariant_dilate(&pair, 3, tol, DEFAULT_MAX_DIM).unwrap();
    let large = covariant_dilate(&pair, 4, tol, DEFAULT_MAX_DIM).unwrap();
    assert!(small.passed() && large.passed());
    for w in &small.isometries {
        let a = small.embedding.adjoint() * &w.matrix * &small.embedding;
        let v = large.isometry(&w.word).unwrap();
        let b = large.embedding.adjoint() * v * &large.embedding;
        assert!(op_norm(&(a - b)) < 1e-10, "{}", w.word);
    }
}

fn m2_system() -> LcmSystem {
    let s = Semigroup::free_monoid(2).unwrap();
    LcmSystem::build(s, Model::BoundaryFree, BaseAlgebra::matrices(2), vec![]).unwrap()
}

fn pair_unchecked(phi: OperatorMap, t: Vec<CMat>) -> CovariantPair {
    let s = Semigroup::free_monoid(2).unwrap();
    let fam = ContractionFamily::new(s, t).unwrap();
    CovariantPair::new_unchecked(m2_system(), phi, fam).unwrap()
}

fn column_units() -> Vec<CMat> {
    vec![
        real(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        real(2, 2, &[0.0, 0.0, 1.0, 0.0]),
    ]
}

#[test]
fn boundary_map_of_diagonal_with_column_units() {
    // φ_F(a) = diag(a11, a22) − E11 diag(a) E11 − E21 diag(a) E12 = diag(0, a22 − a11)
    let pair = pair_unchecked(OperatorMap::diagonal(2), column_units());
    let f = [Element(vec![1]), Element(vec![2])];
    let map = phi_f(&pair, &f).unwrap();
    let expected = [
        real(2, 2, &[0.0, 0.0, 0.0, -1.0]),
        CMat::zeros(2, 2),
        CMat::zeros(2, 2),
        real(2, 2, &[0.0, 0.0, 0.0, 1.0]),
    ];
    for (got, want) in map.values.iter().zip(&expected) {
        assert!(max_abs(&(got - want)) < 1e-15);
    }
    // the same pairing also fails covariance, so it is not a valid input
    let s = Semigroup::free_monoid(2).unwrap();
    let fam = ContractionFamily::new(s, column_units()).unwrap();
    assert!(CovariantPair::new(m2_system(), OperatorMap::diagonal(2), fam).is_err());
}

#[test]
fn boundary_map_vanishes_for_covariant_row_coisometries() {
    let f = [Element(vec![1]), Element(vec![2])];
    let diag_units = vec![
        real(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        real(2, 2, &[0.0, 0.0, 0.0, 1.0]),
    ];
    let trace = OperatorMap::from_fn(BaseAlgebra::matrices(2), 2, |a| {
        CMat::identity(2, 2) * (a.blocks[0].trace() * c(0.5))
    });
    for pair in [
        pair_unchecked(OperatorMap::diagonal(2), diag_units),
        pair_unchecked(trace, column_units()),
    ] {
        let map = phi_f(&pair, &f).unwrap();
        assert!(map.values.iter().all(|v| max_abs(v) < 1e-15));
    }
}

#[test]
fn transpose_kernel_is_not_positive() {
    let s = Semigroup::free_abelian(1).unwrap();
    let sys = LcmSystem::build(
        s,
        Model::Flat,
        BaseAlgebra::matrices(2),
        vec![Spatial::unitary(CMat::identity(2, 2))],
    )
    .unwrap();
    let fam = ContractionFamily::new(s, vec![CMat::identity(2, 2)]).unwrap();
    let pair = CovariantPair::new(sys, OperatorMap::transpose(2), fam).unwrap();
    let err = naimark_dilate(
        &PairKernel::new(pair),
        1,
        Tolerances::default(),
        DEFAULT_MAX_DIM,
    )
    .unwrap_err();
    match err {
        lcm_dilation::Error::NotPositive {
            min_eigenvalue,
            lambda_max,
            ..
        } => {
            assert!(min_eigenvalue <= -1e-3 * lambda_max);
        }
        other => panic!("unexpected {other:?}"),
    }
}
