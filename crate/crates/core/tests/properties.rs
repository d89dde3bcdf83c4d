use lcm_dilation::cpmaps::{ewf_projection, ContractionFamily, CovariantPair, OperatorMap};
use lcm_dilation::cstar::{BaseAlgebra, LcmSystem, Model};
use lcm_dilation::kernel::{assemble_gram, Kernel, PairKernel, DEFAULT_MAX_DIM};
use lcm_dilation::linalg::{max_abs, psd_check, random_contraction, CMat};
use lcm_dilation::semigroup::{Element, RightLcmSemigroup, Semigroup, DEFAULT_ENUMERATION_CAP};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn word() -> impl Strategy<Value = Element> {
    prop::collection::vec(1u32..=3, 0..5).prop_map(Element)
}

fn grid() -> impl Strategy<Value = Element> {
    prop::collection::vec(0u32..4, 3).prop_map(Element)
}

fn lcm_laws(s: &Semigroup, p: &Element, q: &Element, depth: usize) {
    let r = s.lcm(p, q).unwrap();
    assert_eq!(r, s.lcm(q, p).unwrap());
    // every common multiple within reach is a multiple of the lcm
    for x in s.enumerate_up_to(depth, DEFAULT_ENUMERATION_CAP).unwrap() {
        let common =
            s.left_divide(p, &x).unwrap().is_some() && s.left_divide(q, &x).unwrap().is_some();
        match &r {
            Some(r) if common => assert!(s.left_divide(r, &x).unwrap().is_some()),
            None => assert!(!common),
            _ => {}
        }
    }
    if let Some(r) = r {
        let a = s.left_divide(p, &r).unwrap().unwrap();
        assert_eq!(s.multiply(p, &a).unwrap(), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_monoid_lcm_laws(p in word(), q in word()) {
        let s = Semigroup::free_monoid(3).unwrap();
        lcm_laws(&s, &p, &q, 5);
    }

    #[test]
    fn free_abelian_lcm_laws(p in grid(), q in grid()) {
        let s = Semigroup::free_abelian(3).unwrap();
        lcm_laws(&s, &p, &q, 4);
    }

    #[test]
    fn factorization_multiplies_back(p in word()) {
        let s = Semigroup::free_monoid(3).unwrap();
        let mut acc = s.identity();
        for g in s.factorize(&p).unwrap() {
            acc = s.multiply(&acc, &s.generator(g)).unwrap();
        }
        prop_assert_eq!(acc, p);
    }

    #[test]
    fn range_projections_partition_the_unit(mask in 1usize..(1 << 6), abelian in any::<bool>()) {
        let (s, model) = if abelian {
            (Semigroup::free_abelian(2).unwrap(), Model::ToeplitzAbelian)
        } else {
            (Semigroup::free_monoid(2).unwrap(), Model::ToeplitzFree)
        };
        let sys = LcmSystem::build(s, model, BaseAlgebra::scalars(), vec![]).unwrap();
        let all = s.enumerate_up_to(2, DEFAULT_ENUMERATION_CAP).unwrap();
        let f: Vec<Element> = all.into_iter().skip(1).enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, p)| p)
            .take(4)
            .collect();
        let parts: Vec<_> = (0..1usize << f.len())
            .map(|w| ewf_projection(&sys, w, &f).unwrap())
            .collect();
        let mut total = sys.zero(0);
        for (i, x) in parts.iter().enumerate() {
            total = sys.add(&total, x);
            prop_assert!(sys.norm(&sys.sub(&sys.mul(x, x), x)) < 1e-12);
            for y in &parts[i + 1..] {
                prop_assert!(sys.norm(&sys.mul(x, y)) < 1e-12);
            }
        }
        prop_assert!(sys.norm(&sys.sub(&total, &sys.unit(0))) < 1e-12);
    }

    #[test]
    fn kernels_of_random_row_contractions_are_hermitian_and_positive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Semigroup::free_monoid(2).unwrap();
        let sys = LcmSystem::build(s, Model::ToeplitzFree, BaseAlgebra::scalars(), vec![]).unwrap();
        // ‖T_1‖² + ‖T_2‖² ≤ 1 makes (T_1, T_2) a row contraction
        let t = vec![random_contraction(2, 0.7, &mut rng), random_contraction(2, 0.7, &mut rng)];
        let fam = ContractionFamily::new(s, t).unwrap();
        let pair = CovariantPair::new(sys, OperatorMap::scalar(2), fam).unwrap();
        let k = PairKernel::new(pair);
        let sys = k.system();
        let words = s.enumerate_up_to(2, DEFAULT_ENUMERATION_CAP).unwrap();
        for p in &words {
            for q in &words {
                for a in sys.corner_basis(p, q, 2).unwrap() {
                    let lhs = k.evaluate(p, &a, q).unwrap().adjoint();
                    let rhs = k.evaluate(q, &sys.adjoint(&a), p).unwrap();
                    prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
                }
            }
        }
        let gram = assemble_gram(&k, 2, DEFAULT_MAX_DIM).unwrap();
        prop_assert!(psd_check(&gram.matrix, 1e-8).positive);
    }

    #[test]
    fn trace_state_with_diagonal_coisometries_has_positive_gram(weight in 0.0f64..1.0) {
        let s = Semigroup::free_monoid(2).unwrap();
        let sys = LcmSystem::build(s, Model::BoundaryFree, BaseAlgebra::matrices(2), vec![]).unwrap();
        let t = vec![
            CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![weight.sqrt().into(), (1.0 - weight).sqrt().into()])),
            CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![(1.0 - weight).sqrt().into(), weight.sqrt().into()])),
        ];
        let fam = ContractionFamily::new(s, t).unwrap();
        let trace = OperatorMap::from_fn(BaseAlgebra::matrices(2), 2, |a| {
            CMat::identity(2, 2) * (a.blocks[0].trace() * 0.5)
        });
        let pair = CovariantPair::new(sys, trace, fam).unwrap();
        let gram = assemble_gram(&PairKernel::new(pair), 2, DEFAULT_MAX_DIM).unwrap();
        prop_assert!(psd_check(&gram.matrix, 1e-8).positive);
    }
}
