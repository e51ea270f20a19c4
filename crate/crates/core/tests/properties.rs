use proptest::prelude::*;

use polydil::dilation::{self, CompressTarget, DilationMode, DilationOptions};
use polydil::generators::{self, rng_from_seed};
use polydil::linalg;
use polydil::operator_core::{self, OperatorTuple};
use polydil::vn::{self, VarietySampleSet};
use polydil::{io, Execution, ToleranceConfig};

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn min_subtuple_defect(t: &OperatorTuple, drop: usize) -> f64 {
    let s = operator_core::szego_defect(&operator_core::subtuple(t, drop).unwrap());
    linalg::hermitian_eigen(&linalg::hermitian_part(&s)).values.iter().cloned().fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn generators_are_deterministic(n in 3usize..6, dim in 1usize..5, rho in 0.1f64..0.99, seed in any::<u64>()) {
        let a = generators::gen_diagonal(n, dim, rho, seed).unwrap();
        prop_assert_eq!(&a, &generators::gen_diagonal(n, dim, rho, seed).unwrap());
        prop_assert!(a.ops().iter().all(|m| linalg::op_norm(m) <= rho + 1e-12));
        let m = generators::gen_model_compression(3, 0, 1, 2, 1, seed).unwrap();
        prop_assert_eq!(m, generators::gen_model_compression(3, 0, 1, 2, 1, seed).unwrap());
    }

    #[test]
    fn generator_arguments_are_validated(seed in any::<u64>(), rho in 1.0f64..3.0) {
        prop_assert!(generators::gen_diagonal(3, 2, rho, seed).is_err());
        prop_assert!(generators::gen_diagonal(0, 2, 0.5, seed).is_err());
        prop_assert!(generators::gen_model_compression(3, 1, 1, 2, 1, seed).is_err());
    }

    #[test]
    fn defect_recursion_matches_expansion(n in 1usize..5, dim in 1usize..4, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = generators::gaussian_matrix(dim, dim, &mut rng);
        let a = &a * linalg::c64(0.5 / linalg::op_norm(&a).max(1e-3), 0.0);
        let ops = (0..n)
            .map(|_| &a * generators::uniform_disc(&mut rng, 1.0) + linalg::identity(dim) * generators::uniform_disc(&mut rng, 0.5))
            .collect();
        let t = OperatorTuple::new(ops).unwrap();
        let diff = (operator_core::szego_defect(&t) - operator_core::szego_defect_expanded(&t)).norm();
        prop_assert!(diff <= 1e-12, "{}", diff);
    }

    #[test]
    fn scaling_keeps_szego_positivity(seed in any::<u64>(), r in 0.05f64..0.999, model in any::<bool>()) {
        let t = if model {
            generators::gen_model_compression(3, 0, 1, 2, 1, seed).unwrap()
        } else {
            generators::gen_diagonal(4, 3, 0.95, seed).unwrap()
        };
        let s = operator_core::scale_tuple(&t, r).unwrap();
        for drop in 0..t.len() {
            if min_subtuple_defect(&t, drop) >= -1e-10 {
                prop_assert!(min_subtuple_defect(&s, drop) >= -1e-10);
            }
        }
        let before = operator_core::validate_tuple(&t, &tol());
        let after = operator_core::validate_tuple(&s, &tol());
        prop_assert!(after.max_norm <= r * before.max_norm + 1e-12);
        prop_assert!(after.max_commutator <= r * r * before.max_commutator + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn general_dilation_compresses_back(seed in any::<u64>(), e in 1usize..3, pq in 0usize..3) {
        let (p, q) = [(0, 1), (0, 2), (1, 2)][pq];
        let t = generators::gen_model_compression(3, p, q, e, 1, seed).unwrap();
        let pkg = dilation::build_dilation(DilationMode::General, &t, p, q, &tol(), &DilationOptions::default()).unwrap();
        for i in 0..3 {
            let c = dilation::compress(&pkg, CompressTarget::Coordinate(i)).unwrap();
            let err = linalg::op_norm(&(c - t.op(i)));
            prop_assert!(err <= 1e-8, "coordinate {}: {}", i, err);
        }
    }

    #[test]
    fn variety_csv_reload_keeps_supremum(seed in any::<u64>(), grid in 4usize..12) {
        let t = generators::gen_diagonal(3, 2, 0.8, seed).unwrap();
        let pkg = dilation::build_finite_rank_dilation(&t, 0, 1, &tol(), &DilationOptions::default()).unwrap();
        let set = vn::variety_for_package(&pkg, grid, grid, &tol()).unwrap();
        let mut buf = vec![];
        io::write_variety_csv(&mut buf, 3, &set.expanded()).unwrap();
        let (n, samples) = io::read_variety_csv(buf.as_slice()).unwrap();
        let reloaded = VarietySampleSet { n, grid, samples, trailing_angles: vec![] };
        let mut rng = rng_from_seed(seed ^ 1);
        for _ in 0..3 {
            let p = generators::random_polynomial(3, 3, &mut rng);
            let a = vn::variety_sup(&p, &set, Execution::Sequential).unwrap();
            let b = vn::variety_sup(&p, &reloaded, Execution::Sequential).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
