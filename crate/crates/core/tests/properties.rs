use nalgebra::DMatrix;
use proptest::prelude::*;

use strucrank::gcg::rank_estimate;
use strucrank::linalg::{dense_svd, nuclear_norm_of_factors};
use strucrank::selftest::{random_direction, random_factors, random_problem};
use strucrank::structure::{
    apply_structure, block_hankel_spec, build_b, build_c, hankel_spec, project_to_image,
    two_fold_hankel_spec,
};
use strucrank::{svt, RecoveryMode, SparseMatrix, StructureSpec};

fn any_spec() -> impl Strategy<Value = StructureSpec> {
    prop_oneof![
        (1usize..=10, 1usize..=10).prop_map(|(j, k)| hankel_spec(j, k).unwrap()),
        (1usize..=3, 1usize..=3, 1usize..=4, 1usize..=4)
            .prop_map(|(m, n, j, k)| block_hankel_spec(m, n, j, k).unwrap()),
        (1usize..=7, 1usize..=7, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(n1, n2, a, b)| {
            let k1 = 1 + (a * n1 as f64) as usize % n1;
            let k2 = 1 + (b * n2 as f64) as usize % n2;
            two_fold_hankel_spec(n1, n2, k1, k2).unwrap()
        }),
    ]
}

fn spec_and_params() -> impl Strategy<Value = (StructureSpec, Vec<f64>)> {
    any_spec().prop_flat_map(|s| {
        let p = s.n_params();
        (Just(s), prop::collection::vec(-10.0f64..10.0, p))
    })
}

fn spec_and_matrix() -> impl Strategy<Value = (StructureSpec, DMatrix<f64>)> {
    any_spec().prop_flat_map(|s| {
        let (m, n) = (s.rows(), s.cols());
        (Just(s), prop::collection::vec(-10.0f64..10.0, m * n))
            .prop_map(move |(s, v)| (s, DMatrix::from_vec(m, n, v)))
    })
}

fn small_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=8, 1usize..=8).prop_flat_map(|(m, n)| {
        prop::collection::vec(-5.0f64..5.0, m * n).prop_map(move |v| DMatrix::from_vec(m, n, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn structured_matrices_satisfy_b_and_c((spec, y) in spec_and_params()) {
        let q = apply_structure(&spec, &y).unwrap();
        let bq = build_b(&spec).spmv(q.as_slice()).unwrap();
        prop_assert!(bq.iter().all(|&v| v == 0.0));
        for mode in [RecoveryMode::Projection, RecoveryMode::Sparse] {
            let cq = build_c(&spec, mode).spmv(q.as_slice()).unwrap();
            for (a, b) in cq.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn projection_is_idempotent_and_non_expansive((spec, x) in spec_and_matrix()) {
        let p = project_to_image(&spec, &x).unwrap();
        let pp = project_to_image(&spec, &p).unwrap();
        prop_assert!((&pp - &p).norm() <= 1e-12 * p.norm().max(1.0));
        prop_assert!(p.norm() <= x.norm() * (1.0 + 1e-12) + 1e-12);
        // the residual is orthogonal to the image
        prop_assert!((&x - &p).dot(&p).abs() <= 1e-9 * x.norm_squared().max(1.0));
        let bp = build_b(&spec).spmv(p.as_slice()).unwrap();
        prop_assert!(bp.iter().all(|v| v.abs() <= 1e-12 * x.norm().max(1.0)));
    }

    #[test]
    fn projection_recovers_parameters((spec, x) in spec_and_matrix()) {
        let p = project_to_image(&spec, &x).unwrap();
        let y = build_c(&spec, RecoveryMode::Projection).spmv(x.as_slice()).unwrap();
        let q = apply_structure(&spec, &y).unwrap();
        prop_assert!((q - p).norm() <= 1e-12 * x.norm().max(1.0));
    }

    #[test]
    fn svt_soft_thresholds_singular_values(x in small_matrix(), tau in 0.0f64..5.0) {
        let s = dense_svd(&x).unwrap().s;
        let t = dense_svd(&svt(&x, tau).unwrap()).unwrap().s;
        for (a, b) in s.iter().zip(&t) {
            prop_assert!((b - (a - tau).max(0.0)).abs() <= 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn surrogate_bounds_nuclear_norm(seed in 0u64..10_000, m in 1usize..8, n in 1usize..8, r in 1usize..4) {
        let f = random_factors(m, n, r, seed);
        let nuc = nuclear_norm_of_factors(&f.u, &f.v);
        prop_assert!(f.surrogate() >= nuc * (1.0 - 1e-12));
        let dense: f64 = dense_svd(&f.product()).unwrap().s.iter().sum();
        prop_assert!((dense - nuc).abs() <= 1e-10 * dense.max(1.0));
    }

    #[test]
    fn sparse_products_match_dense(
        rows in 1usize..7,
        cols in 1usize..7,
        entries in prop::collection::vec((0usize..7, 0usize..7, -3.0f64..3.0), 0..20),
        seed in 0u64..1000,
    ) {
        let triplets: Vec<(usize, usize, f64)> =
            entries.into_iter().map(|(r, c, v)| (r % rows, c % cols, v)).collect();
        let s = SparseMatrix::from_triplets(rows, cols, &triplets).unwrap();
        let d = s.to_dense();
        let x: Vec<f64> = (0..cols).map(|i| ((i as u64 + seed) % 7) as f64 - 3.0).collect();
        let y: Vec<f64> = (0..rows).map(|i| ((i as u64 * 3 + seed) % 5) as f64 - 2.0).collect();
        let sx = s.spmv(&x).unwrap();
        let dx = &d * nalgebra::DVector::from_vec(x);
        prop_assert!(sx.iter().zip(dx.iter()).all(|(a, b)| (a - b).abs() <= 1e-12));
        let sty = s.spmv_t(&y).unwrap();
        let dty = d.transpose() * nalgebra::DVector::from_vec(y);
        prop_assert!(sty.iter().zip(dty.iter()).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn line_search_step_is_nonnegative_and_improves_model(seed in 0u64..500, eta in 0.01f64..=1.0) {
        let prob = random_problem(seed, 80).unwrap();
        let factors = random_factors(prob.rows(), prob.cols(), 2, seed);
        let shrunk = factors.scaled((1.0 - eta).sqrt());
        let z = random_direction(prob.rows(), prob.cols(), seed);
        let ls = prob.line_search_theta(&shrunk, &z, eta).unwrap();
        prop_assert!(ls.theta >= 0.0);
        let h0 = prob.h_value(&shrunk, &z, 0.0).unwrap();
        let hs = prob.h_value(&shrunk, &z, ls.theta).unwrap();
        prop_assert!(hs <= h0 + 1e-12 * h0.abs().max(1.0));
        prop_assert!((hs - ls.h_min).abs() <= 1e-9 * hs.abs().max(1.0));
    }

    #[test]
    fn rank_estimate_is_monotone_in_threshold(
        mut s in prop::collection::vec(0.0f64..10.0, 0..12),
        a in 1e-6f64..5.0,
        b in 1e-6f64..5.0,
    ) {
        s.sort_by(|x, y| y.total_cmp(x));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(rank_estimate(&s, lo) >= rank_estimate(&s, hi));
        prop_assert_eq!(rank_estimate(&s, lo), s.iter().filter(|&&v| v > lo).count());
    }
}
