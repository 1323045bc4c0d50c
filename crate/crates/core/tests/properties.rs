use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riplab::distortion::{best_k_approx, compressible_to_distortion_bound, distortion, distortion_to_compressibility};
use riplab::ensembles::{generate, EnsembleSpec};
use riplab::matcore::{frobenius_sq, lp_norm, normalize_sqrt_n, op_norm_l1, remove_rows_cols, scale};
use riplab::ripcert::{rip_exact_l2, rip_sampled, DEFAULT_SUPPORT_CAP};
use riplab::spectral::{eigh, exp_action, gram, kernel_projector, numeric_rank};
use riplab::witness::{arip_witness, heavy_column_strip, row_removal, WitnessOptions};
use riplab::{DenseMatrix, IndexSet};

fn matrix(max_m: usize, max_n: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
        prop::collection::vec(-3.0f64..3.0, m * n).prop_map(move |d| DenseMatrix::new(m, n, d).unwrap())
    })
}

fn vector(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..=max_n).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lp_norms_non_increasing_in_p(x in vector(12)) {
        let ps = [1.0, 1.3, 2.0, 3.5, f64::INFINITY];
        for w in ps.windows(2) {
            prop_assert!(lp_norm(&x, w[1]).unwrap() <= lp_norm(&x, w[0]).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn op_norm_l1_is_max_over_coordinates(a in matrix(6, 6)) {
        let na = to_na(&a);
        let best = (0..a.cols())
            .map(|j| na.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        prop_assert!((op_norm_l1(&a) - best).abs() <= 1e-12 * best.max(1.0));
    }

    #[test]
    fn frobenius_is_gram_trace(a in matrix(7, 7)) {
        let b = gram(&a);
        let trace: f64 = (0..a.cols()).map(|i| b.get(i, i)).sum();
        prop_assert!((frobenius_sq(&a) - trace).abs() <= 1e-12 * trace.max(1.0));
        let nb = to_na(&a).transpose() * to_na(&a);
        prop_assert!((to_na(&b) - nb).abs().max() <= 1e-12 * trace.max(1.0));
    }

    #[test]
    fn removal_composes(a in matrix(6, 6), r1 in prop::collection::vec(any::<bool>(), 6), c1 in prop::collection::vec(any::<bool>(), 6)) {
        let rows: Vec<usize> = (0..a.rows()).filter(|&i| r1[i]).collect();
        let cols: Vec<usize> = (0..a.cols()).filter(|&j| c1[j]).collect();
        let all = remove_rows_cols(&a, &IndexSet::new(rows.clone(), a.rows()).unwrap(), &IndexSet::new(cols.clone(), a.cols()).unwrap()).unwrap();
        let step = remove_rows_cols(&a, &IndexSet::new(rows, a.rows()).unwrap(), &IndexSet::empty(a.cols())).unwrap();
        let step = remove_rows_cols(&step, &IndexSet::empty(step.rows()), &IndexSet::new(cols, a.cols()).unwrap()).unwrap();
        prop_assert_eq!(all, step);
    }

    #[test]
    fn exp_action_matches_power_series(a in matrix(4, 5), t in 0.0f64..0.5, i in 0usize..5) {
        let n = a.cols();
        let i = i % n;
        let b = to_na(&gram(&a));
        // Taylor series with scaling and squaring, independent of the eigendecomposition.
        let norm = t * b.abs().row_sum().max();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let h = -t / 2f64.powi(squarings);
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for j in 1..30 {
            term = &term * &b * (h / j as f64);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        let e = eigh(&gram(&a)).unwrap();
        let x = exp_action(&e, t, i).unwrap();
        let expected = sum.column(i);
        let err = x.iter().zip(expected.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9, "err {err}");
    }

    #[test]
    fn exp_action_norm_non_increasing(a in matrix(5, 6), t1 in 0.0f64..2.0, dt in 0.0f64..2.0) {
        let e = eigh(&gram(&a)).unwrap();
        let x1 = exp_action(&e, t1, 0).unwrap();
        let x2 = exp_action(&e, t1 + dt, 0).unwrap();
        prop_assert!(lp_norm(&x2, 2.0).unwrap() <= lp_norm(&x1, 2.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn projector_trace_plus_rank_is_n(a in matrix(5, 8)) {
        let e = eigh(&gram(&a)).unwrap();
        let p = kernel_projector(&e);
        let n = a.cols() as f64;
        prop_assert!((p.trace() + numeric_rank(&e) as f64 - n).abs() <= 1e-9);
        let rank = to_na(&a).rank(1e-8);
        prop_assert_eq!(numeric_rank(&e), rank);
    }

    #[test]
    fn distortion_bounds(x in vector(32)) {
        for (q, p) in [(1.0, 2.0), (1.0, 1.5), (1.5, 2.0)] {
            let d = distortion(&x, q, p).unwrap();
            prop_assert!(d.delta >= 1.0 - 1e-9);
            prop_assert!(d.delta <= d.upper_bound() * (1.0 + 1e-9));
            prop_assert!(d.delta >= d.support_lower_bound() * (1.0 - 1e-9));
        }
    }

    #[test]
    fn compressibility_conversions(x in vector(32), k in 1usize..32) {
        let n = x.len();
        let k = k.min(n);
        for (q, p) in [(1.0, 2.0), (1.0, 1.5), (1.5, 2.0)] {
            let d = distortion(&x, q, p).unwrap().delta;
            let w = best_k_approx(&x, k, p).unwrap();
            let floor = compressible_to_distortion_bound(k, n, w.epsilon, q, p).unwrap();
            prop_assert!(d >= floor - 1e-9);
            prop_assert!(distortion_to_compressibility(&x, k, q, p).is_ok());
        }
    }

    #[test]
    fn scaling_leaves_ratio_bound(a in matrix(5, 6), c in 0.01f64..100.0) {
        let n = a.cols();
        let k = 2.min(n);
        if let (Ok(e1), Ok(e2)) = (rip_exact_l2(&a, k, DEFAULT_SUPPORT_CAP), rip_exact_l2(&scale(&a, c), k, DEFAULT_SUPPORT_CAP)) {
            prop_assert!((e1.ratio_bound - e2.ratio_bound).abs() <= 1e-9 * e1.ratio_bound);
        }
        let s1 = rip_sampled(&a, k, 1.5, 50, 3);
        let s2 = rip_sampled(&scale(&a, c), k, 1.5, 50, 3);
        if let (Ok(s1), Ok(s2)) = (s1, s2) {
            prop_assert!((s1.ratio_bound - s2.ratio_bound).abs() <= 1e-12 * s1.ratio_bound);
        }
    }
}

#[test]
fn sampled_never_exceeds_exact() {
    for seed in 0..10 {
        let a = generate(&EnsembleSpec::new("denseGaussian", 5, 8, None, seed)).unwrap();
        for k in 1..=3 {
            let exact = rip_exact_l2(&a, k, DEFAULT_SUPPORT_CAP).unwrap();
            let sampled = rip_sampled(&a, k, 2.0, 2000, seed).unwrap();
            assert!(sampled.ratio_bound <= exact.ratio_bound * (1.0 + 1e-9));
        }
    }
}

#[test]
fn witness_invariants_on_assorted_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..40 {
        let m = rng.random_range(2..12);
        let n = rng.random_range(m + 2..24);
        let a = DenseMatrix::from_fn(m, n, |_, _| {
            if rng.random_bool(0.4) {
                rng.random_range(-2.0..2.0)
            } else {
                0.0
            }
        })
        .unwrap();
        if a.is_zero() {
            continue;
        }
        let k = rng.random_range(1..=n);
        match arip_witness(&a, k, &WitnessOptions::default()) {
            Ok(w) => {
                for c in w.check_invariants() {
                    // The stated image bound can exceed what is proved when 2te > 1.
                    if c.name.starts_with("imageL2") && 2.0 * w.t * std::f64::consts::E > 1.0 {
                        assert!(w.proved_image_bound_holds(), "trial {trial}: {w:?}");
                        continue;
                    }
                    assert!(c.holds, "trial {trial}: {c:?}");
                }
            }
            Err(riplab::RipError::Vacuous(_)) | Err(riplab::RipError::NoKernel { .. }) => {}
            Err(e) => panic!("trial {trial}: {e}"),
        }
    }
}

#[test]
fn row_removal_preserves_lower_bound() {
    // ||A_{I^c} x||^2 >= ||A x||^2 - k' delta^2 Kest^2 ||x||^2 for x off J
    // with ||x||_1 <= sqrt(k') ||x||_2.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..5 {
        let a = generate(&EnsembleSpec::new("columnRegular", 32, 64, Some(4), seed)).unwrap();
        let (an, _) = normalize_sqrt_n(&a).unwrap();
        let rows = IndexSet::new((0..8).collect(), 32).unwrap();
        let (kprime, delta, kest) = (3usize, 0.3, 0.8);
        let (_, report) = row_removal(&a, &rows, kprime, delta, 32, kest, 2.0).unwrap();
        let kept_rows: Vec<usize> = (8..32).collect();
        let a_rest = an.select_rows(&kept_rows).unwrap();
        let free: Vec<usize> = (0..64).filter(|j| !report.removed_cols.contains(*j)).collect();
        let mut checked = 0;
        while checked < 1000 {
            let mut x = vec![0.0; 64];
            for _ in 0..kprime {
                x[free[rng.random_range(0..free.len())]] = rng.random_range(-1.0..1.0);
            }
            let l1: f64 = x.iter().map(|v: &f64| v.abs()).sum();
            let l2 = lp_norm(&x, 2.0).unwrap();
            if l2 == 0.0 || l1 > (kprime as f64).sqrt() * l2 {
                continue;
            }
            checked += 1;
            let full = lp_norm(&an.matvec(&x).unwrap(), 2.0).unwrap();
            let rest = lp_norm(&a_rest.matvec(&x).unwrap(), 2.0).unwrap();
            let floor = full * full - kprime as f64 * delta * delta * kest * kest * l2 * l2;
            assert!(rest * rest >= floor - 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn heavy_strip_bounds() {
    for seed in 0..10 {
        let a = generate(&EnsembleSpec::new("columnRegular", 32, 64, Some(4), seed)).unwrap();
        let (_, r) = heavy_column_strip(&a, 2.0).unwrap();
        assert!(r.removed.len() as f64 <= r.cardinality_bound);
        assert!(r.column_premise);
        assert_eq!(r.frob_ok, Some(true));
    }
}
