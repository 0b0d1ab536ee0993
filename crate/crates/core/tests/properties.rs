use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use scc_core::curvature::{pairwise_weights, polar_curvature_sq, AffinityMatrix, CurvatureTable, SampleSet};
use scc_core::evaluation::{error_histogram, misclassification_rate, uniform_edges};
use scc_core::geometry::{dist_to_subspace, fit_affine_ols, DataMatrix, Partition};
use scc_core::linalg::sym_eigen_desc;
use scc_core::rng::stream_rng;

fn tuple(d: usize, ambient: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-5.0..5.0f64, ambient * (d + 2))
        .prop_map(move |v| DMatrix::from_vec(ambient, d + 2, v))
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..4).prop_flat_map(|d| (Just(d), (d + 1)..7))
}

fn any_tuple() -> impl Strategy<Value = (usize, DMatrix<f64>)> {
    dims().prop_flat_map(|(d, ambient)| (Just(d), tuple(d, ambient)))
}

/// Max and min squared pairwise distance.
fn spread(t: &DMatrix<f64>) -> (f64, f64) {
    let m = t.ncols();
    let mut hi: f64 = 0.0;
    let mut lo = f64::INFINITY;
    for i in 0..m {
        for j in (i + 1)..m {
            let v = (t.column(i) - t.column(j)).norm_squared();
            hi = hi.max(v);
            lo = lo.min(v);
        }
    }
    (hi, lo)
}

fn well_spread(t: &DMatrix<f64>) -> bool {
    let (hi, lo) = spread(t);
    lo > 1e-2 * hi
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

fn rotation(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, 1);
    DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng)).qr().q()
}

fn labels(k: usize, n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..k, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn curvature_ignores_point_order((d, t) in any_tuple(), perm_seed in any::<u64>()) {
        prop_assume!(well_spread(&t));
        let m = t.ncols();
        let mut order: Vec<usize> = (0..m).collect();
        let mut s = perm_seed;
        for i in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted = DMatrix::from_fn(t.nrows(), m, |r, c| t[(r, order[c])]);
        let a = polar_curvature_sq(&t, d).unwrap();
        let b = polar_curvature_sq(&permuted, d).unwrap();
        let diam4 = spread(&t).0.powi(2);
        prop_assert!(close(a, b, 1e-9, 1e-12 * diam4), "{a} vs {b}");
    }

    #[test]
    fn curvature_is_rigid_motion_invariant((d, t) in any_tuple(), seed in any::<u64>(), shift in -20.0..20.0f64) {
        prop_assume!(well_spread(&t));
        let rot = rotation(t.nrows(), seed);
        let mut moved = &rot * &t;
        moved.add_scalar_mut(shift);
        let a = polar_curvature_sq(&t, d).unwrap();
        let b = polar_curvature_sq(&moved, d).unwrap();
        let diam4 = spread(&t).0.powi(2);
        prop_assert!(close(a, b, 1e-7, 1e-10 * diam4), "{a} vs {b}");
    }

    #[test]
    fn curvature_scales_with_squared_factor((d, t) in any_tuple(), s in 0.05..20.0f64) {
        // volume over edge products is scale free, only the diameter scales
        prop_assume!(well_spread(&t));
        let a = polar_curvature_sq(&t, d).unwrap();
        let b = polar_curvature_sq(&(&t * s), d).unwrap();
        let diam4 = spread(&t).0.powi(2);
        prop_assert!(close(b, s * s * a, 1e-9, 1e-12 * diam4 * s * s));
    }

    #[test]
    fn affinity_grows_with_bandwidth(seed in any::<u64>(), s1 in 1e-3..10.0f64, factor in 1.0..100.0f64) {
        let mut rng = stream_rng(seed, 2);
        let data = DataMatrix::new(DMatrix::from_fn(4, 15, |_, _| StandardNormal.sample(&mut rng))).unwrap();
        let samples = SampleSet::new(vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]], 3, 15).unwrap();
        let table = CurvatureTable::compute(&data, &samples).unwrap();
        let narrow = table.affinity(s1).unwrap();
        let wide = table.affinity(s1 * factor).unwrap();
        for (a, b) in narrow.matrix().iter().zip(wide.matrix().iter()) {
            prop_assert!(a <= b);
            prop_assert!((0.0..=1.0).contains(a));
        }
    }

    #[test]
    fn weights_are_psd(values in prop::collection::vec(0.0..=1.0f64, 12 * 20)) {
        let a = AffinityMatrix::new(DMatrix::from_vec(12, 20, values)).unwrap();
        let w = pairwise_weights(&a);
        let m = w.matrix();
        prop_assert_eq!(m, &m.transpose());
        let (ev, _) = sym_eigen_desc(m);
        let floor = -1e-10 * m.trace() / 12.0;
        prop_assert!(ev.iter().all(|&l| l >= floor));
    }

    #[test]
    fn fitted_flat_follows_translation(
        values in prop::collection::vec(-3.0..3.0f64, 5 * 12),
        shift in prop::collection::vec(-50.0..50.0f64, 5),
        d in 0usize..4,
    ) {
        let m = DMatrix::from_vec(5, 12, values);
        let t = DVector::from_vec(shift);
        let mut moved = m.clone();
        for mut c in moved.column_iter_mut() {
            c += &t;
        }
        let a = DataMatrix::new(m).unwrap();
        let b = DataMatrix::new(moved).unwrap();
        let fa = fit_affine_ols(&a, d).unwrap();
        let fb = fit_affine_ols(&b, d).unwrap();
        prop_assert!((fb.origin() - fa.origin() - &t).norm() <= 1e-9 * (1.0 + t.norm()));
        for i in 0..12 {
            let da = dist_to_subspace(a.point(i), &fa).unwrap();
            let db = dist_to_subspace(b.point(i), &fb).unwrap();
            prop_assert!(close(da, db, 1e-6, 1e-8));
        }
    }

    #[test]
    fn distance_and_coordinates_obey_pythagoras(
        values in prop::collection::vec(-3.0..3.0f64, 6 * 10),
        x in prop::collection::vec(-10.0..10.0f64, 6),
        d in 0usize..5,
    ) {
        let data = DataMatrix::new(DMatrix::from_vec(6, 10, values)).unwrap();
        let flat = fit_affine_ols(&data, d).unwrap();
        let x = DVector::from_vec(x);
        let dist = dist_to_subspace(x.as_view(), &flat).unwrap();
        let coords = flat.coordinates(x.as_view());
        let total = (&x - flat.origin()).norm_squared();
        prop_assert!(close(dist * dist + coords.norm_squared(), total, 1e-9, 1e-9));
    }

    #[test]
    fn misclassification_ignores_label_names(truth in labels(3, 30), pred in labels(3, 30), shift in 1usize..3) {
        let t = Partition::new(truth.clone(), 3).unwrap();
        let p = Partition::new(pred.clone(), 3).unwrap();
        let renamed = Partition::new(pred.iter().map(|l| (l + shift) % 3).collect(), 3).unwrap();
        let base = misclassification_rate(&p, &t).unwrap();
        prop_assert_eq!(base, misclassification_rate(&renamed, &t).unwrap());
        prop_assert_eq!(base, misclassification_rate(&t, &p).unwrap());
        prop_assert!((0.0..=100.0).contains(&base));
        prop_assert_eq!(misclassification_rate(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn histogram_counts_every_error(errors in prop::collection::vec(0.0..=100.0f64, 0..200), width in 0.5..40.0f64) {
        let h = error_histogram(&errors, &uniform_edges(width).unwrap()).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<usize>(), errors.len());
        prop_assert_eq!(h.counts.len() + 1, h.edges.len());
    }
}
