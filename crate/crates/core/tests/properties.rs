mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use psd_bundle::io::{parse_matrix, write_matrix, AnyMatrix};
use psd_bundle::linalg::{embed_pad, hermitian_part, principal_system};
use psd_bundle::pointset::{pointset_minus, pointset_plus};
use psd_bundle::unitary::haar_unitary;
use psd_bundle::{
    divergence, gd, grassmann_distance, BoundTransform, FiberDivergence, GdOptions, GrassmannMetric, MetricSpec,
    PsdMatrix, Scalar, Subspace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn specs() -> Vec<FiberDivergence> {
    [
        "kl",
        "bhat",
        "geo",
        "renyi:0.3",
        "blogdet:1",
        "ab:0.7,0.6",
        "stein:0.5",
        "burg:0.5",
        "is:-0.3",
        "geoab:1,0.25",
        "kl+sym",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect()
}

fn rotate<T: Scalar>(u: &DMatrix<T>, a: &PsdMatrix<T>) -> PsdMatrix<T> {
    PsdMatrix::new(hermitian_part(&(u * a.entries() * u.adjoint()))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn divergences_are_congruence_invariant(seed in any::<u64>(), m in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_pd_in::<f64>(m, 0.3, 3.0, &mut rng);
        let y = random_pd_in::<f64>(m, 0.3, 3.0, &mut rng);
        let g = DMatrix::<f64>::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0)) + DMatrix::identity(m, m) * 2.0;
        for spec in specs() {
            let v = divergence(&spec, &x, &y).unwrap();
            let w = divergence(&spec, &(&g * &x * g.transpose()), &(&g * &y * g.transpose())).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!((v - w).abs() <= 1e-8 * (1.0 + v), "{spec}: {v} vs {w}");
            prop_assert!(divergence(&spec, &x, &x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pointset_sides_agree_and_commute_with_bounds(seed in any::<u64>(), r in 1usize..4, extra in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = r + extra;
        let c = random_pd::<f64>(r, &mut rng);
        let d = random_pd::<f64>(s, &mut rng);
        for spec in specs().into_iter().filter(|f| f.is_separable()) {
            let m = pointset_minus(&spec, &c, &d).unwrap();
            let p = pointset_plus(&spec, &c, &d).unwrap();
            prop_assert_eq!(m.value.to_bits(), p.value.to_bits());
            for bound in [BoundTransform::Ratio, BoundTransform::Clamp(0.5)] {
                let bounded = spec.with_bound(bound).unwrap();
                let b = pointset_minus(&bounded, &c, &d).unwrap().value;
                prop_assert!((b - bound.apply(m.value)).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn gd_decomposes_and_is_unitarily_invariant(seed in any::<u64>(), n in 2usize..7, r in 1usize..4, s in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_psd::<f64>(n, r.min(n), &mut rng);
        let b = random_psd::<f64>(n, s.min(n), &mut rng);
        let u = haar_unitary::<f64, _>(n, &mut rng);
        let spec = MetricSpec::geodesic();
        let opts = GdOptions::default();
        let g = gd(&a, &b, &spec, &opts).unwrap();
        prop_assert!((g.total.powi(2) - g.grassmann_term.powi(2) - g.fiber_term.powi(2)).abs() <= 1e-10 * (1.0 + g.total.powi(2)));
        let h = gd(&rotate(&u, &a), &rotate(&u, &b), &spec, &opts).unwrap();
        prop_assert!((g.total - h.total).abs() <= 1e-9 * (1.0 + g.total), "{} vs {}", g.total, h.total);
        let k = gd(&embed_pad(&a, n + 2).unwrap(), &embed_pad(&b, n + 2).unwrap(), &spec, &opts).unwrap();
        prop_assert!((g.total - k.total).abs() <= 1e-10 * (1.0 + g.total), "{} vs {}", g.total, k.total);
        prop_assert!(gd(&a, &a, &spec, &opts).unwrap().total < 1e-7);
    }

    #[test]
    fn complex_inputs_behave_like_real_ones(seed in any::<u64>(), n in 2usize..6, r in 1usize..3, s in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_psd::<Complex64>(n, r.min(n), &mut rng);
        let b = random_psd::<Complex64>(n, s.min(n), &mut rng);
        let spec = MetricSpec::new(GrassmannMetric::Chordal, FiberDivergence::kl());
        let opts = GdOptions::default();
        let g = gd(&a, &b, &spec, &opts).unwrap();
        prop_assert!(g.total >= 0.0);
        if r != s && g.stratum_index == 0 {
            let h = gd(&b, &a, &spec, &opts).unwrap();
            prop_assert!((g.total - h.total).abs() <= 1e-10);
        }
        let u = haar_unitary::<Complex64, _>(n, &mut rng);
        let h = gd(&rotate(&u, &a), &rotate(&u, &b), &spec, &opts).unwrap();
        prop_assert!((g.total - h.total).abs() <= 1e-9 * (1.0 + g.total));
    }

    #[test]
    fn grassmann_metrics_vanish_on_equal_subspaces(seed in any::<u64>(), n in 2usize..7, r in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = r.min(n);
        let f = random_frame::<f64>(n, r, &mut rng);
        let u = Subspace::from_frame(f.clone()).unwrap();
        let v = Subspace::from_frame(f * haar_unitary::<f64, _>(r, &mut rng)).unwrap();
        let w = Subspace::from_frame(random_frame::<f64>(n, r, &mut rng)).unwrap();
        let same = principal_system(&u, &v).unwrap().theta;
        let other = principal_system(&u, &w).unwrap().theta;
        for metric in GrassmannMetric::ALL {
            prop_assert!(grassmann_distance(metric, &same).unwrap() < 1e-7);
            let d = grassmann_distance(metric, &other).unwrap();
            prop_assert!(d >= 0.0);
        }
    }

    #[test]
    fn matrix_files_round_trip(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1e3..1e3) * 10f64.powi(rng.random_range(-8..8)));
        prop_assert_eq!(parse_matrix(&write_matrix(&m)).unwrap(), AnyMatrix::Real(m));
        let c = DMatrix::<Complex64>::from_fn(n, n, |_, _| Complex64::new(rng.random(), rng.random()));
        prop_assert_eq!(parse_matrix(&write_matrix(&c)).unwrap(), AnyMatrix::Complex(c));
    }
}
