use bergtoep::functionals::{
    berezin_transform, vanishing_from_values, DeltaProfile, VanishingSchedule,
};
use bergtoep::quadrature::build_graded_quadrature;
use bergtoep::toeplitz::{build_basis, toeplitz_matrix};
use bergtoep::{Domain, Measure, Point, C64};
use proptest::prelude::*;

fn domain() -> impl Strategy<Value = Domain> {
    prop_oneof![
        Just(Domain::Disk),
        Just(Domain::Ball(2)),
        Just(Domain::Polydisk(2))
    ]
}

/// A point with gauge at most 0.95, from raw coordinates in the unit cube.
fn inside(d: Domain, raw: &[f64]) -> Point {
    let n = d.dimension();
    let coords: Vec<C64> = (0..n)
        .map(|i| C64::new(raw[2 * i], raw[2 * i + 1]))
        .collect();
    let p = Point(coords);
    let g = d.gauge(&p);
    if g > 0.95 {
        p.scaled(0.95 / g)
    } else {
        p
    }
}

fn raw() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn automorphisms_are_isometric_involutions(d in domain(), a in raw(), z in raw(), w in raw()) {
        let (a, z, w) = (inside(d, &a), inside(d, &z), inside(d, &w));
        let chart = d.automorphism(&a).unwrap();
        let back = chart.forward(&chart.forward(&z));
        for (x, y) in back.0.iter().zip(&z.0) {
            prop_assert!((x - y).norm() < 1e-9);
        }
        let before = d.distance(&z, &w).unwrap();
        let after = d.distance(&chart.forward(&z), &chart.forward(&w)).unwrap();
        prop_assert!((before - after).abs() <= 1e-7 * (1.0 + before));
    }

    #[test]
    fn kernel_is_hermitian(d in domain(), z in raw(), w in raw()) {
        let (z, w) = (inside(d, &z), inside(d, &w));
        let k = d.kernel(&z, &w).unwrap();
        let kt = d.kernel(&w, &z).unwrap();
        prop_assert!((k - kt.conj()).norm() <= 1e-12 * k.norm().max(1.0));
    }

    #[test]
    fn lebesgue_berezin_is_one_on_the_disk(z in raw()) {
        let rule = build_graded_quadrature(Domain::Disk, 32).unwrap();
        let z = inside(Domain::Disk, &z);
        prop_assert!((berezin_transform(&Measure::lebesgue(), &z, &rule).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn atomic_truncations_are_psd_with_rank_at_most_atom_count(
        pts in prop::collection::vec(raw(), 1..4),
        masses in prop::collection::vec(0.1f64..3.0, 4),
    ) {
        let d = Domain::Disk;
        let mu = Measure::atomic(pts.iter().zip(&masses).map(|(p, &m)| (inside(d, p), m)));
        let rule = build_graded_quadrature(d, 16).unwrap();
        let basis = build_basis(d, 8, &rule).unwrap();
        let t = toeplitz_matrix(&mu, &basis, &rule).unwrap();
        let spec = t.spectrum();
        prop_assert!(spec.iter().all(|&x| x >= -1e-10));
        prop_assert!(t.numerical_rank(1e-8) <= pts.len());
        prop_assert!(t.hermitian_defect() <= 1e-12);
    }

    #[test]
    fn decision_rules_ignore_scale(vals in prop::collection::vec((1e-3f64..0.9, 0.0f64..10.0), 20..60), c in 0.1f64..100.0) {
        let scaled: Vec<(f64, f64)> = vals.iter().map(|&(d, v)| (d, c * v)).collect();
        let sched = VanishingSchedule::for_margin(1e-3);
        let a = vanishing_from_values(&vals, &sched);
        let b = vanishing_from_values(&scaled, &sched);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a.passed, b.passed);
        }
        let deltas = [0.5, 0.1, 0.01];
        if let (Ok(a), Ok(b)) = (
            DeltaProfile::from_values(&vals, &deltas, 0.2),
            DeltaProfile::from_values(&scaled, &deltas, 0.2),
        ) {
            prop_assert_eq!(a.bounded, b.bounded);
        }
    }
}
