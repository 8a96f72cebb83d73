use christoffel_lab::canonical::{hermite_biehler, j_form};
use christoffel_lab::kernel::{kernel_boundary, kernel_diagonal};
use christoffel_lab::lab::{eigenvalue_count, prufer_angle};
use christoffel_lab::martin::{martin_density, solve_critical_points, FiniteGapSet};
use christoffel_lab::ode::Solver;
use christoffel_lab::weyl::{floquet_m, m_function};
use christoffel_lab::{Complex64, Potential};
use proptest::prelude::*;

fn potential() -> impl Strategy<Value = Potential> {
    prop_oneof![
        Just(Potential::Zero),
        (-3.0..3.0f64).prop_map(Potential::constant),
        (0.5..3.0f64, -1.0..1.0f64, -2.0..2.0f64).prop_map(|(p, m, a)| Potential::cosine(p, m, a)),
        (prop::collection::vec(0.1..8.0f64, 1..5), prop::collection::vec(-4.0..4.0f64, 5)).prop_map(|(mut bps, vals)| {
            bps.sort_by(f64::total_cmp);
            bps.dedup();
            let values = vals[..=bps.len()].to_vec();
            Potential::Piecewise { breakpoints: bps, values }
        }),
        Just(Potential::OscillatingExample),
    ]
}

fn complex(re: std::ops::Range<f64>, im: std::ops::Range<f64>) -> impl Strategy<Value = Complex64> {
    (re, im).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn wronskian_is_one(v in potential(), z in complex(-20.0..20.0, -10.0..10.0), x in 0.0..15.0f64) {
        let f = Solver::new(&v).frame(z, x).unwrap();
        let scale = (f.v * f.du).norm().max((f.u * f.dv).norm()).max(1.0);
        prop_assert!((f.wronskian() - 1.0).norm() <= 1e-9 * scale, "W = {}", f.wronskian());
    }

    #[test]
    fn j_monotone(v in potential(), z in complex(-20.0..20.0, 1e-3..10.0), x1 in 0.0..10.0f64, dx in 0.0..5.0f64) {
        let f = j_form(&v, z, x1, x1 + dx).unwrap();
        prop_assert!(f.hermitian_defect() <= 1e-12 * f.matrix.norm().max(1.0));
        prop_assert!(f.is_psd(), "min eigenvalue {}", f.min_eigenvalue());
    }

    #[test]
    fn herglotz(v in potential(), z in complex(-10.0..10.0, 0.5..5.0)) {
        let m = if v.period().is_some() { floquet_m(&v, z) } else { m_function(&v, z, 1e-8) }.unwrap();
        prop_assert!(m.im > 0.0, "Im m = {}", m.im);
    }

    #[test]
    fn hermite_biehler_inequality(v in potential(), z in complex(-20.0..20.0, 1e-3..10.0), l in 0.1..15.0f64) {
        let hb = hermite_biehler(&v, l, z).unwrap();
        prop_assert!(hb.ratio() <= 1.0 + 1e-12, "|E#/E| = {}", hb.ratio());
    }

    #[test]
    fn transfer_det_is_one(v in potential(), z in complex(-20.0..20.0, -5.0..5.0), x in 0.0..10.0f64) {
        let t = Solver::new(&v).frame(z, x).unwrap().transfer_matrix();
        let scale = t.entries.iter().map(|e| e.norm()).fold(1.0, f64::max);
        prop_assert!((t.det() - 1.0).norm() <= 1e-9 * scale * scale);
    }

    #[test]
    fn kernel_hermitian_and_positive(v in potential(), z in complex(-10.0..10.0, -3.0..3.0), w in complex(-10.0..10.0, -3.0..3.0), l in 0.5..10.0f64, xi in -5.0..20.0f64) {
        let a = kernel_boundary(&v, l, z, w).unwrap().value;
        let b = kernel_boundary(&v, l, w, z).unwrap().value;
        prop_assert!((a - b.conj()).norm() <= 1e-10 * a.norm().max(1.0));
        prop_assert!(kernel_diagonal(&v, l, xi).unwrap() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prufer_angle_monotone(v in potential(), l in 1.0..20.0f64, a in -5.0..20.0f64, d in 0.01..5.0f64) {
        let (ta, tb) = (prufer_angle(&v, l, a).unwrap(), prufer_angle(&v, l, a + d).unwrap());
        prop_assert!(tb >= ta - 1e-9);
        prop_assert!(eigenvalue_count(&v, l, a + d).unwrap() >= eigenvalue_count(&v, l, a).unwrap());
    }

    #[test]
    fn adding_gaps_raises_density(b0 in -2.0..2.0f64, a in 0.1..3.0f64, w in 0.05..2.0f64, t in 0.05..0.95f64) {
        let gap = (b0 + a, b0 + a + w);
        let with_gap = solve_critical_points(&FiniteGapSet::new(b0, vec![gap]).unwrap(), 1e-12).unwrap();
        let without = FiniteGapSet::half_line(b0);
        let xi = b0 + t * a;
        prop_assert!(martin_density(&without, xi).unwrap() <= martin_density(&with_gap, xi).unwrap() + 1e-10);
    }
}
