//! Randomized invariants over the construction and audit pipeline. These
//! use a coarse grid (128x256) to keep the case count affordable.

use potlab::geometry::{GridField, PlanarDomain, Point, PolarGrid};
use potlab::holo::{blaschke, ZeroSet};
use potlab::kernels::green_disc_radial;
use potlab::measures::{integrate_against, lebesgue_normalized};
use potlab::testfn::{classify, epsilon_truncate};
use proptest::prelude::*;

fn dom() -> PlanarDomain {
    PlanarDomain::new(1.0, 0.25, 0.5).unwrap()
}

fn coarse_grid() -> PolarGrid {
    PolarGrid::for_domain(&dom(), 128, 256).unwrap()
}

fn green_tf(s: f64) -> potlab::testfn::TestFunction {
    let field = GridField::from_fn(coarse_grid(), |p| s * green_disc_radial(1.0, p.abs()));
    classify(field, dom(), s * 4.0f64.ln() + 1e-9).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // area quadrature is exact for constants
    #[test]
    fn annulus_quadrature_exact_for_constants(c in -5.0f64..5.0) {
        let g = coarse_grid();
        let f = GridField::constant(g, c);
        let exact = c * std::f64::consts::PI * (g.radius().powi(2) - g.delta().powi(2));
        let got = f.integrate_annulus(g.delta(), g.radius()).unwrap();
        prop_assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0));
    }

    // truncation is monotone in epsilon and never exceeds the original
    #[test]
    fn truncation_monotone_and_below(e1 in 0.05f64..0.3, step in 1.2f64..3.0) {
        let vt = green_tf(1.0);
        let e2 = e1 / step;
        let a = epsilon_truncate(&vt, e1).unwrap();
        let b = epsilon_truncate(&vt, e2).unwrap();
        let g = vt.field().grid();
        for i in 0..g.n_r() {
            for j in 0..g.n_theta() {
                let (va, vb, v) = (a.field().value(i, j), b.field().value(i, j), vt.field().value(i, j));
                prop_assert!(va <= vb + 1e-12);
                prop_assert!(vb <= v + 1e-12);
                prop_assert!(va >= 0.0 || va >= v - e1 - 1e-12);
            }
        }
    }

    // class metadata scales linearly with the field
    #[test]
    fn scaling_equivariance(s in 0.2f64..3.0) {
        let base = green_tf(1.0);
        let scaled = base.scale(s).unwrap();
        prop_assert!((scaled.bound() - s * base.bound()).abs() <= 1e-12 * s);
        prop_assert!((scaled.pole_coeff() - s * base.pole_coeff()).abs() <= 1e-9 * s);
        let p = Point::new(0.4, 0.2);
        prop_assert!((scaled.eval(p) - s * base.eval(p)).abs() <= 1e-12);
    }

    // product rule for the normalized log-modulus at the distinguished point
    #[test]
    fn blaschke_log_at_origin_is_additive(
        r1 in 0.1f64..0.9, r2 in 0.1f64..0.9, th in 0.0f64..6.28, m in 1u32..4,
    ) {
        let z1 = Point::from_polar(r1, th);
        let z2 = Point::from_polar(r2, th + 1.0);
        let f = blaschke(ZeroSet::new(vec![(z1, m), (z2, 1)]).unwrap(), 1.0).unwrap();
        let want = m as f64 * r1.ln() + r2.ln();
        prop_assert!((f.log_at_z0() - want).abs() <= 1e-12);
    }

    // zero-set text round trip
    #[test]
    fn zero_table_round_trip(
        xs in prop::collection::vec((-0.7f64..0.7, -0.7f64..0.7, 1u32..5), 1..6),
    ) {
        let entries: Vec<_> = xs.iter().map(|&(x, y, m)| (Point::new(x, y), m)).collect();
        let zset = ZeroSet::new(entries).unwrap();
        let text: String = zset
            .entries()
            .iter()
            .map(|(p, m)| format!("{:.17e} {:.17e} {m}\n", p.re, p.im))
            .collect();
        let back = ZeroSet::from_str_table(&text).unwrap();
        prop_assert_eq!(back.entries().len(), zset.entries().len());
        for (a, b) in back.entries().iter().zip(zset.entries()) {
            prop_assert!(a.0.dist(b.0) <= 1e-15);
            prop_assert_eq!(a.1, b.1);
        }
    }

    // pairing a field against a pure-density measure equals the weighted
    // area integral
    #[test]
    fn density_pairing_matches_area_integral(c in 0.1f64..4.0) {
        let g = coarse_grid();
        let mu = lebesgue_normalized(1.0, g).unwrap();
        let f = GridField::constant(g, c);
        let got = integrate_against(&f, &mu, 0.0, 1.0).unwrap();
        // normalized Lebesgue mass of the covered annulus
        let covered = 1.0 - (g.delta() / 1.0f64).powi(2);
        prop_assert!((got - c * covered).abs() <= 5e-3 * c);
    }
}
