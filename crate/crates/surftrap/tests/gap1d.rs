use std::f64::consts::PI;

use proptest::prelude::*;
use surftrap::gap1d::*;
use surftrap::kernel::{numerical_laplacian, phi_to_sigma, propagate, Point3};
use surftrap::quad::{self, QuadSettings};

fn quad() -> QuadSettings {
    QuadSettings::new(1e-12, 1e-11)
}

#[test]
fn phi_gap_examples() {
    assert_eq!(phi_gap(0.0, 1.0), 0.5);
    assert_eq!(phi_gap(0.5, 1.0), 1.0);
    assert_eq!(phi_gap(-0.5, 1.0), 0.0);
    assert!((phi_gap(0.25, 1.0) - 2.0 / 3.0).abs() < 1e-15);
    assert!((phi_gap(0.75, 3.0) - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn sigma_gap_examples() {
    assert_eq!(sigma_gap(0.0, 1.0), 0.0);
    let v = 4.0 / (PI * 3f64.sqrt());
    assert!((sigma_gap(1.0, 1.0) - v).abs() < 1e-15);
    assert!((sigma_gap(-1.0, 1.0) + v).abs() < 1e-15);
    assert!((v - 0.7351).abs() < 1e-4);
}

#[test]
fn field_gap_examples() {
    for z in [1e-3, 0.4, 10.0] {
        assert_eq!(field_gap(0.0, z, 1.0), 0.5);
    }
    assert!((field_gap(0.25, 1e-14, 1.0) - 2.0 / 3.0).abs() < 1e-10);
    let (r, th) = (10.0, PI / 4.0);
    let exact = field_gap(r * th.sin(), r * th.cos(), 1.0);
    assert!((exact - 0.7498011).abs() < 1e-6, "{exact}");
    assert!((exact - field_gap_far(r, th, 1.0)).abs() < 1e-4);
}

#[test]
fn field_gap_far_field_order() {
    // The remainder after the 1/r^2 term is O(r^-4).
    let th: f64 = 0.6;
    let err = |r: f64| (field_gap(r * th.sin(), r * th.cos(), 1.0) - field_gap_far(r, th, 1.0)).abs();
    let ratio = err(10.0) / err(20.0);
    assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
}

#[test]
fn pol_examples() {
    assert_eq!(phi_pol(0.0, 2.0), 1.0);
    assert_eq!(phi_pol(1.0, 2.0), 0.0);
    assert_eq!(phi_pol(-1.0, 2.0), 0.0);
    assert_eq!(sigma_pol(0.0, 2.0), 2.0);
    assert_eq!(field_pol(0.0, 0.0, 1.0), 1.0);
    assert_eq!(field_pol(1.0, 0.0, 1.0), 0.0);
    let v = field_pol(0.0, 20.0, 1.0);
    assert!((v - 0.0125).abs() < (1.0f64 / 20.0).powi(3), "{v}");
}

#[test]
fn sigma_pol_tail_is_negative_inverse_square() {
    let xs = [10.0, 20.0, 40.0, 80.0];
    let ys: Vec<f64> = xs.iter().map(|&x| sigma_pol(x, 1.0)).collect();
    assert!(ys.iter().all(|&v| v < 0.0));
    let slope = (ys[3].abs().ln() - ys[0].abs().ln()) / (xs[3].ln() - xs[0].ln());
    assert!((slope + 2.0).abs() < 1e-3, "{slope}");
    // Leading coefficient -g/2.
    assert!((ys[3] * 80.0 * 80.0 + 0.5).abs() < 1e-3);
}

#[test]
fn strip_alpha_examples() {
    let a = strip_alpha(1.0, 0.1);
    assert!((a - 0.1 / (2.0 * PI * (1.0 - 3.99f64.sqrt()))).abs() < 1e-16);
    assert!((a + 0.0159555).abs() < 1e-7);
    // Small-g limit and third-order remainder with coefficient -1/(8 pi) for w = 1.
    let g = 1e-6;
    assert!((strip_alpha(1.0, g) / g + 1.0 / (2.0 * PI)).abs() < 1e-9);
    let rem = |g: f64| (strip_alpha(1.0, g) + g / (2.0 * PI)) / g.powi(3);
    for g in [0.5, 0.25, 0.125] {
        assert!(
            (rem(g) + 1.0 / (8.0 * PI)).abs() < 0.1 / (8.0 * PI) * (g / 0.125f64).powi(2),
            "g={g}: {}",
            rem(g)
        );
    }
    let diff = (strip_alpha(1.0, 0.5) + 0.5 / (2.0 * PI)).abs();
    assert!(diff < 0.25f64.powi(3) / (2.0 * PI) * 2.5);
}

#[test]
fn strip_surface_examples() {
    let s = StripSpec::new(1.0, 0.01).unwrap();
    assert!((s.surface_potential(0.0) - 1.0).abs() < 1e-4);
    for x in [0.5, -0.5] {
        assert!((s.surface_potential(x) - (0.5 + s.alpha())).abs() < 1e-15);
    }
    let s = StripSpec::new(1.0, 0.2).unwrap();
    let sig = phi_to_sigma(&s.profile(), 0.5, 0.0, 1e-3, &quad()).unwrap().sigma;
    assert!(sig.abs() < 1e-6, "{sig}");
    assert!(StripSpec::new(1.0, 1.0).is_err());
}

#[test]
fn strip_center_sigma_matches_kernel() {
    let s = StripSpec::new(1.0, 0.3).unwrap();
    for alpha in [-0.2, 0.0, 0.5] {
        let p = StripProfile { spec: s, alpha };
        let k = phi_to_sigma(&p, 0.5, 0.0, 1e-3, &quad()).unwrap().sigma;
        assert!(
            (k - s.center_sigma(alpha)).abs() < 1e-6,
            "alpha={alpha}: {k} vs {}",
            s.center_sigma(alpha)
        );
    }
}

#[test]
fn strip_far_field_examples() {
    let r = 1e3;
    let ratio = strip_far_field_approx(r, 0.0, 1.0, 0.5) / (1.0 / (PI * r));
    assert!((ratio - 0.9375).abs() < 1e-12);
    let small = strip_far_field(r, 0.3, 1.0, 1e-9);
    assert!((small - 0.3f64.cos() / (PI * r)).abs() < 1e-12);
    // Exact and approximate prefactors differ at fourth order in g/w.
    for g in [0.2, 0.1] {
        let d = (strip_far_field(1.0, 0.0, 1.0, g) - strip_far_field_approx(1.0, 0.0, 1.0, g)).abs() * PI;
        assert!(d < g.powi(4), "g={g}: {d}");
    }
}

#[test]
fn strip_far_field_against_quadrature() {
    let s = StripSpec::new(1.0, 0.5).unwrap();
    let v = propagate(&s.profile(), Point3::new(0.0, 0.0, 30.0), &quad()).unwrap();
    let ff = s.far_field(30.0, 0.0);
    assert!(((v - ff) / ff).abs() < 0.01, "{v} vs {ff}");
    assert!((v - s.field(0.0, 30.0)).abs() < 1e-10);
}

#[test]
fn gap_interior_charge_vanishes() {
    let g = 1.0;
    let gap = GapProfile::new(g, GapKind::Interpolation).unwrap();
    for k in 0..10 {
        let x = -0.45 + 0.1 * k as f64;
        let s = phi_to_sigma(&gap, x, 0.0, 1e-4, &quad()).unwrap().sigma;
        assert!(s.abs() < 1e-6 * 4.0 / g, "x={x}: {s}");
    }
}

#[test]
fn polarization_density_is_neutral() {
    let g = 1.0;
    let s = QuadSettings::new(1e-13, 1e-12);
    let inner = quad::integrate_pts_smooth(|x| sigma_pol(x, g), &[0.0, 0.5, 1.0], &s)
        .unwrap()
        .value;
    let outer = quad::integrate_to_infinity(|x| sigma_pol(x, g), 1.0, &s).unwrap().value;
    let total = 2.0 * (inner + outer);
    assert!(total.abs() < 1e-8, "{total}");
}

#[test]
fn laplace_residual_second_order() {
    let pts = [(0.3, 0.4), (-0.7, 0.25), (1.5, 1.0)];
    for &(x, z) in &pts {
        for f in [field_gap as fn(f64, f64, f64) -> f64, field_pol] {
            let field = |p: Point3| Ok(f(p.x, p.z, 1.0));
            let p = Point3::new(x, 0.0, z);
            let r1 = numerical_laplacian(&field, p, 0.04).unwrap();
            let r2 = numerical_laplacian(&field, p, 0.02).unwrap();
            assert!((r1 / r2 - 4.0).abs() < 0.3, "({x},{z}): {r1} {r2}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn surface_limits(x in -2.0..2.0f64, g in 0.1..3.0f64) {
        prop_assert!((field_gap(x, 1e-20, g) - phi_gap(x, g)).abs() < 1e-8);
        prop_assert!((field_pol(x, 1e-20, g) - phi_pol(x, g)).abs() < 1e-8);
    }

    #[test]
    fn strip_superposition(x in -2.0..2.0f64, g in 0.01..0.9f64) {
        let s = StripSpec::new(1.0, g).unwrap();
        let rest = s.surface_potential(x) - (phi_gap(x + 0.5, g) - phi_gap(x - 0.5, g));
        let pol = s.alpha() * (phi_pol(x + 0.5, g) + phi_pol(x - 0.5, g));
        prop_assert!((rest - pol).abs() < 1e-14);
    }

    #[test]
    fn gap_field_symmetry(x in -3.0..3.0f64, z in 0.01..3.0f64) {
        prop_assert!((field_gap(x, z, 1.0) + field_gap(-x, z, 1.0) - 1.0).abs() < 1e-14);
        prop_assert_eq!(field_pol(x, z, 1.0), field_pol(-x, -z, 1.0));
    }
}
