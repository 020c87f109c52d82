use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;
use surftrap::kernel::{phi_to_sigma, propagate, Point3};
use surftrap::quad::QuadSettings;
use surftrap::ringtrap::*;

fn quad() -> QuadSettings {
    QuadSettings::new(1e-13, 1e-12)
}

fn sweep() -> &'static Vec<TrapReport> {
    static S: OnceLock<Vec<TrapReport>> = OnceLock::new();
    S.get_or_init(|| {
        sweep_ring(&default_gap_grid(), 1.0, &RingOptimizeSettings::default())
            .into_iter()
            .map(|r| r.unwrap())
            .collect()
    })
}

#[test]
fn geometry_validation() {
    assert!(RingTrapGeometry::new(1.0, 2.0, 0.5).is_ok());
    assert!(RingTrapGeometry::new(2.0, 1.0, 0.1).is_err());
    assert!(RingTrapGeometry::new(1.0, 2.0, 1.0).is_err());
    assert!(RingTrapGeometry::new(0.1, 2.0, 0.3).is_err());
}

#[test]
fn surface_potential_examples() {
    let geom = RingTrapGeometry::new(1.0, 2.0, 0.2).unwrap();
    let amps = GapAmplitudes::new(-0.04, 0.07);
    assert_eq!(ring_surface_potential(0.0, &geom, &amps), 0.0);
    for r in [1.1, 1.5, 1.9] {
        assert_eq!(ring_surface_potential(r, &geom, &amps), 1.0);
    }
    assert!((ring_surface_potential(1.0, &geom, &amps) - 0.46).abs() < 1e-15);
    assert!((ring_surface_potential(2.0, &geom, &amps) - 0.57).abs() < 1e-15);
}

#[test]
fn solved_amplitudes_null_leading_order_densities() {
    for (r1, r2, g) in [(1.0, 2.0, 0.05), (0.678, 3.68, 0.1), (0.3, 0.9, 0.2)] {
        let geom = RingTrapGeometry::new(r1, r2, g).unwrap();
        let a = solve_ring_alphas(&geom).unwrap();
        let (s1, s2) = ring_gap_center_sigma(&geom, &a).unwrap();
        assert!(s1.abs() < 1e-10 && s2.abs() < 1e-10, "{s1} {s2}");
    }
}

#[test]
fn leading_order_densities_match_kernel() {
    // Zero amplitudes; the kernel oracle is evaluated at the gap centers.
    let mut prev: Option<(f64, f64)> = None;
    for g in [0.1, 0.05, 0.025] {
        let geom = RingTrapGeometry::new(1.0, 2.0, g).unwrap();
        let amps = GapAmplitudes::default();
        let (s1, s2) = ring_gap_center_sigma(&geom, &amps).unwrap();
        let p = RingProfile { geom, amps };
        let k1 = phi_to_sigma(&p, 1.0, 0.0, 1e-3 * g, &quad()).unwrap().sigma;
        let k2 = phi_to_sigma(&p, 0.0, 2.0, 1e-3 * g, &quad()).unwrap().sigma;
        let (e1, e2) = ((s1 - k1).abs(), (s2 - k2).abs());
        assert!(e1 < 0.2 * g * g && e2 < 0.2 * g * g, "g={g}: {e1} {e2}");
        if let Some((p1, p2)) = prev {
            assert!(p1 / e1 > 3.5 && p2 / e2 > 3.5, "g={g}: not second order");
        }
        prev = Some((e1, e2));
    }
}

#[test]
fn leading_order_densities_change_sign_under_role_swap() {
    // The elliptic terms enter with opposite signs at the two gaps.
    let geom = RingTrapGeometry::new(1.0, 2.0, 0.05).unwrap();
    let (s1, s2) = ring_gap_center_sigma(&geom, &GapAmplitudes::default()).unwrap();
    assert!(s1 < 0.0 && s2 > 0.0);
}

#[test]
fn nulled_amplitudes_under_kernel_oracle() {
    // Residual oracle density with the solved amplitudes shrinks like g^2 log g.
    let mut res = Vec::new();
    for g in [0.1, 0.05, 0.025] {
        let geom = RingTrapGeometry::new(0.678, 3.68, g).unwrap();
        let amps = solve_ring_alphas(&geom).unwrap();
        let p = RingProfile { geom, amps };
        let k1 = phi_to_sigma(&p, 0.678, 0.0, 1e-3 * g, &quad()).unwrap().sigma;
        let k2 = phi_to_sigma(&p, 3.68, 0.0, 1e-3 * g, &quad()).unwrap().sigma;
        let bound = g * g * g.ln().abs();
        assert!(k1.abs() < bound && k2.abs() < bound, "g={g}: {k1} {k2}");
        res.push(k1.abs().max(k2.abs()));
    }
    for w in res.windows(2) {
        assert!(w[0] / w[1] > 2.5, "{res:?}");
    }
}

#[test]
fn amplitudes_vanish_like_g_log_g() {
    let geom = |g| RingTrapGeometry::new(1.0, 2.0, g).unwrap();
    // alpha = g (a log g + b) + O(g^2): alpha/g is affine in log g.
    let c: Vec<(f64, f64)> = [1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&g| {
            let a = solve_ring_alphas(&geom(g)).unwrap();
            (a.alpha1 / g, a.alpha2 / g)
        })
        .collect();
    let curv1 = c[0].0 - 2.0 * c[1].0 + c[2].0;
    let curv2 = c[0].1 - 2.0 * c[1].1 + c[2].1;
    assert!(curv1.abs() < 1e-3 * (c[0].0 - c[1].0).abs(), "{c:?}");
    assert!(curv2.abs() < 1e-3 * (c[0].1 - c[1].1).abs(), "{c:?}");
    assert!(c[2].0.abs() > c[0].0.abs() && c[2].1.abs() > c[0].1.abs());
    let tiny = solve_ring_alphas(&geom(1e-9)).unwrap();
    assert!(tiny.alpha1.abs() < 1e-7 && tiny.alpha2.abs() < 1e-7);
    assert_eq!(
        solve_ring_alphas(&RingTrapGeometry::new(1.0, 2.0, 0.0).unwrap()).unwrap(),
        GapAmplitudes::default()
    );
}

#[test]
fn gapless_axis_potential() {
    let geom = RingTrapGeometry::new(1.0, 2.0, 0.0).unwrap();
    let a = GapAmplitudes::default();
    let v = ring_axis_potential(1.0, &geom, &a).unwrap();
    assert!((v - (0.5f64.sqrt() - 0.2f64.sqrt())).abs() < 1e-15);
    assert!((v - 0.259_893_18).abs() < 1e-8);
    let k = propagate(&RingProfile { geom, amps: a }, Point3::new(0.0, 0.0, 1.0), &quad()).unwrap();
    assert!((k - v).abs() < 1e-11);
    let z = 1e4;
    let far = ring_axis_potential(z, &geom, &a).unwrap();
    assert!((far / (3.0 / (2.0 * z * z)) - 1.0).abs() < 1e-6);
    assert!(ring_axis_potential(0.0, &geom, &a).is_err());
}

#[test]
fn axis_potential_against_kernel_fitted_order() {
    let geom = |g| RingTrapGeometry::new(0.678, 3.68, g).unwrap();
    let err = |g: f64, zero_amps: bool| {
        let amps = if zero_amps {
            GapAmplitudes::default()
        } else {
            solve_ring_alphas(&geom(g)).unwrap()
        };
        let v = ring_axis_potential(1.0, &geom(g), &amps).unwrap();
        let k = propagate(
            &RingProfile { geom: geom(g), amps },
            Point3::new(0.0, 0.0, 1.0),
            &quad(),
        )
        .unwrap();
        (v - k).abs()
    };
    for zero in [true, false] {
        let (e1, e2) = (err(0.1, zero), err(0.05, zero));
        let order = (e1 / e2).log2();
        assert!(order > 3.0, "zero amps {zero}: order {order}");
        assert!(e1 < 1e-5);
    }
}

#[test]
fn axis_potential_without_gap_terms_is_gapless() {
    let geom = RingTrapGeometry::new(0.7, 3.1, 0.3).unwrap();
    let g0 = RingTrapGeometry { g: 0.0, ..geom };
    let a = GapAmplitudes::default();
    for z in [0.3, 1.0, 4.0] {
        let full = ring_axis_potential(z, &geom, &a).unwrap();
        let g2 = 0.09 * z / 16.0
            * ((2.0 * 0.49 - z * z) / (0.49 + z * z).powf(2.5) - (2.0 * 9.61 - z * z) / (9.61 + z * z).powf(2.5));
        assert!((full - g2 - ring_axis_potential(z, &g0, &a).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn axis_jet_matches_finite_differences() {
    let geom = RingTrapGeometry::new(0.8, 3.0, 0.2).unwrap();
    let a = solve_ring_alphas(&geom).unwrap();
    let f = |z: f64| ring_axis_potential(z, &geom, &a).unwrap();
    let z = 1.1;
    let j = ring_axis_jet(z, &geom, &a).unwrap();
    let h = 1e-4;
    let d1 = (f(z + h) - f(z - h)) / (2.0 * h);
    let d2 = (f(z + h) + f(z - h) - 2.0 * f(z)) / (h * h);
    assert!((d1 - j.d1).abs() < 1e-6 * j.d1.abs());
    assert!((d2 - j.d2).abs() < 1e-6 * j.d2.abs(), "{d2} {}", j.d2);
}

#[test]
fn pseudopotential_examples() {
    let ion = IonParameters::singly_charged(39.962_590_9, 100.0, 2.0 * PI * 20e6).unwrap();
    assert_eq!(pseudopotential([0.0; 3], 1e-3, &ion), 0.0);
    let psi = pseudopotential([0.1, 0.0, 0.0], 1e-3, &ion);
    // q^2 U^2 |grad|^2 / (4 m Omega^2) with |grad| = 100 per meter.
    let expected =
        ELEMENTARY_CHARGE.powi(2) * 1e4 * 1e4 / (4.0 * 39.962_590_9 * ATOMIC_MASS * (2.0 * PI * 20e6f64).powi(2));
    assert!((psi / expected - 1.0).abs() < 1e-14);
    assert!((psi / 6.124_044_439e-22 - 1.0).abs() < 1e-9, "{psi:e}");
    let doubled = IonParameters { u_rf: 200.0, ..ion };
    assert!((pseudopotential([0.1, 0.0, 0.0], 1e-3, &doubled) / psi - 4.0).abs() < 1e-14);
    assert!(IonParameters::new(-1.0, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn kappa_requires_stationary_height() {
    let geom = RingTrapGeometry::new(1.0, 2.0, 0.0).unwrap();
    let r = curvature_kappa(&geom, &GapAmplitudes::default(), 1.0);
    assert!(matches!(r, Err(surftrap::Error::Precondition(_))));
}

#[test]
fn gapless_optimum() {
    let r = &sweep()[0];
    assert!((r.geometry.r1 - 0.678).abs() < 0.002, "{}", r.geometry.r1);
    // Frozen from this optimizer.
    assert!((r.kappa - 0.297_907_623_7).abs() < 1e-9, "{}", r.kappa);
    assert!((r.geometry.r2 - 3.3809).abs() < 1e-3);
    // Independent finite-difference curvature at the optimum.
    let f = |z: f64| ring_axis_potential(z, &r.geometry, &r.amplitudes).unwrap();
    let h = 1e-4;
    let fd = (f(1.0 + h) + f(1.0 - h) - 2.0 * f(1.0)) / (h * h);
    assert!((fd.abs() / 4f64.cbrt() / r.kappa - 1.0).abs() < 1e-6);
    assert!((curvature_kappa(&r.geometry, &r.amplitudes, 1.0).unwrap() - r.kappa).abs() < 1e-14);
}

#[test]
fn gap_sweep_trends() {
    let s = sweep();
    let last = s.last().unwrap();
    assert!((0.90..=0.99).contains(&last.kappa_ratio), "{}", last.kappa_ratio);
    for w in s.windows(2) {
        assert!(w[1].geometry.r1 > w[0].geometry.r1);
        assert!(w[1].kappa <= w[0].kappa);
    }
    for r in s.iter().skip(1) {
        assert!((r.r2_ratio - 1.0).abs() < (r.r1_ratio - 1.0).abs());
        assert!((r.geometry.r1 - 0.678).abs() < 0.5 * r.geometry.g);
        let (s1, s2) = ring_gap_center_sigma(&r.geometry, &r.amplitudes).unwrap();
        assert!(s1.abs() < 1e-10 && s2.abs() < 1e-10);
    }
}

#[test]
fn optimum_is_stationary_along_constraint() {
    let s = RingOptimizeSettings::default();
    for r in [&sweep()[0], &sweep()[4]] {
        let g = r.geometry.g;
        let kappa_at = |r1: f64| {
            let slope = |r2: f64| {
                let geom = RingTrapGeometry::new(r1, r2, g)?;
                Ok(ring_axis_jet(1.0, &geom, &solve_ring_alphas(&geom)?)?.d1)
            };
            let r2 =
                surftrap::optimize::brent_root(slope, r.geometry.r2 - 0.05, r.geometry.r2 + 0.05, 1e-15, 200).unwrap();
            let geom = RingTrapGeometry::new(r1, r2, g).unwrap();
            curvature_kappa(&geom, &solve_ring_alphas(&geom).unwrap(), 1.0).unwrap()
        };
        let h = 1e-4;
        let grad = (kappa_at(r.geometry.r1 + h) - kappa_at(r.geometry.r1 - h)) / (2.0 * h);
        assert!(grad.abs() < 1e-6, "g={g}: {grad}");
        let _ = s;
    }
}

#[test]
fn optimizer_scales_with_height() {
    let a = optimize_ring(0.1, 1.0).unwrap();
    let b = optimize_ring(0.25, 2.5).unwrap();
    assert!((a.kappa - b.kappa).abs() < 1e-9);
    assert!((b.geometry.r1 / 2.5 - a.geometry.r1).abs() < 1e-7);
    assert!(optimize_ring(1.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn surface_potential_is_continuous(r1 in 0.5..1.5f64, w in 0.5..2.0f64, gf in 0.05..0.9f64, a1 in -0.2..0.2f64, a2 in -0.2..0.2f64) {
        let r2 = r1 + w;
        let g = gf * w.min(2.0 * r1);
        let geom = RingTrapGeometry::new(r1, r2, g).unwrap();
        let amps = GapAmplitudes::new(a1, a2);
        for b in [r1 - g / 2.0, r1 + g / 2.0, r2 - g / 2.0, r2 + g / 2.0] {
            let lo = ring_surface_potential(b * (1.0 - 1e-12), &geom, &amps);
            let hi = ring_surface_potential(b * (1.0 + 1e-12), &geom, &amps);
            prop_assert!((lo - hi).abs() < 1e-5);
        }
    }

    #[test]
    fn kappa_is_scale_invariant(s in 0.1..10.0f64, r1 in 0.4..1.2f64, g in 0.0..0.3f64) {
        let slope = |r2: f64| {
            let geom = RingTrapGeometry::new(r1, r2, g)?;
            Ok(ring_axis_jet(1.0, &geom, &solve_ring_alphas(&geom)?)?.d1)
        };
        let (a, b) = surftrap::optimize::scan_bracket(slope, r1 + g + 1e-3, 30.0, 300).unwrap().unwrap();
        let r2 = surftrap::optimize::brent_root(slope, a, b, 1e-15, 200).unwrap();
        let geom = RingTrapGeometry::new(r1, r2, g).unwrap();
        let k1 = curvature_kappa(&geom, &solve_ring_alphas(&geom).unwrap(), 1.0).unwrap();
        let gs = geom.scaled(s);
        let amps = solve_ring_alphas(&gs).unwrap();
        let j = ring_axis_jet(s, &gs, &amps).unwrap();
        prop_assert!((s * j.d1).abs() < 1e-10);
        let k2 = curvature_kappa(&gs, &amps, s).unwrap();
        prop_assert!((k1 - k2).abs() < 1e-12 * k1.max(1.0));
    }
}
