use std::sync::OnceLock;

use proptest::prelude::*;
use surftrap::gap1d::{phi_gap, phi_pol, strip_alpha, StripSpec};
use surftrap::gapsolver::*;
use surftrap::kernel::{
    numerical_laplacian, propagate, Point3, PropagatedField, ScaledPotentialField, SurfacePotential,
};
use surftrap::quad::QuadSettings;
use surftrap::ringtrap::{
    ring_axis_potential, ring_surface_potential, solve_ring_alphas, GapAmplitudes, RingTrapGeometry,
};
use surftrap::Error;

const R1: f64 = 1.0;
const R2: f64 = 3.0;
const G: f64 = 0.1;

fn pots() -> ElectrodePotentials {
    [("rf".to_string(), 1.0), ("gnd".to_string(), 0.0)]
        .into_iter()
        .collect()
}

fn ring(n: usize) -> Vec<GapCurve> {
    vec![
        GapCurve::circle("inner", "rf", "gnd", 0.0, 0.0, R1, G, n, false).unwrap(),
        GapCurve::circle("outer", "rf", "gnd", 0.0, 0.0, R2, G, n, true).unwrap(),
    ]
}

/// Strip of width `w` along y, truncated at `|y| = len/2`.
fn strip(w: f64, g: f64, len: f64, n: usize) -> Vec<GapCurve> {
    let (h, l) = (0.5 * w, 0.5 * len);
    vec![
        GapCurve::segment("left", "rf", "gnd", [-h, l], [-h, -l], g, n).unwrap(),
        GapCurve::segment("right", "rf", "gnd", [h, -l], [h, l], g, n).unwrap(),
    ]
}

fn ring_solution(n: usize) -> &'static GapSolution {
    static S16: OnceLock<GapSolution> = OnceLock::new();
    static S32: OnceLock<GapSolution> = OnceLock::new();
    let cell = match n {
        16 => &S16,
        32 => &S32,
        _ => unreachable!(),
    };
    cell.get_or_init(|| solve_alphas(&pots(), ring(n), &GapSolveSettings::default()).unwrap())
}

#[test]
fn local_potential_examples() {
    let c = GapCurve::segment("c", "rf", "gnd", [0.0, 0.0], [4.0, 0.0], 0.2, 9).unwrap();
    assert!((gap_local_potential(1.0, 0.0, &c).unwrap() - 0.5).abs() < 1e-15);
    let c = c.with_alphas(&[0.03; 9]).unwrap();
    assert!((gap_local_potential(1.0, 0.1, &c).unwrap() - 1.0).abs() < 1e-15);
    assert!(gap_local_potential(1.0, -0.1, &c).unwrap().abs() < 1e-15);
    let want = phi_gap(0.04, 0.2) + 0.03 * phi_pol(0.04, 0.2);
    assert!((gap_local_potential(2.3, 0.04, &c).unwrap() - want).abs() < 1e-14);
    assert!(matches!(gap_local_potential(1.0, 0.11, &c), Err(Error::Domain { .. })));
}

#[test]
fn straight_strip_with_strip_amplitude_reproduces_profile() {
    let (w, g) = (1.0, 0.25);
    let a = strip_alpha(w, g);
    let curves: Vec<GapCurve> = strip(w, g, 10.0, 11)
        .iter()
        .map(|c| c.with_alphas(&[a; 11]).unwrap())
        .collect();
    let plane = assemble_plane_potential(&pots(), curves).unwrap();
    let spec = StripSpec::new(w, g).unwrap();
    for k in 0..81 {
        let x = -1.0 + 0.025 * k as f64;
        for y in [-2.0, 0.3, 1.7] {
            let got = plane.value(x, y);
            let want = spec.surface_potential(x);
            assert!((got - want).abs() < 1e-12, "x={x} y={y}: {got} vs {want}");
        }
    }
}

#[test]
fn ring_plane_matches_ring_potential() {
    let amps = GapAmplitudes::new(0.03, -0.02);
    let geom = RingTrapGeometry::new(R1, R2, G).unwrap();
    let curves = ring(64);
    let curves = vec![
        curves[0].with_alphas(&[amps.alpha1; 64]).unwrap(),
        curves[1].with_alphas(&[amps.alpha2; 64]).unwrap(),
    ];
    let plane = assemble_plane_potential(&pots(), curves).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..400 {
        let r = 0.01 * k as f64;
        for th in [0.0f64, 0.37, 1.9, 4.4] {
            let got = plane.value(r * th.cos(), r * th.sin());
            let want = ring_surface_potential(r, &geom, &amps);
            let near = (r - R1).abs() < G || (r - R2).abs() < G;
            if near {
                worst = worst.max((got - want).abs());
            } else {
                assert_eq!(got, want, "r={r} theta={th}");
            }
        }
    }
    // Only the spline approximation of the circle differs.
    assert!(worst < 2e-3, "{worst}");
}

#[test]
fn zero_width_gaps_give_electrode_map() {
    let curves = vec![
        GapCurve::circle("inner", "rf", "gnd", 0.0, 0.0, R1, 0.0, 16, false).unwrap(),
        GapCurve::circle("outer", "rf", "gnd", 0.0, 0.0, R2, 0.0, 16, true).unwrap(),
    ];
    let plane = assemble_plane_potential(&pots(), curves).unwrap();
    for (r, v) in [
        (0.5, 0.0),
        (0.999, 0.0),
        (1.001, 1.0),
        (2.0, 1.0),
        (2.999, 1.0),
        (3.001, 0.0),
        (7.0, 0.0),
    ] {
        assert_eq!(plane.value(r * 0.6, r * 0.8), v, "r={r}");
    }
}

#[test]
fn edge_mismatch_names_curve_and_parameter() {
    // Both circles claim the electrode inside, so the annulus is both rf
    // (outer curve) and grounded (inner curve).
    let curves = vec![
        GapCurve::circle("inner", "rf", "gnd", 0.0, 0.0, R1, G, 16, true).unwrap(),
        GapCurve::circle("outer", "rf", "gnd", 0.0, 0.0, R2, G, 16, true).unwrap(),
    ];
    match assemble_plane_potential(&pots(), curves) {
        Err(Error::Geometry(msg)) => {
            assert!(msg.contains("curve '") && msg.contains("t = "), "{msg}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_region_label_is_rejected() {
    let curves = vec![GapCurve::circle("c", "dc", "gnd", 0.0, 0.0, 1.0, 0.1, 8, true).unwrap()];
    assert!(matches!(
        assemble_plane_potential(&pots(), curves),
        Err(Error::Geometry(_))
    ));
}

#[test]
fn curve_validation() {
    let s = |t: f64, x: f64, y: f64| GapSample::new(t, x, y, 0.1);
    assert!(GapCurve::new("c", "rf", "gnd", vec![s(0.0, 0.0, 0.0)]).is_err());
    assert!(GapCurve::new("c", "rf", "gnd", vec![s(0.0, 0.0, 0.0), s(0.0, 1.0, 0.0)]).is_err());
    assert!(GapCurve::new("", "rf", "gnd", vec![s(0.0, 0.0, 0.0), s(1.0, 1.0, 0.0)]).is_err());
    assert!(GapCurve::new(
        "c",
        "rf",
        "gnd",
        vec![s(0.0, 0.0, 0.0), GapSample::new(1.0, 1.0, 0.0, -0.1)]
    )
    .is_err());
    // A figure eight crosses itself.
    let eight: Vec<GapSample> = (0..=32)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 32.0;
            let p = if k == 32 {
                [0.0, 0.0]
            } else {
                [(2.0 * t).sin() * 3.0, t.sin() * 3.0]
            };
            s(t, p[0], p[1])
        })
        .collect();
    assert!(matches!(GapCurve::new("eight", "rf", "gnd", eight), Err(Error::Geometry(m)) if m.contains("eight")));

    let c = GapCurve::circle("c", "rf", "gnd", 0.0, 0.0, 1.0, 0.05, 16, true).unwrap();
    assert!(c.is_closed() && c.winds_counterclockwise() == Some(true));
    assert!(c.warnings().is_empty());
    let tight = GapCurve::circle("tight", "rf", "gnd", 0.0, 0.0, 0.5, 0.1, 16, true).unwrap();
    assert!(tight.warnings().iter().any(|w| w.contains("curvature")));
    let open = GapCurve::segment("seg", "rf", "gnd", [0.0, 0.0], [1.0, 0.0], 0.1, 5).unwrap();
    assert!(!open.is_closed());
    assert!(open.warnings().iter().any(|w| w.contains("open")));
}

#[test]
fn normal_points_at_electrode() {
    let c = GapCurve::circle("c", "rf", "gnd", 1.0, -2.0, 2.0, 0.1, 24, true).unwrap();
    for t in [0.0, 0.4, 2.0, 5.5] {
        let p = c.position(t);
        let n = c.normal(t);
        let inward = [1.0 - p[0], -2.0 - p[1]];
        assert!(n[0] * inward[0] + n[1] * inward[1] > 0.99 * 2.0, "t={t}");
        assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
    }
    let c = GapCurve::circle("c", "rf", "gnd", 0.0, 0.0, 2.0, 0.1, 24, false).unwrap();
    assert_eq!(c.winds_counterclockwise(), Some(false));
    let n = c.normal(0.3);
    let p = c.position(0.3);
    assert!(n[0] * p[0] + n[1] * p[1] > 0.0);
}

#[test]
fn susceptibility_model() {
    assert!(GapSusceptibilityModel::new(0.0).is_err());
    assert!(GapSusceptibilityModel::new(1.6).is_err());
    assert!(GapSusceptibilityModel::new(1.5).is_ok());
    assert_eq!(GapSusceptibilityModel::default().multiplier(), 1.0);
    assert_eq!(GapSusceptibilityModel::thick().multiplier(), 0.5);

    let curves: Vec<GapCurve> = ring(12)
        .iter()
        .map(|c| {
            c.with_alphas(&(0..12).map(|k| 0.01 * k as f64 - 0.03).collect::<Vec<_>>())
                .unwrap()
        })
        .collect();
    let same = apply_susceptibility(&curves, &GapSusceptibilityModel::thin());
    let half = apply_susceptibility(&curves, &GapSusceptibilityModel::thick());
    for ((c, s), h) in curves.iter().zip(&same).zip(&half) {
        assert_eq!(c.alphas(), s.alphas());
        for t in [0.1, 1.3, 4.0] {
            assert_eq!(s.alpha(t), c.alpha(t));
            assert!((h.alpha(t) - 0.5 * c.alpha(t)).abs() < 1e-15);
            let u = 0.02;
            let full = gap_local_potential(t, u, c).unwrap();
            let halved = gap_local_potential(t, u, h).unwrap();
            let pol = c.alpha(t) * phi_pol(u, G);
            assert!((full - halved - 0.5 * pol).abs() < 1e-15);
        }
    }
}

#[test]
fn single_straight_gap_needs_no_polarization() {
    let c = GapCurve::segment("g", "rf", "gnd", [0.0, -3.0], [0.0, 3.0], 0.2, 7).unwrap();
    let sol = solve_alphas(&pots(), vec![c], &GapSolveSettings::default()).unwrap();
    assert!(sol.warnings.iter().any(|w| w.contains("open")));
    for a in sol.plane.curves()[0].alphas() {
        assert!(a.abs() < 1e-6, "{a}");
    }
}

#[test]
fn strip_amplitude_matches_closed_form() {
    let (w, g) = (1.0, 0.25);
    let sol = solve_alphas(&pots(), strip(w, g, 20.0, 11), &GapSolveSettings::default()).unwrap();
    let want = strip_alpha(w, g);
    for c in sol.plane.curves() {
        let mid = c.alpha(10.0);
        assert!((mid / want - 1.0).abs() < 0.02, "{} {mid} vs {want}", c.id());
    }
}

#[test]
fn ring_amplitudes_match_ring_solution() {
    let sol = ring_solution(16);
    assert!(sol.condition < 10.0);
    let want = solve_ring_alphas(&RingTrapGeometry::new(R1, R2, G).unwrap()).unwrap();
    let c = sol.plane.curves();
    for (curve, w) in [(&c[0], want.alpha1), (&c[1], want.alpha2)] {
        let a = curve.alphas();
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        // Constant along each circle.
        assert!(a.iter().all(|v| (v - mean).abs() < 1e-4 * mean.abs()), "{a:?}");
        // Equal to the leading-order ring amplitude up to higher orders in g.
        assert!((mean / w - 1.0).abs() < 0.03, "{mean} vs {w}");
    }
}

#[test]
fn refining_samples_changes_amplitudes_below_one_percent() {
    let coarse = ring_solution(16);
    let fine = ring_solution(32);
    for (a, b) in coarse.plane.curves().iter().zip(fine.plane.curves()) {
        let scale = b.alphas().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..64 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            assert!((a.alpha(t) - b.alpha(t)).abs() < 0.01 * scale, "{} t={t}", a.id());
        }
    }
}

#[test]
fn solved_ring_nulls_gap_center_charge() {
    let sol = ring_solution(16);
    let q = GapSolveSettings::default().quad;
    let res = gap_center_residuals(&sol.plane, &q).unwrap();
    assert_eq!(res.len(), 32);
    let med = electrode_sigma_median(&sol.plane, &q).unwrap();
    for r in &res {
        assert!(r.sigma.abs() < 1e-4 * med, "{r:?} median {med}");
    }
    // Without the amplitudes the gap centers carry charge.
    let bare = gap_center_sigma(
        &sol.plane
            .with_susceptibility(&GapSusceptibilityModel::new(1e-9).unwrap()),
        0,
        0.0,
        &q,
    )
    .unwrap();
    assert!(bare.abs() > 1e-2 * med, "{bare}");
}

#[test]
fn propagated_ring_plane_matches_axis_potential_and_solves_laplace() {
    let sol = ring_solution(16);
    let c = sol.plane.curves();
    let amps = GapAmplitudes::new(c[0].alphas()[0], c[1].alphas()[0]);
    let geom = RingTrapGeometry::new(R1, R2, G).unwrap();
    let q = QuadSettings::new(1e-9, 1e-8);
    for z in [0.5, 1.0, 2.0] {
        let got = propagate(&sol.plane, Point3::new(0.0, 0.0, z), &q).unwrap();
        let want = ring_axis_potential(z, &geom, &amps).unwrap();
        assert!((got - want).abs() < 1e-4, "z={z}: {got} vs {want}");
    }
    let field = PropagatedField::new(&sol.plane, QuadSettings::new(1e-12, 1e-11));
    let p = Point3::new(0.4, 0.3, 0.8);
    let h = 0.05;
    let res = numerical_laplacian(&field, p, h).unwrap();
    let c0 = field.potential(p).unwrap();
    let up = field.potential(Point3::new(p.x, p.y, p.z + h)).unwrap();
    let dn = field.potential(Point3::new(p.x, p.y, p.z - h)).unwrap();
    let phi_zz = (up + dn - 2.0 * c0) / (h * h);
    assert!(res.abs() < 1e-2 * phi_zz.abs(), "{res} vs {phi_zz}");
}

#[test]
fn solved_amplitudes_are_smooth_on_an_ellipse() {
    let n = 16;
    let samples: Vec<GapSample> = (0..=n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let (x, y) = if k == n { (2.0, 0.0) } else { (2.0 * t.cos(), t.sin()) };
            GapSample::new(t, x, y, 0.05)
        })
        .collect();
    let c = GapCurve::new("ellipse", "rf", "gnd", samples).unwrap();
    let sol = solve_alphas(&pots(), vec![c], &GapSolveSettings::default()).unwrap();
    let a = sol.plane.curves()[0].alphas();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.0);
    // No oscillation: the amplitude rises and falls once per half turn.
    let turns = (0..n)
        .filter(|&k| {
            let (a0, a1, a2) = (a[(k + n - 1) % n], a[k], a[(k + 1) % n]);
            (a1 - a0) * (a2 - a1) < 0.0
        })
        .count();
    assert_eq!(turns, 4, "{a:?}");
    for k in 0..n {
        let d2 = a[(k + 1) % n] - 2.0 * a[k] + a[(k + n - 1) % n];
        assert!(d2.abs() < scale, "k={k}: {a:?}");
    }
    // Mirror symmetry of the ellipse.
    for k in 1..n / 2 {
        assert!((a[k] - a[n - k]).abs() < 1e-5 * scale, "{a:?}");
    }
}

#[test]
fn nearby_curves_are_interpolated() {
    // Two electrodes whose gaps come within one gap width of each other.
    let curves = vec![
        GapCurve::circle("a", "rf", "gnd", 0.0, 0.0, 1.0, 0.1, 8, true).unwrap(),
        GapCurve::circle("b", "dc", "gnd", 2.15, 0.0, 1.0, 0.1, 8, true).unwrap(),
    ];
    let mut p = pots();
    p.insert("dc".into(), 0.3);
    let sol = solve_alphas(&p, curves, &GapSolveSettings::default()).unwrap();
    assert!(sol.warnings.iter().any(|w| w.contains("interpolated")));
    assert_eq!(sol.solved.len(), 14);
    assert!(!sol.solved.contains(&(0, 0)) && !sol.solved.contains(&(1, 4)));
}

#[test]
fn ill_conditioning_is_reported() {
    let settings = GapSolveSettings {
        max_condition: 0.5,
        ..GapSolveSettings::default()
    };
    let c = GapCurve::circle("c", "rf", "gnd", 0.0, 0.0, 1.0, 0.1, 6, true).unwrap();
    match solve_alphas(&pots(), vec![c], &settings) {
        Err(Error::IllConditioned(k)) => assert!(k >= 1.0),
        other => panic!("{other:?}"),
    }
    let bad = GapSolveSettings {
        d_factor: 0.0,
        ..GapSolveSettings::default()
    };
    let c = GapCurve::circle("c", "rf", "gnd", 0.0, 0.0, 1.0, 0.1, 6, true).unwrap();
    assert!(solve_alphas(&pots(), vec![c], &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_potential_is_bounded_and_pinned_at_edges(
        g in 0.01f64..1.0,
        a in -0.2f64..0.2,
        s in -1.0f64..1.0,
    ) {
        let c = GapCurve::segment("c", "rf", "gnd", [0.0, 0.0], [10.0, 0.0], g, 5).unwrap()
            .with_alphas(&[a; 5]).unwrap();
        // The width spline reproduces g up to rounding.
        let gw = c.width(3.0);
        prop_assert!((gw - g).abs() < 1e-14);
        let u = 0.5 * gw * s;
        let v = gap_local_potential(3.0, u, &c).unwrap();
        prop_assert!((v - (phi_gap(u, gw) + a * phi_pol(u, gw))).abs() < 1e-14);
        let top = gap_local_potential(3.0, 0.5 * gw, &c).unwrap();
        let bottom = gap_local_potential(3.0, -0.5 * gw, &c).unwrap();
        prop_assert!((top - 1.0).abs() < 1e-14 && bottom.abs() < 1e-14);
    }

    #[test]
    fn plane_is_continuous_across_gap_edges(t in 0.0f64..std::f64::consts::TAU, curve in 0usize..2, side in prop::bool::ANY) {
        let curves: Vec<GapCurve> = ring(32).iter().zip([0.03, -0.02])
            .map(|(c, a)| c.with_alphas(&[a; 32]).unwrap()).collect();
        let plane = assemble_plane_potential(&pots(), curves).unwrap();
        let c = &plane.curves()[curve];
        let (p, n) = (c.position(t), c.normal(t));
        let edge = if side { 0.5 * G } else { -0.5 * G };
        let at = |u: f64| plane.value(p[0] + u * n[0], p[1] + u * n[1]);
        let (a, b) = (at(edge - 1e-10), at(edge + 1e-10));
        prop_assert!((a - b).abs() < 1e-4, "{} {}", a, b);
    }
}
