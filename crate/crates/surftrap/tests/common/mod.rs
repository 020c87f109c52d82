//! Quadrature oracles shared by integration test targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use surftrap::finiteplane::{compensation_sigma, MultipoleIndex};
use surftrap::kernel::{greens_function, sheet_potential, Edge, Point3, Support, SurfaceFn};
use surftrap::quad::{integrate_pts, QuadSettings};
use surftrap::specfun::SeriesControl;

/// Radial profiles `f_m(r)` of the compensation density for a pixel at
/// `rho`, inside the disc, summed over `n` from the hypergeometric branch.
fn inside_profiles(rho: f64, s: f64, r: f64) -> Vec<f64> {
    let ctl = SeriesControl::default();
    let mut out = Vec::new();
    let mut total = 0.0_f64;
    for m in 0..400u32 {
        let mut fm = 0.0;
        let mut mag = 0.0_f64;
        for l in 0..400u32 {
            let idx = MultipoleIndex::new(m, m + 3 + 2 * l).unwrap();
            let t = idx.pixel_weight(rho).unwrap() * compensation_sigma(idx, s, r, 0.0, &ctl).unwrap();
            fm += t;
            mag += t.abs();
            if l > 2 && t.abs() < 1e-16 * mag {
                break;
            }
        }
        out.push(fm);
        total += mag;
        if m > 2 && mag < 1e-16 * total {
            break;
        }
    }
    out
}

/// Potential of a pixel at radius `rho` on a grounded disc of radius `s`,
/// built from the pixel's free-space field plus the sheet potential of the
/// compensation density: the exact negated pixel density outside the disc
/// and the summed hypergeometric branches inside.
pub fn compensated_pixel_oracle(rho: f64, s: f64, p: Point3, quad: &QuadSettings) -> f64 {
    let free = greens_function(Point3::new(p.x - rho, p.y, p.z)).unwrap();
    let outside = SurfaceFn::new(
        move |x: f64, y: f64| {
            if x.hypot(y) >= s {
                let d2 = (x - rho).powi(2) + y * y;
                1.0 / (PI * d2 * d2.sqrt())
            } else {
                0.0
            }
        },
        Support::Unbounded { scale: s },
    )
    .with_edges(vec![Edge::Circle { cx: 0.0, cy: 0.0, r: s }])
    .with_decay(3.0);
    let out = sheet_potential(&outside, p, quad).unwrap();

    // Inside: r' = S (1 - u^2) removes the inverse square root at the edge.
    let theta = p.y.atan2(p.x).rem_euclid(2.0 * PI);
    let r = p.x.hypot(p.y);
    let inner = |u: f64| -> f64 {
        let rp = s * (1.0 - u * u);
        let prof = inside_profiles(rho, s, rp);
        let ang = |tp: f64| -> f64 {
            let dens: f64 = prof.iter().enumerate().map(|(m, f)| f * (m as f64 * tp).cos()).sum();
            let d2 = rp * rp + r * r - 2.0 * rp * r * (tp - theta).cos() + p.z * p.z;
            dens / d2.sqrt()
        };
        let a = integrate_pts(ang, &[0.0, theta, 2.0 * PI], quad).unwrap().value;
        a * rp * 2.0 * s * u
    };
    let ins = integrate_pts(inner, &[0.0, 1.0], quad).unwrap().value / (4.0 * PI);
    free + out + ins
}

/// Potential at `p` of a density that is `outside(x, y)` for `r >= s` and
/// `inside(r, theta)` for `r < s`, where `inside` may carry an inverse
/// square root at the edge. The inner part is integrated in disc-centred
/// polar coordinates with `r' = S (1 - u^2)`.
pub fn split_disc_oracle(
    s: f64,
    decay: f64,
    outside: impl Fn(f64, f64) -> f64 + Send + Sync,
    inside: impl Fn(f64, f64) -> f64,
    p: Point3,
    quad: &QuadSettings,
) -> f64 {
    let outer = SurfaceFn::new(
        move |x: f64, y: f64| if x.hypot(y) >= s { outside(x, y) } else { 0.0 },
        Support::Unbounded { scale: s },
    )
    .with_edges(vec![Edge::Circle { cx: 0.0, cy: 0.0, r: s }])
    .with_decay(decay);
    let out = sheet_potential(&outer, p, quad).unwrap();

    let theta = p.y.atan2(p.x).rem_euclid(2.0 * PI);
    let r = p.x.hypot(p.y);
    let radial = |u: f64| -> f64 {
        let rp = s * (1.0 - u * u);
        let ang = |tp: f64| -> f64 {
            let d2 = rp * rp + r * r - 2.0 * rp * r * (tp - theta).cos() + p.z * p.z;
            inside(rp, tp) / d2.sqrt()
        };
        integrate_pts(ang, &[0.0, theta, 2.0 * PI], quad).unwrap().value * rp * 2.0 * s * u
    };
    let ins = integrate_pts(radial, &[0.0, 1.0], quad).unwrap().value / (4.0 * PI);
    out + ins
}
