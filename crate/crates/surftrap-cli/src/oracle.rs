//! Closed forms against independent quadrature, at seeded random points.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surftrap::finiteplane::{compensation_sigma, modified_greens, FiniteDiscSpec, MultipoleIndex};
use surftrap::gap1d::{field_gap, field_pol, GapKind, GapProfile};
use surftrap::kernel::{greens_function, propagate, sheet_potential, Edge, Point3, Support, SurfaceFn};
use surftrap::quad::{integrate_pts, QuadSettings};
use surftrap::specfun::SeriesControl;
use surftrap::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Gap interpolation and polarization fields against propagated surface potentials.
    GapField,
    /// Finite-disc Green's function against quadrature of the compensated pixel.
    FinitePixel,
    /// No comparisons.
    None,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::GapField => "gap-field",
            Suite::FinitePixel => "finite-pixel",
            Suite::None => "none",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Suite::GapField => 1e-4,
            Suite::FinitePixel => 1e-5,
            Suite::None => 0.0,
        }
    }

    pub fn default_points(self) -> usize {
        match self {
            Suite::GapField => 50,
            Suite::FinitePixel => 20,
            Suite::None => 0,
        }
    }
}

/// Relative errors of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub errors: Vec<f64>,
}

impl SuiteReport {
    pub fn max(&self) -> f64 {
        self.errors.iter().fold(0.0, |m, &e| m.max(e))
    }

    pub fn median(&self) -> f64 {
        let mut v = self.errors.clone();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    pub fn passed(&self) -> bool {
        self.errors.iter().all(|&e| e <= self.suite.tolerance())
    }
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// `ctl` truncates the closed-form series under test; `quad` overrides the
/// tolerance of the reference quadrature.
pub fn run(
    suite: Suite,
    points: usize,
    seed: u64,
    ctl: &SeriesControl,
    quad: Option<QuadSettings>,
) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors = match suite {
        Suite::None => Vec::new(),
        Suite::GapField => {
            let g = 1.0;
            let q = quad.unwrap_or(QuadSettings::new(1e-13, 1e-12));
            let gap = GapProfile::new(g, GapKind::Interpolation)?;
            let pol = GapProfile::new(g, GapKind::Polarization)?;
            let mut out = Vec::with_capacity(points);
            for _ in 0..points {
                let x = rng.gen_range(-3.0 * g..3.0 * g);
                let z = rng.gen_range(0.1 * g..3.0 * g);
                let p = Point3::new(x, 0.0, z);
                let e1 = rel(field_gap(x, z, g), propagate(&gap, p, &q)?);
                let e2 = rel(field_pol(x, z, g), propagate(&pol, p, &q)?);
                out.push(e1.max(e2));
            }
            out
        }
        Suite::FinitePixel => {
            let s = 1.0;
            let disc = FiniteDiscSpec::new(s)?;
            let reference = SeriesControl::default();
            let q = quad.unwrap_or(QuadSettings::new(1e-11, 1e-10));
            let mut out = Vec::with_capacity(points);
            for _ in 0..points {
                let rho = rng.gen_range(0.1..0.6) * s;
                let rad = rng.gen_range(0.2..0.85) * s;
                let elev: f64 = rng.gen_range(0.1..1.3);
                let theta = rng.gen_range(0.0..2.0 * PI);
                let (r, z) = (rad * elev.cos(), rad * elev.sin());
                let p = Point3::new(r * theta.cos(), r * theta.sin(), z);
                let want = compensated_pixel(rho, s, p, &reference, &q)?;
                out.push(rel(modified_greens(rho, &disc, p, ctl)?, want));
            }
            out
        }
    };
    Ok(SuiteReport { suite, errors })
}

/// Radial profiles `f_m(r)` of the compensation density inside the disc for
/// a pixel at `rho`, summed over the radial order.
fn inside_profiles(rho: f64, s: f64, r: f64, ctl: &SeriesControl) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut total = 0.0_f64;
    for m in 0..400u32 {
        let mut fm = 0.0;
        let mut mag = 0.0_f64;
        for l in 0..400u32 {
            let idx = MultipoleIndex::new(m, m + 3 + 2 * l)?;
            let t = idx.pixel_weight(rho)? * compensation_sigma(idx, s, r, 0.0, ctl)?;
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
    Ok(out)
}

/// Potential of the unit pixel at radius `rho` on a grounded disc of radius
/// `s`: the free pixel field, the sheet potential of the negated pixel
/// density outside the disc, and the compensation density inside it,
/// integrated in disc-centred polar coordinates with `r' = s (1 - u^2)`.
fn compensated_pixel(rho: f64, s: f64, p: Point3, ctl: &SeriesControl, quad: &QuadSettings) -> Result<f64> {
    let free = greens_function(Point3::new(p.x - rho, p.y, p.z))?;
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
    let out = sheet_potential(&outside, p, quad)?;

    let theta = p.y.atan2(p.x).rem_euclid(2.0 * PI);
    let r = p.x.hypot(p.y);
    let mut failure = None;
    let inner = |u: f64| -> f64 {
        let rp = s * (1.0 - u * u);
        let prof = match inside_profiles(rho, s, rp, ctl) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                return 0.0;
            }
        };
        let ang = |tp: f64| -> f64 {
            let dens: f64 = prof.iter().enumerate().map(|(m, f)| f * (m as f64 * tp).cos()).sum();
            let d2 = rp * rp + r * r - 2.0 * rp * r * (tp - theta).cos() + p.z * p.z;
            dens / d2.sqrt()
        };
        match integrate_pts(ang, &[0.0, theta, 2.0 * PI], quad) {
            Ok(a) => a.value * rp * 2.0 * s * u,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let ins = integrate_pts(inner, &[0.0, 1.0], quad)?.value / (4.0 * PI);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(free + out + ins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn none_suite_is_an_empty_pass() {
        let r = run(Suite::None, 10, 1, &SeriesControl::default(), None).unwrap();
        assert!(r.errors.is_empty() && r.passed());
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn gap_field_suite_passes() {
        let r = run(Suite::GapField, 6, 7, &SeriesControl::default(), None).unwrap();
        assert_eq!(r.errors.len(), 6);
        assert!(r.passed(), "{:?}", r.errors);
    }
}
