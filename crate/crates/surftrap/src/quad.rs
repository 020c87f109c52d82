//! Globally adaptive Gauss–Kronrod quadrature (10/21-point pair).
//!
//! All integrators work on a list of ascending breakpoints; every
//! sub-interval is seeded separately so that known kinks or jumps of the
//! integrand never fall inside a single rule. Vector-valued integrands share
//! one subdivision tree, refined on the worst component.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Tolerances and effort cap for adaptive integration.
///
/// The target is `max(abs_tol, rel_tol * |I|)`, where `|I|` is the largest
/// component magnitude of the running estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl QuadSettings {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        QuadSettings {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    /// Settings for an inner integral of a nested scheme: tighter by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        QuadSettings {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_intervals: self.max_intervals,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || (self.abs_tol == 0.0 && self.rel_tol == 0.0) {
            return Err(Error::Config(format!(
                "quadrature tolerances must be non-negative and not both zero (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_intervals == 0 {
            return Err(Error::Config("max_intervals must be positive".into()));
        }
        Ok(())
    }
}

/// Scalar integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

/// Vector integral; `error` is the worst component error.
#[derive(Debug, Clone, PartialEq)]
pub struct VecEstimate {
    pub value: Vec<f64>,
    pub error: f64,
    pub evals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
    // Error estimate is at the rounding floor; bisection cannot improve it.
    roundoff: bool,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Rule<'s> {
    dim: usize,
    fc: &'s mut [f64],
    f1: &'s mut [f64],
    f2: &'s mut [f64],
    fv: &'s mut Vec<f64>,
}

impl Rule<'_> {
    fn apply<F: FnMut(f64, &mut [f64])>(&mut self, f: &mut F, a: f64, b: f64) -> Piece {
        let dim = self.dim;
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        // fv layout: [j][dim] for j in 0..10 holding (f(c-hx), f(c+hx)) pairs.
        f(c, self.fc);
        for j in 0..10 {
            let dx = h * XGK[j];
            f(c - dx, self.f1);
            f(c + dx, self.f2);
            let base = 2 * j * dim;
            self.fv[base..base + dim].copy_from_slice(self.f1);
            self.fv[base + dim..base + 2 * dim].copy_from_slice(self.f2);
        }
        let mut value = vec![0.0; dim];
        let mut worst = 0.0_f64;
        let mut roundoff = true;
        let eps = f64::EPSILON;
        for k in 0..dim {
            let fc = self.fc[k];
            let mut resk = WGK[10] * fc;
            let mut resg = 0.0;
            let mut resabs = WGK[10] * fc.abs();
            for j in 0..10 {
                let lo = self.fv[2 * j * dim + k];
                let hi = self.fv[(2 * j + 1) * dim + k];
                resk += WGK[j] * (lo + hi);
                resabs += WGK[j] * (lo.abs() + hi.abs());
                if j % 2 == 1 {
                    resg += WG[j / 2] * (lo + hi);
                }
            }
            let mean = 0.5 * resk;
            let mut resasc = WGK[10] * (fc - mean).abs();
            for j in 0..10 {
                let lo = self.fv[2 * j * dim + k];
                let hi = self.fv[(2 * j + 1) * dim + k];
                resasc += WGK[j] * ((lo - mean).abs() + (hi - mean).abs());
            }
            let resk_h = resk * h;
            let resabs_h = resabs * h.abs();
            let resasc_h = resasc * h.abs();
            let mut err = ((resk - resg) * h).abs();
            if resasc_h != 0.0 && err != 0.0 {
                err = resasc_h * (200.0 * err / resasc_h).powf(1.5).min(1.0);
            }
            let floor = 50.0 * eps * resabs_h;
            if resabs_h > f64::MIN_POSITIVE / (50.0 * eps) {
                err = err.max(floor);
            }
            if err > 2.0 * floor {
                roundoff = false;
            }
            if !resk_h.is_finite() {
                err = f64::INFINITY;
            }
            value[k] = resk_h;
            worst = worst.max(err);
        }
        Piece {
            a,
            b,
            value,
            error: worst,
            roundoff,
        }
    }
}

/// Integrates a vector-valued function over consecutive breakpoint intervals.
///
/// `points` must be ascending with at least two entries; the result is the
/// integral from the first to the last point.
pub fn integrate_vec<F>(mut f: F, points: &[f64], dim: usize, s: &QuadSettings) -> Result<VecEstimate>
where
    F: FnMut(f64, &mut [f64]),
{
    s.validate()?;
    if points.len() < 2 {
        return Err(Error::Config("at least two integration points are required".into()));
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) || points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Config(format!(
            "integration points must be finite and ascending: {points:?}"
        )));
    }
    let mut fc = vec![0.0; dim];
    let mut f1 = vec![0.0; dim];
    let mut f2 = vec![0.0; dim];
    let mut fv = vec![0.0; 20 * dim];
    let mut rule = Rule {
        dim,
        fc: &mut fc,
        f1: &mut f1,
        f2: &mut f2,
        fv: &mut fv,
    };

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Piece> = Vec::new();
    // Error carried by pieces frozen because they became too narrow to split.
    let mut stuck_error = 0.0;
    let mut evals = 0usize;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(rule.apply(&mut f, w[0], w[1]));
            evals += 21;
        }
    }
    let mut count = heap.len();

    let totals = |heap: &BinaryHeap<Piece>, frozen: &[Piece]| {
        let mut v = vec![0.0; dim];
        let mut e = 0.0;
        for p in heap.iter().chain(frozen.iter()) {
            for (acc, x) in v.iter_mut().zip(&p.value) {
                *acc += x;
            }
            e += p.error;
        }
        (v, e)
    };

    let (mut value, mut error) = totals(&heap, &frozen);
    loop {
        let norm = value.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let target = s.abs_tol.max(s.rel_tol * norm);
        if error <= target {
            // Recompute from scratch to shed accumulated rounding in the running sums.
            let (v, e) = totals(&heap, &frozen);
            value = v;
            error = e;
            let norm = value.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if error <= s.abs_tol.max(s.rel_tol * norm) {
                return Ok(VecEstimate { value, error, evals });
            }
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => {
                // Everything left is rounding noise or unsplittable.
                if stuck_error <= target {
                    return Ok(VecEstimate { value, error, evals });
                }
                return Err(Error::Quadrature {
                    estimate: error,
                    target,
                    evals,
                });
            }
        };
        if worst.roundoff {
            frozen.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let tiny = 8.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
        if worst.b - worst.a <= tiny || mid <= worst.a || mid >= worst.b {
            stuck_error += worst.error;
            frozen.push(worst);
            continue;
        }
        if count >= s.max_intervals {
            return Err(Error::Quadrature {
                estimate: error,
                target,
                evals,
            });
        }
        let left = rule.apply(&mut f, worst.a, mid);
        let right = rule.apply(&mut f, mid, worst.b);
        evals += 42;
        count += 1;
        for k in 0..dim {
            value[k] += left.value[k] + right.value[k] - worst.value[k];
        }
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

/// Scalar integral over consecutive breakpoint intervals.
pub fn integrate_pts<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], s: &QuadSettings) -> Result<Estimate> {
    let r = integrate_vec(|x, out: &mut [f64]| out[0] = f(x), points, 1, s)?;
    Ok(Estimate {
        value: r.value[0],
        error: r.error,
        evals: r.evals,
    })
}

/// Scalar integral over `[a, b]`; `b < a` yields the negated integral.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, s: &QuadSettings) -> Result<Estimate> {
    if b < a {
        let r = integrate_pts(f, &[b, a], s)?;
        return Ok(Estimate { value: -r.value, ..r });
    }
    integrate_pts(f, &[a, b], s)
}

/// Scalar integral of a fallible integrand; the first error aborts the result.
pub fn try_integrate_pts<F>(mut f: F, points: &[f64], s: &QuadSettings) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut failure: Option<Error> = None;
    let r = integrate_pts(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            match f(x) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        points,
        s,
    );
    match failure {
        Some(e) => Err(e),
        None => r,
    }
}

/// Integrates with a smoothstep change of variables on every breakpoint
/// interval, x = a + (b-a)(3t^2 - 2t^3).
///
/// The Jacobian vanishes linearly at both ends, which removes inverse
/// square-root endpoint singularities and damps logarithmic ones.
pub fn integrate_pts_smooth<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], s: &QuadSettings) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::Config("at least two integration points are required".into()));
    }
    let n = points.len() - 1;
    let unit: Vec<f64> = (0..=n).map(|k| k as f64).collect();
    integrate_pts(
        |u| {
            let k = (u.floor() as usize).min(n - 1);
            let t = u - k as f64;
            let (a, b) = (points[k], points[k + 1]);
            let len = b - a;
            let jac = 6.0 * len * t * (1.0 - t);
            if jac == 0.0 {
                return 0.0;
            }
            let x = a + len * t * t * (3.0 - 2.0 * t);
            f(x) * jac
        },
        &unit,
        s,
    )
}

/// Vector version of [`integrate_pts_smooth`].
pub fn integrate_vec_smooth<F>(mut f: F, points: &[f64], dim: usize, s: &QuadSettings) -> Result<VecEstimate>
where
    F: FnMut(f64, &mut [f64]),
{
    if points.len() < 2 {
        return Err(Error::Config("at least two integration points are required".into()));
    }
    let n = points.len() - 1;
    let unit: Vec<f64> = (0..=n).map(|k| k as f64).collect();
    integrate_vec(
        |u, out: &mut [f64]| {
            let k = (u.floor() as usize).min(n - 1);
            let t = u - k as f64;
            let (a, b) = (points[k], points[k + 1]);
            let len = b - a;
            let jac = 6.0 * len * t * (1.0 - t);
            if jac == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
                return;
            }
            let x = a + len * t * t * (3.0 - 2.0 * t);
            f(x, out);
            out.iter_mut().for_each(|o| *o *= jac);
        },
        &unit,
        dim,
        s,
    )
}

/// Integral over `[a, inf)` through x = a + t/(1-t).
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, s: &QuadSettings) -> Result<Estimate> {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - t;
            f(a + t / w) / (w * w)
        },
        0.0,
        1.0,
        s,
    )
}

/// Sorted breakpoint list `[a, interior..., b]` keeping only interior points
/// strictly inside `(a, b)` and separated by more than a relative `1e-12`.
pub fn breakpoints(a: f64, b: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = interior
        .into_iter()
        .filter(|p| p.is_finite() && *p > a && *p < b)
        .collect();
    pts.sort_by(f64::total_cmp);
    let sep = 1e-12 * (b - a).abs().max(a.abs()).max(b.abs());
    let mut out = Vec::with_capacity(pts.len() + 2);
    out.push(a);
    for p in pts {
        if p - out[out.len() - 1] > sep && b - p > sep {
            out.push(p);
        }
    }
    out.push(b);
    out
}
