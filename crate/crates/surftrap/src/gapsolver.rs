//! Gaps of arbitrary shape along sampled curves.
//!
//! A gap curve runs along the gap center with the electrode labelled
//! `electrode` on its left and the region labelled `outside` on its right, so
//! a curve winding counterclockwise encloses its electrode. At signed
//! distance `u` along the left normal `e(t)` the surface potential is
//! `V_out + (V_el - V_out) phi_gap(u) + alpha(t) phi_pol(u)` for
//! `|u| < g(t)/2`. Off the gaps a point takes the potential of its side of
//! the nearest curve.
//!
//! Positions, widths and amplitudes are cubic splines in the curve
//! parameter: periodic on closed curves; on open curves the geometry has
//! natural ends and the amplitude zero end slopes.
//!
//! The amplitudes null the charge density at the gap center of every sample.
//! The densities are affine in the amplitudes, so one vector evaluation of
//! the local-square split per sample gives a row of a dense linear system.
//! Each row is evaluated at square half-widths `d` and `d/2` and extrapolated
//! in `d^3`, which removes the leading error of the split.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gap1d::{phi_gap, phi_pol};
use crate::kernel::{self, CustomEdge, Edge, RayBreaks, Rect, Support, SurfacePotential};
use crate::optimize::brent_root;
use crate::quad::QuadSettings;

/// Smallest accepted ratio of the local radius of curvature to the gap
/// width; samples below it are reported as warnings.
pub const CURVATURE_RATIO: f64 = 10.0;

/// Polyline vertices per spline interval, used for nearest-point seeds and
/// edge crossings.
const SUBDIVISIONS: usize = 8;

/// Default ratio of the local-square half-width to the gap width.
pub const DEFAULT_D_FACTOR: f64 = 0.25;

/// Condition estimate above which the amplitude system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

// ---------------------------------------------------------------------------
// Cubic splines
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ends {
    Periodic(f64),
    Natural,
    /// Zero first derivative at both ends.
    Flat,
}

/// Knots and end conditions of an interpolating cubic spline. Second
/// derivatives at the knots are `k * y`.
#[derive(Debug)]
struct SplineBasis {
    t: Vec<f64>,
    ends: Ends,
    k: DMatrix<f64>,
}

/// Position of a parameter within a spline interval.
#[derive(Debug, Clone, Copy)]
struct Span {
    i: usize,
    j: usize,
    /// Weight of knot `i`; knot `j` gets `1 - a`.
    a: f64,
    h: f64,
}

impl SplineBasis {
    fn new(t: Vec<f64>, ends: Ends) -> Result<Self> {
        let n = t.len();
        if n == 0 {
            return Err(Error::Geometry("spline needs at least one knot".into()));
        }
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DMatrix::<f64>::zeros(n, n);
        let periodic = matches!(ends, Ends::Periodic(_));
        let h = |i: usize| match ends {
            Ends::Periodic(p) if i + 1 == n => t[0] + p - t[i],
            _ => t[i + 1] - t[i],
        };
        if n == 1 || (n == 2 && !periodic && ends == Ends::Natural) {
            return Ok(SplineBasis {
                t,
                ends,
                k: DMatrix::zeros(n, n),
            });
        }
        let rows: Vec<usize> = if periodic {
            (0..n).collect()
        } else {
            (1..n - 1).collect()
        };
        for i in rows {
            let (im, ip) = ((i + n - 1) % n, (i + 1) % n);
            let (hl, hr) = (h(im), h(i));
            a[(i, im)] += hl;
            a[(i, i)] += 2.0 * (hl + hr);
            a[(i, ip)] += hr;
            b[(i, ip)] += 6.0 / hr;
            b[(i, i)] -= 6.0 / hr + 6.0 / hl;
            b[(i, im)] += 6.0 / hl;
        }
        match ends {
            Ends::Periodic(_) => {}
            Ends::Natural => {
                a[(0, 0)] = 1.0;
                a[(n - 1, n - 1)] = 1.0;
            }
            Ends::Flat => {
                let (h0, hl) = (h(0), h(n - 2));
                a[(0, 0)] = 2.0 * h0;
                a[(0, 1)] = h0;
                b[(0, 1)] = 6.0 / h0;
                b[(0, 0)] = -6.0 / h0;
                a[(n - 1, n - 2)] = hl;
                a[(n - 1, n - 1)] = 2.0 * hl;
                b[(n - 1, n - 1)] = -6.0 / hl;
                b[(n - 1, n - 2)] = 6.0 / hl;
            }
        }
        let k = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Singular("spline knot system".into()))?;
        Ok(SplineBasis { t, ends, k })
    }

    fn span(&self, t: f64) -> Span {
        let n = self.t.len();
        if n == 1 {
            return Span {
                i: 0,
                j: 0,
                a: 1.0,
                h: 1.0,
            };
        }
        let t0 = self.t[0];
        match self.ends {
            Ends::Periodic(p) => {
                let tt = t0 + (t - t0).rem_euclid(p);
                let i = self.t.partition_point(|&k| k <= tt).saturating_sub(1);
                let (j, tj) = if i + 1 < n { (i + 1, self.t[i + 1]) } else { (0, t0 + p) };
                let h = tj - self.t[i];
                Span {
                    i,
                    j,
                    a: ((tj - tt) / h).clamp(0.0, 1.0),
                    h,
                }
            }
            _ => {
                let tt = t.clamp(t0, self.t[n - 1]);
                let i = self.t.partition_point(|&k| k <= tt).saturating_sub(1).min(n - 2);
                let h = self.t[i + 1] - self.t[i];
                Span {
                    i,
                    j: i + 1,
                    a: (self.t[i + 1] - tt) / h,
                    h,
                }
            }
        }
    }

    /// Cardinal weights: the spline value at `t` is `sum_j w_j y_j`.
    fn weights(&self, t: f64, out: &mut [f64]) {
        let sp = self.span(t);
        out.iter_mut().for_each(|w| *w = 0.0);
        if self.t.len() == 1 {
            out[0] = 1.0;
            return;
        }
        let (a, b) = (sp.a, 1.0 - sp.a);
        let ca = (a * a * a - a) * sp.h * sp.h / 6.0;
        let cb = (b * b * b - b) * sp.h * sp.h / 6.0;
        out[sp.i] += a;
        out[sp.j] += b;
        for (w, (ki, kj)) in out.iter_mut().zip(self.k.row(sp.i).iter().zip(self.k.row(sp.j).iter())) {
            *w += ca * ki + cb * kj;
        }
    }
}

/// An interpolating spline: value and first two derivatives.
#[derive(Debug, Clone)]
struct Spline {
    basis: Arc<SplineBasis>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(basis: Arc<SplineBasis>, y: Vec<f64>) -> Self {
        let m = (&basis.k * nalgebra::DVector::from_column_slice(&y))
            .as_slice()
            .to_vec();
        Spline { basis, y, m }
    }

    fn eval(&self, t: f64) -> [f64; 3] {
        if self.y.len() == 1 {
            return [self.y[0], 0.0, 0.0];
        }
        let sp = self.basis.span(t);
        let (a, b, h) = (sp.a, 1.0 - sp.a, sp.h);
        let (yi, yj, mi, mj) = (self.y[sp.i], self.y[sp.j], self.m[sp.i], self.m[sp.j]);
        let v = a * yi + b * yj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d1 = (yj - yi) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi + (3.0 * b * b - 1.0) / 6.0 * h * mj;
        let d2 = a * mi + b * mj;
        [v, d1, d2]
    }

    fn scaled(&self, f: f64) -> Self {
        Spline {
            basis: self.basis.clone(),
            y: self.y.iter().map(|v| f * v).collect(),
            m: self.m.iter().map(|v| f * v).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Gap curves
// ---------------------------------------------------------------------------

/// One sample of a gap curve: parameter, gap-center position and width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub g: f64,
}

impl GapSample {
    pub fn new(t: f64, x: f64, y: f64, g: f64) -> Self {
        GapSample { t, x, y, g }
    }
}

/// A gap along a sampled curve, with its polarization amplitude `alpha(t)`.
#[derive(Debug, Clone)]
pub struct GapCurve {
    id: String,
    electrode: String,
    outside: String,
    samples: Vec<GapSample>,
    closed: bool,
    x: Spline,
    y: Spline,
    g: Spline,
    alpha: Spline,
    alpha_knots: Vec<usize>,
    warnings: Vec<String>,
}

impl GapCurve {
    /// Builds a curve from its samples. The curve is closed when the last
    /// sample repeats the position of the first; the repeat is dropped and
    /// its parameter sets the period.
    pub fn new(
        id: impl Into<String>,
        electrode: impl Into<String>,
        outside: impl Into<String>,
        samples: Vec<GapSample>,
    ) -> Result<Self> {
        let id = id.into();
        let electrode = electrode.into();
        let outside = outside.into();
        let bad = |msg: String| Error::Geometry(format!("curve '{id}': {msg}"));
        if id.is_empty() || electrode.is_empty() || outside.is_empty() {
            return Err(bad("curve id and region labels must be non-empty".into()));
        }
        if samples.len() < 2 {
            return Err(bad("at least two samples are required".into()));
        }
        for s in &samples {
            if !(s.t.is_finite() && s.x.is_finite() && s.y.is_finite() && s.g.is_finite()) {
                return Err(bad(format!("non-finite sample at t = {}", s.t)));
            }
            if s.g < 0.0 {
                return Err(bad(format!("negative gap width at t = {}", s.t)));
            }
        }
        if let Some(w) = samples.windows(2).find(|w| !(w[1].t > w[0].t)) {
            return Err(bad(format!(
                "parameters must increase strictly (t = {} then {})",
                w[0].t, w[1].t
            )));
        }
        let (first, last) = (samples[0], samples[samples.len() - 1]);
        let extent = samples
            .iter()
            .fold(0.0_f64, |m, s| m.max((s.x - first.x).abs()).max((s.y - first.y).abs()));
        let closed = (last.x - first.x).hypot(last.y - first.y) <= 1e-12 * extent.max(f64::MIN_POSITIVE);
        let mut samples = samples;
        let ends = if closed {
            if samples.len() < 4 {
                return Err(bad("a closed curve needs at least three distinct samples".into()));
            }
            samples.pop();
            Ends::Periodic(last.t - first.t)
        } else {
            Ends::Natural
        };
        let knots: Vec<f64> = samples.iter().map(|s| s.t).collect();
        let basis = Arc::new(SplineBasis::new(knots.clone(), ends)?);
        let col = |f: fn(&GapSample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
        let x = Spline::new(basis.clone(), col(|s| s.x));
        let y = Spline::new(basis.clone(), col(|s| s.y));
        let g = Spline::new(basis, col(|s| s.g));
        let alpha_ends = if closed { ends } else { Ends::Flat };
        let alpha = Spline::new(Arc::new(SplineBasis::new(knots, alpha_ends)?), vec![0.0; samples.len()]);
        let mut curve = GapCurve {
            alpha_knots: (0..samples.len()).collect(),
            id,
            electrode,
            outside,
            samples,
            closed,
            x,
            y,
            g,
            alpha,
            warnings: Vec::new(),
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Closed circle of radius `r` about `(cx, cy)` sampled at `n` points,
    /// counterclockwise when `ccw` (electrode inside) and clockwise otherwise.
    #[allow(clippy::too_many_arguments)]
    pub fn circle(
        id: &str,
        electrode: &str,
        outside: &str,
        cx: f64,
        cy: f64,
        r: f64,
        g: f64,
        n: usize,
        ccw: bool,
    ) -> Result<Self> {
        let sgn = if ccw { 1.0 } else { -1.0 };
        let samples = (0..=n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let (s, c) = (sgn * t).sin_cos();
                let (x, y) = if k == n { (cx + r, cy) } else { (cx + r * c, cy + r * s) };
                GapSample::new(t, x, y, g)
            })
            .collect();
        GapCurve::new(id, electrode, outside, samples)
    }

    /// Straight open curve from `a` to `b` with `n` samples; the electrode
    /// lies on the left when walking from `a` to `b`.
    pub fn segment(
        id: &str,
        electrode: &str,
        outside: &str,
        a: [f64; 2],
        b: [f64; 2],
        g: f64,
        n: usize,
    ) -> Result<Self> {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let samples = (0..n)
            .map(|k| {
                let v = k as f64 / (n - 1) as f64;
                GapSample::new(v * len, a[0] + v * (b[0] - a[0]), a[1] + v * (b[1] - a[1]), g)
            })
            .collect();
        GapCurve::new(id, electrode, outside, samples)
    }

    fn validate(&mut self) -> Result<()> {
        let id = self.id.clone();
        for s in &self.samples {
            let [_, d1, _] = self.derivs(s.t);
            if d1[0].hypot(d1[1]) == 0.0 {
                return Err(Error::Geometry(format!("curve '{id}': zero tangent at t = {}", s.t)));
            }
        }
        let pts: Vec<[f64; 2]> = self.dense().into_iter().map(|(_, p)| p).collect();
        if let Some((i, j)) = self_intersection(&pts, self.closed) {
            let dense = self.dense();
            return Err(Error::Geometry(format!(
                "curve '{id}' intersects itself near t = {} and t = {}",
                dense[i].0, dense[j].0
            )));
        }
        for s in &self.samples {
            let rc = self.radius_of_curvature(s.t);
            if s.g > 0.0 && rc < CURVATURE_RATIO * s.g {
                self.warnings.push(format!(
                    "curve '{id}' at t = {}: radius of curvature {rc:.4e} is below {CURVATURE_RATIO} gap widths",
                    s.t
                ));
            }
        }
        if !self.closed {
            self.warnings.push(format!(
                "curve '{id}' is open: the amplitude is clamped to zero slope at both ends"
            ));
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Label of the region on the left of the curve.
    pub fn electrode(&self) -> &str {
        &self.electrode
    }

    /// Label of the region on the right of the curve.
    pub fn outside(&self) -> &str {
        &self.outside
    }

    /// Distinct samples; a closed curve omits its repeated end point.
    pub fn samples(&self) -> &[GapSample] {
        &self.samples
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Signed enclosed area is positive; `None` for open curves.
    pub fn winds_counterclockwise(&self) -> Option<bool> {
        if !self.closed {
            return None;
        }
        let pts = self.dense();
        let n = pts.len();
        let area: f64 = (0..n)
            .map(|k| {
                let (a, b) = (pts[k].1, pts[(k + 1) % n].1);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        Some(area > 0.0)
    }

    /// Parameter range; for closed curves the upper end is one period on.
    pub fn t_range(&self) -> (f64, f64) {
        let t0 = self.samples[0].t;
        match self.x.basis.ends {
            Ends::Periodic(p) => (t0, t0 + p),
            _ => (t0, self.samples[self.samples.len() - 1].t),
        }
    }

    fn derivs(&self, t: f64) -> [[f64; 2]; 3] {
        let (x, y) = (self.x.eval(t), self.y.eval(t));
        [[x[0], y[0]], [x[1], y[1]], [x[2], y[2]]]
    }

    /// Gap-center position `gamma(t)`.
    pub fn position(&self, t: f64) -> [f64; 2] {
        self.derivs(t)[0]
    }

    /// Unit left normal `e(t)`, pointing into the electrode.
    pub fn normal(&self, t: f64) -> [f64; 2] {
        let d = self.derivs(t)[1];
        let n = d[0].hypot(d[1]);
        [-d[1] / n, d[0] / n]
    }

    /// Gap width `g(t)`, never negative.
    pub fn width(&self, t: f64) -> f64 {
        self.g.eval(t)[0].max(0.0)
    }

    /// Polarization amplitude `alpha(t)`.
    pub fn alpha(&self, t: f64) -> f64 {
        self.alpha.eval(t)[0]
    }

    /// Amplitudes at the samples.
    pub fn alphas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| self.alpha(s.t)).collect()
    }

    /// Indices of the samples that carry amplitude values; the others are
    /// interpolated.
    pub fn alpha_knots(&self) -> &[usize] {
        &self.alpha_knots
    }

    pub fn radius_of_curvature(&self, t: f64) -> f64 {
        let [_, d1, d2] = self.derivs(t);
        let cross = (d1[0] * d2[1] - d1[1] * d2[0]).abs();
        let speed = d1[0].hypot(d1[1]);
        if cross == 0.0 {
            f64::INFINITY
        } else {
            speed.powi(3) / cross
        }
    }

    /// Checks flagged while building the curve.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// The same curve with amplitudes `values` at every sample.
    pub fn with_alphas(&self, values: &[f64]) -> Result<Self> {
        self.with_alpha_knots((0..self.samples.len()).collect(), values.to_vec())
    }

    /// The same curve with amplitudes given at a subset of samples.
    pub fn with_alpha_knots(&self, knots: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.is_empty() {
            return Err(Error::Geometry(format!(
                "curve '{}': {} amplitude values for {} knots",
                self.id,
                values.len(),
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) || knots[knots.len() - 1] >= self.samples.len() {
            return Err(Error::Geometry(format!("curve '{}': invalid amplitude knots", self.id)));
        }
        let basis = self.alpha_basis(&knots)?;
        let mut out = self.clone();
        out.alpha = Spline::new(basis, values);
        out.alpha_knots = knots;
        Ok(out)
    }

    fn alpha_basis(&self, knots: &[usize]) -> Result<Arc<SplineBasis>> {
        let t = knots.iter().map(|&k| self.samples[k].t).collect();
        let ends = if self.closed { self.x.basis.ends } else { Ends::Flat };
        Ok(Arc::new(SplineBasis::new(t, ends)?))
    }

    /// Polyline through the curve: `SUBDIVISIONS` points per interval, with
    /// their parameters. Open curves include the end point.
    fn dense(&self) -> Vec<(f64, [f64; 2])> {
        let (t0, t1) = self.t_range();
        let mut knots: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        if self.closed {
            knots.push(t1);
        }
        let mut out = Vec::new();
        for w in knots.windows(2) {
            for k in 0..SUBDIVISIONS {
                let t = w[0] + (w[1] - w[0]) * k as f64 / SUBDIVISIONS as f64;
                out.push((t, self.position(t)));
            }
        }
        if !self.closed {
            out.push((t1, self.position(t1)));
        }
        let _ = t0;
        out
    }
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// First pair of non-adjacent crossing segments, as segment start indices.
fn self_intersection(pts: &[[f64; 2]], closed: bool) -> Option<(usize, usize)> {
    let n = pts.len();
    let m = if closed { n } else { n - 1 };
    let seg = |i: usize| (pts[i], pts[(i + 1) % n]);
    for i in 0..m {
        for j in i + 2..m {
            if closed && i == 0 && j == m - 1 {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_cross(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Nearest-point search
// ---------------------------------------------------------------------------

/// Static 2D k-d tree over polyline vertices, stored as a recursively
/// median-partitioned array.
#[derive(Debug)]
struct KdTree {
    pts: Vec<([f64; 2], usize)>,
}

impl KdTree {
    fn new(mut pts: Vec<([f64; 2], usize)>) -> Self {
        fn build(v: &mut [([f64; 2], usize)], axis: usize) {
            if v.len() <= 1 {
                return;
            }
            let mid = v.len() / 2;
            v.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]));
            let (lo, hi) = v.split_at_mut(mid);
            build(lo, 1 - axis);
            build(&mut hi[1..], 1 - axis);
        }
        build(&mut pts, 0);
        KdTree { pts }
    }

    /// Payload and squared distance of the nearest vertex.
    fn nearest(&self, q: [f64; 2]) -> (usize, f64) {
        fn search(v: &[([f64; 2], usize)], axis: usize, q: [f64; 2], best: &mut (usize, f64)) {
            if v.is_empty() {
                return;
            }
            let mid = v.len() / 2;
            let (p, id) = v[mid];
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d2 < best.1 {
                *best = (id, d2);
            }
            let diff = q[axis] - p[axis];
            let (near, far) = if diff < 0.0 {
                (&v[..mid], &v[mid + 1..])
            } else {
                (&v[mid + 1..], &v[..mid])
            };
            search(near, 1 - axis, q, best);
            if diff * diff < best.1 {
                search(far, 1 - axis, q, best);
            }
        }
        let mut best = (usize::MAX, f64::INFINITY);
        search(&self.pts, 0, q, &mut best);
        best
    }
}

// ---------------------------------------------------------------------------
// Assembled surface potential
// ---------------------------------------------------------------------------

/// Scaled potentials of the labelled regions.
pub type ElectrodePotentials = BTreeMap<String, f64>;

/// Position of a point relative to its nearest gap curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapLocation {
    pub curve: usize,
    /// Parameter of the nearest point.
    pub t: f64,
    /// Signed distance along the left normal.
    pub u: f64,
    /// Whether the point lies inside the gap.
    pub in_gap: bool,
    /// Whether the point lies on the electrode side.
    pub left: bool,
}

/// In-plane surface potential built from gap curves and region potentials.
#[derive(Debug, Clone)]
pub struct PlanePotential {
    curves: Vec<GapCurve>,
    levels: Vec<(f64, f64)>,
    tree: Arc<KdTree>,
    vertices: Vec<(usize, f64, f64)>,
    support: Support,
    edges: Vec<Edge>,
}

/// Assembles the surface potential of a set of gap curves. Fails if a label
/// has no potential or if the regions seen from two curves disagree where
/// their zones of nearest approach meet.
pub fn assemble_plane_potential(potentials: &ElectrodePotentials, curves: Vec<GapCurve>) -> Result<PlanePotential> {
    if curves.is_empty() {
        return Err(Error::Geometry("at least one gap curve is required".into()));
    }
    let level = |label: &str, id: &str| {
        potentials
            .get(label)
            .copied()
            .ok_or_else(|| Error::Geometry(format!("curve '{id}': no potential is given for region '{label}'")))
    };
    let mut levels = Vec::new();
    for c in &curves {
        let v = (level(&c.electrode, &c.id)?, level(&c.outside, &c.id)?);
        if !(v.0.is_finite() && v.1.is_finite()) {
            return Err(Error::Geometry(format!(
                "curve '{}': non-finite region potential",
                c.id
            )));
        }
        levels.push(v);
    }
    let mut pts = Vec::new();
    let mut vertices = Vec::new();
    for (ci, c) in curves.iter().enumerate() {
        let dense = c.dense();
        let n = dense.len();
        for (k, &(t, p)) in dense.iter().enumerate() {
            // Spacing to the next vertex bounds the Newton step.
            let next = if k + 1 < n {
                dense[k + 1].0
            } else {
                t + (t - dense[k.saturating_sub(1)].0)
            };
            pts.push((p, vertices.len()));
            vertices.push((ci, t, (next - t).abs()));
        }
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut gmax = 0.0_f64;
    for c in &curves {
        for (t, p) in c.dense() {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
            gmax = gmax.max(c.width(t));
        }
    }
    let diam = (hi[0] - lo[0]).hypot(hi[1] - lo[1]).max(gmax).max(f64::MIN_POSITIVE);
    let mut plane = PlanePotential {
        curves,
        levels,
        tree: Arc::new(KdTree::new(pts)),
        vertices,
        support: Support::Unbounded { scale: diam },
        edges: Vec::new(),
    };
    let (cx, cy) = (0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]));
    let far_zero = (0..8).all(|k| {
        let a = k as f64 * std::f64::consts::FRAC_PI_4;
        plane.value(cx + 1e3 * diam * a.cos(), cy + 1e3 * diam * a.sin()) == 0.0
    });
    if far_zero && plane.curves.iter().all(|c| c.closed) {
        let pad = gmax + 1e-9 * diam;
        plane.support = Support::Bounded(Rect::new(lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad));
    }
    plane.edges = plane.build_edges(diam);
    plane.check_consistency(diam)?;
    Ok(plane)
}

impl PlanePotential {
    pub fn curves(&self) -> &[GapCurve] {
        &self.curves
    }

    /// Potentials on the left and right of curve `i`.
    pub fn levels(&self, i: usize) -> (f64, f64) {
        self.levels[i]
    }

    /// Nearest curve point and gap coordinates of `(x, y)`.
    pub fn locate(&self, x: f64, y: f64) -> GapLocation {
        let (v, _) = self.tree.nearest([x, y]);
        let (ci, tv, step) = self.vertices[v];
        let c = &self.curves[ci];
        let (t0, t1) = c.t_range();
        let mut t = tv;
        let mut clamped = false;
        // Newton on gamma'(t) . (gamma(t) - p) = 0, limited to a few vertex
        // spacings from the seed.
        for _ in 0..8 {
            let [p, d1, d2] = c.derivs(t);
            let (rx, ry) = (p[0] - x, p[1] - y);
            let f = d1[0] * rx + d1[1] * ry;
            let fp = d2[0] * rx + d2[1] * ry + d1[0] * d1[0] + d1[1] * d1[1];
            if fp <= 0.0 {
                break;
            }
            let dt = (-f / fp).clamp(-2.0 * step, 2.0 * step);
            let mut tn = t + dt;
            clamped = false;
            if !c.closed && (tn <= t0 || tn >= t1) {
                tn = tn.clamp(t0, t1);
                clamped = true;
            }
            let done = (tn - t).abs() <= 1e-14 * (1.0 + t.abs());
            t = tn;
            if done {
                break;
            }
        }
        let [p, d1, _] = c.derivs(t);
        let (rx, ry) = (x - p[0], y - p[1]);
        let speed = d1[0].hypot(d1[1]);
        let u = (d1[0] * ry - d1[1] * rx) / speed;
        let interior = c.closed || !(clamped || t <= t0 || t >= t1);
        GapLocation {
            curve: ci,
            t,
            u,
            in_gap: interior && u.abs() < 0.5 * c.width(t),
            left: u > 0.0,
        }
    }

    /// Potential at a located point.
    fn value_at(&self, loc: &GapLocation) -> f64 {
        let c = &self.curves[loc.curve];
        let (vel, vout) = self.levels[loc.curve];
        if loc.in_gap {
            let g = c.width(loc.t);
            vout + (vel - vout) * phi_gap(loc.u, g) + c.alpha(loc.t) * phi_pol(loc.u, g)
        } else if loc.left {
            vel
        } else {
            vout
        }
    }

    /// The same plane with every amplitude multiplied by the model's factor.
    pub fn with_susceptibility(&self, model: &GapSusceptibilityModel) -> Self {
        let mut out = self.clone();
        out.curves = apply_susceptibility(&self.curves, model);
        out
    }

    fn build_edges(&self, diam: f64) -> Vec<Edge> {
        let mut edges = vec![Edge::Custom(CustomEdge(Arc::new(GapEdges::new(&self.curves))))];
        for c in &self.curves {
            if c.closed {
                continue;
            }
            let (t0, t1) = c.t_range();
            for (t, dir) in [(t0, -1.0), (t1, 1.0)] {
                let p = c.position(t);
                let n = c.normal(t);
                let h = 0.5 * c.width(t);
                // Tangent ray beyond the end separates the two regions.
                let far = [p[0] + dir * 1e4 * diam * n[1], p[1] - dir * 1e4 * diam * n[0]];
                edges.push(Edge::polyline(vec![p, far], false));
                if h > 0.0 {
                    let a = [p[0] - h * n[0], p[1] - h * n[1]];
                    let b = [p[0] + h * n[0], p[1] + h * n[1]];
                    edges.push(Edge::polyline(vec![a, b], false));
                }
            }
        }
        edges
    }

    /// Walks outward from each gap edge along the sample normals until
    /// another curve becomes nearest and compares the two potentials there.
    fn check_consistency(&self, diam: f64) -> Result<()> {
        // Steps small enough not to jump across a gap.
        let gmin = self
            .curves
            .iter()
            .flat_map(|c| c.samples.iter().map(|s| s.g))
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let delta = if gmin.is_finite() {
            (0.25 * gmin).max(1e-3 * diam)
        } else {
            1e-3 * diam
        };
        for (ci, c) in self.curves.iter().enumerate() {
            let (vel, vout) = self.levels[ci];
            for s in &c.samples {
                let n = c.normal(s.t);
                let p = c.position(s.t);
                let h = 0.5 * c.width(s.t);
                for (side, expect) in [(1.0, vel), (-1.0, vout)] {
                    let mut step = delta;
                    while step < diam {
                        let u = side * (h + step);
                        let loc = self.locate(p[0] + u * n[0], p[1] + u * n[1]);
                        step += delta;
                        if loc.curve == ci {
                            // Back at this curve from across its own region.
                            if loc.in_gap || loc.left != (side > 0.0) {
                                break;
                            }
                            continue;
                        }
                        if !loc.in_gap {
                            let got = self.value_at(&loc);
                            if (got - expect).abs() > 1e-12 * (1.0 + expect.abs()) {
                                let label = if side > 0.0 { &c.electrode } else { &c.outside };
                                return Err(Error::Geometry(format!(
                                    "curve '{}' at t = {}: region '{label}' (potential {expect}) meets potential {got} from curve '{}'",
                                    c.id, s.t, self.curves[loc.curve].id
                                )));
                            }
                        }
                        break;
                    }
                }
            }
        }
        Ok(())
    }
}

impl SurfacePotential for PlanePotential {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.value_at(&self.locate(x, y))
    }
    fn support(&self) -> Support {
        self.support
    }
    fn edges(&self) -> Vec<Edge> {
        self.edges.clone()
    }
}

/// Exact crossings of rays with the gap edges `gamma(t) +- g(t)/2 e(t)`,
/// seeded by polylines through the edge curves.
struct GapEdges {
    curves: Vec<GapCurve>,
    /// Per edge: curve index, side, vertex parameters, polyline.
    lines: Vec<(usize, f64, Vec<f64>, Edge)>,
}

impl GapEdges {
    fn new(curves: &[GapCurve]) -> Self {
        let mut lines = Vec::new();
        for (ci, c) in curves.iter().enumerate() {
            if c.samples.iter().all(|s| s.g == 0.0) {
                continue;
            }
            for side in [1.0, -1.0] {
                let dense = c.dense();
                let ts: Vec<f64> = dense.iter().map(|d| d.0).collect();
                let pts: Vec<[f64; 2]> = ts.iter().map(|&t| offset_point(c, t, side)).collect();
                lines.push((ci, side, ts, Edge::polyline(pts, c.closed)));
            }
        }
        GapEdges {
            curves: curves.to_vec(),
            lines,
        }
    }
}

fn offset_point(c: &GapCurve, t: f64, side: f64) -> [f64; 2] {
    let p = c.position(t);
    let n = c.normal(t);
    let h = 0.5 * side * c.width(t);
    [p[0] + h * n[0], p[1] + h * n[1]]
}

impl RayBreaks for GapEdges {
    fn ray_breaks(&self, ox: f64, oy: f64, c: f64, s: f64, out: &mut Vec<f64>) {
        for (ci, side, ts, line) in &self.lines {
            let Edge::Polyline { points, closed } = line else {
                continue;
            };
            let curve = &self.curves[*ci];
            let n = points.len();
            let m = if *closed { n } else { n - 1 };
            let cross = |p: [f64; 2]| (p[0] - ox) * s - (p[1] - oy) * c;
            for k in 0..m {
                let (a, b) = (points[k], points[(k + 1) % n]);
                let (fa, fb) = (cross(a), cross(b));
                if fa * fb > 0.0 || (fa == 0.0 && fb == 0.0) {
                    continue;
                }
                let along = |p: [f64; 2]| (p[0] - ox) * c + (p[1] - oy) * s;
                if along(a) <= 0.0 && along(b) <= 0.0 {
                    continue;
                }
                let (ta, tb) = (ts[k], if k + 1 < n { ts[k + 1] } else { curve.t_range().1 });
                let f = |t: f64| cross(offset_point(curve, t, *side));
                let t = match (f(ta), f(tb)) {
                    (x, y) if x * y <= 0.0 => {
                        brent_root(|t| Ok(f(t)), ta, tb, 1e-14 * (tb - ta).abs().max(1e-300), 100).ok()
                    }
                    _ => None,
                };
                let rho = match t {
                    Some(t) => along(offset_point(curve, t, *side)),
                    None => {
                        // Chord crossing without a sign change of the exact edge.
                        let v = fa / (fa - fb);
                        along([a[0] + v * (b[0] - a[0]), a[1] + v * (b[1] - a[1])])
                    }
                };
                if rho > 0.0 {
                    out.push(rho);
                }
            }
        }
    }

    fn angle_breaks(&self, ox: f64, oy: f64, out: &mut Vec<f64>) {
        for (_, _, _, line) in &self.lines {
            line.critical_angles(ox, oy, out);
        }
    }
}

// ---------------------------------------------------------------------------
// Susceptibility
// ---------------------------------------------------------------------------

/// Global factor applied to all polarization amplitudes, emulating
/// electrode thickness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSusceptibilityModel {
    multiplier: f64,
}

impl GapSusceptibilityModel {
    pub fn new(multiplier: f64) -> Result<Self> {
        if !(multiplier > 0.0 && multiplier <= 1.5) {
            return Err(Error::domain("gap susceptibility", "multiplier must lie in (0, 1.5]"));
        }
        Ok(GapSusceptibilityModel { multiplier })
    }

    /// Thin electrodes: amplitudes unchanged.
    pub fn thin() -> Self {
        GapSusceptibilityModel { multiplier: 1.0 }
    }

    /// Thick electrodes (aspect ratio of about 0.7 or more): amplitudes halved.
    pub fn thick() -> Self {
        GapSusceptibilityModel { multiplier: 0.5 }
    }

    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }
}

impl Default for GapSusceptibilityModel {
    fn default() -> Self {
        GapSusceptibilityModel::thin()
    }
}

/// Curves with every amplitude multiplied by the model's factor; the
/// interpolation part is untouched.
pub fn apply_susceptibility(curves: &[GapCurve], model: &GapSusceptibilityModel) -> Vec<GapCurve> {
    curves
        .iter()
        .map(|c| {
            let mut out = c.clone();
            out.alpha = c.alpha.scaled(model.multiplier);
            out
        })
        .collect()
}

/// Potential inside a gap at `(t, u)`, for a curve between a unit-potential
/// electrode and a grounded outside.
pub fn gap_local_potential(t: f64, u: f64, curve: &GapCurve) -> Result<f64> {
    let g = curve.width(t);
    if !(u.abs() <= 0.5 * g) {
        return Err(Error::domain(
            "gap_local_potential",
            format!("|u| = {} exceeds g(t)/2 = {}", u.abs(), 0.5 * g),
        ));
    }
    Ok(phi_gap(u, g) + curve.alpha(t) * phi_pol(u, g))
}

// ---------------------------------------------------------------------------
// Charge-nulling solve
// ---------------------------------------------------------------------------

/// Parameters of [`solve_alphas`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSolveSettings {
    /// Local-square half-width as a fraction of the local gap width.
    pub d_factor: f64,
    pub quad: QuadSettings,
    /// Samples closer than this many gap widths to another curve are
    /// interpolated instead of solved.
    pub junction_factor: f64,
    pub max_condition: f64,
}

impl Default for GapSolveSettings {
    fn default() -> Self {
        GapSolveSettings {
            d_factor: DEFAULT_D_FACTOR,
            quad: QuadSettings::new(1e-8, 1e-6),
            junction_factor: 2.0,
            max_condition: MAX_CONDITION,
        }
    }
}

/// Solved amplitudes and the plane they belong to.
#[derive(Debug, Clone)]
pub struct GapSolution {
    pub plane: PlanePotential,
    /// Ratio of extreme singular values of the amplitude system.
    pub condition: f64,
    /// Curve and sample index of every solved sample.
    pub solved: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

/// Fills in the amplitudes that null the gap-center charge densities.
pub fn solve_alphas(
    potentials: &ElectrodePotentials,
    curves: Vec<GapCurve>,
    settings: &GapSolveSettings,
) -> Result<GapSolution> {
    if !(settings.d_factor > 0.0 && settings.d_factor <= 0.5) {
        return Err(Error::Config("local-square factor must lie in (0, 0.5]".into()));
    }
    let zero: Vec<GapCurve> = curves
        .iter()
        .map(|c| c.with_alphas(&vec![0.0; c.samples.len()]))
        .collect::<Result<_>>()?;
    let plane0 = assemble_plane_potential(potentials, zero)?;
    let mut warnings: Vec<String> = curves.iter().flat_map(|c| c.warnings.iter().cloned()).collect();

    // Unknowns: samples with a gap and no other curve nearby.
    let mut knots: Vec<Vec<usize>> = Vec::new();
    for (ci, c) in curves.iter().enumerate() {
        let mut ks = Vec::new();
        for (k, s) in c.samples.iter().enumerate() {
            if s.g == 0.0 {
                continue;
            }
            let near = curves
                .iter()
                .enumerate()
                .filter(|(cj, _)| *cj != ci)
                .find_map(|(_, o)| {
                    let (d, g2) = o
                        .dense()
                        .iter()
                        .map(|&(t, p)| ((p[0] - s.x).hypot(p[1] - s.y), o.width(t)))
                        .fold((f64::INFINITY, 0.0), |m, v| if v.0 < m.0 { v } else { m });
                    (d < settings.junction_factor * s.g + 0.5 * g2).then_some(o.id.clone())
                });
            // The gap stops abruptly at an open end, where the center density
            // is not defined; the amplitude there is clamped to its neighbors.
            let at_end = !c.closed && {
                let (t0, t1) = c.t_range();
                [t0, t1].iter().any(|&te| {
                    let e = c.position(te);
                    (e[0] - s.x).hypot(e[1] - s.y) <= settings.junction_factor * s.g
                })
            };
            match near {
                Some(other) => warnings.push(format!(
                    "curve '{}' at t = {}: within {} gap widths of curve '{other}'; amplitude interpolated",
                    c.id, s.t, settings.junction_factor
                )),
                None if at_end => warnings.push(format!(
                    "curve '{}' at t = {}: within {} gap widths of an open end; amplitude clamped",
                    c.id, s.t, settings.junction_factor
                )),
                None => ks.push(k),
            }
        }
        knots.push(ks);
    }
    let bases: Vec<Option<Arc<SplineBasis>>> = curves
        .iter()
        .zip(&knots)
        .map(|(c, ks)| {
            if ks.is_empty() {
                Ok(None)
            } else {
                c.alpha_basis(ks).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let mut offsets = Vec::new();
    let mut n = 0;
    for ks in &knots {
        offsets.push(n);
        n += ks.len();
    }
    let solved: Vec<(usize, usize)> = knots
        .iter()
        .enumerate()
        .flat_map(|(ci, ks)| ks.iter().map(move |&k| (ci, k)))
        .collect();
    if n == 0 {
        return Ok(GapSolution {
            plane: plane0,
            condition: 1.0,
            solved,
            warnings,
        });
    }

    let f = |x: f64, y: f64, out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        let loc = plane0.locate(x, y);
        out[0] = plane0.value_at(&loc);
        if loc.in_gap {
            if let Some(b) = &bases[loc.curve] {
                let c = &plane0.curves[loc.curve];
                let p = phi_pol(loc.u, c.width(loc.t));
                let off = 1 + offsets[loc.curve];
                let w = &mut out[off..off + b.t.len()];
                b.weights(loc.t, w);
                w.iter_mut().for_each(|v| *v *= p);
            }
        }
    };
    let edges = plane0.edges();
    let support = plane0.support();
    let rows: Vec<Vec<f64>> = solved
        .par_iter()
        .map(|&(ci, k)| {
            let c = &plane0.curves[ci];
            let s = c.samples[k];
            let nrm = c.normal(s.t);
            let frame = nrm[1].atan2(nrm[0]);
            let d = settings.d_factor * s.g;
            let v = kernel::split_sigma_vec(
                &f,
                n + 1,
                None,
                s.x,
                s.y,
                d,
                true,
                frame,
                edges.clone(),
                &support,
                &settings.quad,
            )?;
            let (s1, s2) = v.split_at(n + 1);
            Ok(s1.iter().zip(s2).map(|(a, b)| richardson(*a, *b)).collect())
        })
        .collect::<Result<_>>()?;
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j + 1]);
    let rhs = nalgebra::DVector::from_fn(n, |i, _| -rows[i][0]);
    let sv = a.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= settings.max_condition) {
        return Err(Error::IllConditioned(condition));
    }
    let x = a.lu().solve(&rhs).ok_or(Error::IllConditioned(condition))?;
    let mut out = Vec::new();
    for (ci, c) in curves.iter().enumerate() {
        let ks = &knots[ci];
        if ks.is_empty() {
            out.push(c.with_alphas(&vec![0.0; c.samples.len()])?);
        } else {
            let vals = x.as_slice()[offsets[ci]..offsets[ci] + ks.len()].to_vec();
            out.push(c.with_alpha_knots(ks.clone(), vals)?);
        }
    }
    Ok(GapSolution {
        plane: assemble_plane_potential(potentials, out)?,
        condition,
        solved,
        warnings,
    })
}

/// Removes the leading `d^3` error of the local-square split from values at
/// `d` and `d/2`. A Taylor term of order `k` in the square contributes
/// `O(d^(k-1))`; the quadratic term is exact and odd terms cancel.
fn richardson(at_d: f64, at_half: f64) -> f64 {
    (8.0 * at_half - at_d) / 7.0
}

/// Charge density at a gap center, from the local-square split at
/// `g/16` and `g/32` extrapolated in the square size.
pub fn gap_center_sigma(plane: &PlanePotential, curve: usize, t: f64, quad: &QuadSettings) -> Result<f64> {
    let c = &plane.curves[curve];
    let g = c.width(t);
    if g == 0.0 {
        return Err(Error::domain("gap_center_sigma", "no gap at this parameter"));
    }
    let p = c.position(t);
    let nrm = c.normal(t);
    let frame = nrm[1].atan2(nrm[0]);
    let d = g / 16.0;
    let f = |x: f64, y: f64, out: &mut [f64]| out[0] = plane.value(x, y);
    let v = kernel::split_sigma_vec(
        &f,
        1,
        None,
        p[0],
        p[1],
        d,
        true,
        frame,
        plane.edges(),
        &plane.support(),
        quad,
    )?;
    Ok(richardson(v[0], v[1]))
}

/// Gap-center density at a solved sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResidual {
    pub curve: usize,
    pub sample: usize,
    pub t: f64,
    pub sigma: f64,
}

/// Gap-center densities at every amplitude knot.
pub fn gap_center_residuals(plane: &PlanePotential, quad: &QuadSettings) -> Result<Vec<GapResidual>> {
    let at: Vec<(usize, usize)> = plane
        .curves
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            c.alpha_knots
                .iter()
                .filter(|&&k| c.samples[k].g > 0.0)
                .map(move |&k| (ci, k))
        })
        .collect();
    at.par_iter()
        .map(|&(curve, sample)| {
            let t = plane.curves[curve].samples[sample].t;
            Ok(GapResidual {
                curve,
                sample,
                t,
                sigma: gap_center_sigma(plane, curve, t, quad)?,
            })
        })
        .collect()
}

/// Median `|sigma / eps0|` on the electrodes two gap widths from each gap
/// center, on both sides; the reference scale for gap-center residuals.
pub fn electrode_sigma_median(plane: &PlanePotential, quad: &QuadSettings) -> Result<f64> {
    let mut probes = Vec::new();
    for (ci, c) in plane.curves.iter().enumerate() {
        for s in &c.samples {
            if s.g == 0.0 {
                continue;
            }
            let n = c.normal(s.t);
            for side in [1.0, -1.0] {
                let (x, y) = (s.x + side * 2.0 * s.g * n[0], s.y + side * 2.0 * s.g * n[1]);
                let loc = plane.locate(x, y);
                if loc.curve == ci && !loc.in_gap {
                    probes.push((x, y, s.g));
                }
            }
        }
    }
    if probes.is_empty() {
        return Err(Error::Geometry("no on-electrode probe points".into()));
    }
    let mut v: Vec<f64> = probes
        .par_iter()
        .map(|&(x, y, g)| kernel::phi_to_sigma_single(plane, x, y, 0.25 * g, 0.0, quad).map(f64::abs))
        .collect::<Result<_>>()?;
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Ok(if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_spline_reproduces_trig_and_constants() {
        let n = 32;
        let p = 2.0 * std::f64::consts::PI;
        let t: Vec<f64> = (0..n).map(|k| p * k as f64 / n as f64).collect();
        let b = Arc::new(SplineBasis::new(t.clone(), Ends::Periodic(p)).unwrap());
        let s = Spline::new(b.clone(), t.iter().map(|v| v.sin()).collect());
        for k in 0..50 {
            let x = -1.0 + 0.17 * k as f64;
            let [v, d1, d2] = s.eval(x);
            assert!((v - x.sin()).abs() < 5e-6, "{x}");
            assert!((d1 - x.cos()).abs() < 1e-3);
            assert!((d2 + x.sin()).abs() < 2e-2);
        }
        let mut w = vec![0.0; n];
        b.weights(0.3, &mut w);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_spline_has_zero_end_slopes() {
        let b = Arc::new(SplineBasis::new(vec![0.0, 1.0, 2.5, 3.0], Ends::Flat).unwrap());
        let s = Spline::new(b, vec![1.0, 2.0, -1.0, 0.5]);
        assert!(s.eval(0.0)[1].abs() < 1e-13);
        assert!(s.eval(3.0)[1].abs() < 1e-13);
        assert!((s.eval(2.5)[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn kd_tree_matches_brute_force() {
        let pts: Vec<([f64; 2], usize)> = (0..200)
            .map(|k| {
                let a = k as f64 * 0.731;
                ([a.sin() * (1.0 + 0.01 * k as f64), (1.7 * a).cos()], k)
            })
            .collect();
        let tree = KdTree::new(pts.clone());
        for q in [[0.1, 0.2], [3.0, -2.0], [-0.5, 0.9]] {
            let brute = pts
                .iter()
                .map(|(p, k)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2), *k))
                .fold((f64::INFINITY, 0), |m, v| if v.0 < m.0 { v } else { m });
            assert_eq!(tree.nearest(q).0, brute.1);
        }
    }

    #[test]
    fn crossing_segments() {
        assert!(segments_cross([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]));
        assert!(!segments_cross([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
    }
}
