//! Gapless-plane electrostatics: the half-space Green's function, propagation
//! of an in-plane potential into 3D, and the transforms between surface
//! potential and surface charge density.
//!
//! Everything here is computed by adaptive quadrature and serves as the
//! brute-force reference for the closed forms in the other modules. Charge
//! densities are always carried as `sigma / eps0`.

mod geometry;
pub(crate) mod polar;

use std::f64::consts::PI;

pub use geometry::{CustomEdge, Edge, EdgeSet, RayBreaks, Rect};
use polar::Extent;

use crate::error::{Error, Result};
use crate::quad::QuadSettings;

/// A point in space, in units of the chosen length scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// `x = r cos(theta)`, `y = r sin(theta)`.
    pub fn from_cylindrical(r: f64, theta: f64, z: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point3::new(r * c, r * s, z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Region outside which a surface function vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Bounded(Rect),
    /// Nonzero everywhere; `scale` is the size of the region with structure
    /// and sets where quadrature switches to an inverted radial variable.
    Unbounded {
        scale: f64,
    },
}

impl Support {
    fn rect(&self) -> Option<Rect> {
        match *self {
            Support::Bounded(r) => Some(r),
            Support::Unbounded { .. } => None,
        }
    }

    /// Characteristic size of the structured region.
    pub fn scale(&self) -> f64 {
        match *self {
            Support::Bounded(r) => {
                // Infinite extents (translation-invariant strips) carry no scale.
                let w = [r.x_max - r.x_min, r.y_max - r.y_min];
                let s = w.iter().filter(|v| v.is_finite()).fold(0.0_f64, |m, v| m.max(*v));
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            }
            Support::Unbounded { scale } => scale,
        }
    }
}

/// Symmetry of a surface function, used to reduce quadrature dimension.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Layout {
    #[default]
    Planar,
    /// Depends on `x` only; evaluated at `y = 0`. Edges must be vertical lines.
    LineInvariant,
    /// Depends on the distance from `(cx, cy)` only. Edges must be circles about it.
    Axisymmetric { cx: f64, cy: f64 },
}

/// In-plane scaled potential `phi(x, y)`.
pub trait SurfacePotential: Sync {
    fn value(&self, x: f64, y: f64) -> f64;
    fn support(&self) -> Support;
    fn layout(&self) -> Layout {
        Layout::Planar
    }
    /// Curves where `phi` or its low derivatives jump.
    fn edges(&self) -> Vec<Edge> {
        Vec::new()
    }
    /// Analytic in-plane Laplacian, if known.
    fn laplacian(&self, _x: f64, _y: f64) -> Option<f64> {
        None
    }
}

/// In-plane charge density, stored as `sigma / eps0`.
pub trait SurfaceChargeDensity: Sync {
    fn value(&self, x: f64, y: f64) -> f64;
    fn support(&self) -> Support;
    fn layout(&self) -> Layout {
        Layout::Planar
    }
    fn edges(&self) -> Vec<Edge> {
        Vec::new()
    }
    /// Exponent `p` of the far-field bound `|sigma| <= C / rho^p`. Required
    /// for unbounded support.
    fn decay_exponent(&self) -> Option<f64> {
        None
    }
}

/// Closure-backed surface function usable as either a potential or a density.
#[derive(Clone)]
pub struct SurfaceFn<F> {
    f: F,
    support: Support,
    layout: Layout,
    edges: Vec<Edge>,
    decay: Option<f64>,
}

impl<F: Fn(f64, f64) -> f64 + Sync> SurfaceFn<F> {
    pub fn new(f: F, support: Support) -> Self {
        SurfaceFn {
            f,
            support,
            layout: Layout::Planar,
            edges: Vec::new(),
            decay: None,
        }
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn with_edges(mut self, edges: Vec<Edge>) -> Self {
        self.edges = edges;
        self
    }

    pub fn with_decay(mut self, p: f64) -> Self {
        self.decay = Some(p);
        self
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> SurfacePotential for SurfaceFn<F> {
    fn value(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
    fn support(&self) -> Support {
        self.support
    }
    fn layout(&self) -> Layout {
        self.layout
    }
    fn edges(&self) -> Vec<Edge> {
        self.edges.clone()
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> SurfaceChargeDensity for SurfaceFn<F> {
    fn value(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
    fn support(&self) -> Support {
        self.support
    }
    fn layout(&self) -> Layout {
        self.layout
    }
    fn edges(&self) -> Vec<Edge> {
        self.edges.clone()
    }
    fn decay_exponent(&self) -> Option<f64> {
        self.decay
    }
}

/// Half-space Dirichlet Green's function `|z| / (2 pi |p|^3)`.
pub fn greens_function(p: Point3) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::domain("greens_function", "non-finite coordinates"));
    }
    let r2 = p.x * p.x + p.y * p.y + p.z * p.z;
    if r2 == 0.0 {
        return Err(Error::Singular("greens_function at the origin".into()));
    }
    if p.z == 0.0 {
        return Ok(0.0);
    }
    Ok(p.z.abs() / (2.0 * PI * r2 * r2.sqrt()))
}

fn edge_set(edges: Vec<Edge>, support: &Support) -> EdgeSet {
    EdgeSet {
        edges,
        rect: support.rect(),
    }
}

fn vertical_breaks(edges: &[Edge], op: &'static str) -> Result<Vec<f64>> {
    edges
        .iter()
        .map(|e| {
            e.vertical_x()
                .ok_or_else(|| Error::domain(op, "line-invariant functions accept vertical edges only"))
        })
        .collect()
}

fn radial_breaks(edges: &[Edge], cx: f64, cy: f64, op: &'static str) -> Result<Vec<f64>> {
    edges
        .iter()
        .map(|e| match *e {
            Edge::Circle { cx: ex, cy: ey, r } if (ex - cx).abs() < 1e-12 && (ey - cy).abs() < 1e-12 => Ok(r),
            _ => Err(Error::domain(
                op,
                "axisymmetric functions accept concentric circular edges only",
            )),
        })
        .collect()
}

fn farthest_corner(r: &Rect, cx: f64, cy: f64) -> f64 {
    let dx = (r.x_min - cx).abs().max((r.x_max - cx).abs());
    let dy = (r.y_min - cy).abs().max((r.y_max - cy).abs());
    dx.hypot(dy)
}

/// Potential at `p` above a plane held at the surface potential `phi`.
///
/// Uses polar coordinates about the foot point with the radial weight of the
/// Green's function mapped exactly onto `[0, 1]`, so non-decaying potentials
/// on unbounded supports need no far-field model.
pub fn propagate<P: SurfacePotential + ?Sized>(phi: &P, p: Point3, quad: &QuadSettings) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::domain("propagate", "non-finite coordinates"));
    }
    if p.z == 0.0 {
        return Err(Error::domain(
            "propagate",
            "evaluation point lies in the electrode plane",
        ));
    }
    let support = phi.support();
    let rect = support.rect();
    match phi.layout() {
        Layout::Planar => {
            let geo = edge_set(phi.edges(), &support);
            polar::propagate_planar(&|x, y| phi.value(x, y), p.x, p.y, p.z, &geo, rect, quad)
        }
        Layout::LineInvariant => {
            let mut breaks = vertical_breaks(&phi.edges(), "propagate")?;
            let f = |x: f64| match rect {
                Some(r) if x < r.x_min || x > r.x_max => 0.0,
                _ => phi.value(x, 0.0),
            };
            if let Some(r) = rect {
                breaks.push(r.x_min);
                breaks.push(r.x_max);
            }
            polar::propagate_line(&f, p.x, p.z, &breaks, quad)
        }
        Layout::Axisymmetric { cx, cy } => {
            let breaks = radial_breaks(&phi.edges(), cx, cy, "propagate")?;
            let f = |rho: f64| phi.value(cx + rho, cy);
            let r = (p.x - cx).hypot(p.y - cy);
            let outer = rect.map(|rc| farthest_corner(&rc, cx, cy));
            polar::propagate_axisymmetric(&f, r, p.z, &breaks, outer, support.scale(), quad)
        }
    }
}

fn check_decay<S: SurfaceChargeDensity + ?Sized>(sigma: &S, op: &'static str) -> Result<Extent> {
    let support = sigma.support();
    if let Support::Unbounded { .. } = support {
        match sigma.decay_exponent() {
            Some(p) if p > 1.0 => {}
            _ => {
                return Err(Error::Config(format!(
                    "{op}: unbounded charge density needs a far-field decay exponent above 1"
                )))
            }
        }
    }
    Ok(Extent {
        rect: support.rect(),
        scale: support.scale(),
    })
}

/// Tolerance on the net line charge relative to the total absolute charge
/// for the logarithmic potential of a translation-invariant density.
pub const NET_LINE_CHARGE_RTOL: f64 = 1e-6;

/// In-plane potential `phi0 + (1/4pi) int sigma / |r - r'| dA'`.
///
/// Translation-invariant densities use the logarithmic line kernel and must
/// carry no net charge per unit length.
pub fn sigma_to_phi<S: SurfaceChargeDensity + ?Sized>(
    sigma: &S,
    x: f64,
    y: f64,
    phi0: f64,
    quad: &QuadSettings,
) -> Result<f64> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::domain("sigma_to_phi", "non-finite coordinates"));
    }
    let ext = check_decay(sigma, "sigma_to_phi")?;
    match sigma.layout() {
        Layout::LineInvariant => {
            let mut breaks = vertical_breaks(&sigma.edges(), "sigma_to_phi")?;
            let range = ext.rect.map(|r| (r.x_min, r.x_max));
            if let Some((a, b)) = range {
                breaks.push(a);
                breaks.push(b);
            }
            let (l, q, abs_q) =
                polar::log_potential_line(&|xp| sigma.value(xp, 0.0), x, &breaks, range, ext.scale, quad)?;
            if q.abs() > NET_LINE_CHARGE_RTOL * abs_q + quad.abs_tol {
                return Err(Error::Config(format!(
                    "sigma_to_phi: translation-invariant density carries net charge {q:e} per unit length"
                )));
            }
            Ok(phi0 - l / (2.0 * PI))
        }
        _ => {
            let geo = edge_set(
                sigma.edges(),
                &ext.rect
                    .map_or(Support::Unbounded { scale: ext.scale }, Support::Bounded),
            );
            let v = polar::sheet_potential_planar(&|a, b| sigma.value(a, b), x, y, 0.0, &geo, &ext, quad)?;
            Ok(phi0 + v)
        }
    }
}

/// Free-space potential `(1/4pi) int sigma / |p - r'| dA'` of a planar
/// density at a point off the plane.
pub fn sheet_potential<S: SurfaceChargeDensity + ?Sized>(sigma: &S, p: Point3, quad: &QuadSettings) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::domain("sheet_potential", "non-finite coordinates"));
    }
    if sigma.layout() == Layout::LineInvariant {
        return Err(Error::domain(
            "sheet_potential",
            "translation-invariant densities are not supported",
        ));
    }
    let ext = check_decay(sigma, "sheet_potential")?;
    let geo = EdgeSet {
        edges: sigma.edges(),
        rect: ext.rect,
    };
    polar::sheet_potential_planar(&|a, b| sigma.value(a, b), p.x, p.y, p.z, &geo, &ext, quad)
}

/// Parameters of the local-square split used by [`phi_to_sigma_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSplit {
    /// Half-width of the local square.
    pub d: f64,
    /// Rotation of the square relative to the x axis.
    pub frame: f64,
    /// Relative tolerance on the change of the result when `d` is halved.
    pub halving_rtol: f64,
    /// Absolute floor added to the halving tolerance.
    pub halving_atol: f64,
}

impl SigmaSplit {
    pub fn new(d: f64) -> Self {
        SigmaSplit {
            d,
            frame: 0.0,
            halving_rtol: 1e-6,
            halving_atol: 1e-7,
        }
    }
}

/// Result of [`phi_to_sigma`]: the value at `d/2` and its change from `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub sigma_at_d: f64,
    pub discrepancy: f64,
}

/// Default square half-width: `1e-3` times the support scale.
pub fn default_split_width<P: SurfacePotential + ?Sized>(phi: &P) -> f64 {
    1e-3 * phi.support().scale()
}

/// Surface charge density `sigma / eps0` implied by the surface potential,
/// with the default split parameters for half-width `d`.
pub fn phi_to_sigma<P: SurfacePotential + ?Sized>(
    phi: &P,
    x: f64,
    y: f64,
    d: f64,
    quad: &QuadSettings,
) -> Result<SigmaEstimate> {
    phi_to_sigma_with(phi, x, y, &SigmaSplit::new(d), quad)
}

/// Surface charge density via the local-square split, evaluated at `d` and
/// `d/2`; fails if the two disagree beyond the split tolerance.
pub fn phi_to_sigma_with<P: SurfacePotential + ?Sized>(
    phi: &P,
    x: f64,
    y: f64,
    split: &SigmaSplit,
    quad: &QuadSettings,
) -> Result<SigmaEstimate> {
    if !(split.d > 0.0 && split.d.is_finite()) {
        return Err(Error::domain("phi_to_sigma", "square half-width must be positive"));
    }
    let s1 = phi_to_sigma_single(phi, x, y, split.d, split.frame, quad)?;
    let s2 = phi_to_sigma_single(phi, x, y, 0.5 * split.d, split.frame, quad)?;
    let disc = (s1 - s2).abs();
    let tol = split.halving_rtol * s1.abs().max(s2.abs()) + split.halving_atol;
    if disc > tol {
        return Err(Error::Convergence(format!(
            "phi_to_sigma: result changed by {disc:e} when halving d = {:e} (tolerance {tol:e}); potential is not smooth here",
            split.d
        )));
    }
    Ok(SigmaEstimate {
        sigma: s2,
        sigma_at_d: s1,
        discrepancy: disc,
    })
}

/// Single evaluation of the local-square split at half-width `d`, without
/// the halving check.
pub fn phi_to_sigma_single<P: SurfacePotential + ?Sized>(
    phi: &P,
    x: f64,
    y: f64,
    d: f64,
    frame: f64,
    quad: &QuadSettings,
) -> Result<f64> {
    let support = phi.support();
    let rect = support.rect();
    let value = |a: f64, b: f64| match rect {
        Some(r) if !r.contains(a, b) => 0.0,
        _ => phi.value(a, b),
    };
    let local = 2.0 * d * 1f64.asinh();
    let h = 0.25 * d;
    // Rounding in (phi(r) - phi(o)) / rho^2 near rho = d, from both the values
    // and the sample positions, limits the absolute accuracy of the remainder
    // to about eps (|phi| + |o| |grad phi|) / d.
    let grad = ((value(x + h, y) - value(x - h, y)).abs()).max((value(x, y + h) - value(x, y - h)).abs()) / (2.0 * h);
    let noise = value(x, y).abs() + x.hypot(y).max(d) * grad;
    let floor = 64.0 * f64::EPSILON * noise * 4.0 * 2f64.sqrt() / d;
    let quad = &QuadSettings {
        abs_tol: quad.abs_tol.max(floor),
        ..*quad
    };
    match phi.layout() {
        Layout::LineInvariant => {
            let mut breaks = vertical_breaks(&phi.edges(), "phi_to_sigma")?;
            let range = rect.map(|r| (r.x_min, r.x_max));
            if let Some((a, b)) = range {
                breaks.push(a);
                breaks.push(b);
            }
            let f = |a: f64| value(a, 0.0);
            let lap = match phi.laplacian(x, y) {
                Some(l) => l,
                None => (f(x + h) + f(x - h) - 2.0 * f(x)) / (h * h),
            };
            let rem = polar::split_remainder_line(&f, x, d, &breaks, range, support.scale(), quad)?;
            Ok(-(local * lap + rem) / PI)
        }
        _ => {
            let edges = match phi.layout() {
                Layout::Axisymmetric { cx, cy } => {
                    radial_breaks(&phi.edges(), cx, cy, "phi_to_sigma")?;
                    phi.edges()
                }
                _ => phi.edges(),
            };
            let lap = phi.laplacian(x, y);
            let f = |a: f64, b: f64, out: &mut [f64]| out[0] = value(a, b);
            let s = split_sigma_vec(
                &f,
                1,
                lap.map(|l| vec![l]),
                x,
                y,
                d,
                false,
                frame,
                edges,
                &support,
                quad,
            )?;
            Ok(s[0])
        }
    }
}

/// Planar local-square split for several surface functions at once, with
/// the same floor and finite-difference Laplacian as [`phi_to_sigma_single`].
/// The floor is set by the first component. With `halves`, the result has
/// `2 dim` entries: the densities for `d` followed by those for `d/2`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn split_sigma_vec(
    f: &(dyn Fn(f64, f64, &mut [f64]) + Sync),
    dim: usize,
    laplacian: Option<Vec<f64>>,
    x: f64,
    y: f64,
    d: f64,
    halves: bool,
    frame: f64,
    edges: Vec<Edge>,
    support: &Support,
    quad: &QuadSettings,
) -> Result<Vec<f64>> {
    let rect = support.rect();
    let value = |a: f64, b: f64, out: &mut [f64]| match rect {
        Some(r) if !r.contains(a, b) => out.iter_mut().for_each(|o| *o = 0.0),
        _ => f(a, b, out),
    };
    let mut c = vec![0.0; dim];
    value(x, y, &mut c);
    let mut buf = vec![0.0; dim];
    // Five-point Laplacian with step h, and the largest one-sided slope of
    // the first component.
    let mut fd = |h: f64| {
        let mut lap = vec![0.0; dim];
        let mut grad = 0.0_f64;
        for (dx, dy) in [(h, 0.0), (0.0, h)] {
            let mut pair = [0.0; 2];
            for (j, sgn) in [1.0, -1.0].into_iter().enumerate() {
                value(x + sgn * dx, y + sgn * dy, &mut buf);
                pair[j] = buf[0];
                for (l, b) in lap.iter_mut().zip(&buf) {
                    *l += b;
                }
            }
            grad = grad.max((pair[0] - pair[1]).abs() / (2.0 * h));
        }
        let lap: Vec<f64> = match &laplacian {
            Some(l) => l.clone(),
            None => lap.iter().zip(&c).map(|(s, c0)| (s - 4.0 * c0) / (h * h)).collect(),
        };
        (lap, grad)
    };
    let widths: Vec<f64> = if halves { vec![d, 0.5 * d] } else { vec![d] };
    let fds: Vec<(Vec<f64>, f64)> = widths.iter().map(|w| fd(0.25 * w)).collect();
    let dmin = widths[widths.len() - 1];
    // Rounding in (phi(r) - phi(o)) / rho^2 near rho = d, from both the values
    // and the sample positions, limits the absolute accuracy of the remainder
    // to about eps (|phi| + |o| |grad phi|) / d.
    let grad = fds.iter().fold(0.0_f64, |m, v| m.max(v.1));
    let noise = c[0].abs() + x.hypot(y).max(dmin) * grad;
    let floor = 64.0 * f64::EPSILON * noise * 4.0 * 2f64.sqrt() / dmin;
    let quad = &QuadSettings {
        abs_tol: quad.abs_tol.max(floor),
        ..*quad
    };
    let geo = edge_set(edges, support);
    let ext = Extent {
        rect,
        scale: support.scale(),
    };
    let rem = polar::split_remainder_vec(&value, dim, x, y, frame, d, halves, &geo, &ext, quad)?;
    let mut out = Vec::with_capacity(rem.len());
    for (k, (w, (lap, _))) in widths.iter().zip(&fds).enumerate() {
        let local = 2.0 * w * 1f64.asinh();
        for (l, r) in lap.iter().zip(&rem[k * dim..(k + 1) * dim]) {
            out.push(-(local * l + r) / PI);
        }
    }
    Ok(out)
}

/// A 3D scaled potential.
pub trait ScaledPotentialField: Sync {
    fn potential(&self, p: Point3) -> Result<f64>;

    /// Gradient; defaults to central differences.
    fn gradient(&self, p: Point3) -> Result<[f64; 3]> {
        let h = 1e-5 * (1.0 + p.z.abs());
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate() {
            let mut a = p;
            let mut b = p;
            match k {
                0 => {
                    a.x += h;
                    b.x -= h
                }
                1 => {
                    a.y += h;
                    b.y -= h
                }
                _ => {
                    a.z += h;
                    b.z -= h
                }
            }
            *gk = (self.potential(a)? - self.potential(b)?) / (2.0 * h);
        }
        Ok(g)
    }
}

impl<F: Fn(Point3) -> Result<f64> + Sync> ScaledPotentialField for F {
    fn potential(&self, p: Point3) -> Result<f64> {
        self(p)
    }
}

/// The 3D field of a surface potential, evaluated by [`propagate`].
pub struct PropagatedField<'a, P: ?Sized> {
    pub phi: &'a P,
    pub quad: QuadSettings,
}

impl<'a, P: SurfacePotential + ?Sized> PropagatedField<'a, P> {
    pub fn new(phi: &'a P, quad: QuadSettings) -> Self {
        PropagatedField { phi, quad }
    }
}

impl<P: SurfacePotential + ?Sized> ScaledPotentialField for PropagatedField<'_, P> {
    fn potential(&self, p: Point3) -> Result<f64> {
        propagate(self.phi, p, &self.quad)
    }
}

/// Seven-point finite-difference Laplacian of a field, for checking that it
/// solves Laplace's equation.
pub fn numerical_laplacian<F: ScaledPotentialField + ?Sized>(field: &F, p: Point3, h: f64) -> Result<f64> {
    if !(h > 0.0 && p.z.abs() > 2.0 * h) {
        return Err(Error::domain("numerical_laplacian", "need h > 0 and |z| > 2h"));
    }
    let c = field.potential(p)?;
    let mut sum = 0.0;
    for (dx, dy, dz) in [(h, 0.0, 0.0), (0.0, h, 0.0), (0.0, 0.0, h)] {
        // Differences first, so a constant field gives exactly zero.
        sum += field.potential(Point3::new(p.x + dx, p.y + dy, p.z + dz))? - c;
        sum += field.potential(Point3::new(p.x - dx, p.y - dy, p.z - dz))? - c;
    }
    Ok(sum / (h * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadSettings {
        QuadSettings::new(1e-12, 1e-11)
    }

    #[test]
    fn greens_values() {
        assert!((greens_function(Point3::new(0.0, 0.0, 1.0)).unwrap() - 0.5 / PI).abs() < 1e-16);
        assert_eq!(greens_function(Point3::new(1.0, 0.0, 0.0)).unwrap(), 0.0);
        assert!(greens_function(Point3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn disc_on_axis_all_layouts() {
        let r: f64 = 1.3;
        let z: f64 = 0.7;
        let exact = 1.0 - z / (r * r + z * z).sqrt();
        let disc = |x: f64, y: f64| if x * x + y * y < r * r { 1.0 } else { 0.0 };
        let edge = vec![Edge::Circle { cx: 0.0, cy: 0.0, r }];
        let planar = SurfaceFn::new(disc, Support::Bounded(Rect::around(0.0, 0.0, r))).with_edges(edge.clone());
        let axi = SurfaceFn::new(disc, Support::Bounded(Rect::around(0.0, 0.0, r)))
            .with_edges(edge)
            .with_layout(Layout::Axisymmetric { cx: 0.0, cy: 0.0 });
        let p = Point3::new(0.0, 0.0, z);
        assert!((propagate(&planar, p, &q()).unwrap() - exact).abs() < 1e-10);
        assert!((propagate(&axi, p, &q()).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn uniform_plane() {
        let one = SurfaceFn::new(|_, _| 1.0, Support::Unbounded { scale: 1.0 });
        let v = propagate(&one, Point3::new(0.3, -0.2, 2.0), &q()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let s = phi_to_sigma(&one, 0.1, 0.2, 1e-3, &q()).unwrap();
        assert!(s.sigma.abs() < 1e-9);
    }

    #[test]
    fn zero_density() {
        let zero = SurfaceFn::new(|_, _| 0.0, Support::Bounded(Rect::around(0.0, 0.0, 1.0)));
        assert_eq!(sigma_to_phi(&zero, 0.4, 0.0, 0.3, &q()).unwrap(), 0.3);
    }
}
