//! Straight gaps: the interpolation and polarization potentials of a single
//! infinite gap, their charge densities and 3D fields, and the strip
//! electrode bounded by two such gaps.
//!
//! Gap coordinates: `x` is the signed distance from the gap center (the
//! electrode at unit potential lies at positive `x`), `z` the height above
//! the plane. The 3D forms use `Z = (|z| + i x) / (g/2)` with principal
//! branches, evaluated for `x >= 0` and extended by symmetry.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{Edge, Layout, Point3, Rect, Support, SurfaceChargeDensity, SurfacePotential};

fn check_width(g: f64) -> Result<()> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("gap1d", "gap width must be positive and finite"))
    }
}

/// Placement of a straight gap in the electrode plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraightGapSpec {
    pub g: f64,
    /// A point on the gap centerline.
    pub x0: f64,
    pub y0: f64,
    /// Direction of the centerline; the unit-potential side is to its right.
    pub angle: f64,
}

impl StraightGapSpec {
    pub fn new(g: f64, x0: f64, y0: f64, angle: f64) -> Result<Self> {
        check_width(g)?;
        Ok(StraightGapSpec { g, x0, y0, angle })
    }

    /// Gap along the y axis with the unit-potential electrode at `x > 0`.
    pub fn vertical(g: f64) -> Result<Self> {
        Self::new(g, 0.0, 0.0, PI / 2.0)
    }

    /// Signed distance from the centerline, positive on the unit-potential side.
    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        let (s, c) = self.angle.sin_cos();
        (x - self.x0) * s - (y - self.y0) * c
    }

    /// Interpolation-potential field at a point given in plane coordinates.
    pub fn field_gap(&self, p: Point3) -> f64 {
        field_gap(self.signed_distance(p.x, p.y), p.z, self.g)
    }

    /// Polarization-potential field at a point given in plane coordinates.
    pub fn field_pol(&self, p: Point3) -> f64 {
        field_pol(self.signed_distance(p.x, p.y), p.z, self.g)
    }
}

/// Interpolation surface potential: 0 on the grounded side, 1 on the other,
/// an arcsine in between.
pub fn phi_gap(x: f64, g: f64) -> f64 {
    let h = 0.5 * g;
    if x <= -h {
        0.0
    } else if x >= h {
        1.0
    } else {
        0.5 + (x / h).asin() / PI
    }
}

/// Charge density of [`phi_gap`]; zero in the gap, signed infinity at the edges.
pub fn sigma_gap(x: f64, g: f64) -> f64 {
    let h = 0.5 * g;
    let ax = x.abs();
    if ax < h {
        0.0
    } else if ax == h {
        f64::INFINITY.copysign(x)
    } else {
        (4.0 / (PI * (4.0 * x * x - g * g).sqrt())).copysign(x)
    }
}

/// Polarization surface potential: a unit half-ellipse across the gap.
pub fn phi_pol(x: f64, g: f64) -> f64 {
    let t = x / (0.5 * g);
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - t * t).sqrt()
    }
}

/// Charge density of [`phi_pol`]: `4/g` in the gap, negative outside, minus
/// infinity at the edges.
pub fn sigma_pol(x: f64, g: f64) -> f64 {
    let ax = x.abs();
    let h = 0.5 * g;
    if ax < h {
        4.0 / g
    } else if ax == h {
        f64::NEG_INFINITY
    } else {
        let r = (4.0 * x * x - g * g).sqrt();
        // 1 - 2|x|/r = (r - 2|x|)/r = -g^2 / (r (r + 2|x|)).
        -4.0 * g / (r * (r + 2.0 * ax))
    }
}

fn zeta(x: f64, z: f64, g: f64) -> Complex64 {
    Complex64::new(z.abs(), x) / (0.5 * g)
}

/// 3D field of the interpolation potential at signed distance `x`, height `z`.
pub fn field_gap(x: f64, z: f64, g: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - field_gap(-x, z, g);
    }
    let zz = zeta(x, z, g);
    let w = (Complex64::new(1.0, 0.0) + zz * zz).sqrt() + zz;
    0.5 + w.arg() / PI
}

/// 3D field of the polarization potential; even in `x`.
pub fn field_pol(x: f64, z: f64, g: f64) -> f64 {
    let zz = zeta(x.abs(), z, g);
    // sqrt(1+Z^2) - Z = 1 / (sqrt(1+Z^2) + Z), free of cancellation for large Z.
    let w = (Complex64::new(1.0, 0.0) + zz * zz).sqrt() + zz;
    w.inv().re
}

/// Far-field expansion of [`field_gap`] with `x = r sin(theta)`, `|z| = r cos(theta)`.
pub fn field_gap_far(r: f64, theta: f64, g: f64) -> f64 {
    0.5 + theta / PI - g * g * (2.0 * theta).sin() / (16.0 * PI * r * r)
}

/// Leading far-field term of [`field_pol`].
pub fn field_pol_far(r: f64, theta: f64, g: f64) -> f64 {
    g * theta.cos() / (4.0 * r)
}

/// Which of the two single-gap surface functions a [`GapProfile`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    Interpolation,
    Polarization,
}

/// A single straight gap along the y axis as a translation-invariant surface
/// potential (or, through [`GapProfile::density`], its charge density).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapProfile {
    pub g: f64,
    pub kind: GapKind,
}

impl GapProfile {
    pub fn new(g: f64, kind: GapKind) -> Result<Self> {
        check_width(g)?;
        Ok(GapProfile { g, kind })
    }

    pub fn density(&self) -> GapDensity {
        GapDensity(*self)
    }
}

impl SurfacePotential for GapProfile {
    fn value(&self, x: f64, _y: f64) -> f64 {
        match self.kind {
            GapKind::Interpolation => phi_gap(x, self.g),
            GapKind::Polarization => phi_pol(x, self.g),
        }
    }
    fn support(&self) -> Support {
        match self.kind {
            GapKind::Interpolation => Support::Unbounded { scale: self.g },
            GapKind::Polarization => {
                Support::Bounded(Rect::new(-0.5 * self.g, 0.5 * self.g, f64::NEG_INFINITY, f64::INFINITY))
            }
        }
    }
    fn layout(&self) -> Layout {
        Layout::LineInvariant
    }
    fn edges(&self) -> Vec<Edge> {
        vec![Edge::vertical(-0.5 * self.g), Edge::vertical(0.5 * self.g)]
    }
}

/// Charge density of a [`GapProfile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapDensity(pub GapProfile);

impl SurfaceChargeDensity for GapDensity {
    fn value(&self, x: f64, _y: f64) -> f64 {
        match self.0.kind {
            GapKind::Interpolation => sigma_gap(x, self.0.g),
            GapKind::Polarization => sigma_pol(x, self.0.g),
        }
    }
    fn support(&self) -> Support {
        Support::Unbounded { scale: self.0.g }
    }
    fn layout(&self) -> Layout {
        Layout::LineInvariant
    }
    fn edges(&self) -> Vec<Edge> {
        self.0.edges()
    }
    fn decay_exponent(&self) -> Option<f64> {
        match self.0.kind {
            // The interpolation density tends to +-2/(pi |x|) and has no finite potential.
            GapKind::Interpolation => Some(1.0),
            GapKind::Polarization => Some(2.0),
        }
    }
}

/// Strip electrode at unit potential between two gaps, in a grounded plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripSpec {
    /// Width between gap centers.
    pub w: f64,
    pub g: f64,
}

impl StripSpec {
    pub fn new(w: f64, g: f64) -> Result<Self> {
        if !(g > 0.0 && g < w && w.is_finite()) {
            return Err(Error::domain("strip", "need 0 < g < w"));
        }
        Ok(StripSpec { w, g })
    }

    /// Polarization amplitude that nulls the charge at both gap centers.
    pub fn alpha(&self) -> f64 {
        strip_alpha(self.w, self.g)
    }

    /// Charge density at either gap center for a given amplitude `alpha`.
    pub fn center_sigma(&self, alpha: f64) -> f64 {
        let (w, g) = (self.w, self.g);
        4.0 / PI * ((1.0 - 2.0 * PI * alpha * w / g) / (4.0 * w * w - g * g).sqrt() + 2.0 * PI * alpha / g)
    }

    pub fn surface_potential(&self, x: f64) -> f64 {
        self.surface_potential_with(x, self.alpha())
    }

    /// Composite surface potential for an arbitrary amplitude.
    pub fn surface_potential_with(&self, x: f64, alpha: f64) -> f64 {
        let (h, g) = (0.5 * self.w, self.g);
        phi_gap(x + h, g) - phi_gap(x - h, g) + alpha * (phi_pol(x + h, g) + phi_pol(x - h, g))
    }

    /// 3D field of the composite potential, with `x` across the strip.
    pub fn field(&self, x: f64, z: f64) -> f64 {
        let (h, g, a) = (0.5 * self.w, self.g, self.alpha());
        field_gap(x + h, z, g) - field_gap(x - h, z, g) + a * (field_pol(x + h, z, g) + field_pol(x - h, z, g))
    }

    /// Leading far field with the exact amplitude prefactor.
    pub fn far_field(&self, r: f64, theta: f64) -> f64 {
        strip_far_field(r, theta, self.w, self.g)
    }

    /// As [`StripSpec::surface_potential`], packaged for kernel quadrature.
    pub fn profile(&self) -> StripProfile {
        StripProfile {
            spec: *self,
            alpha: self.alpha(),
        }
    }
}

/// Amplitude `g / (2 pi (w - sqrt(4 w^2 - g^2)))`.
pub fn strip_alpha(w: f64, g: f64) -> f64 {
    let r = (4.0 * w * w - g * g).sqrt();
    g / (2.0 * PI * (w - r))
}

/// `(1 + pi alpha g / (2w)) w cos(theta) / (pi r)`.
pub fn strip_far_field(r: f64, theta: f64, w: f64, g: f64) -> f64 {
    let a = strip_alpha(w, g);
    (1.0 + PI * a * g / (2.0 * w)) * w * theta.cos() / (PI * r)
}

/// Small-gap approximation `(1 - g^2/(4w^2)) w cos(theta) / (pi r)`.
pub fn strip_far_field_approx(r: f64, theta: f64, w: f64, g: f64) -> f64 {
    (1.0 - g * g / (4.0 * w * w)) * w * theta.cos() / (PI * r)
}

/// The strip surface potential with a fixed amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripProfile {
    pub spec: StripSpec,
    pub alpha: f64,
}

impl SurfacePotential for StripProfile {
    fn value(&self, x: f64, _y: f64) -> f64 {
        self.spec.surface_potential_with(x, self.alpha)
    }
    fn support(&self) -> Support {
        let e = 0.5 * (self.spec.w + self.spec.g);
        Support::Bounded(Rect::new(-e, e, f64::NEG_INFINITY, f64::INFINITY))
    }
    fn layout(&self) -> Layout {
        Layout::LineInvariant
    }
    fn edges(&self) -> Vec<Edge> {
        let (h, g) = (0.5 * self.spec.w, 0.5 * self.spec.g);
        [-h - g, -h + g, h - g, h + g].into_iter().map(Edge::vertical).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_field_matches_surface_form() {
        for &x in &[-0.7, -0.3, 0.0, 0.2, 0.49, 0.6] {
            assert!((field_gap(x, 1e-12, 1.0) - phi_gap(x, 1.0)).abs() < 1e-9, "x={x}");
            assert!((field_pol(x, 1e-12, 1.0) - phi_pol(x, 1.0)).abs() < 1e-9, "x={x}");
        }
        assert_eq!(field_gap(0.0, 3.0, 1.0), 0.5);
        assert_eq!(field_pol(0.0, 0.0, 1.0), 1.0);
    }

    #[test]
    fn sigma_signs() {
        assert!(sigma_pol(5.0, 1.0) < 0.0);
        assert_eq!(sigma_gap(0.1, 1.0), 0.0);
        assert_eq!(sigma_gap(0.5, 1.0), f64::INFINITY);
        assert_eq!(sigma_gap(-0.5, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn strip_center_charge_vanishes() {
        let s = StripSpec::new(1.0, 0.3).unwrap();
        assert!(s.center_sigma(s.alpha()).abs() < 1e-13);
    }

    #[test]
    fn oriented_gap() {
        let gap = StraightGapSpec::new(1.0, 1.0, 0.0, 0.0).unwrap();
        // Centerline along +x through (1,0): the right-hand side is y < 0.
        assert!(gap.signed_distance(3.0, -2.0) > 0.0);
        let v = gap.field_gap(Point3::new(0.0, -100.0, 1e-9));
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}
