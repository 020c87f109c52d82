//! Gapped ring rf trap: an annular electrode at unit potential between gap
//! centers `R1 < R2`, embedded in a grounded plane.
//!
//! The in-plane potential uses the interpolation and polarization gap
//! profiles at both gaps. The polarization amplitudes come from nulling the
//! leading-order gap-center charge densities, and the on-axis potential is a
//! closed form in the gap width whose derivatives are taken with [`Jet`]s.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gap1d::{phi_gap, phi_pol};
use crate::jet::Jet;
use crate::kernel::{Edge, Layout, Rect, Support, SurfacePotential};
use crate::optimize::{brent_maximize, brent_root, scan_bracket};
use crate::specfun::{elliptic_e, elliptic_k};

/// Radii to the gap centers and the common gap width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingTrapGeometry {
    pub r1: f64,
    pub r2: f64,
    pub g: f64,
}

impl RingTrapGeometry {
    pub fn new(r1: f64, r2: f64, g: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
            return Err(Error::Geometry(format!(
                "ring radii must satisfy 0 < R1 < R2 (got {r1}, {r2})"
            )));
        }
        if !(g >= 0.0 && g < r2 - r1 && g < 2.0 * r1) {
            return Err(Error::Geometry(format!(
                "gap width {g} must be non-negative and below both R2 - R1 and 2 R1"
            )));
        }
        Ok(RingTrapGeometry { r1, r2, g })
    }

    pub fn scaled(&self, s: f64) -> Self {
        RingTrapGeometry {
            r1: s * self.r1,
            r2: s * self.r2,
            g: s * self.g,
        }
    }
}

/// Polarization amplitudes of the inner and outer gap.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GapAmplitudes {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl GapAmplitudes {
    pub fn new(alpha1: f64, alpha2: f64) -> Self {
        GapAmplitudes { alpha1, alpha2 }
    }

    /// Both amplitudes multiplied by `factor` (e.g. a gap susceptibility).
    pub fn scaled(&self, factor: f64) -> Self {
        GapAmplitudes::new(factor * self.alpha1, factor * self.alpha2)
    }
}

/// Piecewise in-plane potential of the ring at radius `r`.
pub fn ring_surface_potential(r: f64, geom: &RingTrapGeometry, amps: &GapAmplitudes) -> f64 {
    let RingTrapGeometry { r1, r2, g } = *geom;
    let h = 0.5 * g;
    if r <= r1 - h {
        0.0
    } else if (r - r1).abs() < h {
        phi_gap(r - r1, g) + amps.alpha1 * phi_pol(r - r1, g)
    } else if r <= r2 - h {
        1.0
    } else if (r - r2).abs() < h {
        phi_gap(r2 - r, g) + amps.alpha2 * phi_pol(r - r2, g)
    } else {
        0.0
    }
}

/// The ring surface potential centered at the origin, for kernel quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingProfile {
    pub geom: RingTrapGeometry,
    pub amps: GapAmplitudes,
}

impl SurfacePotential for RingProfile {
    fn value(&self, x: f64, y: f64) -> f64 {
        ring_surface_potential(x.hypot(y), &self.geom, &self.amps)
    }
    fn support(&self) -> Support {
        Support::Bounded(Rect::around(0.0, 0.0, self.geom.r2 + 0.5 * self.geom.g))
    }
    fn layout(&self) -> Layout {
        Layout::Axisymmetric { cx: 0.0, cy: 0.0 }
    }
    fn edges(&self) -> Vec<Edge> {
        let RingTrapGeometry { r1, r2, g } = self.geom;
        let mut radii = vec![r1 + 0.5 * g, r2 - 0.5 * g, r2 + 0.5 * g];
        if r1 > 0.5 * g {
            radii.push(r1 - 0.5 * g);
        }
        radii
            .into_iter()
            .map(|r| Edge::Circle { cx: 0.0, cy: 0.0, r })
            .collect()
    }
}

/// Coefficients of the gap-center densities, which are affine in the
/// amplitudes: `sigma_i = -2 (c_i + sum_j m_ij alpha_j)`.
struct SigmaSystem {
    c: [f64; 2],
    m: [[f64; 2]; 2],
}

fn sigma_system(geom: &RingTrapGeometry) -> Result<SigmaSystem> {
    let RingTrapGeometry { r1, r2, g } = *geom;
    if g <= 0.0 {
        return Err(Error::domain(
            "ring_gap_center_sigma",
            "leading-order densities need g > 0",
        ));
    }
    let (s, d) = (r1 + r2, r2 - r1);
    let mk = 4.0 * r1 * r2 / (s * s);
    let k = elliptic_k(mk)?;
    let e = elliptic_e(mk)?;
    let em = elliptic_e(-4.0 * r1 * r2 / (d * d))?;
    let cross = g * em / (2.0 * s * s * d);
    Ok(SigmaSystem {
        c: [
            -k / (PI * s) - e / (PI * d) - (g / (32.0 * r1)).ln() / (2.0 * PI * r1),
            k / (PI * s) - e / (PI * d) + (g / (32.0 * r2)).ln() / (2.0 * PI * r2),
        ],
        m: [[-2.0 / g, r2 * cross], [r1 * cross, -2.0 / g]],
    })
}

/// Leading-order charge densities `sigma / eps0` at the inner and outer gap centers.
pub fn ring_gap_center_sigma(geom: &RingTrapGeometry, amps: &GapAmplitudes) -> Result<(f64, f64)> {
    let sys = sigma_system(geom)?;
    let a = [amps.alpha1, amps.alpha2];
    let s = |i: usize| -2.0 * (sys.c[i] + sys.m[i][0] * a[0] + sys.m[i][1] * a[1]);
    Ok((s(0), s(1)))
}

/// Amplitudes that null both leading-order gap-center densities; zero for `g = 0`.
pub fn solve_ring_alphas(geom: &RingTrapGeometry) -> Result<GapAmplitudes> {
    if geom.g == 0.0 {
        return Ok(GapAmplitudes::default());
    }
    let sys = sigma_system(geom)?;
    let [[a, b], [c, d]] = sys.m;
    let det = a * d - b * c;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Singular("ring amplitude system".into()));
    }
    let (r0, r1) = (-sys.c[0], -sys.c[1]);
    Ok(GapAmplitudes::new((r0 * d - b * r1) / det, (a * r1 - c * r0) / det))
}

/// On-axis potential and its first three `z` derivatives.
pub fn ring_axis_jet(z: f64, geom: &RingTrapGeometry, amps: &GapAmplitudes) -> Result<Jet> {
    if !(z != 0.0 && z.is_finite()) {
        return Err(Error::domain("ring_axis_potential", "z must be finite and nonzero"));
    }
    let RingTrapGeometry { r1, r2, g } = *geom;
    let t = Jet::var(z.abs());
    let t2 = t * t;
    let base = |r: f64| (t2 + r * r).powf(-0.5);
    let pol = |r: f64| (t2 + r * r).powf(-1.5);
    let interp = |r: f64| (t2.scale(-1.0) + 2.0 * r * r) * (t2 + r * r).powf(-2.5);
    let bracket = base(r1) - base(r2)
        + (pol(r1).scale(amps.alpha1 * r1) + pol(r2).scale(amps.alpha2 * r2)).scale(PI * g / 4.0)
        + (interp(r1) - interp(r2)).scale(g * g / 16.0);
    let mut j = t * bracket;
    if z < 0.0 {
        // Even in z: odd derivatives flip sign.
        j.d1 = -j.d1;
        j.d3 = -j.d3;
    }
    Ok(j)
}

/// On-axis potential.
pub fn ring_axis_potential(z: f64, geom: &RingTrapGeometry, amps: &GapAmplitudes) -> Result<f64> {
    Ok(ring_axis_jet(z, geom, amps)?.v)
}

/// Ion and rf drive. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonParameters {
    /// kg
    pub mass: f64,
    /// C
    pub charge: f64,
    /// V
    pub u_rf: f64,
    /// rad/s
    pub omega_rf: f64,
}

/// Atomic mass constant in kg.
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
/// Elementary charge in C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

impl IonParameters {
    pub fn new(mass: f64, charge: f64, u_rf: f64, omega_rf: f64) -> Result<Self> {
        for (name, v) in [
            ("mass", mass),
            ("charge", charge),
            ("rf amplitude", u_rf),
            ("rf frequency", omega_rf),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain("IonParameters", format!("{name} must be positive")));
            }
        }
        Ok(IonParameters {
            mass,
            charge,
            u_rf,
            omega_rf,
        })
    }

    /// Singly charged ion of the given mass in atomic mass units.
    pub fn singly_charged(mass_u: f64, u_rf: f64, omega_rf: f64) -> Result<Self> {
        Self::new(mass_u * ATOMIC_MASS, ELEMENTARY_CHARGE, u_rf, omega_rf)
    }

    /// `q^2 U^2 / (4 m Omega^2)` in J m^2.
    pub fn prefactor(&self) -> f64 {
        self.charge * self.charge * self.u_rf * self.u_rf / (4.0 * self.mass * self.omega_rf * self.omega_rf)
    }
}

/// Pseudopotential energy in J for the gradient of the scaled potential,
/// given per length unit of `length_unit` meters.
pub fn pseudopotential(grad: [f64; 3], length_unit: f64, ion: &IonParameters) -> f64 {
    let g2: f64 = grad.iter().map(|g| (g / length_unit).powi(2)).sum();
    ion.prefactor() * g2
}

/// Tolerance on `|z dPhi/dz|` for a point to count as the trapping site.
pub const STATIONARY_TOL: f64 = 1e-10;

fn kappa_from_jet(z: f64, j: &Jet) -> f64 {
    // On the axis Phi_xx = Phi_yy = -Phi_zz/2, so det H = Phi_zz^3 / 4.
    z * z * j.d2.abs() / 4f64.cbrt()
}

/// Dimensionless curvature `z^2 |det H|^(1/3)` at a stationary height `z`.
pub fn curvature_kappa(geom: &RingTrapGeometry, amps: &GapAmplitudes, z: f64) -> Result<f64> {
    let j = ring_axis_jet(z, geom, amps)?;
    if (z * j.d1).abs() > STATIONARY_TOL {
        return Err(Error::Precondition(format!(
            "z = {z} is not a stationary point of the axial potential (z dPhi/dz = {:e})",
            z * j.d1
        )));
    }
    Ok(kappa_from_jet(z, &j))
}

/// Optimized ring for a gap width and trap height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapReport {
    pub z: f64,
    pub geometry: RingTrapGeometry,
    pub amplitudes: GapAmplitudes,
    pub kappa: f64,
    /// Ratios to the gapless optimum at the same height.
    pub r1_ratio: f64,
    pub r2_ratio: f64,
    pub kappa_ratio: f64,
    /// `q^2 U^2 / (4 m Omega^2)` when ion parameters are supplied.
    pub prefactor: Option<f64>,
    pub iterations: usize,
}

/// Controls for [`optimize_ring_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingOptimizeSettings {
    /// Search interval for `R1 / z`.
    pub r1_range: (f64, f64),
    /// Upper end of the `R2 / z` scan.
    pub r2_max: f64,
    pub scan_cells: usize,
    pub xtol: f64,
    pub max_iter: usize,
    /// Multiplier applied to the solved amplitudes before use.
    pub susceptibility: f64,
}

impl Default for RingOptimizeSettings {
    fn default() -> Self {
        RingOptimizeSettings {
            r1_range: (0.3, 1.3),
            r2_max: 30.0,
            scan_cells: 300,
            xtol: 1e-10,
            max_iter: 200,
            susceptibility: 1.0,
        }
    }
}

/// Outer radius that makes `z = 1` stationary for inner radius `r1`, given
/// the axial jet at `z = 1` as a function of both radii.
pub(crate) fn stationary_r2(
    r1: f64,
    g: f64,
    axis: &dyn Fn(f64, f64) -> Result<Jet>,
    s: &RingOptimizeSettings,
) -> Result<f64> {
    let lo = r1 + g.max(1e-6 * r1) * 1.0001;
    let slope = |r2: f64| axis(r1, r2).map(|j| j.d1);
    let (a, b) = scan_bracket(slope, lo, s.r2_max, s.scan_cells)?.ok_or_else(|| {
        Error::Convergence(format!(
            "no outer radius in ({lo}, {}) makes z stationary for R1 = {r1}",
            s.r2_max
        ))
    })?;
    brent_root(slope, a, b, 1e-14, s.max_iter)
}

/// Inner radius in `[lo, hi]` maximizing the curvature at `z = 1`, paired
/// with its stationary outer radius. Returns `(R1, R2, kappa, iterations)`.
pub(crate) fn maximize_kappa(
    axis: &dyn Fn(f64, f64) -> Result<Jet>,
    lo: f64,
    hi: f64,
    g: f64,
    s: &RingOptimizeSettings,
) -> Result<(f64, f64, f64, usize)> {
    if lo >= hi {
        return Err(Error::Config(format!(
            "empty inner radius search interval [{lo}, {hi}]"
        )));
    }
    let kappa_of = |r1: f64| -> Result<f64> {
        let r2 = stationary_r2(r1, g, axis, s)?;
        Ok(kappa_from_jet(1.0, &axis(r1, r2)?))
    };
    let best = brent_maximize(kappa_of, lo, hi, s.xtol, s.max_iter)?;
    if best.x - lo < 10.0 * s.xtol || hi - best.x < 10.0 * s.xtol {
        return Err(Error::Convergence(format!(
            "curvature maximum hit the search boundary at R1/z = {}",
            best.x
        )));
    }
    let r2 = stationary_r2(best.x, g, axis, s)?;
    Ok((best.x, r2, best.value, best.iterations))
}

fn optimize_unit(g: f64, s: &RingOptimizeSettings) -> Result<(RingTrapGeometry, GapAmplitudes, f64, usize)> {
    let amps_for =
        |geom: &RingTrapGeometry| -> Result<GapAmplitudes> { Ok(solve_ring_alphas(geom)?.scaled(s.susceptibility)) };
    let axis = |r1: f64, r2: f64| -> Result<Jet> {
        let geom = RingTrapGeometry::new(r1, r2, g)?;
        ring_axis_jet(1.0, &geom, &amps_for(&geom)?)
    };
    let lo = s.r1_range.0.max(0.5 * g * 1.0001);
    if lo >= s.r1_range.1 {
        return Err(Error::Config(format!(
            "gap width {g} leaves no room for the inner radius"
        )));
    }
    let (r1, r2, kappa, iterations) = maximize_kappa(&axis, lo, s.r1_range.1, g, s)?;
    let geom = RingTrapGeometry::new(r1, r2, g)?;
    let amps = amps_for(&geom)?;
    Ok((geom, amps, kappa, iterations))
}

/// Radii maximizing the curvature at height `z` for gap width `g`.
pub fn optimize_ring(g: f64, z: f64) -> Result<TrapReport> {
    optimize_ring_with(g, z, &RingOptimizeSettings::default(), None)
}

/// As [`optimize_ring`] with explicit settings and optional ion parameters.
pub fn optimize_ring_with(g: f64, z: f64, s: &RingOptimizeSettings, ion: Option<&IonParameters>) -> Result<TrapReport> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::domain("optimize_ring", "trap height must be positive"));
    }
    if !(g >= 0.0 && g < z) {
        return Err(Error::domain("optimize_ring", "need 0 <= g < z"));
    }
    let (geom, amps, kappa, iterations) = optimize_unit(g / z, s)?;
    let (g0, _, k0, _) = if g == 0.0 {
        (geom, amps, kappa, iterations)
    } else {
        optimize_unit(0.0, s)?
    };
    Ok(TrapReport {
        z,
        geometry: geom.scaled(z),
        amplitudes: amps,
        kappa,
        r1_ratio: geom.r1 / g0.r1,
        r2_ratio: geom.r2 / g0.r2,
        kappa_ratio: kappa / k0,
        prefactor: ion.map(|i| i.prefactor()),
        iterations,
    })
}

/// Optimizations over several gap widths at a common height, in parallel.
pub fn sweep_ring(gs: &[f64], z: f64, s: &RingOptimizeSettings) -> Vec<Result<TrapReport>> {
    gs.par_iter().map(|&g| optimize_ring_with(g, z, s, None)).collect()
}

/// The gap grid `g/z in {0, 0.05, ..., 0.5}`.
pub fn default_gap_grid() -> Vec<f64> {
    (0..=10).map(|k| 0.05 * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_branches() {
        let geom = RingTrapGeometry::new(1.0, 2.0, 0.1).unwrap();
        let amps = GapAmplitudes::new(0.03, -0.02);
        assert_eq!(ring_surface_potential(0.0, &geom, &amps), 0.0);
        assert_eq!(ring_surface_potential(1.5, &geom, &amps), 1.0);
        assert_eq!(ring_surface_potential(3.0, &geom, &amps), 0.0);
        assert!((ring_surface_potential(1.0, &geom, &amps) - 0.53).abs() < 1e-15);
        assert!((ring_surface_potential(2.0, &geom, &amps) - 0.48).abs() < 1e-15);
    }

    #[test]
    fn solved_amplitudes_null_densities() {
        let geom = RingTrapGeometry::new(0.7, 3.4, 0.2).unwrap();
        let a = solve_ring_alphas(&geom).unwrap();
        let (s1, s2) = ring_gap_center_sigma(&geom, &a).unwrap();
        assert!(s1.abs() < 1e-10 && s2.abs() < 1e-10);
    }

    #[test]
    fn jet_is_even_in_z() {
        let geom = RingTrapGeometry::new(1.0, 2.0, 0.1).unwrap();
        let a = GapAmplitudes::new(0.01, 0.02);
        let p = ring_axis_jet(0.7, &geom, &a).unwrap();
        let m = ring_axis_jet(-0.7, &geom, &a).unwrap();
        assert_eq!(p.v, m.v);
        assert_eq!(p.d1, -m.d1);
        assert_eq!(p.d2, m.d2);
    }
}
