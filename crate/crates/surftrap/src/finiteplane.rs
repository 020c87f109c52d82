//! Electrodes on a finite grounded disc of radius `S` surrounded by vacuum.
//!
//! A point-like in-plane potential "pixel" at radius `rho` induces a charge
//! density that extends past the disc edge. Adding multipole compensation
//! densities cancels it outside the disc without changing the in-plane
//! potential inside. Their fields give a modified Green's function as a power
//! series that converges for `r^2 + z^2 < S^2`.
//!
//! Compensation potentials carry the factor `1/(4 pi)` of the sheet potential
//! `(1/4pi) int sigma / R`, so that they are the fields of the densities they
//! are paired with.

use std::f64::consts::PI;
use std::ops::Add;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::kernel::{self, Edge, Layout, Point3, Rect, Support, SurfaceFn};
use crate::quad::QuadSettings;
use crate::ringtrap::{
    maximize_kappa, optimize_ring_with, stationary_r2, GapAmplitudes, RingOptimizeSettings, RingTrapGeometry,
    TrapReport,
};
use crate::specfun::{hyp2f1, hyp2f1_re_gt1, pochhammer, SeriesControl};

/// Default fraction of `S` bounding `sqrt(r^2 + z^2)` for series evaluation.
pub const DEFAULT_MARGIN: f64 = 0.9;

/// Grounded disc hosting all electrodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiscSpec {
    /// Disc radius.
    pub s: f64,
    /// Series are evaluated only where `r^2 + z^2 <= (margin S)^2`.
    pub margin: f64,
}

impl FiniteDiscSpec {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_margin(s, DEFAULT_MARGIN)
    }

    pub fn with_margin(s: f64, margin: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::domain(
                "FiniteDiscSpec",
                format!("disc radius must be positive, got {s}"),
            ));
        }
        if !(margin > 0.0 && margin < 1.0) {
            return Err(Error::domain(
                "FiniteDiscSpec",
                format!("margin must lie in (0, 1), got {margin}"),
            ));
        }
        Ok(FiniteDiscSpec { s, margin })
    }

    fn check(&self, r: f64, z: f64, op: &'static str) -> Result<()> {
        if !(r.is_finite() && z.is_finite()) {
            return Err(Error::domain(op, "non-finite coordinates"));
        }
        let lim = self.margin * self.s;
        if r * r + z * z > lim * lim {
            return Err(Error::domain(
                op,
                format!("point (r={r}, z={z}) lies outside the convergence margin {lim}"),
            ));
        }
        Ok(())
    }
}

/// Multipole order `(m, n)` with `n >= m + 3` and `n - m` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultipoleIndex {
    m: u32,
    n: u32,
}

impl MultipoleIndex {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if n < m + 3 || (n - m) % 2 == 0 {
            return Err(Error::domain(
                "MultipoleIndex",
                format!("need n >= m + 3 with n - m odd, got (m, n) = ({m}, {n})"),
            ));
        }
        Ok(MultipoleIndex { m, n })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Weight of `cos(m theta) / r^n` in the expansion of minus the pixel
    /// density at radius `rho`.
    pub fn pixel_weight(&self, rho: f64) -> Result<f64> {
        let (m, n) = (self.m as f64, self.n as f64);
        let w = azimuth_weight(self.m) * pochhammer((n - m - 1.0) / 2.0, 0.5)? * pochhammer((n + m - 1.0) / 2.0, 0.5)?
            / (PI * PI);
        Ok(w * rho.powi(self.n as i32 - 3))
    }
}

/// `2^(3 - delta_{m,0})`.
fn azimuth_weight(m: u32) -> f64 {
    if m == 0 {
        4.0
    } else {
        8.0
    }
}

/// Sums `term(0) + term(1) + ...` where each term reports its value and a
/// non-negative magnitude. Stops once the geometric tail estimate drops below
/// `rel_tol * size(sum, magnitude)`, or after two consecutive zero terms.
/// Returns the sum and the accumulated magnitude.
fn sum_with<T, Z, F>(op: &'static str, ctl: &SeriesControl, size: Z, mut term: F) -> Result<(T, f64)>
where
    T: Copy + Default + Add<Output = T>,
    Z: Fn(&T, f64) -> f64,
    F: FnMut(usize) -> Result<(T, f64)>,
{
    let mut sum = T::default();
    let mut mag = 0.0_f64;
    let mut prev = f64::NAN;
    let mut last = 0.0;
    for i in 0..ctl.max_terms {
        let (t, a) = term(i)?;
        if !a.is_finite() {
            return Err(Error::Series {
                op,
                terms: i,
                last: f64::INFINITY,
            });
        }
        sum = sum + t;
        mag += a;
        last = a;
        if i >= 1 {
            if a == 0.0 && prev == 0.0 {
                return Ok((sum, mag));
            }
            let q = a / prev;
            if q < 1.0 && a * q / (1.0 - q) <= ctl.rel_tol * size(&sum, mag) {
                return Ok((sum, mag));
            }
        }
        prev = a;
    }
    Err(Error::Series {
        op,
        terms: ctl.max_terms,
        last: if mag > 0.0 { last / mag } else { f64::NAN },
    })
}

/// Inner sums: tolerance relative to the accumulated magnitude.
fn sum_series<T, F>(op: &'static str, ctl: &SeriesControl, term: F) -> Result<(T, f64)>
where
    T: Copy + Default + Add<Output = T>,
    F: FnMut(usize) -> Result<(T, f64)>,
{
    sum_with(op, ctl, |_: &T, mag| mag, term)
}

/// Outermost sums: tolerance relative to the running value, but never below
/// `1e-6` of the accumulated magnitude so exactly cancelling sums terminate.
fn sum_series_rel<T, N, F>(op: &'static str, ctl: &SeriesControl, norm: N, term: F) -> Result<(T, f64)>
where
    T: Copy + Default + Add<Output = T>,
    N: Fn(&T) -> f64,
    F: FnMut(usize) -> Result<(T, f64)>,
{
    sum_with(op, ctl, |s: &T, mag| norm(s).max(1e-6 * mag), term)
}

fn abs(x: &f64) -> f64 {
    x.abs()
}

/// Closed-form charge density of the pixel at radius `rho` (angle 0), valid
/// away from the pixel.
pub fn pixel_sigma(rho: f64, r: f64, theta: f64) -> f64 {
    let d2 = rho * rho + r * r - 2.0 * rho * r * theta.cos();
    -1.0 / (PI * d2 * d2.sqrt())
}

/// Multipole expansion of [`pixel_sigma`] for `r > rho`.
pub fn pixel_sigma_multipole(rho: f64, r: f64, theta: f64, ctl: &SeriesControl) -> Result<f64> {
    const OP: &str = "pixel_sigma_multipole";
    ctl.validate()?;
    if !(rho > 0.0 && rho.is_finite() && theta.is_finite()) {
        return Err(Error::domain(OP, "need finite rho > 0 and finite theta"));
    }
    if !(r > rho && r.is_finite()) {
        return Err(Error::domain(OP, format!("need r > rho, got r={r}, rho={rho}")));
    }
    let q = rho / r;
    // Grouped by total power N = m + 2l of rho/r; each group is bounded by
    // its value at theta = 0, which serves as the magnitude. Coefficients
    // (l+1)_{1/2} (m+l+1)_{1/2} follow from (a+1)_{1/2} / (a)_{1/2} = (a + 1/2) / a.
    let half = PI.sqrt() / 2.0;
    // Per parity of N: coefficient of each m at the current l = (N - m)/2.
    let mut coef: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    // (m+1)_{1/2} for the next new m of each parity.
    let mut heads = [half, half * 1.5];
    let mut qn = 1.0;
    let (sum, _) = sum_series_rel(OP, ctl, abs, |n| {
        if n > 0 {
            qn *= q;
        }
        let par = n % 2;
        let c = &mut coef[par];
        for (slot, cm) in c.iter_mut().enumerate() {
            let mf = (2 * slot + par) as f64;
            let lf = ((n - 2 * slot - par) / 2) as f64;
            *cm *= (lf + 0.5) / lf * (mf + lf + 0.5) / (mf + lf);
        }
        c.push(half * heads[par]);
        let mf = n as f64;
        heads[par] *= (mf + 1.5) / (mf + 1.0) * (mf + 2.5) / (mf + 2.0);
        let (mut v, mut env) = (0.0, 0.0);
        for (slot, cm) in c.iter().enumerate() {
            let m = 2 * slot + par;
            let w = azimuth_weight(m as u32) * cm;
            v += w * (m as f64 * theta).cos();
            env += w;
        }
        Ok((v * qn, env * qn))
    })?;
    Ok(-sum / (PI * PI * r * r * r))
}

/// Compensation density `sigma_hat_{S,m,n}` at `(r, theta)`, `r >= 0`.
///
/// Equal to `cos(m theta) / r^n` for `r >= S`. Inside, the hypergeometric
/// branch diverges like `(S - r)^(-1/2)` at the edge and stays finite at the
/// center, where it vanishes unless `m = 0`.
pub fn compensation_sigma(idx: MultipoleIndex, s: f64, r: f64, theta: f64, ctl: &SeriesControl) -> Result<f64> {
    const OP: &str = "compensation_sigma";
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::domain(OP, "disc radius must be positive"));
    }
    if !(r >= 0.0 && r.is_finite() && theta.is_finite()) {
        return Err(Error::domain(OP, "need finite r >= 0 and finite theta"));
    }
    let (m, n) = (idx.m as f64, idx.n as f64);
    let ang = (m * theta).cos();
    if r >= s {
        return Ok(ang / r.powi(idx.n as i32));
    }
    // r^(n+m) / S^(n+m) / r^n = r^m / S^(n+m), finite at r = 0.
    let pre = -pochhammer((n + m + 2.0) / 2.0, -1.5)? / (2.0 * PI.sqrt());
    let x = (r / s) * (r / s);
    let f = hyp2f1(1.5, (n + m) / 2.0, (n + m + 2.0) / 2.0, x, ctl)?;
    Ok(ang * pre * (r / s).powi(idx.m as i32) * f / s.powi(idx.n as i32))
}

/// In-plane potential of [`compensation_sigma`]: zero on the disc, a
/// hypergeometric profile outside that vanishes at the edge.
pub fn compensation_phi(idx: MultipoleIndex, s: f64, r: f64, theta: f64, ctl: &SeriesControl) -> Result<f64> {
    const OP: &str = "compensation_phi";
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::domain(OP, "disc radius must be positive"));
    }
    if !(r >= 0.0 && r.is_finite() && theta.is_finite()) {
        return Err(Error::domain(OP, "need finite r >= 0 and finite theta"));
    }
    if r <= s {
        return Ok(0.0);
    }
    let (m, n) = (idx.m as f64, idx.n as f64);
    let pre = -2.0 * PI.sqrt() * pochhammer((n + m) / 2.0, -0.5)? / (s.powi(idx.n as i32) * (n - m - 1.0));
    let x = (r / s) * (r / s);
    let f = hyp2f1_re_gt1(1.0, (n - m) / 2.0, (n - m + 1.0) / 2.0, x, ctl)?;
    let radial = (r * r - s * s).sqrt() / (r / s).powi(idx.m as i32) * f;
    Ok((m * theta).cos() * pre * radial / (4.0 * PI))
}

/// Ratios `C_l(x) / C_l(1)` of Gegenbauer polynomials of index `m + 1/2`.
///
/// Solid harmonics of azimuthal order `m` and degree `m + l` are
/// `r^m R^l C_l(z/R) cos(m theta)` with `R^2 = r^2 + z^2`, so a power series
/// in `r` and `|z|` grouped by total degree is fixed by its on-axis terms.
/// Summing the groups this way avoids the cancellation of the raw double
/// series, which converges only conditionally once `r + |z| > S`.
struct GegenbauerRatios {
    lam2: f64,
    x: f64,
    prev: f64,
    cur: f64,
    l: usize,
}

impl GegenbauerRatios {
    fn new(m: u32, x: f64) -> Self {
        GegenbauerRatios {
            lam2: 2.0 * m as f64 + 1.0,
            x,
            prev: 1.0,
            cur: x,
            l: 1,
        }
    }

    /// Advances to degree `l` (non-decreasing) and returns the ratio.
    fn at(&mut self, l: usize) -> f64 {
        if l == 0 {
            return 1.0;
        }
        while self.l < l {
            let n = (self.l + 1) as f64;
            let lam = 0.5 * self.lam2;
            let next = (2.0 * self.x * (n + lam - 1.0) * self.cur - (n - 1.0) * self.prev) / (self.lam2 + n - 1.0);
            self.prev = self.cur;
            self.cur = next;
            self.l += 1;
        }
        self.cur
    }
}

/// Sums `c_k g_k` over degree groups, where `term(k)` yields the smooth
/// coefficient `c_k` and the Gegenbauer ratio `g_k`, `|g_k| <= 1`. The tail
/// is estimated from the coefficients and compared with the sum of `|c_k g_k|`.
/// Returns the sum and that absolute sum.
fn harmonic_sum<F>(op: &'static str, ctl: &SeriesControl, mut term: F) -> Result<(f64, f64)>
where
    F: FnMut(usize) -> Result<(f64, f64)>,
{
    let (mut sum, mut abs_sum) = (0.0, 0.0_f64);
    let mut prev = f64::NAN;
    for k in 0..ctl.max_terms {
        let (c, g) = term(k)?;
        let env = c.abs();
        if !env.is_finite() {
            return Err(Error::Series {
                op,
                terms: k,
                last: f64::INFINITY,
            });
        }
        sum += c * g;
        abs_sum += (c * g).abs();
        if k >= 1 {
            if env == 0.0 && prev == 0.0 {
                return Ok((sum, abs_sum));
            }
            let q = env / prev;
            if q < 1.0 && env * q / (1.0 - q) <= ctl.rel_tol * abs_sum {
                return Ok((sum, abs_sum));
            }
        }
        prev = env;
    }
    Err(Error::Series {
        op,
        terms: ctl.max_terms,
        last: prev / abs_sum,
    })
}

/// Scaled cylindrical coordinates `(r/S, R/S, |z|/R)` of a field point.
fn harmonic_coords(r: f64, z: f64, s: f64) -> (f64, f64, f64) {
    let big_r = r.hypot(z);
    (r / s, big_r / s, if big_r > 0.0 { z.abs() / big_r } else { 1.0 })
}

/// Field of [`compensation_sigma`] off the plane, from its power series in
/// `r/S` and `|z|/S` summed by total degree.
pub fn compensation_field_series(
    idx: MultipoleIndex,
    disc: &FiniteDiscSpec,
    p: Point3,
    ctl: &SeriesControl,
) -> Result<f64> {
    const OP: &str = "compensation_field_series";
    ctl.validate()?;
    let r = p.x.hypot(p.y);
    disc.check(r, p.z, OP)?;
    if p.z == 0.0 {
        return Ok(0.0);
    }
    let s = disc.s;
    let (mi, nn) = (idx.m as f64, idx.n as f64);
    let (rs, big, x) = harmonic_coords(r, p.z, s);
    let mut geg = GegenbauerRatios::new(idx.m, x);
    // On-axis coefficient of (|z|/S)^(1+2k) times (r/S)^m (R/S)^(1+2k).
    let big2 = big * big;
    let mut a = -4.0 * (PI.sqrt() / 2.0) / (nn + mi) * rs.powi(idx.m as i32) * big;
    let (sum, _) = harmonic_sum(OP, ctl, |k| {
        if k > 0 {
            let km = (k - 1) as f64;
            a *= -(mi + km + 1.0) / (km + 1.0) * (nn + mi + 2.0 * km) / (nn + mi + 2.0 * km + 2.0) * big2;
        }
        Ok((a, geg.at(1 + 2 * k)))
    })?;
    let c0 = pochhammer((nn + mi) / 2.0, -0.5)?;
    let theta = p.y.atan2(p.x);
    Ok(-(mi * theta).cos() * c0 * sum / s.powi(idx.n as i32) * s / (4.0 * PI))
}

/// Correction series shared by the pixel and ring fields:
///
/// `sum_{m,j,k} cos(m theta) 2^(3-delta) (-1)^k 4^k (j+1)_{k+1/2} (j+m+1)_k
///  (r/S)^(m+2j) (|z|/S)^(1+2k) F_m(3 + 2(j+k+m)) / (pi^3 (1+2k)!)`
///
/// with `F_m(L) = sum_i (i+1)_{1/2} src(m, i) / (L + 2i)`, summed by total
/// degree through [`GegenbauerRatios`]. `max_m` bounds the azimuthal order
/// (0 for axisymmetric sources).
fn correction_series(
    op: &'static str,
    src: &dyn Fn(u32, usize) -> f64,
    max_m: Option<u32>,
    (rs, big, x): (f64, f64, f64),
    theta: f64,
    ctl: &SeriesControl,
) -> Result<f64> {
    if big == 0.0 || x == 0.0 {
        return Ok(0.0);
    }
    let big2 = big * big;
    let pi3 = PI * PI * PI;
    let (sum, _) = sum_series_rel(op, ctl, abs, |m| {
        let mu = m as u32;
        if max_m.is_some_and(|mm| mu > mm) {
            return Ok((0.0, 0.0));
        }
        let mf = m as f64;
        let mut geg = GegenbauerRatios::new(mu, x);
        // On-axis coefficient (-1)^k 4^k (1)_{k+1/2} (m+1)_k / (1+2k)!
        // = (-1)^k (sqrt(pi)/2) (m+1)_k / k!, times (r/S)^m (R/S)^(1+2k).
        let mut b = PI.sqrt() / 2.0 * rs.powi(m as i32) * big;
        let (s_k, a_k) = harmonic_sum(op, ctl, |k| {
            let kf = k as f64;
            if k > 0 {
                b *= -(mf + kf) / kf * big2;
            }
            if b == 0.0 {
                return Ok((0.0, 0.0));
            }
            let big_l = 3.0 + 2.0 * (kf + mf);
            let mut poch = PI.sqrt() / 2.0; // (i+1)_{1/2} at i = 0
            let (f, _) = sum_series(op, ctl, |i| {
                if i > 0 {
                    poch *= (i as f64 + 0.5) / i as f64;
                }
                let t = poch * src(mu, i) / (big_l + 2.0 * i as f64);
                Ok((t, t.abs()))
            })?;
            Ok((b * f, geg.at(1 + 2 * k)))
        })?;
        let w = azimuth_weight(mu) / pi3;
        Ok((w * s_k * (mf * theta).cos(), w * a_k))
    })?;
    Ok(sum)
}

/// Potential at `p` of the unit pixel at radius `rho` and angle 0 on the
/// grounded disc: the half-space Green's function plus the field of the
/// compensation densities.
pub fn modified_greens(rho: f64, disc: &FiniteDiscSpec, p: Point3, ctl: &SeriesControl) -> Result<f64> {
    const OP: &str = "modified_greens";
    ctl.validate()?;
    if !(rho >= 0.0 && rho < disc.s) {
        return Err(Error::domain(OP, format!("pixel radius {rho} must lie in [0, S)")));
    }
    let r = p.x.hypot(p.y);
    disc.check(r, p.z, OP)?;
    let free = kernel::greens_function(Point3::new(p.x - rho, p.y, p.z))?;
    let s = disc.s;
    let q = rho / s;
    let src = move |m: u32, i: usize| q.powi(m as i32 + 2 * i as i32);
    let corr = correction_series(OP, &src, None, harmonic_coords(r, p.z, s), p.y.atan2(p.x), ctl)?;
    Ok(free + corr / (s * s))
}

/// Leading-order large-disc form of [`modified_greens`] for a pixel at the
/// origin: the free Green's function plus the uniform field `|z| / (3 pi^2 S^3)`.
pub fn modified_greens_large_s(s: f64, p: Point3) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::domain("modified_greens_large_s", "disc radius must be positive"));
    }
    Ok(kernel::greens_function(p)? + p.z.abs() / (3.0 * PI * PI * s * s * s))
}

fn check_ring(r1: f64, r2: f64, disc: &FiniteDiscSpec, op: &'static str) -> Result<()> {
    if !(r1 >= 0.0 && r1 < r2 && r2 < disc.s) {
        return Err(Error::domain(
            op,
            format!("need 0 <= R1 < R2 < S, got R1={r1}, R2={r2}, S={}", disc.s),
        ));
    }
    Ok(())
}

/// On-axis potential of the unit ring `R1 < r < R2` on the grounded disc,
/// with its first three `z` derivatives.
pub fn ring_on_disc_axis_jet(z: f64, r1: f64, r2: f64, disc: &FiniteDiscSpec, ctl: &SeriesControl) -> Result<Jet> {
    const OP: &str = "ring_on_disc_axis_potential";
    ctl.validate()?;
    check_ring(r1, r2, disc, OP)?;
    if !(z != 0.0) {
        return Err(Error::domain(OP, "z must be nonzero"));
    }
    disc.check(0.0, z, OP)?;
    let s = disc.s;
    let t = Jet::var(z.abs());
    let t2 = t * t;
    let mut j = t * ((t2 + r1 * r1).powf(-0.5) - (t2 + r2 * r2).powf(-0.5));

    let u = t.scale(1.0 / s);
    let u2 = u * u;
    let (q1, q2) = ((r1 / s).powi(2), (r2 / s).powi(2));
    let norm = |a: &Jet| a.v.abs() + (a.d1 * z).abs() + (a.d2 * z * z).abs() + (a.d3 * z * z * z).abs();
    let pi32 = PI * PI.sqrt();
    let (mut p1, mut p2) = (q1, q2);
    let (corr, _) = sum_series_rel(OP, ctl, norm, |i| {
        let fi = i as f64;
        if i > 0 {
            p1 *= q1;
            p2 *= q2;
        }
        // 1 / (i + 3/2)_{1/2} = Gamma(i + 3/2) / Gamma(i + 2)
        let inv_poch = 1.0 / pochhammer(fi + 1.5, 0.5)?;
        let c = (p2 - p1) * inv_poch / pi32;
        let mut pw = u;
        let (sk, ak) = sum_series(OP, ctl, |k| {
            if k > 0 {
                pw = pw * u2;
            }
            let kf = k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = pw.scale(sign * c / (1.5 + fi + kf));
            Ok((term, norm(&term)))
        })?;
        Ok((sk, ak))
    })?;
    j = j + corr;
    if z < 0.0 {
        j.d1 = -j.d1;
        j.d3 = -j.d3;
    }
    Ok(j)
}

/// On-axis potential of the unit ring on the grounded disc.
pub fn ring_on_disc_axis_potential(
    z: f64,
    r1: f64,
    r2: f64,
    disc: &FiniteDiscSpec,
    ctl: &SeriesControl,
) -> Result<f64> {
    Ok(ring_on_disc_axis_jet(z, r1, r2, disc, ctl)?.v)
}

/// Potential of the unit ring on the grounded disc at any point inside the
/// convergence margin: the free-space annulus by quadrature plus the
/// axisymmetric part of the compensation series.
pub fn ring_on_disc_potential(
    p: Point3,
    r1: f64,
    r2: f64,
    disc: &FiniteDiscSpec,
    ctl: &SeriesControl,
    quad: &QuadSettings,
) -> Result<f64> {
    const OP: &str = "ring_on_disc_potential";
    ctl.validate()?;
    check_ring(r1, r2, disc, OP)?;
    let r = p.x.hypot(p.y);
    disc.check(r, p.z, OP)?;
    let annulus = SurfaceFn::new(
        move |x: f64, y: f64| {
            let rr = x.hypot(y);
            if rr > r1 && rr < r2 {
                1.0
            } else {
                0.0
            }
        },
        Support::Bounded(Rect::around(0.0, 0.0, r2)),
    )
    .with_layout(Layout::Axisymmetric { cx: 0.0, cy: 0.0 })
    .with_edges(vec![
        Edge::Circle {
            cx: 0.0,
            cy: 0.0,
            r: r1,
        },
        Edge::Circle {
            cx: 0.0,
            cy: 0.0,
            r: r2,
        },
    ]);
    let free = kernel::propagate(&annulus, p, quad)?;
    let s = disc.s;
    let (q1, q2) = ((r1 / s).powi(2), (r2 / s).powi(2));
    // Integral of (rho/S)^(2i) rho d rho d theta over the ring, over S^2.
    let src = move |_m: u32, i: usize| {
        let e = i as i32 + 1;
        2.0 * PI * (q2.powi(e) - q1.powi(e)) / (2.0 * e as f64)
    };
    let corr = correction_series(OP, &src, Some(0), harmonic_coords(r, p.z, s), 0.0, ctl)?;
    Ok(free + corr)
}

/// Largest `R2 / S` visited by the optimizer; the axial series loses its
/// geometric convergence as the ring reaches the disc edge.
pub const RING_EDGE_GUARD: f64 = 0.99;

/// Ring radii maximizing the curvature at height `z` on a disc of radius `s`.
///
/// The report's ratios compare against the infinite-plane optimum at the same
/// height; the gap width and amplitudes are zero.
pub fn optimize_ring_on_disc(s: f64, z: f64) -> Result<TrapReport> {
    optimize_ring_on_disc_with(s, z, &RingOptimizeSettings::default(), &SeriesControl::default())
}

/// As [`optimize_ring_on_disc`] with explicit optimizer and series settings.
pub fn optimize_ring_on_disc_with(
    s: f64,
    z: f64,
    settings: &RingOptimizeSettings,
    ctl: &SeriesControl,
) -> Result<TrapReport> {
    const OP: &str = "optimize_ring_on_disc";
    if !(z > 0.0 && z.is_finite() && s.is_finite()) {
        return Err(Error::domain(OP, "need finite z > 0 and finite S"));
    }
    if !(z < 0.5 * s) {
        return Err(Error::domain(OP, format!("need z < S/2, got z={z}, S={s}")));
    }
    let disc = FiniteDiscSpec::new(s / z)?;
    let mut local = *settings;
    local.r2_max = settings.r2_max.min(RING_EDGE_GUARD * disc.s);
    let axis = |r1: f64, r2: f64| ring_on_disc_axis_jet(1.0, r1, r2, &disc, ctl);
    let hi = settings.r1_range.1.min(0.5 * disc.s);
    let mut lo = settings.r1_range.0;
    // Small inner radii need an outer radius beyond the disc edge on small
    // discs; the stationary outer radius falls as R1 grows.
    let feasible = |r1: f64| match stationary_r2(r1, 0.0, &axis, &local) {
        Ok(_) => Ok(true),
        Err(Error::Convergence(_)) => Ok(false),
        Err(e) => Err(e),
    };
    if !feasible(lo)? {
        if !feasible(hi)? {
            return Err(Error::Convergence(format!(
                "no ring with R2 < {RING_EDGE_GUARD} S has a stationary point at z for z/S = {}",
                z / s
            )));
        }
        let mut b = hi;
        while b - lo > settings.xtol {
            let mid = 0.5 * (lo + b);
            if feasible(mid)? {
                b = mid;
            } else {
                lo = mid;
            }
        }
        lo = b;
    }
    let (r1, r2, kappa, iterations) = maximize_kappa(&axis, lo, hi, 0.0, &local)?;
    let ideal = optimize_ring_with(0.0, 1.0, settings, None)?;
    let geom = RingTrapGeometry::new(r1, r2, 0.0)?;
    Ok(TrapReport {
        z,
        geometry: geom.scaled(z),
        amplitudes: GapAmplitudes::new(0.0, 0.0),
        kappa,
        r1_ratio: r1 / ideal.geometry.r1,
        r2_ratio: r2 / ideal.geometry.r2,
        kappa_ratio: kappa / ideal.kappa,
        prefactor: None,
        iterations,
    })
}

/// The `z / S` grid `{0.02, 0.04, ..., 0.3}`.
pub fn default_disc_grid() -> Vec<f64> {
    (1..=15).map(|k| 0.02 * k as f64).collect()
}

/// Optimizations at unit height over several values of `z / S`, in parallel.
pub fn sweep_ring_on_disc(
    z_over_s: &[f64],
    settings: &RingOptimizeSettings,
    ctl: &SeriesControl,
) -> Vec<Result<TrapReport>> {
    z_over_s
        .par_iter()
        .map(|&f| {
            if !(f > 0.0) {
                return Err(Error::domain("sweep_ring_on_disc", "z/S must be positive"));
            }
            optimize_ring_on_disc_with(1.0 / f, 1.0, settings, ctl)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_validation() {
        assert!(MultipoleIndex::new(0, 3).is_ok());
        assert!(MultipoleIndex::new(1, 4).is_ok());
        assert!(MultipoleIndex::new(0, 4).is_err());
        assert!(MultipoleIndex::new(2, 3).is_err());
    }

    #[test]
    fn leading_pixel_weight() {
        // 4 Gamma(3/2)^2 / pi^2 = 1 / pi
        let w = MultipoleIndex::new(0, 3).unwrap().pixel_weight(0.4).unwrap();
        assert!((w - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn series_helper_geometric() {
        let ctl = SeriesControl::default();
        let (s, _) = sum_series("t", &ctl, |i| {
            let t = 0.5f64.powi(i as i32);
            Ok((t, t))
        })
        .unwrap();
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn series_helper_reports_cap() {
        let ctl = SeriesControl::new(1e-14, 10).unwrap();
        let r = sum_series("t", &ctl, |i| Ok((1.0 / (i + 1) as f64, 1.0 / (i + 1) as f64)));
        assert!(matches!(r, Err(Error::Series { .. })));
    }
}
