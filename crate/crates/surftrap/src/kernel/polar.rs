//! Polar-coordinate integration engines around an evaluation point.
//!
//! Every engine integrates along rays from the origin point, so that kernel
//! singularities at the origin become regular and breakpoints along each
//! ray come from a [`RayBreaks`] provider. Unbounded domains are compactified
//! with `s = 1/rho` or, for the propagation kernel, with the exact map of its
//! radial weight onto `[0, 1]`.

use std::f64::consts::PI;

use super::geometry::{wrap_angles, RayBreaks, Rect};
use crate::error::{Error, Result};
use crate::quad::{self, QuadSettings};

/// Where a surface function may be nonzero (or non-constant).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Extent {
    pub rect: Option<Rect>,
    pub scale: f64,
}

/// Collects the first error raised inside a quadrature closure.
pub(crate) struct Trap(Option<Error>);

impl Trap {
    pub fn new() -> Self {
        Trap(None)
    }
    pub fn take<T>(&mut self, r: Result<T>, fallback: T) -> T {
        match r {
            Ok(v) => v,
            Err(e) => {
                if self.0.is_none() {
                    self.0 = Some(e);
                }
                fallback
            }
        }
    }
    pub fn failed(&self) -> bool {
        self.0.is_some()
    }
    pub fn finish<T>(self, r: Result<T>) -> Result<T> {
        match self.0 {
            Some(e) => Err(e),
            None => r,
        }
    }
}

fn inner_settings(q: &QuadSettings) -> QuadSettings {
    QuadSettings {
        abs_tol: q.abs_tol * 0.1,
        rel_tol: q.rel_tol * 0.1,
        max_intervals: q.max_intervals,
    }
}

fn angle_points(lo: f64, period: f64, extra: &mut [f64]) -> Vec<f64> {
    wrap_angles(extra, lo, period);
    quad::breakpoints(lo, lo + period, extra.iter().copied())
}

/// `(1/2pi) int dtheta int_0^1 dv f(o + rho(v) e_theta)` with
/// `rho(v) = |z| sqrt(1 - v^2) / v`, which equals the Green's-function
/// propagation of `f` to height `z`.
pub(crate) fn propagate_planar(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    ox: f64,
    oy: f64,
    z: f64,
    geo: &dyn RayBreaks,
    rect: Option<Rect>,
    q: &QuadSettings,
) -> Result<f64> {
    let z = z.abs();
    let mut ab = Vec::new();
    geo.angle_breaks(ox, oy, &mut ab);
    let thetas = angle_points(0.0, 2.0 * PI, &mut ab);
    let qi = inner_settings(q);
    let mut trap = Trap::new();
    let mut hits = Vec::new();
    let v_of = |rho: f64| z / rho.hypot(z);
    let outer = quad::integrate_pts(
        |theta| {
            if trap.failed() {
                return 0.0;
            }
            let (s, c) = theta.sin_cos();
            let (r0, r1) = match rect {
                Some(r) => match r.ray_interval(ox, oy, c, s) {
                    Some(iv) => iv,
                    None => return 0.0,
                },
                None => (0.0, f64::INFINITY),
            };
            hits.clear();
            geo.ray_breaks(ox, oy, c, s, &mut hits);
            let v_lo = if r1.is_finite() { v_of(r1) } else { 0.0 };
            let v_hi = v_of(r0);
            let pts = quad::breakpoints(v_lo, v_hi, hits.iter().filter(|&&t| t > r0 && t < r1).map(|&t| v_of(t)));
            let r = quad::integrate_pts(
                |v| {
                    let rho = z * (1.0 - v * v).max(0.0).sqrt() / v;
                    f(ox + rho * c, oy + rho * s)
                },
                &pts,
                &qi,
            );
            trap.take(r.map(|e| e.value), 0.0)
        },
        &thetas,
        q,
    );
    trap.finish(outer.map(|e| e.value / (2.0 * PI)))
}

/// `(1/pi) int_{-pi/2}^{pi/2} f(x + |z| tan psi) dpsi`, the propagation of a
/// translation-invariant profile.
pub(crate) fn propagate_line(
    f: &(dyn Fn(f64) -> f64 + Sync),
    x: f64,
    z: f64,
    breaks: &[f64],
    q: &QuadSettings,
) -> Result<f64> {
    let z = z.abs();
    let pts = quad::breakpoints(-PI / 2.0, PI / 2.0, breaks.iter().map(|&xe| ((xe - x) / z).atan()));
    let r = quad::integrate_pts(|psi| f(x + z * psi.tan()), &pts, q)?;
    Ok(r.value / PI)
}

/// Radial propagation of a rotationally symmetric profile `f(rho)` about the
/// origin to the point `(r, z)` through the azimuthally integrated kernel.
pub(crate) fn propagate_axisymmetric(
    f: &(dyn Fn(f64) -> f64 + Sync),
    r: f64,
    z: f64,
    radial_breaks: &[f64],
    outer_radius: Option<f64>,
    scale: f64,
    q: &QuadSettings,
) -> Result<f64> {
    let z = z.abs();
    let kernel = |rho: f64| -> Result<f64> {
        // (1/2pi) int_0^2pi |z| rho / (A - B cos t)^{3/2} dt = (2|z| rho/pi) E(m) / ((A-B) sqrt(A+B)).
        let a = rho * rho + r * r + z * z;
        let b = 2.0 * rho * r;
        let m = 2.0 * b / (a + b);
        let e = crate::specfun::elliptic_e(m.min(1.0))?;
        Ok(2.0 * z * rho / PI * e / ((a - b) * (a + b).sqrt()))
    };
    let mut near = vec![r, r - z, r + z, r - 4.0 * z, r + 4.0 * z];
    near.extend_from_slice(radial_breaks);
    let mut trap = Trap::new();
    let total = match outer_radius {
        Some(rmax) => {
            let pts = quad::breakpoints(0.0, rmax, near.iter().copied());
            let v = quad::integrate_pts(|rho| f(rho) * trap.take(kernel(rho), 0.0), &pts, q);
            v.map(|e| e.value)
        }
        None => {
            let r1 = (r + 8.0 * z)
                .max(scale)
                .max(radial_breaks.iter().fold(0.0_f64, |m, b| m.max(*b)) * 1.5);
            let pts = quad::breakpoints(0.0, r1, near.iter().copied());
            let head = quad::integrate_pts(|rho| f(rho) * trap.take(kernel(rho), 0.0), &pts, q);
            let tail = quad::integrate_pts(
                |s| {
                    if s <= 0.0 {
                        return 0.0;
                    }
                    let rho = 1.0 / s;
                    f(rho) * trap.take(kernel(rho), 0.0) / (s * s)
                },
                &[0.0, 1.0 / r1],
                q,
            );
            match (head, tail) {
                (Ok(h), Ok(t)) => Ok(h.value + t.value),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        }
    };
    trap.finish(total)
}

/// Remainder integral of the local-square split for a vector of surface
/// functions, symmetrized over opposite rays:
/// `2 int_0^pi dtheta int_{rho_sq(theta)}^inf ((f(o+rho e) + f(o-rho e))/2 - f(o)) / rho^2 drho`,
/// where `rho_sq` is the distance to the boundary of the square of
/// half-width `d` rotated by `frame`.
///
/// With `halves`, the result has `2 dim` entries: the remainder for `d`
/// followed by the remainder for `d/2`, sharing the integral beyond `d`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn split_remainder_vec(
    f: &(dyn Fn(f64, f64, &mut [f64]) + Sync),
    dim: usize,
    ox: f64,
    oy: f64,
    frame: f64,
    d: f64,
    halves: bool,
    geo: &dyn RayBreaks,
    ext: &Extent,
    q: &QuadSettings,
) -> Result<Vec<f64>> {
    let mut f0 = vec![0.0; dim];
    f(ox, oy, &mut f0);
    let mut ab = Vec::new();
    geo.angle_breaks(ox, oy, &mut ab);
    for k in 0..4 {
        ab.push(frame + PI / 4.0 + k as f64 * PI / 2.0);
    }
    let thetas = angle_points(frame, PI, &mut ab);
    let qi = inner_settings(q);
    let mut trap = Trap::new();
    let mut hits = Vec::new();
    let mut fp = vec![0.0; dim];
    let mut fm = vec![0.0; dim];
    let sym = |rho: f64, c: f64, s: f64, out: &mut [f64], fp: &mut [f64], fm: &mut [f64]| {
        f(ox + rho * c, oy + rho * s, fp);
        f(ox - rho * c, oy - rho * s, fm);
        for k in 0..dim {
            out[k] = 0.5 * (fp[k] + fm[k]) - f0[k];
        }
    };
    let width = if halves { 2 * dim } else { dim };
    let outer = quad::integrate_vec_smooth(
        |theta, full: &mut [f64]| {
            full.iter_mut().for_each(|o| *o = 0.0);
            if trap.failed() {
                return;
            }
            let (out, annulus) = full.split_at_mut(dim);
            let (s, c) = theta.sin_cos();
            let rel = theta - frame;
            let rho_sq = d / rel.cos().abs().max(rel.sin().abs());
            hits.clear();
            geo.ray_breaks(ox, oy, c, s, &mut hits);
            geo.ray_breaks(ox, oy, -c, -s, &mut hits);
            match ext.rect {
                Some(rect) => {
                    let exit = [(c, s), (-c, -s)]
                        .iter()
                        .filter_map(|&(cc, ss)| rect.ray_interval(ox, oy, cc, ss).map(|iv| iv.1))
                        .fold(0.0_f64, f64::max);
                    if exit > rho_sq {
                        let pts = quad::breakpoints(rho_sq, exit, hits.iter().copied());
                        let r = quad::integrate_vec_smooth(
                            |rho, o: &mut [f64]| {
                                sym(rho, c, s, o, &mut fp, &mut fm);
                                let w = 1.0 / (rho * rho);
                                o.iter_mut().for_each(|x| *x *= w);
                            },
                            &pts,
                            dim,
                            &qi,
                        );
                        if let Some(v) = trap.take(r.map(|e| Some(e.value)), None) {
                            out.copy_from_slice(&v);
                        }
                        for k in 0..dim {
                            out[k] -= f0[k] / exit;
                        }
                    } else {
                        for k in 0..dim {
                            out[k] = -f0[k] / rho_sq;
                        }
                    }
                }
                None => {
                    let r1 = ext.scale.max(2.0 * rho_sq);
                    let pts = quad::breakpoints(rho_sq, r1, hits.iter().copied());
                    let head = quad::integrate_vec_smooth(
                        |rho, o: &mut [f64]| {
                            sym(rho, c, s, o, &mut fp, &mut fm);
                            let w = 1.0 / (rho * rho);
                            o.iter_mut().for_each(|x| *x *= w);
                        },
                        &pts,
                        dim,
                        &qi,
                    );
                    let spts = quad::breakpoints(0.0, 1.0 / r1, hits.iter().filter(|&&t| t > r1).map(|&t| 1.0 / t));
                    let tail = quad::integrate_vec_smooth(
                        |sv, o: &mut [f64]| {
                            if sv <= 0.0 {
                                for k in 0..dim {
                                    o[k] = 0.0;
                                }
                                return;
                            }
                            sym(1.0 / sv, c, s, o, &mut fp, &mut fm);
                        },
                        &spts,
                        dim,
                        &qi,
                    );
                    if let Some(h) = trap.take(head.map(|e| Some(e.value)), None) {
                        if let Some(t) = trap.take(tail.map(|e| Some(e.value)), None) {
                            for k in 0..dim {
                                out[k] = h[k] + t[k];
                            }
                        }
                    }
                }
            }
            if halves && !trap.failed() {
                let exit = ext.rect.map(|rect| {
                    [(c, s), (-c, -s)]
                        .iter()
                        .filter_map(|&(cc, ss)| rect.ray_interval(ox, oy, cc, ss).map(|iv| iv.1))
                        .fold(0.0_f64, f64::max)
                });
                let pts = quad::breakpoints(0.5 * rho_sq, rho_sq, hits.iter().copied().chain(exit));
                let r = quad::integrate_vec_smooth(
                    |rho, o: &mut [f64]| {
                        sym(rho, c, s, o, &mut fp, &mut fm);
                        let w = 1.0 / (rho * rho);
                        o.iter_mut().for_each(|x| *x *= w);
                    },
                    &pts,
                    dim,
                    &qi,
                );
                if let Some(v) = trap.take(r.map(|e| Some(e.value)), None) {
                    for k in 0..dim {
                        annulus[k] = out[k] + v[k];
                    }
                }
            }
        },
        &thetas,
        width,
        q,
    );
    let r = trap.finish(outer)?;
    Ok(r.value.into_iter().map(|v| 2.0 * v).collect())
}

/// One-dimensional remainder for translation-invariant profiles:
/// `int_0^inf (f(x+X) + f(x-X) - 2 f(x)) w(X) dX` with the strip weight
/// `w = 2/X^2` for `X >= d` and `(2/X^2)(1 - d/sqrt(X^2+d^2))` below.
pub(crate) fn split_remainder_line(
    f: &(dyn Fn(f64) -> f64 + Sync),
    x: f64,
    d: f64,
    breaks: &[f64],
    x_range: Option<(f64, f64)>,
    scale: f64,
    q: &QuadSettings,
) -> Result<f64> {
    let f0 = f(x);
    let w = |xx: f64| {
        if xx >= d {
            2.0 / (xx * xx)
        } else {
            let r = xx.hypot(d);
            // 1 - d/r, written without cancellation.
            let one_minus = xx * xx / (r * (r + d));
            2.0 * one_minus / (xx * xx)
        }
    };
    let sym = |xx: f64| f(x + xx) + f(x - xx) - 2.0 * f0;
    let mut interior: Vec<f64> = breaks.iter().map(|b| (b - x).abs()).collect();
    interior.push(d);
    let reach = match x_range {
        Some((lo, hi)) => (x - lo).abs().max((hi - x).abs()),
        None => 0.0,
    };
    if let Some((lo, hi)) = x_range {
        interior.push((x - lo).abs());
        interior.push((hi - x).abs());
    }
    let x1 = scale.max(4.0 * d).max(reach);
    let pts = quad::breakpoints(0.0, x1, interior.iter().copied());
    let head = quad::integrate_pts(|xx| sym(xx) * w(xx), &pts, q)?;
    let tail = match x_range {
        // Beyond the support both samples vanish and the weight is 2/X^2.
        Some(_) => -2.0 * f0 * 2.0 / x1,
        None => {
            let spts = quad::breakpoints(0.0, 1.0 / x1, interior.iter().filter(|&&t| t > x1).map(|&t| 1.0 / t));
            quad::integrate_pts(|s| if s <= 0.0 { 0.0 } else { 2.0 * sym(1.0 / s) }, &spts, q)?.value
        }
    };
    Ok(head.value + tail)
}

/// `(1/4pi) int dtheta int_0^inf sigma(o + rho e) drho`: the in-plane
/// potential of a planar charge density, with smoothstep-mapped pieces so
/// that inverse square-root edge divergences are integrable.
pub(crate) fn sheet_potential_planar(
    sigma: &(dyn Fn(f64, f64) -> f64 + Sync),
    ox: f64,
    oy: f64,
    z: f64,
    geo: &dyn RayBreaks,
    ext: &Extent,
    q: &QuadSettings,
) -> Result<f64> {
    let z = z.abs();
    let mut ab = Vec::new();
    geo.angle_breaks(ox, oy, &mut ab);
    let thetas = angle_points(0.0, 2.0 * PI, &mut ab);
    let qi = inner_settings(q);
    let mut trap = Trap::new();
    let mut hits = Vec::new();
    // In-plane weight rho dA / R = drho for z = 0; rho / sqrt(rho^2+z^2) otherwise.
    let weight = |rho: f64| if z == 0.0 { 1.0 } else { rho / rho.hypot(z) };
    let outer = quad::integrate_pts_smooth(
        |theta| {
            if trap.failed() {
                return 0.0;
            }
            let (s, c) = theta.sin_cos();
            hits.clear();
            geo.ray_breaks(ox, oy, c, s, &mut hits);
            let val = match ext.rect {
                Some(rect) => match rect.ray_interval(ox, oy, c, s) {
                    None => Ok(0.0),
                    Some((r0, r1)) => {
                        let pts = quad::breakpoints(r0, r1, hits.iter().copied());
                        quad::integrate_pts_smooth(|rho| sigma(ox + rho * c, oy + rho * s) * weight(rho), &pts, &qi)
                            .map(|e| e.value)
                    }
                },
                None => {
                    let r1 = ext.scale;
                    let pts = quad::breakpoints(0.0, r1, hits.iter().copied());
                    let head =
                        quad::integrate_pts_smooth(|rho| sigma(ox + rho * c, oy + rho * s) * weight(rho), &pts, &qi);
                    let spts = quad::breakpoints(0.0, 1.0 / r1, hits.iter().filter(|&&t| t > r1).map(|&t| 1.0 / t));
                    let tail = quad::integrate_pts_smooth(
                        |sv| {
                            if sv <= 0.0 {
                                return 0.0;
                            }
                            let rho = 1.0 / sv;
                            sigma(ox + rho * c, oy + rho * s) * weight(rho) / (sv * sv)
                        },
                        &spts,
                        &qi,
                    );
                    match (head, tail) {
                        (Ok(h), Ok(t)) => Ok(h.value + t.value),
                        (Err(e), _) | (_, Err(e)) => Err(e),
                    }
                }
            };
            trap.take(val, 0.0)
        },
        &thetas,
        q,
    );
    trap.finish(outer.map(|e| e.value / (4.0 * PI)))
}

/// `int sigma(x') ln|x - x'| dx'` (and the net line charge) for a
/// translation-invariant density.
pub(crate) fn log_potential_line(
    sigma: &(dyn Fn(f64) -> f64 + Sync),
    x: f64,
    breaks: &[f64],
    x_range: Option<(f64, f64)>,
    scale: f64,
    q: &QuadSettings,
) -> Result<(f64, f64, f64)> {
    // Returns (int sigma ln|x-x'|, int sigma, int |sigma|).
    let mut interior: Vec<f64> = breaks.to_vec();
    interior.push(x);
    let eval = |xp: f64, out: &mut [f64]| {
        let s = sigma(xp);
        let r = (x - xp).abs();
        out[0] = if r == 0.0 { 0.0 } else { s * r.ln() };
        out[1] = s;
        out[2] = s.abs();
    };
    match x_range {
        Some((lo, hi)) => {
            let pts = quad::breakpoints(lo, hi, interior.iter().copied());
            let r = quad::integrate_vec_smooth(eval, &pts, 3, q)?;
            Ok((r.value[0], r.value[1], r.value[2]))
        }
        None => {
            let reach = breaks.iter().fold(0.0_f64, |m, b| m.max((b - x).abs()));
            let x1 = scale.max(1.5 * reach).max(1e-300);
            let pts = quad::breakpoints(x - x1, x + x1, interior.iter().copied());
            let head = quad::integrate_vec_smooth(eval, &pts, 3, q)?;
            let mut total = head.value.clone();
            for sign in [1.0, -1.0] {
                let tail = quad::integrate_vec_smooth(
                    |s, out: &mut [f64]| {
                        if s <= 0.0 {
                            out.iter_mut().for_each(|o| *o = 0.0);
                            return;
                        }
                        let xx = 1.0 / s;
                        let sv = sigma(x + sign * xx);
                        let jac = 1.0 / (s * s);
                        out[0] = sv * xx.ln() * jac;
                        out[1] = sv * jac;
                        out[2] = sv.abs() * jac;
                    },
                    &[0.0, 1.0 / x1],
                    3,
                    q,
                )?;
                for k in 0..3 {
                    total[k] += tail.value[k];
                }
            }
            Ok((total[0], total[1], total[2]))
        }
    }
}
