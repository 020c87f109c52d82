//! Real special functions: gamma family, complete elliptic integrals and the
//! Gauss hypergeometric function on both sides of its branch point.
//!
//! Elliptic integrals take the parameter `m` (not the modulus).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{self, QuadSettings};

/// Truncation policy for every infinite series in the crate.
///
/// A series stops once its tail estimate falls below `rel_tol` times the
/// running sum. Reaching `max_terms` on any summation index first is an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-14,
            max_terms: 4000,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        let c = SeriesControl { rel_tol, max_terms };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::Config(format!(
                "series rel_tol must lie in (0, 1e-3], got {}",
                self.rel_tol
            )));
        }
        if self.max_terms < 8 {
            return Err(Error::Config(format!(
                "series max_terms must be at least 8, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// sin(pi x) with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    if r == r.round() {
        return 0.0;
    }
    (PI * r).sin()
}

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Gamma function; `inf` at the poles.
pub fn gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x == x.round() && x <= 25.0 {
        let mut p = 1.0;
        let mut k = 2.0;
        while k < x {
            p *= k;
            k += 1.0;
        }
        return p;
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    // Split the power to delay overflow near the top of the range.
    let half = t.powf(0.5 * (xm + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(xm)
}

/// Reciprocal gamma function, exactly zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > 171.0 {
        let (lg, s) = ln_gamma_sign(x);
        return s * (-lg).exp();
    }
    1.0 / gamma(x)
}

/// `ln|Gamma(x)|` together with the sign of `Gamma(x)`.
pub fn ln_gamma_sign(x: f64) -> (f64, f64) {
    if is_nonpositive_integer(x) {
        return (f64::INFINITY, 1.0);
    }
    if x < 0.5 {
        let s = sin_pi(x);
        let (lg, sg) = ln_gamma_sign(1.0 - x);
        return ((PI / s.abs()).ln() - lg, s.signum() * sg);
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    (
        0.5 * (2.0 * PI).ln() + (xm + 0.5) * t.ln() - t + lanczos_sum(xm).ln(),
        1.0,
    )
}

/// `ln|Gamma(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    ln_gamma_sign(x).0
}

/// Pochhammer symbol `(a)_n = Gamma(a+n)/Gamma(a)` for real `n`.
pub fn pochhammer(a: f64, n: f64) -> Result<f64> {
    if !a.is_finite() || !n.is_finite() {
        return Err(Error::domain("pochhammer", format!("non-finite argument a={a}, n={n}")));
    }
    if is_nonpositive_integer(a) || is_nonpositive_integer(a + n) {
        return Err(Error::domain(
            "pochhammer",
            format!("Gamma diverges at a={a} or a+n={}", a + n),
        ));
    }
    if n == 0.0 {
        return Ok(1.0);
    }
    if n > 0.0 && n == n.round() && n <= 64.0 {
        let mut p = 1.0;
        for k in 0..n as usize {
            p *= a + k as f64;
        }
        return Ok(p);
    }
    let b = a + n;
    if a.max(b) < 150.0 && a.min(b) > -150.0 {
        return Ok(gamma(b) * rgamma(a));
    }
    let (lb, sb) = ln_gamma_sign(b);
    let (la, sa) = ln_gamma_sign(a);
    Ok(sa * sb * (lb - la).exp())
}

fn agm_with_sum(a0: f64, b0: f64) -> (f64, f64) {
    // Returns AGM(a0, b0) and sum_{n>=1} 2^(n-1) c_n^2.
    let (mut a, mut b) = (a0, b0);
    let mut sum = 0.0;
    let mut w = 1.0;
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let c = 0.5 * (a - b);
        sum += w * c * c;
        w *= 2.0;
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    (0.5 * (a + b), sum)
}

/// Complete elliptic integral of the first kind, `K(m)`, for `m < 1`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(m < 1.0) {
        return Err(Error::domain("elliptic_k", format!("parameter m={m} must be < 1")));
    }
    if m < 0.0 {
        // Imaginary-modulus transformation.
        let mp = m / (m - 1.0);
        return Ok(elliptic_k(mp)? / (1.0 - m).sqrt());
    }
    let (agm, _) = agm_with_sum(1.0, (1.0 - m).sqrt());
    Ok(PI / (2.0 * agm))
}

/// Complete elliptic integral of the second kind, `E(m)`, for `m <= 1`.
pub fn elliptic_e(m: f64) -> Result<f64> {
    if !(m <= 1.0) {
        return Err(Error::domain("elliptic_e", format!("parameter m={m} must be <= 1")));
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    if m < 0.0 {
        let mp = m / (m - 1.0);
        return Ok(elliptic_e(mp)? * (1.0 - m).sqrt());
    }
    let (agm, sum) = agm_with_sum(1.0, (1.0 - m).sqrt());
    let k = PI / (2.0 * agm);
    Ok(k * (1.0 - 0.5 * m - sum))
}

/// Gauss series for |x| well inside the unit disc.
fn gauss_series(a: f64, b: f64, c: f64, x: f64, ctl: &SeriesControl, op: &'static str) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..ctl.max_terms {
        let kf = k as f64;
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        term *= ratio;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // Geometric tail bound once the term ratio has settled below one.
        let q = ratio.abs();
        let next_q = ((a + kf + 1.0) * (b + kf + 1.0) / ((c + kf + 1.0) * (kf + 2.0)) * x).abs();
        if q < 1.0 && next_q < 1.0 {
            let qb = q.max(next_q).max(x.abs());
            let tail = term.abs() * qb / (1.0 - qb).max(1e-300);
            if tail <= ctl.rel_tol * sum.abs() {
                return Ok(sum);
            }
        }
    }
    Err(Error::Series {
        op,
        terms: ctl.max_terms,
        last: (term / sum).abs(),
    })
}

fn check_c(c: f64, op: &'static str) -> Result<()> {
    if is_nonpositive_integer(c) {
        return Err(Error::domain(op, format!("c={c} is a nonpositive integer")));
    }
    Ok(())
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-12
}

/// Gauss hypergeometric function `2F1(a, b; c; x)` for `0 <= x < 1`.
pub fn hyp2f1(a: f64, b: f64, c: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    ctl.validate()?;
    check_c(c, "hyp2f1")?;
    if !(0.0..1.0).contains(&x) {
        return Err(Error::domain("hyp2f1", format!("argument x={x} outside [0, 1)")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let s = c - a - b;
    if x <= 0.7 || near_integer(s) || is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return gauss_series(a, b, c, x, ctl, "hyp2f1");
    }
    // Connection to the neighbourhood of x = 1.
    let y = 1.0 - x;
    let g_c = gamma(c);
    let c1 = g_c * gamma(s) * rgamma(c - a) * rgamma(c - b);
    let c2 = g_c * gamma(-s) * rgamma(a) * rgamma(b);
    let mut total = 0.0;
    if c1 != 0.0 {
        total += c1 * gauss_series(a, b, 1.0 - s, y, ctl, "hyp2f1")?;
    }
    if c2 != 0.0 {
        total += c2 * y.powf(s) * gauss_series(c - a, c - b, 1.0 + s, y, ctl, "hyp2f1")?;
    }
    Ok(total)
}

/// Real part of the principal analytic continuation of `2F1(a, b; c; x)`
/// for `x > 1` (identical from either side of the cut).
///
/// The non-degenerate path uses the `1 - 1/x` connection for `x <= 2` and
/// the `1/x` connection beyond. The family `a = 1, c = b + 1/2` used for
/// compensation potentials is always non-degenerate. When both connections
/// degenerate (integer `c-a-b` and integer `b-a`), `a = 1` (or `b = 1`) with
/// `c > b > 0` is handled by the principal-value Euler integral; other
/// degenerate parameters are rejected.
pub fn hyp2f1_re_gt1(a: f64, b: f64, c: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    const OP: &str = "hyp2f1_re_gt1";
    ctl.validate()?;
    check_c(c, OP)?;
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::domain(OP, format!("argument x={x} must exceed 1")));
    }
    let s = c - a - b;
    let one_minus_inv = !near_integer(s);
    let inverse = !near_integer(b - a);
    let order: [(bool, u8); 2] = if x <= 2.0 {
        [(one_minus_inv, 0), (inverse && x > 1.25, 1)]
    } else {
        [(inverse, 1), (one_minus_inv, 0)]
    };
    for (usable, path) in order {
        if !usable {
            continue;
        }
        let r = if path == 0 {
            re_one_minus_inverse(a, b, c, x, ctl)
        } else {
            re_inverse(a, b, c, x, ctl)
        };
        match r {
            Ok(v) => return Ok(v),
            Err(Error::Series { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if a == 1.0 && c > b && b > 0.0 {
        return re_euler_pv(b, c, x, ctl);
    }
    if b == 1.0 && c > a && a > 0.0 {
        return re_euler_pv(a, c, x, ctl);
    }
    Err(Error::domain(
        OP,
        format!("degenerate connection parameters a={a}, b={b}, c={c} (integer c-a-b and b-a)"),
    ))
}

fn re_one_minus_inverse(a: f64, b: f64, c: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    let s = c - a - b;
    let w = 1.0 - 1.0 / x;
    let g_c = gamma(c);
    let c1 = g_c * gamma(s) * rgamma(c - a) * rgamma(c - b);
    let c2 = g_c * gamma(-s) * rgamma(a) * rgamma(b);
    let mut total = 0.0;
    if c1 != 0.0 {
        total += c1 * x.powf(-a) * gauss_series(a, a - c + 1.0, 1.0 - s, w, ctl, "hyp2f1_re_gt1")?;
    }
    if c2 != 0.0 {
        // (1-x)^s has phase exp(-+ i pi s); only its cosine survives.
        total += c2
            * (x - 1.0).powf(s)
            * (PI * s).cos()
            * x.powf(a - c)
            * gauss_series(c - a, 1.0 - a, 1.0 + s, w, ctl, "hyp2f1_re_gt1")?;
    }
    Ok(total)
}

fn re_inverse(a: f64, b: f64, c: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    let w = 1.0 / x;
    let g_c = gamma(c);
    let c1 = g_c * gamma(b - a) * rgamma(b) * rgamma(c - a);
    let c2 = g_c * gamma(a - b) * rgamma(a) * rgamma(c - b);
    let mut total = 0.0;
    if c1 != 0.0 {
        total += c1 * x.powf(-a) * (PI * a).cos() * gauss_series(a, 1.0 - c + a, 1.0 - b + a, w, ctl, "hyp2f1_re_gt1")?;
    }
    if c2 != 0.0 {
        total += c2 * x.powf(-b) * (PI * b).cos() * gauss_series(b, 1.0 - c + b, 1.0 - a + b, w, ctl, "hyp2f1_re_gt1")?;
    }
    Ok(total)
}

/// Principal value of Gamma(c)/(Gamma(b)Gamma(c-b)) int_0^1 t^(b-1)(1-t)^(c-b-1)/(1-xt) dt.
fn re_euler_pv(b: f64, c: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    let t0 = 1.0 / x;
    let h = |t: f64| t.powf(b - 1.0) * (1.0 - t).powf(c - b - 1.0);
    let h0 = h(t0);
    let tol = ctl.rel_tol.max(1e-13);
    let s = QuadSettings {
        abs_tol: 0.0,
        rel_tol: tol,
        max_intervals: 20_000,
    };
    // 1/(1-xt) = -1/(x (t - t0)); subtract the pole and add its PV analytically.
    let smooth = quad::integrate_pts_smooth(
        |t| {
            let d = t - t0;
            if d == 0.0 {
                return 0.0;
            }
            (h(t) - h0) / d
        },
        &[0.0, t0, 1.0],
        &s,
    )
    .map_err(|_| Error::Series {
        op: "hyp2f1_re_gt1",
        terms: s.max_intervals,
        last: f64::NAN,
    })?;
    let pv = smooth.value + h0 * ((1.0 - t0) / t0).ln();
    let norm = gamma(c) * rgamma(b) * rgamma(c - b);
    Ok(-norm * pv / x)
}
