//! Third-order forward-mode derivatives of scalar functions of one variable.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value with its first three derivatives with respect to one variable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Jet { v, d1, d2, d3 }
    }

    /// The independent variable at `x`.
    pub const fn var(x: f64) -> Self {
        Jet::new(x, 1.0, 0.0, 0.0)
    }

    pub const fn constant(c: f64) -> Self {
        Jet::new(c, 0.0, 0.0, 0.0)
    }

    /// Composition with a scalar function given its derivatives at `self.v`.
    pub fn chain(self, f0: f64, f1: f64, f2: f64, f3: f64) -> Self {
        let (u1, u2, u3) = (self.d1, self.d2, self.d3);
        Jet {
            v: f0,
            d1: f1 * u1,
            d2: f2 * u1 * u1 + f1 * u2,
            d3: f3 * u1 * u1 * u1 + 3.0 * f2 * u1 * u2 + f1 * u3,
        }
    }

    /// Real power; requires `self.v > 0` unless `p` is a non-negative integer.
    pub fn powf(self, p: f64) -> Self {
        let x = self.v;
        let f0 = x.powf(p);
        let f1 = p * x.powf(p - 1.0);
        let f2 = p * (p - 1.0) * x.powf(p - 2.0);
        let f3 = p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0);
        self.chain(f0, f1, f2, f3)
    }

    pub fn powi(self, n: i32) -> Self {
        let x = self.v;
        let nf = n as f64;
        let f0 = x.powi(n);
        let f1 = if n == 0 { 0.0 } else { nf * x.powi(n - 1) };
        let f2 = if n == 0 || n == 1 {
            0.0
        } else {
            nf * (nf - 1.0) * x.powi(n - 2)
        };
        let f3 = if (0..=2).contains(&n) {
            0.0
        } else {
            nf * (nf - 1.0) * (nf - 2.0) * x.powi(n - 3)
        };
        self.chain(f0, f1, f2, f3)
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(self) -> Self {
        self.powi(-1)
    }

    pub fn scale(self, c: f64) -> Self {
        Jet::new(c * self.v, c * self.d1, c * self.d2, c * self.d3)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2, self.d3 + o.d3)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2, self.d3 - o.d3)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        Jet { v: self.v - c, ..self }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_function_derivatives() {
        // f(x) = x / sqrt(1 + x^2) at x = 0.7
        let x = Jet::var(0.7);
        let f = x / (x * x + 1.0).sqrt();
        let s = 1.0 + 0.49_f64;
        assert!((f.v - 0.7 / s.sqrt()).abs() < 1e-15);
        assert!((f.d1 - s.powf(-1.5)).abs() < 1e-14);
        assert!((f.d2 - (-3.0 * 0.7 * s.powf(-2.5))).abs() < 1e-14);
        let d3 = -3.0 * s.powf(-2.5) + 15.0 * 0.49 * s.powf(-3.5);
        assert!((f.d3 - d3).abs() < 1e-13);
    }

    #[test]
    fn integer_powers_match_products() {
        let x = Jet::var(1.3);
        let a = x.powi(3);
        let b = x * x * x;
        for (p, q) in [(a.v, b.v), (a.d1, b.d1), (a.d2, b.d2), (a.d3, b.d3)] {
            assert!((p - q).abs() < 1e-13);
        }
    }
}
