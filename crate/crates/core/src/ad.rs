//! Small forward-mode differentiation kit.
//!
//! [`Dual`] carries one directional derivative through the closed forms (used
//! for parameter derivatives). [`Jet`] carries a truncated Taylor series in x
//! (used for exact high-order space derivatives, where spectral
//! differentiation of a k⁵ symbol loses too many digits).

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn re(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan(self) -> Self;

    fn scale(self, s: f64) -> Self {
        self * Self::cst(s)
    }

    fn sq(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
}

/// Value and one directional derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Dual {
        Dual { v, d }
    }

    pub fn var(v: f64) -> Dual {
        Dual { v, d: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Scalar for Dual {
    fn cst(v: f64) -> Self {
        Dual::new(v, 0.0)
    }
    fn re(self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        Dual::new(self.v.sin(), self.d * self.v.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.v.cos(), -self.d * self.v.sin())
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, self.d * e)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        Dual::new(r, 0.5 * self.d / r)
    }
    fn atan(self) -> Self {
        Dual::new(self.v.atan(), self.d / (1.0 + self.v * self.v))
    }
}

/// Number of Taylor coefficients carried by a [`Jet`].
pub const JET_LEN: usize = 8;

/// Truncated Taylor series Σ c_k h^k, k < JET_LEN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet(pub [f64; JET_LEN]);

impl Jet {
    pub fn constant(v: f64) -> Jet {
        let mut c = [0.0; JET_LEN];
        c[0] = v;
        Jet(c)
    }

    /// Series of a function whose k-th derivative at the point is `derivs(k)`.
    pub fn from_derivatives(derivs: impl Fn(usize) -> f64) -> Jet {
        let mut c = [0.0; JET_LEN];
        let mut fact = 1.0;
        for (k, ck) in c.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *ck = derivs(k) / fact;
        }
        Jet(c)
    }

    /// The m-th derivative at the expansion point.
    pub fn deriv(&self, m: usize) -> f64 {
        let fact: f64 = (1..=m).map(|k| k as f64).product();
        self.0[m] * fact
    }

    /// d/dh of the series; the top coefficient becomes unknown (set to 0), so
    /// each differentiation costs one order of validity.
    pub fn d(&self) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN - 1 {
            c[k] = (k + 1) as f64 * self.0[k + 1];
        }
        Jet(c)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet(self.0.map(|v| v * s))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.0;
        c.iter_mut().zip(o.0).for_each(|(a, b)| *a += b);
        Jet(c)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut c = self.0;
        c.iter_mut().zip(o.0).for_each(|(a, b)| *a -= b);
        Jet(c)
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
        let mut c = [0.0; JET_LEN];
        for i in 0..JET_LEN {
            for j in 0..JET_LEN - i {
                c[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(c)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut q = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            let mut s = self.0[k];
            for j in 1..=k {
                s -= o.0[j] * q[k - j];
            }
            q[k] = s / o.0[0];
        }
        Jet(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_matches_calculus() {
        let x = Dual::var(0.7);
        let y = (x.sin() * x.exp()) / (x.sq() + Dual::cst(1.0)).sqrt();
        let f = |x: f64| x.sin() * x.exp() / (x * x + 1.0).sqrt();
        let h = 1e-5;
        let fd = (f(0.7 + h) - f(0.7 - h)) / (2.0 * h);
        assert!((y.v - f(0.7)).abs() < 1e-15);
        assert!((y.d - fd).abs() < 1e-9);
        let a = Dual::var(0.3).atan();
        assert!((a.d - 1.0 / 1.09).abs() < 1e-15);
    }

    #[test]
    fn jet_quotient_of_exponentials() {
        // e^{2h} / e^{h} = e^{h}
        let a = Jet::from_derivatives(|k| 2f64.powi(k as i32));
        let b = Jet::from_derivatives(|_| 1.0);
        let q = a / b;
        for k in 0..JET_LEN {
            assert!((q.deriv(k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_product_and_derivative() {
        // sin h · cos h = sin(2h)/2; its 5th derivative at 0 is 16
        let s = Jet::from_derivatives(|k| [0.0, 1.0, 0.0, -1.0][k % 4]);
        let c = Jet::from_derivatives(|k| [1.0, 0.0, -1.0, 0.0][k % 4]);
        let p = s * c;
        assert!((p.deriv(5) - 16.0).abs() < 1e-12);
        assert!((p.d().deriv(4) - 16.0).abs() < 1e-12);
    }
}
