//! Forward-mode dual numbers `a + b·ε` with `ε² = 0`.
//!
//! Only the operations the expression evaluator needs are provided. Domain
//! checks (log of a non-positive value, a kink of `abs`, ...) live in the
//! evaluator, which knows whether a derivative is actually being tracked.

use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::math;

/// A value paired with its first derivative along one direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub const fn new(value: f64, deriv: f64) -> Self {
        Self { value, deriv }
    }

    pub const fn constant(value: f64) -> Self {
        Self { value, deriv: 0.0 }
    }

    /// The independent variable: derivative one.
    pub const fn variable(value: f64) -> Self {
        Self { value, deriv: 1.0 }
    }

    pub fn sqrt(self) -> Self {
        let s = math::sqrt(self.value);
        Self::new(s, self.deriv / (2.0 * s))
    }

    pub fn exp(self) -> Self {
        let e = math::exp(self.value);
        Self::new(e, e * self.deriv)
    }

    pub fn ln(self) -> Self {
        Self::new(math::ln(self.value), self.deriv / self.value)
    }

    pub fn sin(self) -> Self {
        Self::new(math::sin(self.value), math::cos(self.value) * self.deriv)
    }

    pub fn cos(self) -> Self {
        Self::new(math::cos(self.value), -math::sin(self.value) * self.deriv)
    }

    pub fn abs(self) -> Self {
        if self.value < 0.0 {
            -self
        } else {
            self
        }
    }

    /// `self^n` for a constant exponent.
    pub fn powf(self, n: f64) -> Self {
        if n == 0.0 {
            return Self::constant(1.0);
        }
        let v = math::powf(self.value, n);
        // Skip the derivative product when it is structurally zero, which
        // keeps 0^n finite for n < 1 on constant inputs.
        let d = if self.deriv == 0.0 {
            0.0
        } else {
            n * math::powf(self.value, n - 1.0) * self.deriv
        };
        Self::new(v, d)
    }

    /// `self^other` with both sides varying; requires `self.value > 0`.
    pub fn pow(self, other: Self) -> Self {
        if other.deriv == 0.0 {
            return self.powf(other.value);
        }
        let v = math::powf(self.value, other.value);
        let d = v * (other.deriv * math::ln(self.value) + other.value * self.deriv / self.value);
        Self::new(v, d)
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.value * rhs.value, self.value * rhs.deriv + self.deriv * rhs.value)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let v = self.value / rhs.value;
        Self::new(v, (self.deriv - v * rhs.deriv) / rhs.value)
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::variable(3.0);
        let y = Dual::new(2.0, 0.5);
        let p = x * y;
        assert_eq!(p, Dual::new(6.0, 3.0 * 0.5 + 2.0));
        let q = x / y;
        assert!((q.deriv - (2.0 - 3.0 * 0.5) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn elementary_functions() {
        let x = Dual::variable(4.0);
        assert_eq!(x.sqrt(), Dual::new(2.0, 0.25));
        assert_eq!(x.powf(2.0), Dual::new(16.0, 8.0));
        let e = Dual::variable(0.0).exp();
        assert_eq!(e, Dual::new(1.0, 1.0));
        let l = Dual::variable(1.0).ln();
        assert_eq!(l, Dual::new(0.0, 1.0));
        let s = Dual::variable(0.0).sin();
        assert_eq!(s, Dual::new(0.0, 1.0));
    }

    #[test]
    fn general_power_matches_constant_exponent_rule() {
        let base = Dual::variable(1.7);
        let a = base.pow(Dual::constant(2.5));
        let b = base.powf(2.5);
        assert_eq!(a, b);
        // d/dx x^x = x^x (ln x + 1)
        let x = Dual::variable(1.3);
        let xx = x.pow(x);
        let expected = xx.value * (math::ln(1.3) + 1.0);
        assert!((xx.deriv - expected).abs() < 1e-14);
    }
}
