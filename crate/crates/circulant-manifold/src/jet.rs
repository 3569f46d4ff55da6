//! Forward-mode dual numbers over the four fixed coordinates x1..x4.
//!
//! A [`Jet`] carries a value together with all four first partial
//! derivatives, so one evaluation pass yields a function value and its
//! exact gradient. Only first derivatives are propagated; that is all the
//! downstream tensor formulas consume.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of ℝ⁴. Coordinates are addressed 1-based, matching the tensor
/// index convention used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point4 {
    x: [f64; 4],
}

impl Point4 {
    pub fn new(x: [f64; 4]) -> Result<Self> {
        if x.iter().all(|v| v.is_finite()) {
            Ok(Self { x })
        } else {
            Err(Error::NonFinitePoint)
        }
    }

    /// Coordinate x^i for i in 1..=4.
    pub fn coord(&self, i: usize) -> f64 {
        self.x[i - 1]
    }

    pub fn coords(&self) -> [f64; 4] {
        self.x
    }

    /// Returns a copy with coordinate i shifted by `h` (used by the
    /// finite-difference test oracles).
    pub fn shifted(&self, i: usize, h: f64) -> Self {
        let mut x = self.x;
        x[i - 1] += h;
        Self { x }
    }
}

impl fmt::Display for Point4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x[0], self.x[1], self.x[2], self.x[3])
    }
}

impl FromStr for Point4 {
    type Err = Error;

    /// Parses `"x1,x2,x3,x4"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Io(format!(
                "expected 4 comma-separated coordinates, got {}",
                parts.len()
            )));
        }
        let mut x = [0.0; 4];
        for (i, p) in parts.iter().enumerate() {
            x[i] = p
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Io(format!("bad coordinate `{}`", p.trim())))?;
        }
        Point4::new(x)
    }
}

/// A first-order jet: function value plus the four partials ∂/∂x1..∂/∂x4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub partials: [f64; 4],
}

impl Jet {
    pub const fn constant(value: f64) -> Self {
        Jet { value, partials: [0.0; 4] }
    }

    /// The coordinate function x^i: value plus a unit derivative in slot i.
    pub fn variable(i: usize, value: f64) -> Self {
        let mut partials = [0.0; 4];
        partials[i - 1] = 1.0;
        Jet { value, partials }
    }

    /// Partial derivative ∂/∂x^i for i in 1..=4.
    pub fn partial(&self, i: usize) -> f64 {
        self.partials[i - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.partials.iter().all(|p| p.is_finite())
    }

    /// Chain rule for a unary function: new value `v`, partials scaled by `d`.
    fn lift(&self, v: f64, d: f64) -> Jet {
        Jet {
            value: v,
            partials: [
                d * self.partials[0],
                d * self.partials[1],
                d * self.partials[2],
                d * self.partials[3],
            ],
        }
    }

    pub fn exp(&self) -> Jet {
        let v = self.value.exp();
        self.lift(v, v)
    }

    /// Natural logarithm. Caller must ensure `value > 0`.
    pub fn ln(&self) -> Jet {
        self.lift(self.value.ln(), 1.0 / self.value)
    }

    pub fn sinh(&self) -> Jet {
        self.lift(self.value.sinh(), self.value.cosh())
    }

    pub fn cosh(&self) -> Jet {
        self.lift(self.value.cosh(), self.value.sinh())
    }

    /// Square root. Caller must ensure `value > 0` (the derivative is
    /// singular at zero).
    pub fn sqrt(&self) -> Jet {
        let v = self.value.sqrt();
        self.lift(v, 0.5 / v)
    }

    /// Integer power by repeated multiplication (exponentiation by squaring),
    /// keeping both value and derivative exact dual arithmetic. `n = 0` gives
    /// the constant 1; negative `n` takes the reciprocal at the end, so the
    /// base must be nonzero for `n < 0`.
    pub fn powi(&self, n: i32) -> Jet {
        if n == 0 {
            return Jet::constant(1.0);
        }
        let mut base = *self;
        let mut exp = n.unsigned_abs();
        let mut acc = Jet::constant(1.0);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        if n < 0 {
            Jet::constant(1.0) / acc
        } else {
            acc
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet {
            value: self.value + rhs.value,
            partials: [
                self.partials[0] + rhs.partials[0],
                self.partials[1] + rhs.partials[1],
                self.partials[2] + rhs.partials[2],
                self.partials[3] + rhs.partials[3],
            ],
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        Jet {
            value: self.value - rhs.value,
            partials: [
                self.partials[0] - rhs.partials[0],
                self.partials[1] - rhs.partials[1],
                self.partials[2] - rhs.partials[2],
                self.partials[3] - rhs.partials[3],
            ],
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        Jet {
            value: self.value * rhs.value,
            partials: [
                self.partials[0] * rhs.value + self.value * rhs.partials[0],
                self.partials[1] * rhs.value + self.value * rhs.partials[1],
                self.partials[2] * rhs.value + self.value * rhs.partials[2],
                self.partials[3] * rhs.value + self.value * rhs.partials[3],
            ],
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let inv = 1.0 / rhs.value;
        let inv2 = inv * inv;
        Jet {
            value: self.value * inv,
            partials: [
                (self.partials[0] * rhs.value - self.value * rhs.partials[0]) * inv2,
                (self.partials[1] * rhs.value - self.value * rhs.partials[1]) * inv2,
                (self.partials[2] * rhs.value - self.value * rhs.partials[2]) * inv2,
                (self.partials[3] * rhs.value - self.value * rhs.partials[3]) * inv2,
            ],
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            value: -self.value,
            partials: [
                -self.partials[0],
                -self.partials[1],
                -self.partials[2],
                -self.partials[3],
            ],
        }
    }
}
