//! Number types the expression evaluator is generic over.
//!
//! Besides plain `f64`, the evaluator runs on forward-mode duals (up to three
//! partials), univariate second-order jets, and complex values (with and
//! without a first derivative) for holomorphic extension of curve data.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use super::ast::Func;

/// Why an elementary function refused its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    SqrtNegative,
    LogNonPositive,
    DivisionByZero,
    NotDifferentiable,
    /// Function has no single-valued holomorphic extension (log, sqrt, tan).
    NoComplexExtension,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainKind::SqrtNegative => "square root of a negative number",
            DomainKind::LogNonPositive => "logarithm of a non-positive number",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::NotDifferentiable => "function not differentiable at this point",
            DomainKind::NoComplexExtension => "function excluded from complex extension",
            DomainKind::NonFinite => "non-finite result",
        };
        f.write_str(s)
    }
}

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(x: f64) -> Self;
    fn apply(self, func: Func) -> Result<Self, DomainKind>;
    /// Exact zero test on the value part (division guard).
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;

    fn powi(self, n: i32) -> Result<Self, DomainKind> {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::constant(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            if acc.is_zero() {
                return Err(DomainKind::DivisionByZero);
            }
            Ok(Self::constant(1.0) / acc)
        } else {
            Ok(acc)
        }
    }
}

/// Value, first and second derivative of `func` at a real point.
fn real_derivs(func: Func, x: f64, need_derivs: bool) -> Result<(f64, f64, f64), DomainKind> {
    Ok(match func {
        Func::Sin => {
            let (s, c) = x.sin_cos();
            (s, c, -s)
        }
        Func::Cos => {
            let (s, c) = x.sin_cos();
            (c, -s, -c)
        }
        Func::Tan => {
            let t = x.tan();
            let d = 1.0 + t * t;
            (t, d, 2.0 * t * d)
        }
        Func::Sinh => (x.sinh(), x.cosh(), x.sinh()),
        Func::Cosh => (x.cosh(), x.sinh(), x.cosh()),
        Func::Exp => {
            let e = x.exp();
            (e, e, e)
        }
        Func::Log => {
            if x <= 0.0 {
                return Err(DomainKind::LogNonPositive);
            }
            (x.ln(), 1.0 / x, -1.0 / (x * x))
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(DomainKind::SqrtNegative);
            }
            if need_derivs && x == 0.0 {
                return Err(DomainKind::NotDifferentiable);
            }
            let r = x.sqrt();
            (r, 0.5 / r, -0.25 / (r * r * r))
        }
    })
}

fn complex_derivs(func: Func, z: Complex64) -> Result<(Complex64, Complex64), DomainKind> {
    Ok(match func {
        Func::Sin => (z.sin(), z.cos()),
        Func::Cos => (z.cos(), -z.sin()),
        Func::Sinh => (z.sinh(), z.cosh()),
        Func::Cosh => (z.cosh(), z.sinh()),
        Func::Exp => {
            let e = z.exp();
            (e, e)
        }
        Func::Tan | Func::Log | Func::Sqrt => return Err(DomainKind::NoComplexExtension),
    })
}

impl Scalar for f64 {
    fn constant(x: f64) -> Self {
        x
    }
    fn apply(self, func: Func) -> Result<Self, DomainKind> {
        real_derivs(func, self, false).map(|t| t.0)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Scalar for Complex64 {
    fn constant(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn apply(self, func: Func) -> Result<Self, DomainKind> {
        complex_derivs(func, self).map(|t| t.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Forward-mode dual number carrying partials with respect to at most three
/// variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub partials: [f64; 3],
}

impl Dual {
    pub fn constant(value: f64) -> Self {
        Dual { value, partials: [0.0; 3] }
    }

    /// Independent variable number `slot` (0..3) at `value`.
    pub fn variable(value: f64, slot: usize) -> Self {
        let mut partials = [0.0; 3];
        partials[slot] = 1.0;
        Dual { value, partials }
    }

    fn scale(self, k: f64) -> [f64; 3] {
        self.partials.map(|p| p * k)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            value: self.value + o.value,
            partials: std::array::from_fn(|i| self.partials[i] + o.partials[i]),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            value: self.value - o.value,
            partials: std::array::from_fn(|i| self.partials[i] - o.partials[i]),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            value: self.value * o.value,
            partials: std::array::from_fn(|i| self.partials[i] * o.value + self.value * o.partials[i]),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.value / o.value;
        Dual {
            value: q,
            partials: std::array::from_fn(|i| (self.partials[i] - q * o.partials[i]) / o.value),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { value: -self.value, partials: self.partials.map(|p| -p) }
    }
}

impl Scalar for Dual {
    fn constant(x: f64) -> Self {
        Dual::constant(x)
    }
    fn apply(self, func: Func) -> Result<Self, DomainKind> {
        let (g0, g1, _) = real_derivs(func, self.value, true)?;
        Ok(Dual { value: g0, partials: self.scale(g1) })
    }
    fn is_zero(&self) -> bool {
        self.value == 0.0
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.partials.iter().all(|p| p.is_finite())
    }
}

/// Truncated univariate Taylor jet: value, first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub fn variable(value: f64) -> Self {
        Jet2 { value, d1: 1.0, d2: 0.0 }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 { value: self.value + o.value, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 { value: self.value - o.value, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value * o.value,
            d1: self.d1 * o.value + self.value * o.d1,
            d2: self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        let q = self.value / o.value;
        let q1 = (self.d1 - q * o.d1) / o.value;
        let q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.value;
        Jet2 { value: q, d1: q1, d2: q2 }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 { value: -self.value, d1: -self.d1, d2: -self.d2 }
    }
}

impl Scalar for Jet2 {
    fn constant(x: f64) -> Self {
        Jet2 { value: x, d1: 0.0, d2: 0.0 }
    }
    fn apply(self, func: Func) -> Result<Self, DomainKind> {
        let (g0, g1, g2) = real_derivs(func, self.value, true)?;
        Ok(Jet2 { value: g0, d1: g1 * self.d1, d2: g2 * self.d1 * self.d1 + g1 * self.d2 })
    }
    fn is_zero(&self) -> bool {
        self.value == 0.0
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

/// Complex value with its complex derivative along one holomorphic variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDual {
    pub value: Complex64,
    pub deriv: Complex64,
}

impl ComplexDual {
    pub fn variable(z: Complex64) -> Self {
        ComplexDual { value: z, deriv: Complex64::new(1.0, 0.0) }
    }
}

impl Add for ComplexDual {
    type Output = ComplexDual;
    fn add(self, o: Self) -> Self {
        ComplexDual { value: self.value + o.value, deriv: self.deriv + o.deriv }
    }
}

impl Sub for ComplexDual {
    type Output = ComplexDual;
    fn sub(self, o: Self) -> Self {
        ComplexDual { value: self.value - o.value, deriv: self.deriv - o.deriv }
    }
}

impl Mul for ComplexDual {
    type Output = ComplexDual;
    fn mul(self, o: Self) -> Self {
        ComplexDual {
            value: self.value * o.value,
            deriv: self.deriv * o.value + self.value * o.deriv,
        }
    }
}

impl Div for ComplexDual {
    type Output = ComplexDual;
    fn div(self, o: Self) -> Self {
        let q = self.value / o.value;
        ComplexDual { value: q, deriv: (self.deriv - q * o.deriv) / o.value }
    }
}

impl Neg for ComplexDual {
    type Output = ComplexDual;
    fn neg(self) -> Self {
        ComplexDual { value: -self.value, deriv: -self.deriv }
    }
}

impl Scalar for ComplexDual {
    fn constant(x: f64) -> Self {
        ComplexDual { value: Complex64::new(x, 0.0), deriv: Complex64::new(0.0, 0.0) }
    }
    fn apply(self, func: Func) -> Result<Self, DomainKind> {
        let (g0, g1) = complex_derivs(func, self.value)?;
        Ok(ComplexDual { value: g0, deriv: g1 * self.deriv })
    }
    fn is_zero(&self) -> bool {
        self.value.re == 0.0 && self.value.im == 0.0
    }
    fn is_finite(&self) -> bool {
        Scalar::is_finite(&self.value) && Scalar::is_finite(&self.deriv)
    }
}
