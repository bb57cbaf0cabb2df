use std::fmt::{Debug, Display};
use std::iter::Sum;

use crate::jet::{Jet, JetError};

/// Floating point scalar the engine is generic over: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::FloatConst
    + Debug
    + Display
    + Sum
    + serde::Serialize
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in target float type")
}

/// Converts `T` back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Values a metric can be evaluated on: plain reals or jets over them.
///
/// Fallible operations report the same errors as the jet kernel so that the
/// scalar and jet evaluation paths fail at the same inputs.
pub trait Scalar<T: Real>: Clone + Debug + Send + Sync {
    fn constant_like(&self, c: T) -> Self;
    fn value(&self) -> T;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, c: T) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self, JetError>;
    fn sqrt(&self) -> Result<Self, JetError>;
    fn exp(&self) -> Self;
    fn ln(&self) -> Result<Self, JetError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powf(&self, p: T) -> Result<Self, JetError>;
}

fn domain<T: Real>(func: &'static str, v: T) -> JetError {
    JetError::Domain {
        func,
        value: to_f64(v),
    }
}

impl<T: Real> Scalar<T> for T {
    fn constant_like(&self, c: T) -> Self {
        c
    }
    fn value(&self) -> T {
        *self
    }
    fn add(&self, rhs: &Self) -> Self {
        *self + *rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        *self - *rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        *self * *rhs
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn scale(&self, c: T) -> Self {
        *self * c
    }
    fn div(&self, rhs: &Self) -> Result<Self, JetError> {
        if *rhs == T::zero() {
            return Err(JetError::DivisionByZero);
        }
        Ok(*self / *rhs)
    }
    fn sqrt(&self) -> Result<Self, JetError> {
        if *self <= T::zero() {
            return Err(domain("sqrt", *self));
        }
        Ok(num_traits::Float::sqrt(*self))
    }
    fn exp(&self) -> Self {
        num_traits::Float::exp(*self)
    }
    fn ln(&self) -> Result<Self, JetError> {
        if *self <= T::zero() {
            return Err(domain("log", *self));
        }
        Ok(num_traits::Float::ln(*self))
    }
    fn sin(&self) -> Self {
        num_traits::Float::sin(*self)
    }
    fn cos(&self) -> Self {
        num_traits::Float::cos(*self)
    }
    fn powf(&self, p: T) -> Result<Self, JetError> {
        let integral = p.fract() == T::zero();
        if integral && p >= T::zero() {
            return Ok(num_traits::Float::powf(*self, p));
        }
        if *self == T::zero() || (!integral && *self < T::zero()) {
            return Err(domain("pow", *self));
        }
        Ok(num_traits::Float::powf(*self, p))
    }
}

impl<T: Real> Scalar<T> for Jet<T> {
    fn constant_like(&self, c: T) -> Self {
        Jet::constant_like(self, c)
    }
    fn value(&self) -> T {
        Jet::value(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: T) -> Self {
        Jet::scale(self, c)
    }
    fn div(&self, rhs: &Self) -> Result<Self, JetError> {
        Jet::div(self, rhs)
    }
    fn sqrt(&self) -> Result<Self, JetError> {
        Jet::sqrt(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Result<Self, JetError> {
        Jet::ln(self)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn powf(&self, p: T) -> Result<Self, JetError> {
        Jet::powf(self, p)
    }
}
