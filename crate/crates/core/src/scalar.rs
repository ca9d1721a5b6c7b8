//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Serialize, Serializer};

/// Real floating-point scalar (`f32` or `f64`).
///
/// Tolerances throughout the crate are calibrated for `f64`; `f32` is
/// supported for the algebra but several certificates will come back
/// `undecided` at single precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// A value of the extended real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtValue<S> {
    Finite(S),
    PlusInfinity,
    MinusInfinity,
}

impl<S: Scalar> ExtValue<S> {
    pub fn from_scalar(x: S) -> Self {
        if x.is_nan() {
            panic!("NaN is not an extended real");
        } else if x == S::infinity() {
            ExtValue::PlusInfinity
        } else if x == S::neg_infinity() {
            ExtValue::MinusInfinity
        } else {
            ExtValue::Finite(x)
        }
    }

    pub fn as_scalar(self) -> S {
        match self {
            ExtValue::Finite(x) => x,
            ExtValue::PlusInfinity => S::infinity(),
            ExtValue::MinusInfinity => S::neg_infinity(),
        }
    }

    pub fn finite(self) -> Option<S> {
        match self {
            ExtValue::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtValue::Finite(_))
    }
}

impl<S: Scalar> Display for ExtValue<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtValue::Finite(x) => write!(f, "{x}"),
            ExtValue::PlusInfinity => write!(f, "+inf"),
            ExtValue::MinusInfinity => write!(f, "-inf"),
        }
    }
}

impl<S: Serialize> Serialize for ExtValue<S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> Result<Z::Ok, Z::Error> {
        match self {
            ExtValue::Finite(x) => x.serialize(serializer),
            ExtValue::PlusInfinity => serializer.serialize_str("+inf"),
            ExtValue::MinusInfinity => serializer.serialize_str("-inf"),
        }
    }
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

pub(crate) fn max_abs<S: Scalar>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_value_round_trips_infinities() {
        assert_eq!(ExtValue::from_scalar(f64::NEG_INFINITY), ExtValue::MinusInfinity);
        assert_eq!(ExtValue::<f64>::PlusInfinity.as_scalar(), f64::INFINITY);
        assert_eq!(ExtValue::from_scalar(2.5f32).finite(), Some(2.5));
    }

    #[test]
    fn ext_value_serializes_infinities_as_strings() {
        let s = serde_json::to_string(&ExtValue::<f64>::MinusInfinity).unwrap();
        assert_eq!(s, "\"-inf\"");
        let s = serde_json::to_string(&ExtValue::Finite(-1.0f64)).unwrap();
        assert_eq!(s, "-1.0");
    }
}
