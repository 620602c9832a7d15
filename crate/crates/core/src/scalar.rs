//! Floating point abstraction for the estimators.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::Serialize;

/// Real scalar the estimators are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + FromStr
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from a count or index.
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable as a float")
    }

    /// Lossy conversion from `f64`, used for constants.
    fn of_f64(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable as a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `floor(k * tau)`, the number of order statistics above the threshold.
///
/// Every code path that maps a level `tau` to an integer rank goes through
/// this function so that pointwise and piecewise evaluations agree.
pub fn exceedance_rank<T: Scalar>(k: usize, tau: T) -> usize {
    let prod = (T::of_usize(k) * tau).floor();
    prod.to_usize().unwrap_or(usize::MAX)
}
