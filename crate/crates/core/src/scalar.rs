use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real number type the interest computations run on.
///
/// Implemented for `f32` and `f64`. Graph data (amounts, timestamps) is stored
/// as `f64`/`u64` and converted into the scalar type on evaluation.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; only fails for types that cannot hold the value at all.
    fn of(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("scalar conversion from f64")
    }

    fn of_usize(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).expect("scalar conversion from usize")
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `0 <= self <= 1`, false for NaN.
    fn is_unit(self) -> bool {
        self >= Self::zero() && self <= Self::one()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_range() {
        assert!(0.0f64.is_unit());
        assert!(1.0f32.is_unit());
        assert!(!f64::NAN.is_unit());
        assert!(!(-1e-9f64).is_unit());
    }
}
