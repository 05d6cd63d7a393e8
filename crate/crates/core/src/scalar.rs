//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the whole crate is generic over.
///
/// Implemented for `f32` and `f64` through the blanket impl; the crate-root
/// aliases pin `f64`. The solver and the closed-form sums hit their documented
/// tolerances only in `f64`, `f32` remains useful for bulk simulation.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, the type literals are written in.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert to scalar")
    }

    /// Conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count must convert to scalar")
    }

    /// Round-trip into `f64` for I/O and formatting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
