//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used for embeddings, projections and similarity scores.
///
/// Implemented for `f32` and `f64`. The bound on [`nalgebra::RealField`] is
/// only there so the whitening eigensolver can run on the same type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + ScalarOperand
    + nalgebra::RealField
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for constants and config values.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }

    /// Parse from decimal text (embedding and checkpoint files).
    fn parse_text(s: &str) -> Option<Self>;
}

impl Scalar for f32 {
    fn parse_text(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Scalar for f64 {
    fn parse_text(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}
