//! Real scalar abstraction for the numeric core.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

use crate::Cx;

/// Floating-point scalar the simulator is generic over.
///
/// `f32` and `f64` both satisfy the bounds; tolerances are always passed in as
/// values of the same type, so callers pick bounds appropriate to the width.
pub trait Scalar:
    Float + FloatConst + NumAssign + FromPrimitive + Sum + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` constant, panicking only on values no float can hold.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    /// Complex zero.
    fn czero() -> Cx<Self> {
        Cx::new(Self::zero(), Self::zero())
    }

    /// Complex one.
    fn cone() -> Cx<Self> {
        Cx::new(Self::one(), Self::zero())
    }

    /// Imaginary unit.
    fn ci() -> Cx<Self> {
        Cx::new(Self::zero(), Self::one())
    }

    /// Real value lifted to a complex amplitude.
    fn cre(x: Self) -> Cx<Self> {
        Cx::new(x, Self::zero())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
