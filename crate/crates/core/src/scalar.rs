use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the whole model is evaluated in.
///
/// Implemented for `f32` and `f64`. Scenario files deserialize straight into
/// any `Real`, so a run can be repeated at lower precision without touching
/// the scenario.
pub trait Real:
    'static
    + Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
{
    /// Converts an `f64` constant. Never fails for the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite or infinite float converts to f64")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Clamps into `[0, 1]`. NaN maps to 0.
    #[inline]
    fn unit_clamp(self) -> Self {
        if self.is_nan() {
            Self::zero()
        } else {
            self.max(Self::zero()).min(Self::one())
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn infinite<T: Real>() -> T {
    T::infinity()
}
