//! Scalar abstraction for the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Floating point: f32 or f64.
pub trait Real:
    Float + FromPrimitive + Debug + Display + FromStr + Default + Sum + Send + Sync + 'static
{
    /// Tolerance used where the f64 code path wants `tol`, widened to what
    /// this type can actually resolve.
    fn tolerance(tol: f64) -> Self {
        let floor = Self::epsilon() * Self::from_f64(64.0).unwrap();
        Self::from_f64(tol).unwrap().max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossless for f64, rounding for f32.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}
