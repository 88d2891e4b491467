use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the numerical core is written against.
///
/// Everything in the crate that touches matrices is generic over this trait;
/// `f64` is the production type and `f32` is supported for memory-bound work.
/// Tolerances that only make sense at a given precision are exposed as
/// associated constants so solver defaults adapt to the type.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Send + Sync + 'static
{
    /// Default coordinate-descent stopping tolerance on the largest coefficient change.
    const CD_TOL: f64;
    /// Default KKT residual target for a converged lasso fit.
    const KKT_TOL: f64;

    #[inline]
    fn of(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const CD_TOL: f64 = 1e-9;
    const KKT_TOL: f64 = 1e-7;
}

impl Scalar for f32 {
    const CD_TOL: f64 = 1e-5;
    const KKT_TOL: f64 = 1e-3;
}

/// Soft-thresholding operator `sign(z) * max(|z| - t, 0)`.
#[inline]
pub fn soft_threshold<T: Scalar>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}
