//! Floating-point scalar abstraction shared by every numeric pipeline.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by tapes, point tensors, the dense linear algebra and
/// the integrator: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar of the symbolic-to-numeric pipelines in `mechanics` and `flow`.
pub type Scalar = f64;
/// Dense point tensor at working precision.
pub type Point = crate::exterior::PointTensor<Scalar>;
/// Dense point tensor in single precision.
pub type PointF32 = crate::exterior::PointTensor<f32>;
