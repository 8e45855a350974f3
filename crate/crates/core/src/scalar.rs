use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst};

/// Floating-point scalar the information-theoretic layers are generic over.
///
/// Blanket-implemented for `f32` and `f64`.
pub trait Real: Float + FloatConst + Debug + Display + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Float + FloatConst + Debug + Display + Send + Sync + 'static {}
