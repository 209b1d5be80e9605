//! Scalar abstraction for the numeric core.
//!
//! Amplitudes, probabilities and decay laws are written against [`Real`] so the
//! exact simulator can run in `f32` for quick sweeps or `f64` for reference
//! numbers. The Monte Carlo path is fixed to `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
