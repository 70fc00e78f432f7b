//! Scalar abstraction for the analytic code paths.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display {
    /// Lossless where possible; `f64` constants written in source land here.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Compensated (Kahan-Neumaier) accumulator.
///
/// The alternating-sign sums in the click-distribution formula cancel by
/// orders of magnitude; plain summation loses the 1e-10 accuracy the
/// callers rely on.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<R: Real> {
    sum: R,
    compensation: R,
}

impl<R: Real> CompensatedSum<R> {
    pub fn new() -> Self {
        Self {
            sum: R::zero(),
            compensation: R::zero(),
        }
    }

    pub fn add(&mut self, value: R) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation = self.compensation + ((self.sum - t) + value);
        } else {
            self.compensation = self.compensation + ((value - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> R {
        self.sum + self.compensation
    }
}

impl<R: Real> Default for CompensatedSum<R> {
    fn default() -> Self {
        Self::new()
    }
}
