//! Scalar abstraction shared by the real-valued parts of the workspace
//! (critic confidences, latency and cost aggregation).

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable for confidences and metric aggregation.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or measurement.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 is representable")
    }

    /// Lossy conversion from a count.
    fn of_count(value: u64) -> Self {
        Self::from_u64(value).expect("count is representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean<S: Real>(values: &[f64]) -> S {
        let sum = values.iter().fold(S::zero(), |acc, v| acc + S::of(*v));
        sum / S::of_count(values.len() as u64)
    }

    #[test]
    fn generic_mean_agrees_across_widths() {
        let values = [96.0, 17.0];
        assert_eq!(mean::<f64>(&values), 56.5);
        assert_eq!(mean::<f32>(&values), 56.5f32);
    }
}
