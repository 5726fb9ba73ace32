//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar: `f32` or `f64`.
///
/// Everything transcendental (exp, log, tanh) goes through [`Float`], so
/// exact rational types are not admissible here.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }

    /// Convergence tolerance used when callers do not supply one:
    /// `1e-12` for `f64`, a few thousand ulps for narrower types.
    fn default_tolerance() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(1e3))
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn max_abs<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

pub(crate) fn sum<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().sum()
}

/// `log Σ exp(x_i)` without overflow. Returns `-inf` for an empty slice.
pub(crate) fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let top = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if top == T::neg_infinity() {
        return top;
    }
    top + xs.iter().map(|&x| (x - top).exp()).sum::<T>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_per_width() {
        assert_eq!(f64::default_tolerance(), 1e-12);
        assert!(f32::default_tolerance() > 1e-5);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = [1000.0_f64, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
    }
}
