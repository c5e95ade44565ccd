//! Scalar abstraction for the numeric kernels.
//!
//! Every statistical routine in this crate (logistic fits, agreement metrics,
//! human-sample estimators, boosted trees) is generic over [`Scalar`], which
//! any `num_traits::Float` with the usual conversions satisfies — in practice
//! `f32` and `f64`. The crate root pins `f64` aliases for pipeline use.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by all numeric kernels.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Standard normal survival function `P(Z > z)`.
///
/// Evaluated through `erfc` in double precision; exact for `f64` inputs and
/// more than accurate enough for `f32`.
pub fn normal_sf<S: Scalar>(z: S) -> S {
    let z = z.to_f64().expect("finite scalar");
    S::from_f64(0.5 * libm::erfc(z / std::f64::consts::SQRT_2)).expect("scalar from f64")
}

/// Two-sided normal p-value for a z statistic.
pub fn two_sided_p<S: Scalar>(z: S) -> S {
    let one = S::one();
    if !z.is_finite() {
        return if z.abs().is_infinite() { S::zero() } else { one };
    }
    let p = S::from_f64(2.0).unwrap() * normal_sf(z.abs());
    if p > one {
        one
    } else {
        p
    }
}

/// Logistic function `1 / (1 + exp(-eta))`.
pub fn expit<S: Scalar>(eta: S) -> S {
    let one = S::one();
    if eta >= S::zero() {
        one / (one + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (one + e)
    }
}

/// Log-odds `ln(p / (1 - p))`. Caller guarantees `0 < p < 1`.
pub fn logit<S: Scalar>(p: S) -> S {
    (p / (S::one() - p)).ln()
}

/// Quantile of the standard normal at 0.975, for nominal-95% intervals.
pub const Z_975: f64 = 1.959963984540054;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_sf_matches_reference_points() {
        // Reference values from the standard normal table.
        assert!((normal_sf(0.0f64) - 0.5).abs() < 1e-15);
        assert!((normal_sf(1.959963984540054f64) - 0.025).abs() < 1e-12);
        assert!((normal_sf(3.0f64) - 1.349898031630095e-3).abs() < 1e-12);
    }

    #[test]
    fn two_sided_p_is_symmetric_and_bounded() {
        let p1: f64 = two_sided_p(2.5);
        let p2: f64 = two_sided_p(-2.5);
        assert_eq!(p1, p2);
        assert!((two_sided_p(0.0f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expit_logit_round_trip_f32() {
        for &p in &[0.1f32, 0.5, 0.9] {
            let back = expit(logit(p));
            assert!((back - p).abs() < 1e-6);
        }
    }
}
