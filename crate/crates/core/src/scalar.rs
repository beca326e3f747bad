//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! The kernels are written once against [`Real`] and instantiated for `f64`
//! (the working precision of all published tolerances) and `f32`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the solvers.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Lossless for `f64`, rounding for `f32`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// `n` points spaced evenly in log between `lo` and `hi` (inclusive).
pub fn log_space<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(lo > T::zero() && hi >= lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::count(n - 1);
    (0..n).map(|i| if i == n - 1 { hi } else { (a + step * T::count(i)).exp() }).collect()
}

/// Surface area of the unit sphere `S^{k}` in `R^{k+1}`.
pub fn sphere_area<T: Real>(k: usize) -> T {
    // |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2)
    let half = (k + 1) as f64 / 2.0;
    let val = 2.0 * std::f64::consts::PI.powf(half) / gamma_half_integer(half);
    lit(val)
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume<T: Real>(n: usize) -> T {
    let area: T = sphere_area(n - 1);
    area / T::count(n)
}

/// Gamma at positive integers and half-integers.
fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    debug_assert!((2.0 * x - twice as f64).abs() < 1e-12 && twice > 0);
    let (mut acc, mut y) = if twice % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while y < x - 0.25 {
        acc *= y;
        y += 1.0;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        let v3: f64 = unit_ball_volume(3);
        assert!((v3 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        let v5: f64 = unit_ball_volume(5);
        assert!((v5 - 8.0 * std::f64::consts::PI.powi(2) / 15.0).abs() < 1e-13);
        let a1: f64 = sphere_area(1);
        assert!((a1 - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        let a0: f64 = sphere_area(0);
        assert!((a0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1e-3_f64, 1e3, 7);
        assert_eq!(v.len(), 7);
        assert!((v[0] - 1e-3).abs() < 1e-18);
        assert_eq!(v[6], 1e3);
        assert!((v[3] - 1.0).abs() < 1e-14);
    }
}
