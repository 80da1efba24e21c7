//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the geometry is written against (`f32` or `f64`).
///
/// Tolerances are stated in `f64` and converted with [`Scalar::lit`]; the
/// tolerances used throughout the crate assume `f64` precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Neumaier compensated summation in index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<S> {
    sum: S,
    comp: S,
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn new() -> Self {
        Self {
            sum: S::zero(),
            comp: S::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: S) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> S {
        self.sum + self.comp
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn compensated_sum<S: Scalar, I: IntoIterator<Item = S>>(items: I) -> S {
    let mut acc = CompensatedSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// Volume of the unit sphere `S^m` (`2π` for m=1, `4π` for m=2).
pub fn sphere_volume<S: Scalar>(m: usize) -> S {
    // |S^m| = 2 π^{(m+1)/2} / Γ((m+1)/2); closed forms for the small cases.
    match m {
        0 => S::two(),
        1 => S::two() * S::PI(),
        2 => S::lit(4.0) * S::PI(),
        3 => S::two() * S::PI() * S::PI(),
        _ => {
            let mut vol = [2.0f64, 2.0 * std::f64::consts::PI];
            for k in 2..=m {
                let next = 2.0 * std::f64::consts::PI / (k as f64 - 1.0) * vol[0];
                vol = [vol[1], next];
            }
            S::lit(vol[1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1.0e16f64];
        xs.extend(std::iter::repeat(1.0).take(1000));
        xs.push(-1.0e16);
        assert_eq!(compensated_sum(xs), 1000.0);
    }

    #[test]
    fn sphere_volumes() {
        assert!((sphere_volume::<f64>(1) - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!((sphere_volume::<f64>(2) - 4.0 * std::f64::consts::PI).abs() < 1e-15);
        // |S^3| = 2π², |S^4| = 8π²/3
        assert!((sphere_volume::<f64>(4) - 8.0 * std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-12);
    }
}
