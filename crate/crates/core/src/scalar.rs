//! Scalar abstraction for labels, times and probabilities.
//!
//! Everything geometric in this crate (labels, arrival times, sink heights,
//! gaps) is generic over [`Real`], which is implemented for `f32` and `f64`.
//! Exact enumeration routines that only ever add and multiply probabilities
//! are generic over the weaker [`Weight`] bound instead, so they can also run
//! on exact rationals.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::hash::{Hash, Hasher};

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable as a label, a time or a probability.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Draws a uniform value in `[0, 1)`.
    fn sample_unit<G: Rng + ?Sized>(rng: &mut G) -> Self;

    /// Lossless widening (f32 -> f64 is exact).
    fn as_f64(self) -> f64;

    /// Rounds an `f64` literal into this type.
    fn lit(x: f64) -> Self;

    /// Draws a uniform value in `(0, 1]`; safe to pass to `ln`.
    fn sample_open_unit<G: Rng + ?Sized>(rng: &mut G) -> Self {
        Self::one() - Self::sample_unit(rng)
    }
}

impl Real for f64 {
    fn sample_unit<G: Rng + ?Sized>(rng: &mut G) -> Self {
        rng.gen::<f64>()
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn lit(x: f64) -> Self {
        x
    }
}

impl Real for f32 {
    fn sample_unit<G: Rng + ?Sized>(rng: &mut G) -> Self {
        rng.gen::<f32>()
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }

    fn lit(x: f64) -> Self {
        x as f32
    }
}

/// Probability weight for exact enumeration: any commutative ring with an
/// order, e.g. `f64` or `num_rational::Ratio<i64>`.
pub trait Weight: Num + Clone + PartialOrd + Debug {}

impl<T: Num + Clone + PartialOrd + Debug> Weight for T {}

/// Totally ordered wrapper around a finite [`Real`].
///
/// Construction sites validate finiteness, so the `partial_cmp` unwrap in
/// `Ord` never sees a NaN.
#[derive(Clone, Copy, Debug)]
pub(crate) struct OrdKey<R>(pub R);

impl<R: Real> PartialEq for OrdKey<R> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl<R: Real> Eq for OrdKey<R> {}

impl<R: Real> PartialOrd for OrdKey<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<R: Real> Ord for OrdKey<R> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .partial_cmp(&other.0)
            .expect("OrdKey holds a NaN; inputs are validated to be finite")
    }
}

impl<R: Real> Hash for OrdKey<R> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        label_bits(self.0).hash(state);
    }
}

/// Bit pattern identifying a label; `-0.0` and `0.0` collapse.
pub(crate) fn label_bits<R: Real>(x: R) -> u64 {
    let v = x.as_f64();
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ord_key_orders_like_the_reals() {
        let mut v = vec![OrdKey(0.5_f64), OrdKey(-1.0), OrdKey(0.25)];
        v.sort();
        assert_eq!(v.iter().map(|k| k.0).collect::<Vec<_>>(), vec![-1.0, 0.25, 0.5]);
    }

    #[test]
    fn signed_zero_is_one_label() {
        assert_eq!(label_bits(0.0_f64), label_bits(-0.0_f64));
        assert_eq!(label_bits(0.5_f32), label_bits(0.5_f64));
    }
}
