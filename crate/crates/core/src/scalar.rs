//! Floating-point scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], which is implemented for `f32`
//! and `f64`. The experiment protocol and the acceptance gates run in `f64`;
//! `f32` is supported for throughput experiments.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// A real floating-point scalar.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Shared cell with atomic single-coordinate loads and stores.
    type Atomic: AtomicReal<Self>;

    /// Converts an `f64` literal. Panics only if the value is unrepresentable,
    /// which never happens for finite inputs.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in a float")
    }

    /// Key whose unsigned integer order matches the order of `|self|` for
    /// finite values.
    fn magnitude_key(self) -> u64;

    /// Raw bit pattern, widened to 64 bits. Used for bitwise comparisons.
    fn bits(self) -> u64;
}

/// Atomic storage for one scalar. Loads and stores never tear.
pub trait AtomicReal<S>: Send + Sync {
    fn new(value: S) -> Self;
    fn load(&self) -> S;
    fn store(&self, value: S);
}

impl Real for f64 {
    type Atomic = AtomicF64;

    #[inline]
    fn magnitude_key(self) -> u64 {
        self.abs().to_bits()
    }

    #[inline]
    fn bits(self) -> u64 {
        self.to_bits()
    }
}

impl Real for f32 {
    type Atomic = AtomicF32;

    #[inline]
    fn magnitude_key(self) -> u64 {
        u64::from(self.abs().to_bits())
    }

    #[inline]
    fn bits(self) -> u64 {
        u64::from(self.to_bits())
    }
}

#[derive(Debug, Default)]
pub struct AtomicF64(AtomicU64);

impl AtomicReal<f64> for AtomicF64 {
    fn new(value: f64) -> Self {
        Self(AtomicU64::new(value.to_bits()))
    }

    #[inline]
    fn load(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    #[inline]
    fn store(&self, value: f64) {
        self.0.store(value.to_bits(), Ordering::Relaxed)
    }
}

#[derive(Debug, Default)]
pub struct AtomicF32(AtomicU32);

impl AtomicReal<f32> for AtomicF32 {
    fn new(value: f32) -> Self {
        Self(AtomicU32::new(value.to_bits()))
    }

    #[inline]
    fn load(&self) -> f32 {
        f32::from_bits(self.0.load(Ordering::Relaxed))
    }

    #[inline]
    fn store(&self, value: f32) {
        self.0.store(value.to_bits(), Ordering::Relaxed)
    }
}
