//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;

/// Floating point type the simulator is generic over.
///
/// Implemented for `f32` and `f64`. All constants are converted through
/// [`Scalar::lit`], so models can be written once for either width.
pub trait Scalar:
    'static
    + Send
    + Sync
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
{
    /// Euler–Mascheroni constant.
    const EULER_GAMMA: Self;

    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// A uniform draw strictly inside (0, 1).
    ///
    /// The raw 53-bit draw is clamped to `[eps, 1 - eps]` at this type's
    /// precision, so `ln(-ln(u))` is always finite.
    fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// A uniform draw on [0, 1), for Bernoulli trials.
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[inline]
    fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        u.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
    }

    #[inline]
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.gen()
    }
}

impl Scalar for f32 {
    const EULER_GAMMA: f32 = 0.577_215_7;

    #[inline]
    fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f32 {
        let u: f64 = rng.gen();
        (u as f32).clamp(f32::EPSILON, 1.0 - f32::EPSILON)
    }

    #[inline]
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> f32 {
        rng.gen()
    }
}
