//! Scalar abstraction used by every numeric routine in the crate.
//!
//! All geometry, simulation, solving and filtering code is generic over a
//! [`Real`] scalar so the same algorithms run in `f32` or `f64`. The trait is
//! a thin composition of [`nalgebra::RealField`] (linear algebra, elementary
//! functions) and [`num_traits`] conversion traits, plus one hook for drawing
//! standard-normal samples without dragging distribution bounds through every
//! generic signature.

use nalgebra::RealField;
use num_traits::{FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Speed of light in metres per nanosecond; converts time measurements to
/// range measurements.
pub const SPEED_OF_LIGHT_M_PER_NS: f64 = 0.299_792_458;

/// Scalar type the toolkit computes with (`f32` or `f64`).
pub trait Real:
    RealField
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Copy
    + Default
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into `Self`, rounding where `Self` is
    /// narrower. Intended for literals and configuration defaults, which are
    /// always finite.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    /// Speed of light in metres per nanosecond.
    fn speed_of_light_m_per_ns() -> Self {
        Self::lit(SPEED_OF_LIGHT_M_PER_NS)
    }

    /// Draws one standard-normal sample from `rng`.
    ///
    /// Implementations must consume the same number of RNG draws for every
    /// call so that seeded runs stay reproducible across scalar types.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}
