//! Two-state unitary operators on first-order Hermite-Gaussian electron beams,
//! realized with pairs of quadrupole lenses and ideal frame rotators.
//!
//! The crate is split along the processing chain:
//!
//! - [`beam`]: complex beam parameter algebra, electron constants, optical
//!   elements and analytic propagation of astigmatic first-order modes.
//! - [`shifter`]: the two-quadrupole relative phase shifter designer.
//! - [`gates`]: Bloch states, 2×2 unitaries, x–z–x Euler decomposition and
//!   compilation into rotator/shifter schedules.
//! - [`wave`]: an independent FFT wave-propagation oracle used to check the
//!   analytic designs on sampled fields.

pub mod beam;
pub mod error;
pub mod gates;
pub mod shifter;
pub mod wave;

pub use error::{Error, Result};

/// Complex number type used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_positive(angle: f64) -> f64 {
    use std::f64::consts::PI;
    let a = angle.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if a >= 2.0 * PI {
        0.0
    } else {
        a
    }
}
