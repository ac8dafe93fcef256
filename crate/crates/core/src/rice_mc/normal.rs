//! Standard normal tail helpers.

use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// `Φ̄(x) = P(Z > x)` for a standard normal `Z`.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`upper_tail`] on `(0, 1)`, refined by one Newton step.
pub fn upper_tail_inv(p: f64) -> f64 {
    let x = SQRT_2 * erfc_inv(2.0 * p);
    let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    if density > 0.0 && x.is_finite() {
        x + (upper_tail(x) - p) / density
    } else {
        x
    }
}
