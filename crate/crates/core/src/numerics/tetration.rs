//! Tetra-iterations of `e` and the iterated logarithm `ln*`.

use core::f64::consts::E;

use crate::error::{bail, Result};

/// Stand-in for tetrations too large for `f64`.
///
/// Compares greater than every finite value and stays put under `sqrt` and
/// multiplication by a positive constant, which is all the range ladders
/// ever do with these numbers.
pub const SATURATED: f64 = f64::INFINITY;

/// `e^{*i}`: `e^{*1} = e` and `e^{*i} = exp(e^{*(i-1)})`.
///
/// Heights whose value exceeds `f64::MAX` (i >= 4) return [`SATURATED`].
pub fn tetration(height: u32) -> Result<f64> {
    if height == 0 {
        bail!(Domain, "tetration height must be at least 1");
    }
    let mut value = E;
    for _ in 1..height {
        if value == SATURATED {
            break;
        }
        value = libm::exp(value);
    }
    Ok(value)
}

/// `ln* b`: the smallest `i >= 1` with `e^{*i} >= b`.
///
/// Computed by walking up the tower rather than by taking logarithms, so
/// `ln_star(tetration(i)) == i` holds exactly. Anything at or below `e`
/// (including NaN) maps to 1.
pub fn ln_star(b: f64) -> u32 {
    let mut height = 1;
    let mut value = E;
    while value < b {
        value = libm::exp(value);
        height += 1;
    }
    height
}
