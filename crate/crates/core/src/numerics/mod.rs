//! Shared numeric building blocks: tetration and `ln*`, the fast
//! Walsh–Hadamard transform with the randomized rotation built from it, and
//! the seeded random streams every stochastic component draws from.

pub mod hadamard;
pub mod stream;
pub mod tetration;

pub use hadamard::{fwht, fwht_in_place, Direction, RotationOperator};
pub use stream::{derive_seed, standard_normal, SeedBundle, StreamLabel, StreamRng};
pub use tetration::{ln_star, tetration, SATURATED};

/// Smallest `b` with `2^b >= n`, i.e. `⌈log₂ n⌉`; zero for `n <= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// `⌈log₂ x⌉` for a real `x >= 1`.
pub(crate) fn ceil_log2_real(x: f64) -> u32 {
    debug_assert!(x >= 1.0);
    let c = libm::ceil(libm::log2(x));
    // log2 of an exact power of two is exact, but guard against x = 2^j (1 + ulp).
    let mut bits = c as u32;
    while bits > 0 && libm::exp2(f64::from(bits - 1)) >= x {
        bits -= 1;
    }
    while libm::exp2(f64::from(bits)) < x {
        bits += 1;
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_small_values() {
        assert_eq!(ceil_log2(0), 0);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(1025), 11);
    }

    #[test]
    fn ceil_log2_real_matches_integer_version() {
        for n in 1..300u64 {
            assert_eq!(ceil_log2_real(n as f64), ceil_log2(n), "n = {n}");
        }
        assert_eq!(ceil_log2_real(5.328), 3);
        assert_eq!(ceil_log2_real(4.000_000_1), 3);
    }
}
