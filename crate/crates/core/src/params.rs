//! Parameter derivation for every operating regime.
//!
//! Each constructor takes only what a user knows (dimension, norm bound,
//! horizon, bit budget) and resolves the full set of quantizer constants.
//! Logarithms of level and range counts are base 2 and counts are powers of
//! two. Dimensions are the padded (power-of-two) ones throughout.

use crate::adaptive::RangeLadder;
use crate::error::{bail, Result};
use crate::gain_shape::{GainQuantizer, GainShapeConfig};
use crate::numerics::{ceil_log2, ceil_log2_real, ln_star};
use crate::ratq::RatqConfig;

/// Regime names as used on the command line.
pub const MODES: [&str; 6] = ["ratq-high", "ratq-low", "aratq-high", "aratq-low", "dme", "rd"];

/// `⌈log₂(1 + ln*(d/3))⌉`, the range-header width of the tetra ladder.
pub fn range_header_bits(padded_dim: usize) -> u32 {
    ceil_log2_real(1.0 + f64::from(ln_star(padded_dim as f64 / 3.0)))
}

/// Resolved RATQ constants, with or without coordinate subsampling.
#[derive(Debug, Clone, PartialEq)]
pub struct RatqParams {
    pub dim: usize,
    pub padded_dim: usize,
    pub norm_bound: f64,
    pub m: f64,
    pub m0: f64,
    pub ranges: u32,
    pub subvector_len: usize,
    pub levels: u32,
    /// Coordinates quantized per vector: `padded_dim` unless subsampling.
    pub sample_count: usize,
    /// Whether the quantizer runs through the coordinate sampler.
    pub subsampled: bool,
    /// Exact bits per vector.
    pub bits: usize,
}

impl RatqParams {
    /// Ample-budget regime: `s = log h` and `log(k+1) = ⌈log(2 + √(9 + 3 ln s))⌉`.
    pub fn high_precision(dim: usize, norm_bound: f64) -> Result<Self> {
        check_dim_and_bound(dim, norm_bound)?;
        let padded_dim = dim.next_power_of_two();
        let d = padded_dim as f64;
        let log_h = range_header_bits(padded_dim);
        let s = (log_h as usize).min(padded_dim);
        let ln_s = libm::log(s as f64);
        let levels = (1u32 << ceil_log2_real(2.0 + libm::sqrt(9.0 + 3.0 * ln_s))) - 1;
        let b2 = norm_bound * norm_bound;
        Ok(Self::finish(Self {
            dim,
            padded_dim,
            norm_bound,
            m: 3.0 * b2 / d,
            m0: 2.0 * b2 / d * ln_s,
            ranges: 1 << log_h,
            subvector_len: s,
            levels,
            sample_count: padded_dim,
            subsampled: false,
            bits: 0,
        }))
    }

    /// Budget-limited regime with coordinate subsampling: `s = 1`, `k = 7`,
    /// `μd = min(d, ⌊r/(3 + log h)⌋)`.
    pub fn low_precision(dim: usize, norm_bound: f64, budget: usize) -> Result<Self> {
        check_dim_and_bound(dim, norm_bound)?;
        let padded_dim = dim.next_power_of_two();
        let log_h = range_header_bits(padded_dim);
        let per_coordinate = 3 + log_h as usize;
        if budget < per_coordinate {
            bail!(
                Config,
                "bit budget r = {budget} is below the floor r >= 3 + ceil(log2(1 + ln*(d/3))) = {per_coordinate}"
            );
        }
        let b2 = norm_bound * norm_bound;
        Ok(Self::finish(Self {
            dim,
            padded_dim,
            norm_bound,
            m: 3.0 * b2 / padded_dim as f64,
            m0: 0.0,
            ranges: 1 << log_h,
            subvector_len: 1,
            levels: 7,
            sample_count: padded_dim.min(budget / per_coordinate),
            subsampled: true,
            bits: 0,
        }))
    }

    fn finish(mut self) -> Self {
        let header = ceil_log2(u64::from(self.ranges)) as usize;
        let symbol = ceil_log2(u64::from(self.levels) + 1) as usize;
        self.bits = if self.subsampled {
            self.sample_count * (header + symbol)
        } else {
            self.padded_dim.div_ceil(self.subvector_len) * header + self.padded_dim * symbol
        };
        self
    }

    pub fn is_subsampled(&self) -> bool {
        self.subsampled
    }

    /// Sampling ratio `μ = μd/d`.
    pub fn mu(&self) -> f64 {
        self.sample_count as f64 / self.padded_dim as f64
    }

    pub fn ladder(&self) -> Result<RangeLadder> {
        RangeLadder::tetra(self.m, self.m0, self.ranges)
    }

    pub fn config(&self, seed: u64) -> Result<RatqConfig> {
        RatqConfig::new(
            self.dim,
            self.norm_bound,
            self.subvector_len,
            self.levels,
            self.ladder()?,
            seed,
        )
    }

    /// `(9 + 3 ln s)/(k-1)²`.
    pub fn mse_factor(&self) -> f64 {
        let km1 = f64::from(self.levels - 1);
        (9.0 + 3.0 * libm::log(self.subvector_len as f64)) / (km1 * km1)
    }

    /// `B·sqrt((9 + 3 ln s)/(k-1)² + 1)/√μ`.
    pub fn alpha_bound(&self) -> f64 {
        self.norm_bound * libm::sqrt((self.mse_factor() + 1.0) / self.mu())
    }
}

fn check_dim_and_bound(dim: usize, norm_bound: f64) -> Result<()> {
    if dim == 0 {
        bail!(Config, "dimension must be at least 1");
    }
    if !(norm_bound.is_finite() && norm_bound > 0.0) {
        bail!(Config, "norm bound B must be positive and finite, got {norm_bound}");
    }
    Ok(())
}

/// AGUQ constants: ladder `M_{g,j} = B·a_g^{j/2}` for `j < h_g`, `k_g` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct GainParams {
    pub norm_bound: f64,
    pub ratio: f64,
    pub ranges: u32,
    pub levels: u32,
}

impl GainParams {
    pub fn bits(&self) -> usize {
        (ceil_log2(u64::from(self.ranges)) + ceil_log2(u64::from(self.levels) + 1)) as usize
    }

    pub fn ladder(&self) -> Result<RangeLadder> {
        RangeLadder::geometric(self.norm_bound, self.ratio, self.ranges)
    }

    /// `M_{g,h_g-1}`.
    pub fn top(&self) -> f64 {
        self.norm_bound * libm::sqrt(libm::pow(self.ratio, f64::from(self.ranges - 1)))
    }

    /// `sqrt(1/(4(k_g-1)²) + a_g(h_g-1)/(4(k_g-1)²) + 1)`: the gain's second
    /// moment factor relative to `B`.
    pub fn alpha_factor(&self) -> f64 {
        let km1 = f64::from(self.levels - 1);
        let q = 4.0 * km1 * km1;
        libm::sqrt(1.0 / q + self.ratio * f64::from(self.ranges - 1) / q + 1.0)
    }

    /// `B²/M_{g,h_g-1}`.
    pub fn bias_bound(&self) -> f64 {
        self.norm_bound * self.norm_bound / self.top()
    }
}

/// A-RATQ constants: gain parameters plus a unit-norm shape quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AratqParams {
    pub horizon: u64,
    pub gain: GainParams,
    pub shape: RatqParams,
}

impl AratqParams {
    /// `a_g = 2`, `log h_g = ⌈log(1 + ½ log T)⌉`,
    /// `log(k_g+1) = ⌈log(2 + ½√(log T + 1))⌉`, full-precision shape.
    pub fn high_precision(dim: usize, norm_bound: f64, horizon: u64) -> Result<Self> {
        check_dim_and_bound(dim, norm_bound)?;
        if horizon == 0 {
            bail!(Config, "horizon T must be at least 1");
        }
        let log_t = libm::log2(horizon as f64);
        let log_hg = ceil_log2_real(1.0 + 0.5 * log_t);
        let log_kg1 = ceil_log2_real(2.0 + 0.5 * libm::sqrt(log_t + 1.0));
        Ok(Self {
            horizon,
            gain: GainParams {
                norm_bound,
                ratio: 2.0,
                ranges: 1 << log_hg,
                levels: (1 << log_kg1) - 1,
            },
            shape: RatqParams::high_precision(dim, 1.0)?,
        })
    }

    /// Total budget `r` split as `r_g` gain bits (even, at least 4, with
    /// `log h_g = log(k_g+1) = r_g/2`) and `r - r_g` bits for a subsampled
    /// shape; `a_g = (μT)^{1/(h_g+1)}`.
    pub fn low_precision(dim: usize, norm_bound: f64, horizon: u64, budget: usize, gain_bits: usize) -> Result<Self> {
        check_dim_and_bound(dim, norm_bound)?;
        if horizon == 0 {
            bail!(Config, "horizon T must be at least 1");
        }
        if gain_bits < 4 || !gain_bits.is_multiple_of(2) {
            bail!(Config, "gain budget r_g must be even and at least 4, got {gain_bits}");
        }
        if gain_bits >= 64 {
            bail!(Config, "gain budget r_g = {gain_bits} is too large");
        }
        if budget <= gain_bits {
            bail!(Config, "total budget r = {budget} leaves nothing for the shape after r_g = {gain_bits}");
        }
        let shape = RatqParams::low_precision(dim, 1.0, budget - gain_bits)?;
        let half = gain_bits / 2;
        let ranges = 1u32
            .checked_shl(half as u32)
            .filter(|_| half < 32)
            .ok_or_else(|| crate::Error::Config(alloc::format!("r_g = {gain_bits} gives too many gain ranges")))?;
        let mu_t = shape.mu() * horizon as f64;
        let ratio = libm::pow(mu_t, 1.0 / f64::from(ranges + 1));
        if ratio <= 1.0 {
            bail!(Config, "a_g = (mu T)^(1/(h_g + 1)) must exceed 1, but mu T = {mu_t}");
        }
        Ok(Self {
            horizon,
            gain: GainParams {
                norm_bound,
                ratio,
                ranges,
                levels: ranges - 1,
            },
            shape,
        })
    }

    pub fn bits(&self) -> usize {
        self.gain.bits() + self.shape.bits
    }

    /// `α(gain)·α(shape)`: bound on `sqrt(E‖Q(Y)‖²)`.
    pub fn alpha_bound(&self) -> f64 {
        self.gain.norm_bound * self.gain.alpha_factor() * self.shape.alpha_bound()
    }

    pub fn bias_bound(&self) -> f64 {
        self.gain.bias_bound()
    }

    pub fn config(&self, seed: u64) -> Result<GainShapeConfig> {
        let gain = GainQuantizer::Adaptive {
            ladder: self.gain.ladder()?,
            levels: self.gain.levels,
        };
        let sample_count = self.shape.is_subsampled().then_some(self.shape.sample_count);
        GainShapeConfig::new(gain, self.shape.config(seed)?, sample_count)
    }
}

/// Constants of the unrotated quantizer for `v`-subgaussian coordinates
/// at per-dimension distortion `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdParams {
    pub dim: usize,
    pub variance: f64,
    pub distortion: f64,
    pub m: f64,
    pub m0: f64,
    pub ranges: u32,
    pub subvector_len: usize,
    pub levels: u32,
    pub bits: usize,
}

impl RdParams {
    /// `m = 3v`, `m0 = 2v ln s`, `log h = ⌈log(1 + ln*(4 ln(8√2 v/D)/3))⌉`,
    /// `s = min(log h, d)`, `log(k+1) = ⌈log(2 + √((18v + 6v ln s)/D))⌉`.
    pub fn new(dim: usize, variance: f64, distortion: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            bail!(Config, "variance factor v must be positive and finite, got {variance}");
        }
        if !(distortion > 0.0 && distortion < variance / 4.0) {
            bail!(Config, "distortion D must satisfy 0 < D < v/4, got D = {distortion} with v = {variance}");
        }
        let inner = 4.0 * libm::log(8.0 * core::f64::consts::SQRT_2 * variance / distortion) / 3.0;
        let log_h = ceil_log2_real(1.0 + f64::from(ln_star(inner)));
        if dim < log_h as usize {
            bail!(Config, "dimension d = {dim} must be at least log2 h = {log_h}");
        }
        let s = (log_h as usize).min(dim);
        let ln_s = libm::log(s as f64);
        let ratio = (18.0 * variance + 6.0 * variance * ln_s) / distortion;
        let levels = (1u32 << ceil_log2_real(2.0 + libm::sqrt(ratio))) - 1;
        let bits = dim.div_ceil(s) * log_h as usize + dim * ceil_log2(u64::from(levels) + 1) as usize;
        Ok(Self {
            dim,
            variance,
            distortion,
            m: 3.0 * variance,
            m0: 2.0 * variance * ln_s,
            ranges: 1 << log_h,
            subvector_len: s,
            levels,
            bits,
        })
    }

    /// Bits per dimension.
    pub fn rate(&self) -> f64 {
        self.bits as f64 / self.dim as f64
    }

    pub fn config(&self, seed: u64) -> Result<RatqConfig> {
        RatqConfig::unrotated(
            self.dim,
            self.subvector_len,
            self.levels,
            RangeLadder::tetra(self.m, self.m0, self.ranges)?,
            seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_width() {
        // ln*(1024/3) = 3.
        assert_eq!(range_header_bits(1024), 2);
        assert_eq!(range_header_bits(128), 2);
        // ln*(2/3) = 1.
        assert_eq!(range_header_bits(2), 1);
    }

    #[test]
    fn ratq_high_at_1024() {
        let p = RatqParams::high_precision(1024, 1.0).unwrap();
        assert_eq!((p.ranges, p.subvector_len, p.levels, p.bits), (4, 2, 7, 4096));
        assert!((p.m - 3.0 / 1024.0).abs() < 1e-18);
        assert!((p.m0 - 2.0 / 1024.0 * core::f64::consts::LN_2).abs() < 1e-18);
        assert_eq!(p.mu(), 1.0);
        // The top range covers the whole ball.
        assert!(p.ladder().unwrap().top() >= 1.0);
    }

    #[test]
    fn ratq_high_pads() {
        let p = RatqParams::high_precision(1000, 2.0).unwrap();
        assert_eq!(p.padded_dim, 1024);
        assert_eq!(p.bits, 4096);
        assert!((p.m - 12.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn ratq_low_sample_count() {
        let p = RatqParams::low_precision(1024, 1.0, 64).unwrap();
        assert_eq!(p.sample_count, 12);
        assert_eq!(p.bits, 60);
        assert_eq!(p.m0, 0.0);
        assert!((p.mu() - 12.0 / 1024.0).abs() < 1e-15);
        assert_eq!(RatqParams::low_precision(128, 1.0, 64).unwrap().sample_count, 12);
        assert_eq!(RatqParams::low_precision(4, 1.0, 1000).unwrap().sample_count, 4);
        assert!(matches!(RatqParams::low_precision(1024, 1.0, 4), Err(crate::Error::Config(_))));
    }

    #[test]
    fn aratq_high_gain_constants() {
        let p = AratqParams::high_precision(1024, 1.0, 1 << 20).unwrap();
        assert_eq!(p.gain.ranges, 16);
        assert_eq!(p.gain.levels + 1, 8);
        assert_eq!(p.gain.ratio, 2.0);
        assert_eq!(p.bits(), 4 + 3 + 4096);
        let q = AratqParams::high_precision(128, 1.0, 1024).unwrap();
        assert_eq!((q.gain.ranges, q.gain.levels), (8, 3));
    }

    #[test]
    fn aratq_low_constants() {
        // μT = 256 with h_g = 3 would give a_g = 4; here h_g = 4 from r_g = 4.
        let p = AratqParams::low_precision(1024, 1.0, 1 << 20, 69, 4).unwrap();
        assert_eq!(p.shape.sample_count, 13);
        assert_eq!((p.gain.ranges, p.gain.levels), (4, 3));
        let mu_t = 13.0 / 1024.0 * (1u64 << 20) as f64;
        assert!((p.gain.ratio - libm::pow(mu_t, 0.2)).abs() < 1e-12);
        assert!(AratqParams::low_precision(1024, 1.0, 1 << 20, 69, 5).is_err());
        assert!(AratqParams::low_precision(1024, 1.0, 1 << 20, 69, 2).is_err());
    }

    #[test]
    fn gain_bounds() {
        let g = GainParams {
            norm_bound: 1.0,
            ratio: 4.0,
            ranges: 3,
            levels: 3,
        };
        assert_eq!(g.top(), 4.0);
        assert_eq!(g.bias_bound(), 0.25);
        assert!((g.alpha_factor() - libm::sqrt(1.0 / 16.0 + 8.0 / 16.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rd_constants() {
        let p = RdParams::new(4096, 1.0, 0.05).unwrap();
        assert_eq!((p.ranges, p.subvector_len, p.levels), (4, 2, 31));
        assert_eq!(p.rate(), 6.0);
        assert!(RdParams::new(4096, 1.0, 0.3).is_err());
        assert!(RdParams::new(1, 1.0, 0.05).is_err());
    }
}
