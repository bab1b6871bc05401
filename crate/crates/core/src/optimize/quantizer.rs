//! The gradient channel seen by PSGD: encode, transmit, decode.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use rand::RngCore;

use super::Regime;
use crate::error::{bail, Result};
use crate::gain_shape::{aratq_decode, aratq_encode, GainQuantizer, GainShapeConfig};
use crate::numerics::{SeedBundle, StreamLabel};
use crate::params::AratqParams;
use crate::ratq::{rcs_decode, rcs_encode, ratq_decode, ratq_encode, RatqConfig, SubsampleSet};

pub trait GradientQuantizer: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    /// Bits per gradient.
    fn bits(&self) -> usize;
    /// Closed-form bound on `sqrt(E‖Q(g)‖²)`, used for the default step size.
    fn alpha(&self) -> f64;
    /// Closed-form bound on `‖E[Q(g)] - g‖₂`.
    fn bias(&self) -> f64 {
        0.0
    }
    /// Oracle regime the quantizer is built for; `None` accepts both.
    fn regime(&self) -> Option<Regime>;
    /// Same quantizer with a new shared-randomness seed.
    fn reseeded(&self, seed: u64) -> Box<dyn GradientQuantizer>;
    /// Decoded `Q(g)` for block `nonce`; `rng` drives encoder-local rounding.
    fn quantize(&self, g: &[f64], nonce: u64, rng: &mut dyn RngCore) -> Result<Vec<f64>>;
}

/// Sends gradients as raw 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Unquantized {
    dim: usize,
    bound: f64,
}

impl Unquantized {
    pub fn new(dim: usize, bound: f64) -> Self {
        Self { dim, bound }
    }
}

impl GradientQuantizer for Unquantized {
    fn name(&self) -> String {
        "unquantized".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn bits(&self) -> usize {
        64 * self.dim
    }

    fn alpha(&self) -> f64 {
        self.bound
    }

    fn regime(&self) -> Option<Regime> {
        None
    }

    fn reseeded(&self, _seed: u64) -> Box<dyn GradientQuantizer> {
        Box::new(self.clone())
    }

    fn quantize(&self, g: &[f64], _nonce: u64, _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        Ok(g.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatqQuantizer {
    cfg: RatqConfig,
}

impl RatqQuantizer {
    /// `cfg` must carry a norm bound.
    pub fn new(cfg: RatqConfig) -> Result<Self> {
        if cfg.norm_bound().is_none() {
            bail!(Config, "a gradient quantizer needs a norm bound");
        }
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &RatqConfig {
        &self.cfg
    }
}

impl GradientQuantizer for RatqQuantizer {
    fn name(&self) -> String {
        "ratq".into()
    }

    fn dim(&self) -> usize {
        self.cfg.dim()
    }

    fn bits(&self) -> usize {
        self.cfg.bit_len()
    }

    fn alpha(&self) -> f64 {
        self.cfg.alpha_bound().unwrap_or(f64::INFINITY)
    }

    fn regime(&self) -> Option<Regime> {
        Some(Regime::AlmostSure)
    }

    fn reseeded(&self, seed: u64) -> Box<dyn GradientQuantizer> {
        Box::new(Self {
            cfg: self.cfg.with_seed(seed),
        })
    }

    fn quantize(&self, g: &[f64], nonce: u64, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let block = ratq_encode(g, &self.cfg, nonce, rng)?;
        ratq_decode(&block, &self.cfg, nonce)
    }
}

/// RATQ with `s = 1` on a fresh random subset of `μd` rotated coordinates
/// per gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct RcsQuantizer {
    cfg: RatqConfig,
    sample_count: usize,
}

impl RcsQuantizer {
    pub fn new(cfg: RatqConfig, sample_count: usize) -> Result<Self> {
        if cfg.norm_bound().is_none() {
            bail!(Config, "a gradient quantizer needs a norm bound");
        }
        if cfg.subvector_len() != 1 {
            bail!(Config, "subsampling needs subvector length 1, got {}", cfg.subvector_len());
        }
        if sample_count == 0 || sample_count > cfg.padded_dim() {
            bail!(Config, "cannot subsample {sample_count} of {} coordinates", cfg.padded_dim());
        }
        Ok(Self { cfg, sample_count })
    }

    pub fn mu(&self) -> f64 {
        self.sample_count as f64 / self.cfg.padded_dim() as f64
    }
}

impl GradientQuantizer for RcsQuantizer {
    fn name(&self) -> String {
        "ratq-rcs".into()
    }

    fn dim(&self) -> usize {
        self.cfg.dim()
    }

    fn bits(&self) -> usize {
        let layout = self.cfg.layout();
        self.sample_count * (layout.header_bits() + layout.symbol_bits()) as usize
    }

    fn alpha(&self) -> f64 {
        self.cfg.alpha_bound().unwrap_or(f64::INFINITY) / libm::sqrt(self.mu())
    }

    fn regime(&self) -> Option<Regime> {
        Some(Regime::AlmostSure)
    }

    fn reseeded(&self, seed: u64) -> Box<dyn GradientQuantizer> {
        Box::new(Self {
            cfg: self.cfg.with_seed(seed),
            sample_count: self.sample_count,
        })
    }

    fn quantize(&self, g: &[f64], nonce: u64, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let set = SubsampleSet::draw(self.cfg.padded_dim(), self.sample_count, self.cfg.seed(), nonce)?;
        let block = rcs_encode(g, &self.cfg, &set, nonce, rng)?;
        rcs_decode(&block, &self.cfg, &set, nonce)
    }
}

/// A-RATQ (or the fixed-range gain foil) as a gradient channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GainShapeQuantizer {
    cfg: GainShapeConfig,
    alpha: f64,
    bias: f64,
    name: String,
}

impl GainShapeQuantizer {
    pub fn new(cfg: GainShapeConfig, alpha: f64, bias: f64) -> Self {
        Self {
            cfg,
            alpha,
            bias,
            name: "aratq".into(),
        }
    }

    pub fn from_params(params: &AratqParams, seed: u64) -> Result<Self> {
        Ok(Self::new(params.config(seed)?, params.alpha_bound(), params.bias_bound()))
    }

    /// Same shape channel and step-size constant with a different gain
    /// quantizer.
    pub fn with_gain(&self, gain: GainQuantizer, name: &str) -> Self {
        Self {
            cfg: self.cfg.with_gain(gain),
            alpha: self.alpha,
            bias: self.bias,
            name: name.into(),
        }
    }

    pub fn config(&self) -> &GainShapeConfig {
        &self.cfg
    }
}

impl GradientQuantizer for GainShapeQuantizer {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn dim(&self) -> usize {
        self.cfg.dim()
    }

    fn bits(&self) -> usize {
        self.cfg.bits()
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn bias(&self) -> f64 {
        self.bias
    }

    fn regime(&self) -> Option<Regime> {
        Some(Regime::MeanSquare)
    }

    fn reseeded(&self, seed: u64) -> Box<dyn GradientQuantizer> {
        Box::new(Self {
            cfg: self.cfg.with_seed(seed),
            ..self.clone()
        })
    }

    fn quantize(&self, g: &[f64], nonce: u64, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        // The gain gets its own stream so the two halves round independently.
        let mut gain_rng = SeedBundle::new(rng.next_u64(), StreamLabel::Rounding).stream(nonce);
        let block = aratq_encode(g, &self.cfg, nonce, &mut gain_rng, rng)?;
        aratq_decode(&block, &self.cfg, nonce)
    }
}
