//! Projected SGD with a quantized gradient channel, over Euclidean balls.

mod oracle;
mod quantizer;

pub use oracle::{
    make_test_oracles, GaussianLinear, HeavyTailed, NoisyLinear, NoisyQuadratic, Oracle, Regime,
};
pub use quantizer::{GainShapeQuantizer, GradientQuantizer, RatqQuantizer, RcsQuantizer, Unquantized};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::numerics::{derive_seed, SeedBundle, StreamLabel};

/// Closed ball `{x : ‖x - center‖₂ ≤ radius}`; its diameter `D` is `2·radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    center: Vec<f64>,
    radius: f64,
}

impl Domain {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            bail!(Dimension, "domain center is empty");
        }
        if !(radius.is_finite() && radius > 0.0) {
            bail!(Domain, "domain radius must be positive and finite, got {radius}");
        }
        Ok(Self { center, radius })
    }

    /// Ball of diameter `diameter` centered at the origin.
    pub fn centered(dim: usize, diameter: f64) -> Result<Self> {
        Self::new(alloc::vec![0.0; dim], diameter / 2.0)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        distance(x, &self.center) <= self.radius * (1.0 + 1e-12)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    libm::sqrt(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Euclidean projection onto the ball.
pub fn project(x: &[f64], dom: &Domain) -> Vec<f64> {
    let mut out = x.to_vec();
    project_in_place(&mut out, dom);
    out
}

pub fn project_in_place(x: &mut [f64], dom: &Domain) {
    debug_assert_eq!(x.len(), dom.dim());
    let dist = distance(x, &dom.center);
    if dist > dom.radius {
        let scale = dom.radius / dist;
        for (v, c) in x.iter_mut().zip(&dom.center) {
            *v = c + (*v - c) * scale;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsgdOptions {
    pub iterations: usize,
    /// Defaults to `D/(α√T)` with `α` the quantizer's closed-form bound.
    pub step_size: Option<f64>,
    /// Defaults to the domain center.
    pub start: Option<Vec<f64>>,
    pub record_iterates: bool,
}

impl PsgdOptions {
    pub fn new(iterations: usize) -> Self {
        Self {
            iterations,
            step_size: None,
            start: None,
            record_iterates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// `f(x_t) - f*`.
    pub gap: f64,
    /// `f(x̄_t) - f*` for the running average `x̄_t` of `x_1..x_t`.
    pub average_gap: f64,
    pub bits: usize,
    pub iterate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
    /// `(1/T)·Σ_{t=1..T} x_t`.
    pub average: Vec<f64>,
    /// `f(average) - f*`.
    pub final_gap: f64,
    pub step_size: f64,
    pub bits_per_step: usize,
    pub warnings: Vec<String>,
}

/// Runs `T` steps of `x_t = Γ(x_{t-1} - η·Q(ĝ(x_{t-1})))` from `x_0`.
///
/// Every random draw is derived from `seed`: oracle noise, encoder rounding,
/// and the quantizer's shared seed for rotations and subsampling.
pub fn quantized_psgd(
    oracle: &dyn Oracle,
    quantizer: &dyn GradientQuantizer,
    dom: &Domain,
    opts: &PsgdOptions,
    seed: u64,
) -> Result<RunTrace> {
    let d = dom.dim();
    if oracle.dim() != d || quantizer.dim() != d {
        bail!(
            Dimension,
            "oracle ({}), quantizer ({}) and domain ({d}) dimensions disagree",
            oracle.dim(),
            quantizer.dim()
        );
    }
    if opts.iterations == 0 {
        bail!(Config, "need at least one iteration");
    }
    let Some(f_star) = oracle.min_value(dom) else {
        bail!(Config, "oracle {} has no closed-form optimum on this domain", oracle.name());
    };
    let step = match opts.step_size {
        Some(eta) if eta.is_finite() && eta > 0.0 => eta,
        Some(eta) => bail!(Config, "step size must be positive, got {eta}"),
        None => dom.diameter() / (quantizer.alpha() * libm::sqrt(opts.iterations as f64)),
    };
    let mut x = match &opts.start {
        Some(s) if s.len() == d => project(s, dom),
        Some(s) => bail!(Dimension, "start point has length {} instead of {d}", s.len()),
        None => dom.center().to_vec(),
    };

    let mut warnings = Vec::new();
    if let Some(expected) = quantizer.regime() {
        if expected != oracle.regime() {
            warnings.push(format!(
                "quantizer {} is designed for {:?} oracles but {} is {:?}",
                quantizer.name(),
                expected,
                oracle.name(),
                oracle.regime()
            ));
        }
    }

    let quantizer = quantizer.reseeded(derive_seed(seed, 0));
    let mut noise = SeedBundle::new(seed, StreamLabel::OracleNoise).stream(0);
    let mut rounding = SeedBundle::new(seed, StreamLabel::Rounding).stream(0);
    let bits = quantizer.bits();
    let mut sum = alloc::vec![0.0; d];
    let mut records = Vec::with_capacity(opts.iterations);
    for t in 1..=opts.iterations {
        let g = oracle.sample(&x, &mut noise);
        let q = quantizer.quantize(&g, t as u64, &mut rounding)?;
        for (xi, qi) in x.iter_mut().zip(&q) {
            *xi -= step * qi;
        }
        project_in_place(&mut x, dom);
        for (s, xi) in sum.iter_mut().zip(&x) {
            *s += xi;
        }
        let inv = 1.0 / t as f64;
        let running: Vec<f64> = sum.iter().map(|s| s * inv).collect();
        records.push(StepRecord {
            t,
            gap: oracle.value(&x) - f_star,
            average_gap: oracle.value(&running) - f_star,
            bits,
            iterate: opts.record_iterates.then(|| x.clone()),
        });
    }
    let average: Vec<f64> = sum.iter().map(|s| s / opts.iterations as f64).collect();
    let final_gap = oracle.value(&average) - f_star;
    Ok(RunTrace {
        records,
        average,
        final_gap,
        step_size: step,
        bits_per_step: bits,
        warnings,
    })
}
