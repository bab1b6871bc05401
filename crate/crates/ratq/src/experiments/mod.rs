//! Experiment runners. Each takes a validated config and returns its CSV
//! table, summary and any blocks to persist; nothing here touches the disk.
//!
//! Trials run on the ambient rayon pool. Every trial draws from streams keyed
//! by its index, and results are collected in index order, so output does not
//! depend on the pool size.

mod adversarial;
mod dme;
mod psgd;
mod quantize;
mod rd;

use std::ops::Range;

use anyhow::Context;
use rayon::prelude::*;

use ratq_core::numerics::{standard_normal, StreamRng};
use ratq_core::optimize::{GainShapeQuantizer, GradientQuantizer, RatqQuantizer, RcsQuantizer, Unquantized};

use crate::config::{ExperimentConfig, ExperimentKind, InputKind, QuantizerMode, Resolved};
use crate::persist::BlockHeader;
use crate::report::{Summary, Table};

/// Everything one experiment produces.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub table: Table,
    pub summary: Summary,
    pub blocks: Vec<SavedBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedBlock {
    /// File stem relative to the output directory.
    pub stem: String,
    pub header: BlockHeader,
    pub bytes: Vec<u8>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<Artifact> {
    let section = |name: &str| format!("config has no [{name}] table");
    match cfg.kind {
        ExperimentKind::Quantize => quantize::run(cfg, cfg.quantize.as_ref().with_context(|| section("quantize"))?),
        ExperimentKind::Psgd => psgd::run(cfg, cfg.psgd.as_ref().with_context(|| section("psgd"))?),
        ExperimentKind::Dme => dme::run(cfg, cfg.dme.as_ref().with_context(|| section("dme"))?),
        ExperimentKind::Rd => rd::run(cfg, cfg.rd.as_ref().with_context(|| section("rd"))?),
        ExperimentKind::Adversarial => {
            adversarial::run(cfg, cfg.adversarial.as_ref().with_context(|| section("adversarial"))?)
        }
    }
}

/// Maps `f` over `0..n` in chunks of `chunk`, in parallel, keeping order.
pub(crate) fn chunked<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, Range<usize>) -> T + Sync,
{
    let chunks = n.div_ceil(chunk);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c, c * chunk..((c + 1) * chunk).min(n)))
        .collect()
}

/// Uniform point on the sphere of radius `radius`.
pub(crate) fn sphere_point(dim: usize, radius: f64, rng: &mut StreamRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| radius * x / n).collect();
        }
    }
}

/// Input number `index` of the given family.
pub(crate) fn input_point(kind: InputKind, dim: usize, radius: f64, index: usize, rng: &mut StreamRng) -> Vec<f64> {
    match kind {
        InputKind::Sphere => sphere_point(dim, radius, rng),
        InputKind::Axis => {
            let mut v = vec![0.0; dim];
            v[index % dim] = if (index / dim).is_multiple_of(2) { radius } else { -radius };
            v
        }
    }
}

/// The PSGD channel for a resolved parameter set.
pub(crate) fn build_channel(resolved: &Resolved) -> anyhow::Result<Box<dyn GradientQuantizer>> {
    Ok(match resolved {
        Resolved::Unquantized { dim, bound } => Box::new(Unquantized::new(*dim, *bound)),
        Resolved::Ratq(p) if p.is_subsampled() => Box::new(RcsQuantizer::new(p.config(0)?, p.sample_count)?),
        Resolved::Ratq(p) => Box::new(RatqQuantizer::new(p.config(0)?)?),
        Resolved::Aratq(p) => Box::new(GainShapeQuantizer::from_params(p, 0)?),
    })
}

/// Closed-form bound on the PSGD gap with its formula, for step size
/// `D/(α√T)`.
pub(crate) fn psgd_bound(mode: QuantizerMode, resolved: &Resolved, diameter: f64, horizon: usize) -> (f64, &'static str) {
    let root_t = (horizon as f64).sqrt();
    match resolved {
        Resolved::Unquantized { bound, .. } => (diameter * bound / root_t, "D*B/sqrt(T)"),
        Resolved::Ratq(p) => (
            std::f64::consts::SQRT_2 * diameter * p.norm_bound / (p.mu() * horizon as f64).sqrt(),
            "sqrt(2)*D*B/sqrt(mu*T)",
        ),
        Resolved::Aratq(p) if mode == QuantizerMode::AratqHigh => {
            (3.0 * diameter * p.gain.norm_bound / root_t, "3*D*B/sqrt(T)")
        }
        Resolved::Aratq(p) => (
            diameter * (p.alpha_bound() / root_t + p.bias_bound()),
            "D*(alpha/sqrt(T) + beta)",
        ),
    }
}

/// Records every resolved constant under stable keys.
pub(crate) fn record_params(summary: &mut Summary, resolved: &Resolved) {
    summary.parameters.extend(crate::derive::param_map(resolved));
}
