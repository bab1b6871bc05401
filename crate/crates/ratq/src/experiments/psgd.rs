//! Quantized PSGD trials on one oracle, with the gap compared to the
//! closed-form bound for the chosen quantizer.

use ratq_core::numerics::derive_seed;
use ratq_core::optimize::{
    quantized_psgd, Domain, GaussianLinear, HeavyTailed, NoisyLinear, NoisyQuadratic, Oracle, PsgdOptions,
};

use super::{build_channel, chunked, psgd_bound, record_params, Artifact};
use crate::config::{ExperimentConfig, GradientSpec, OracleKind, PsgdConfig};
use crate::report::{cell, Check, MeanSe, Summary, Table};

pub const COLUMNS: [&str; 4] = ["trial", "t", "f_gap", "bits"];

/// `±0.5` alternating pattern, the bias or mean direction of the linear oracles.
fn alternating(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect()
}

/// Oracle of the requested family with bound `B` on the centered ball of
/// diameter `D`.
pub(crate) fn build_oracle(p: &PsgdConfig, dom: &Domain) -> anyhow::Result<Box<dyn Oracle>> {
    let (dim, bound, diameter) = (p.dim, p.bound, p.diameter);
    Ok(match p.oracle {
        OracleKind::NoisyLinear => Box::new(NoisyLinear::new(alternating(dim), bound)?),
        OracleKind::NoisyQuadratic => {
            let mut target = vec![0.0; dim];
            target[0] = diameter / 4.0;
            // L·(D/4 + D/2) + B/4 = B.
            Box::new(NoisyQuadratic::new(target, bound / diameter, bound / 4.0, dom)?)
        }
        OracleKind::GaussianLinear => {
            let scale = bound / (dim as f64).sqrt();
            let mean = alternating(dim).into_iter().map(|b| b * scale).collect();
            // ‖c‖² = B²/4, so σ² = 3B²/4 makes the second moment exactly B².
            Box::new(GaussianLinear::new(mean, bound * 0.75f64.sqrt())?)
        }
        OracleKind::HeavyTailed => {
            let h = &p.heavy_tailed;
            Box::new(HeavyTailed::new(dim, h.alpha, h.delta, h.tail, bound, diameter)?)
        }
    })
}

pub fn run(cfg: &ExperimentConfig, p: &PsgdConfig) -> anyhow::Result<Artifact> {
    let resolved = GradientSpec::from_psgd(p).resolve("psgd")?;
    let channel = build_channel(&resolved)?;
    let dom = Domain::centered(p.dim, p.diameter)?;
    let oracle = build_oracle(p, &dom)?;
    let mut opts = PsgdOptions::new(p.horizon);
    opts.step_size = p.step_size;

    let traces = chunked(cfg.trials, 1, |trial, _| {
        quantized_psgd(oracle.as_ref(), channel.as_ref(), &dom, &opts, derive_seed(cfg.seed, trial as u64))
    });

    let mut table = Table::new("psgd", &COLUMNS);
    let mut summary = Summary::new("psgd", cfg.seed, cfg.trials);
    record_params(&mut summary, &resolved);
    let mut gaps = MeanSe::default();
    for (trial, trace) in traces.into_iter().enumerate() {
        let trace = trace?;
        if p.per_iteration {
            for r in &trace.records {
                table.push(vec![cell(trial), cell(r.t), cell(r.average_gap), cell(r.bits)]);
            }
        } else {
            table.push(vec![cell(trial), cell(p.horizon), cell(trace.final_gap), cell(trace.bits_per_step)]);
        }
        if trial == 0 {
            summary.param("step_size", trace.step_size);
            summary.param("bits_per_step", trace.bits_per_step as f64);
        }
        for w in trace.warnings {
            summary.warn(w);
        }
        gaps.push(trace.final_gap);
    }

    let (bound, formula) = psgd_bound(p.quantizer, &resolved, p.diameter, p.horizon);
    summary.param("D", p.diameter);
    summary.param("T", p.horizon as f64);
    summary.param("bound", bound);
    summary.metric("mean_gap", gaps.mean());
    summary.metric("gap_se", gaps.se());
    summary.check(Check::at_most(
        "gap_bound",
        gaps.mean() + 2.0 * gaps.se(),
        bound,
        format!("mean gap + 2*SE against {formula}"),
    ));
    Ok(Artifact {
        table,
        summary,
        blocks: Vec::new(),
    })
}
