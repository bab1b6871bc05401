//! Subgaussian rate-distortion: per-dimension MSE against `D` and the exact
//! rate against `½·log₂(v/D)` plus a slack.

use rand::Rng;

use ratq_core::applications::rd_quantize;
use ratq_core::numerics::{derive_seed, standard_normal, SeedBundle, StreamLabel};
use ratq_core::params::RdParams;

use super::{chunked, Artifact};
use crate::config::{ExperimentConfig, RdConfig, SourceKind};
use crate::report::{cell, Check, MeanSe, Summary, Table};

pub const COLUMNS: [&str; 10] = [
    "source",
    "d",
    "v",
    "D_target",
    "trial",
    "rate",
    "mse",
    "in_range_error",
    "overflow_error",
    "overflows",
];

fn source_name(s: SourceKind) -> &'static str {
    match s {
        SourceKind::Gaussian => "gaussian",
        SourceKind::Rademacher => "rademacher",
    }
}

pub fn run(cfg: &ExperimentConfig, c: &RdConfig) -> anyhow::Result<Artifact> {
    let params = RdParams::new(c.dim, c.variance, c.distortion)?;
    let mut table = Table::new("rd", &COLUMNS);
    let mut summary = Summary::new("rd", cfg.seed, cfg.trials);
    summary.param("d", c.dim as f64);
    summary.param("v", c.variance);
    summary.param("D", c.distortion);
    summary.param("m", params.m);
    summary.param("m0", params.m0);
    summary.param("h", params.ranges);
    summary.param("s", params.subvector_len as f64);
    summary.param("k", params.levels);
    summary.param("bits", params.bits as f64);
    let rate_floor = 0.5 * (c.variance / c.distortion).log2();
    summary.param("rate_floor", rate_floor);
    summary.param("rate_slack", c.rate_slack);

    for (index, &source) in c.sources.iter().enumerate() {
        let seed = derive_seed(cfg.seed, index as u64);
        let sd = c.variance.sqrt();
        let outcomes = chunked(cfg.trials, 1, |trial, _| {
            let mut draw = SeedBundle::new(seed, StreamLabel::Trial).stream(trial as u64);
            let x: Vec<f64> = (0..c.dim)
                .map(|_| match source {
                    SourceKind::Gaussian => sd * standard_normal(&mut draw),
                    SourceKind::Rademacher => {
                        if draw.random::<bool>() {
                            sd
                        } else {
                            -sd
                        }
                    }
                })
                .collect();
            let mut rounding = SeedBundle::new(seed, StreamLabel::Rounding).stream(trial as u64);
            rd_quantize(&x, &params, &mut rounding)
        });
        let name = source_name(source);
        let (mut mse, mut in_range, mut overflow) = (MeanSe::default(), MeanSe::default(), MeanSe::default());
        let mut rate = 0.0f64;
        for (trial, out) in outcomes.into_iter().enumerate() {
            let out = out?;
            table.push(vec![
                cell(name),
                cell(c.dim),
                cell(c.variance),
                cell(c.distortion),
                cell(trial),
                cell(out.rate),
                cell(out.mse),
                cell(out.in_range_error),
                cell(out.overflow_error),
                cell(out.overflow_count),
            ]);
            mse.push(out.mse);
            in_range.push(out.in_range_error);
            overflow.push(out.overflow_error);
            rate = rate.max(out.rate);
        }
        let d = c.distortion;
        summary.metric(&format!("{name}_mse"), mse.mean());
        summary.metric(&format!("{name}_mse_se"), mse.se());
        summary.metric(&format!("{name}_rate"), rate);
        summary.check(Check::at_most(
            &format!("{name}_mse"),
            mse.mean(),
            d + 3.0 * mse.se(),
            "per-dimension MSE against D + 3*SE",
        ));
        summary.check(Check::at_most(
            &format!("{name}_rate"),
            rate,
            rate_floor + c.rate_slack,
            "exact bits per dimension against 0.5*log2(v/D) + slack",
        ));
        summary.check(Check::at_most(
            &format!("{name}_in_range"),
            in_range.mean(),
            d / 2.0 + 3.0 * in_range.se(),
            "in-range part of the MSE against D/2 + 3*SE",
        ));
        summary.check(Check::at_most(
            &format!("{name}_overflow"),
            overflow.mean(),
            d / 2.0 + 3.0 * overflow.se(),
            "overflow part of the MSE against D/2 + 3*SE",
        ));
    }
    Ok(Artifact {
        table,
        summary,
        blocks: Vec::new(),
    })
}
