//! Distributed mean estimation: MSE against `1/n` and its scaling in `n`.

use ratq_core::applications::{dme_estimate, DmeInstance};
use ratq_core::numerics::{derive_seed, SeedBundle, StreamLabel};
use ratq_core::params::RatqParams;

use super::{chunked, input_point, record_params, Artifact};
use crate::config::{DmeConfig, ExperimentConfig, Resolved};
use crate::report::{cell, Check, MeanSe, Summary, Table};

pub const COLUMNS: [&str; 4] = ["n", "trial", "mse", "bits_per_client"];

pub fn run(cfg: &ExperimentConfig, c: &DmeConfig) -> anyhow::Result<Artifact> {
    let params = RatqParams::high_precision(c.dim, 1.0)?;
    let quantizer = params.config(0)?;
    let mut table = Table::new("dme", &COLUMNS);
    let mut summary = Summary::new("dme", cfg.seed, cfg.trials);
    record_params(&mut summary, &Resolved::Ratq(params.clone()));

    let mut per_n = Vec::with_capacity(c.clients.len());
    for &n in &c.clients {
        let n_seed = derive_seed(cfg.seed, n as u64);
        let outcomes = chunked(cfg.trials, 1, |trial, _| {
            let mut rng = SeedBundle::new(n_seed, StreamLabel::Trial).stream(trial as u64);
            let vectors = (0..n)
                .map(|i| input_point(c.inputs, c.dim, 1.0, trial * n + i, &mut rng))
                .collect();
            let inst = DmeInstance::new(vectors, derive_seed(n_seed, trial as u64))?;
            dme_estimate(&inst, &quantizer)
        });
        let mut mse = MeanSe::default();
        for (trial, out) in outcomes.into_iter().enumerate() {
            let out = out?;
            table.push(vec![cell(n), cell(trial), cell(out.squared_error), cell(out.bits_per_client)]);
            mse.push(out.squared_error);
        }
        summary.metric(&format!("mse_n{n}"), mse.mean());
        summary.metric(&format!("mse_se_n{n}"), mse.se());
        summary.check(Check::at_most(
            &format!("mse_n{n}"),
            mse.mean(),
            1.0 / n as f64 + 3.0 * mse.se(),
            "mean squared error against 1/n + 3*SE",
        ));
        per_n.push((n, mse));
    }

    for &(n, a) in &per_n {
        if let Some(&(_, b)) = per_n.iter().find(|(m, _)| *m == 2 * n) {
            let ratio = a.mean() / b.mean();
            summary.metric(&format!("ratio_n{n}"), ratio);
            summary.check(Check::within(
                &format!("scaling_n{n}"),
                ratio,
                c.ratio_window[0],
                c.ratio_window[1],
                format!("MSE({n})/MSE({})", 2 * n),
            ));
        }
    }
    summary.metric("bits_per_client", params.bits as f64);
    Ok(Artifact {
        table,
        summary,
        blocks: Vec::new(),
    })
}
