//! Encode/decode round trips on fixed input points: bit accounting, codec
//! exactness, unbiasedness and the second-moment bound.

use anyhow::ensure;

use ratq_core::gain_shape::{aratq_decode, aratq_encode, GainShapeBlock, GainShapeConfig};
use ratq_core::numerics::{derive_seed, SeedBundle, StreamLabel, StreamRng};
use ratq_core::ratq::{rcs_decode, rcs_encode, ratq_decode, ratq_encode, EncodedBlock, RatqConfig, SubsampleSet};

use super::{chunked, input_point, record_params, Artifact, SavedBlock};
use crate::config::{ExperimentConfig, GradientSpec, QuantizeConfig, Resolved};
use crate::persist::BlockHeader;
use crate::report::{cell, Check, MeanSe, Summary, Table};

pub const COLUMNS: [&str; 10] = [
    "point",
    "trials",
    "bits",
    "mean_sq_norm",
    "sq_norm_se",
    "mean_sq_error",
    "chi2",
    "max_abs_z",
    "overflows",
    "roundtrip_failures",
];

enum Encoder {
    Ratq(RatqConfig),
    Rcs(RatqConfig, usize),
    Aratq(GainShapeConfig),
}

struct Encoded {
    bytes: Vec<u8>,
    bit_len: usize,
    decoded: Vec<f64>,
    overflows: usize,
    /// Unpacking and repacking reproduced the bits and the decode.
    roundtrip_ok: bool,
    header: BlockHeader,
}

impl Encoder {
    fn encode(&self, x: &[f64], nonce: u64, rng: &mut StreamRng) -> anyhow::Result<Encoded> {
        match self {
            Self::Ratq(cfg) => {
                let block = ratq_encode(x, cfg, nonce, rng)?;
                let decoded = ratq_decode(&block, cfg, nonce)?;
                finish_ratq(cfg, block, decoded, nonce, None, |b| ratq_decode(b, cfg, nonce))
            }
            Self::Rcs(cfg, n) => {
                let set = SubsampleSet::draw(cfg.padded_dim(), *n, cfg.seed(), nonce)?;
                let block = rcs_encode(x, cfg, &set, nonce, rng)?;
                let decoded = rcs_decode(&block, cfg, &set, nonce)?;
                finish_ratq(cfg, block, decoded, nonce, Some(&set), |b| rcs_decode(b, cfg, &set, nonce))
            }
            Self::Aratq(cfg) => {
                // Gain rounding gets its own stream, as in the PSGD channel.
                let mut gain_rng = SeedBundle::new(rand::RngCore::next_u64(rng), StreamLabel::Rounding).stream(nonce);
                let block = aratq_encode(x, cfg, nonce, &mut gain_rng, rng)?;
                let decoded = aratq_decode(&block, cfg, nonce)?;
                let (bytes, bit_len) = block.to_bits(cfg)?;
                let reread = GainShapeBlock::from_bits(&bytes, bit_len, cfg)?;
                let roundtrip_ok = bit_len == cfg.bits()
                    && reread == block
                    && reread.to_bits(cfg)? == (bytes.clone(), bit_len)
                    && aratq_decode(&reread, cfg, nonce)? == decoded;
                let overflows = block.shape.overflow_count()? + usize::from(block.gain.symbol.is_overflow());
                Ok(Encoded {
                    header: BlockHeader::for_gain_shape(cfg, nonce, bit_len)?,
                    bytes,
                    bit_len,
                    decoded,
                    overflows,
                    roundtrip_ok,
                })
            }
        }
    }
}

fn finish_ratq(
    cfg: &RatqConfig,
    block: EncodedBlock,
    decoded: Vec<f64>,
    nonce: u64,
    set: Option<&SubsampleSet>,
    decode: impl Fn(&EncodedBlock) -> ratq_core::Result<Vec<f64>>,
) -> anyhow::Result<Encoded> {
    let layout = block.layout;
    let codewords = layout.unpack(&block)?;
    let repacked = layout.pack(&codewords)?;
    let reread = EncodedBlock::from_parts(block.bits.clone(), block.bit_len, layout)?;
    let roundtrip_ok = repacked == block && block.bit_len == layout.bit_len() && decode(&reread)? == decoded;
    Ok(Encoded {
        header: BlockHeader::for_ratq(cfg, nonce, set, block.bit_len)?,
        overflows: block.overflow_count()?,
        bit_len: block.bit_len,
        bytes: block.bits,
        decoded,
        roundtrip_ok,
    })
}

/// Per-point accumulators over that point's trials.
struct PointStats {
    trials: usize,
    bits: usize,
    err: Vec<MeanSe>,
    sq_norm: MeanSe,
    sq_error: MeanSe,
    overflows: usize,
    roundtrip_failures: usize,
    saved: Vec<SavedBlock>,
}

/// Aggregate of per-coordinate z-scores `z_j = mean_j/SE_j`.
#[derive(Debug, Clone, Copy, Default)]
struct ZScores {
    sum_sq: f64,
    max_abs: f64,
    count: usize,
    /// `Σ E[z²]` and `Σ Var[z²]` under zero mean, where each `z` is Student-t
    /// with `n - 1` degrees of freedom; `None` when `n < 6` leaves the
    /// variance undefined.
    expected: Option<(f64, f64)>,
}

impl PointStats {
    /// A nonzero mean with zero spread counts as an infinite z-score;
    /// coordinates with no error at all are skipped.
    fn z_scores(&self) -> ZScores {
        let mut z = ZScores::default();
        let nu = self.trials as f64 - 1.0;
        let per = (nu > 4.0).then(|| {
            let m2 = nu / (nu - 2.0);
            let m4 = 3.0 * nu * nu / ((nu - 2.0) * (nu - 4.0));
            (m2, m4 - m2 * m2)
        });
        let mut expected = (0.0, 0.0);
        for e in &self.err {
            let se = e.se();
            let v = if se > 0.0 {
                e.mean() / se
            } else if e.mean() == 0.0 {
                continue;
            } else {
                f64::INFINITY
            };
            z.sum_sq += v * v;
            z.max_abs = z.max_abs.max(v.abs());
            z.count += 1;
            if let Some((m, var)) = per {
                expected.0 += m;
                expected.1 += var;
            }
        }
        z.expected = per.map(|_| expected);
        z
    }
}

pub fn run(cfg: &ExperimentConfig, q: &QuantizeConfig) -> anyhow::Result<Artifact> {
    let resolved = GradientSpec::from_quantize(q).resolve("quantize")?;
    let shared_seed = derive_seed(cfg.seed, 0);
    let (encoder, moment_bound, moment_formula) = match &resolved {
        Resolved::Ratq(p) if p.is_subsampled() => {
            (Encoder::Rcs(p.config(shared_seed)?, p.sample_count), 2.0 * p.norm_bound.powi(2) / p.mu(), "2*B^2/mu")
        }
        Resolved::Ratq(p) => (Encoder::Ratq(p.config(shared_seed)?), 2.0 * p.norm_bound.powi(2), "2*B^2"),
        Resolved::Aratq(p) => (Encoder::Aratq(p.config(shared_seed)?), p.alpha_bound().powi(2), "alpha^2"),
        Resolved::Unquantized { .. } => anyhow::bail!("quantize experiments need a quantizer"),
    };
    let points: Vec<Vec<f64>> = (0..q.points)
        .map(|p| {
            let mut rng = SeedBundle::new(cfg.seed, StreamLabel::Trial).stream(p as u64);
            input_point(q.inputs, q.dim, q.bound, p, &mut rng)
        })
        .collect();

    // Trial t uses point t mod P; one parallel task per point.
    let stats = chunked(q.points, 1, |p, _| -> anyhow::Result<PointStats> {
        let x = &points[p];
        let mut st = PointStats {
            trials: 0,
            bits: 0,
            err: vec![MeanSe::default(); q.dim],
            sq_norm: MeanSe::default(),
            sq_error: MeanSe::default(),
            overflows: 0,
            roundtrip_failures: 0,
            saved: Vec::new(),
        };
        for t in (p..cfg.trials).step_by(q.points) {
            let mut rng = SeedBundle::new(cfg.seed, StreamLabel::Rounding).stream(t as u64);
            let enc = encoder.encode(x, t as u64, &mut rng)?;
            let mut sq_err = 0.0;
            for (acc, (qi, xi)) in st.err.iter_mut().zip(enc.decoded.iter().zip(x)) {
                acc.push(qi - xi);
                sq_err += (qi - xi) * (qi - xi);
            }
            st.sq_norm.push(enc.decoded.iter().map(|v| v * v).sum());
            st.sq_error.push(sq_err);
            st.overflows += enc.overflows;
            st.roundtrip_failures += usize::from(!enc.roundtrip_ok);
            st.bits = enc.bit_len;
            st.trials += 1;
            if t < q.save_blocks {
                st.saved.push(SavedBlock {
                    stem: format!("blocks/trial_{t:06}"),
                    header: enc.header,
                    bytes: enc.bytes,
                });
            }
        }
        Ok(st)
    });
    let stats = stats.into_iter().collect::<anyhow::Result<Vec<_>>>()?;

    let mut table = Table::new("quantize", &COLUMNS);
    let mut summary = Summary::new("quantize", cfg.seed, cfg.trials);
    record_params(&mut summary, &resolved);
    let mut pooled_norm = MeanSe::default();
    let mut pooled_err = MeanSe::default();
    let (mut chi2, mut dof, mut max_z) = (0.0, 0usize, 0.0f64);
    let mut chi2_moments = Some((0.0, 0.0));
    let (mut grand, mut grand_var) = (0.0, 0.0);
    let (mut overflows, mut failures) = (0, 0);
    let mut bits = 0;
    let mut blocks = Vec::new();
    for (p, st) in stats.into_iter().enumerate() {
        let z = st.z_scores();
        table.push(vec![
            cell(p),
            cell(st.trials),
            cell(st.bits),
            cell(st.sq_norm.mean()),
            cell(st.sq_norm.se()),
            cell(st.sq_error.mean()),
            cell(z.sum_sq),
            cell(z.max_abs),
            cell(st.overflows),
            cell(st.roundtrip_failures),
        ]);
        chi2 += z.sum_sq;
        dof += z.count;
        max_z = max_z.max(z.max_abs);
        chi2_moments = chi2_moments.zip(z.expected).map(|((a, b), (c, d))| (a + c, b + d));
        for e in &st.err {
            grand += e.mean();
            grand_var += e.se().powi(2);
        }
        pooled_norm.merge(&st.sq_norm);
        pooled_err.merge(&st.sq_error);
        overflows += st.overflows;
        failures += st.roundtrip_failures;
        if st.trials > 0 {
            ensure!(bits == 0 || bits == st.bits, "bit length varied across trials");
            bits = st.bits;
        }
        blocks.extend(st.saved);
    }

    let expected_bits = summary.parameters["bits"];
    summary.metric("bits_per_vector", bits as f64);
    summary.metric("mean_sq_norm", pooled_norm.mean());
    summary.metric("sq_norm_se", pooled_norm.se());
    summary.metric("mean_sq_error", pooled_err.mean());
    summary.metric("chi2", chi2);
    summary.metric("chi2_dof", dof as f64);
    summary.metric("max_abs_z", max_z);
    summary.metric("overflows", overflows as f64);
    summary.metric("roundtrip_failures", failures as f64);
    summary.check(Check::at_most(
        "bit_len",
        (bits as f64 - expected_bits).abs(),
        0.0,
        format!("emitted {bits} bits per vector, formula gives {expected_bits}"),
    ));
    summary.check(Check::at_most("roundtrip", failures as f64, 0.0, "unpack/repack/decode mismatches"));
    let moment = pooled_norm.mean() + 3.0 * pooled_norm.se();
    summary.check(Check::at_most(
        "second_moment",
        moment,
        moment_bound,
        format!("mean ||Q(Y)||^2 + 3*SE against {moment_formula}"),
    ));
    // Σz² sits within 4 SD of its null expectation with overwhelming probability.
    match chi2_moments {
        Some((mean, var)) => {
            let slack = 4.0 * var.sqrt();
            summary.metric("chi2_expected", mean);
            summary.check(Check::within(
                "unbiased_chi2",
                chi2,
                mean - slack,
                mean + slack,
                "sum of squared per-coordinate z-scores, null mean +- 4 SD",
            ));
        }
        None => summary.warn("fewer than 6 trials per point: the z-score aggregate check is skipped".into()),
    }
    let grand_z = if grand_var > 0.0 { grand / grand_var.sqrt() } else { 0.0 };
    summary.metric("pooled_mean_error_z", grand_z);
    summary.check(Check::at_most(
        "unbiased_pooled",
        grand_z.abs(),
        4.0,
        "|sum of mean errors| in units of its SE",
    ));
    summary.check(Check::at_most("no_overflow", overflows as f64, 0.0, "overflow symbols on inputs inside the ball"));

    Ok(Artifact { table, summary, blocks })
}
