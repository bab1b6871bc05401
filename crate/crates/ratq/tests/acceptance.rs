//! The ten acceptance criteria, run in sequence so the runtime budgets are
//! measured without competing tests. Each criterion prints one PASS/FAIL line
//! to stderr (unbuffered, so it survives output capture) and the test fails
//! at the end if any criterion did.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;

use ratq::report::Summary;
use ratq::{run_with_workers, Artifact, ExperimentConfig};
use ratq_core::gain_shape::{aratq_encode, GainShapeBlock, GainShapeConfig};
use ratq_core::numerics::{fwht, standard_normal, SeedBundle, StreamLabel, StreamRng};
use ratq_core::params::{AratqParams, RatqParams, RdParams};
use ratq_core::ratq::{rcs_encode, ratq_encode, EncodedBlock, RatqConfig, SubsampleSet};

// Pinned tolerances and budgets.
const C1_INPUTS: usize = 100_000;
const C1_BUDGET: Duration = Duration::from_secs(30);
const C2_REL_TOL: f64 = 1e-12;
const C2_BUDGET: Duration = Duration::from_secs(1);
const C3_BUDGET: Duration = Duration::from_secs(300);
const C3_MEAN_SE: f64 = 4.0;
const C3_MOMENT_SE: f64 = 3.0;
const C4_BUDGET: Duration = Duration::from_secs(120);
const C4_BOUND: f64 = 0.0442;
const GAP_SE: f64 = 2.0;
const C5_BUDGET: Duration = Duration::from_secs(120);
const C5_SAMPLES: usize = 12;
const C6_BUDGET: Duration = Duration::from_secs(180);
const C7_BUDGET: Duration = Duration::from_secs(300);
const C7_MSE_SE: f64 = 3.0;
const C7_RATIO: [f64; 2] = [1.6, 2.4];
const C8_BUDGET: Duration = Duration::from_secs(120);
const C8_MSE_SE: f64 = 3.0;
const C8_RATE_SLACK: f64 = 6.0;
const C9_BUDGET: Duration = Duration::from_secs(180);
const C9_BIAS_SE: f64 = 3.0;
/// Slack for comparing a pinned decimal with its exact value.
const PIN_TOL: f64 = 5e-5;

struct Verdict {
    id: u8,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn announce(v: &Verdict) {
    let tag = if v.passed { "PASS" } else { "FAIL" };
    let line = format!("acceptance C{:<2} {tag} {}: {}\n", v.id, v.name, v.detail);
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn clog2(n: u64) -> usize {
    if n <= 1 {
        0
    } else {
        (64 - (n - 1).leading_zeros()) as usize
    }
}

/// `⌈d/s⌉⌈log₂ h⌉ + d⌈log₂(k+1)⌉`.
fn block_bits(d: usize, s: usize, h: usize, k: usize) -> usize {
    d.div_ceil(s) * clog2(h as u64) + d * clog2(k as u64 + 1)
}

fn rng(label: StreamLabel, i: u64) -> StreamRng {
    SeedBundle::new(0xACCE, label).stream(i)
}

fn random_ball_point(dim: usize, radius: f64, r: &mut StreamRng) -> Vec<f64> {
    match r.random_range(0..8) {
        0 => vec![0.0; dim],
        1 => {
            let mut v = vec![0.0; dim];
            v[r.random_range(0..dim)] = if r.random() { radius } else { -radius };
            v
        }
        _ => {
            let g: Vec<f64> = (0..dim).map(|_| standard_normal(r)).collect();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = radius * r.random::<f64>().sqrt() / n;
            g.into_iter().map(|x| x * scale).collect()
        }
    }
}

enum Case {
    Ratq(RatqConfig),
    Rcs(RatqConfig, usize),
    Unrotated(RatqConfig),
    GainShape(GainShapeConfig, usize),
}

impl Case {
    /// Bit length from the closed-form expression, not from the layout.
    fn formula(&self) -> usize {
        let shape = |c: &RatqConfig, coords: Option<usize>| {
            let h = c.ladder().len();
            match coords {
                Some(n) => n * (clog2(h as u64) + clog2(c.levels() as u64 + 1)),
                None => block_bits(c.padded_dim(), c.subvector_len(), h, c.levels() as usize),
            }
        };
        match self {
            Self::Ratq(c) | Self::Unrotated(c) => shape(c, None),
            Self::Rcs(c, n) => shape(c, Some(*n)),
            Self::GainShape(c, gain_bits) => *gain_bits + shape(c.shape(), c.sample_count()),
        }
    }
}

fn c1_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    for d in [1, 2, 3, 7, 16, 100, 128, 1024] {
        cases.push(Case::Ratq(RatqParams::high_precision(d, 1.0).unwrap().config(d as u64).unwrap()));
    }
    for (d, r) in [(128, 64), (1024, 64), (64, 40), (5, 200)] {
        let p = RatqParams::low_precision(d, 2.0, r).unwrap();
        let cfg = p.config(r as u64).unwrap();
        cases.push(if p.is_subsampled() { Case::Rcs(cfg, p.sample_count) } else { Case::Ratq(cfg) });
    }
    for (d, v, dist) in [(40, 1.0, 0.05), (100, 2.0, 0.1), (3, 0.5, 0.1)] {
        cases.push(Case::Unrotated(RdParams::new(d, v, dist).unwrap().config(0).unwrap()));
    }
    let odd = |m, m0, h, s, k, d| {
        let ladder = ratq_core::adaptive::RangeLadder::tetra(m, m0, h).unwrap();
        RatqConfig::new(d, 1.5, s, k, ladder, 99).unwrap()
    };
    cases.push(Case::Ratq(odd(0.5, 0.1, 3, 5, 3, 48)));
    cases.push(Case::Ratq(odd(0.2, 0.0, 2, 64, 2, 20)));
    cases.push(Case::Ratq(odd(1.0, 0.3, 4, 3, 30, 33)));
    for p in [
        AratqParams::high_precision(64, 3.0, 1024).unwrap(),
        AratqParams::high_precision(200, 1.0, 1 << 20).unwrap(),
        AratqParams::low_precision(64, 3.0, 1024, 40, 4).unwrap(),
        AratqParams::low_precision(1024, 1.0, 1 << 16, 69, 4).unwrap(),
    ] {
        let gain_bits = clog2(p.gain.ranges as u64) + clog2(p.gain.levels as u64 + 1);
        cases.push(Case::GainShape(p.config(7).unwrap(), gain_bits));
    }
    cases
}

fn padding_is_zero(bits: &[u8], bit_len: usize) -> bool {
    bits.len() == bit_len.div_ceil(8) && (bit_len.is_multiple_of(8) || bits[bits.len() - 1] & (0xFF >> (bit_len % 8)) == 0)
}

/// Pack/unpack identity and the bit-length formula on one fresh input.
fn c1_check(case: &Case, index: usize, r: &mut StreamRng) -> Result<(), String> {
    let nonce = index as u64;
    let ratq_ok = |block: &EncodedBlock, want: usize| -> Result<(), String> {
        if block.bit_len != want {
            return Err(format!("bit_len {} != formula {want}", block.bit_len));
        }
        if !padding_is_zero(&block.bits, block.bit_len) {
            return Err("nonzero padding".into());
        }
        let words = block.layout.unpack(block).map_err(|e| e.to_string())?;
        let repacked = block.layout.pack(&words).map_err(|e| e.to_string())?;
        let reread = EncodedBlock::from_parts(repacked.bits.clone(), repacked.bit_len, block.layout)
            .map_err(|e| e.to_string())?;
        if repacked.bits != block.bits || reread.layout.unpack(&reread).map_err(|e| e.to_string())? != words {
            return Err("round trip changed the bits".into());
        }
        Ok(())
    };
    let err = |e: ratq_core::Error| e.to_string();
    match case {
        Case::Ratq(c) => {
            let x = random_ball_point(c.dim(), c.norm_bound().unwrap(), r);
            ratq_ok(&ratq_encode(&x, c, nonce, r).map_err(err)?, case.formula())
        }
        Case::Rcs(c, n) => {
            let x = random_ball_point(c.dim(), c.norm_bound().unwrap(), r);
            let set = SubsampleSet::draw(c.padded_dim(), *n, c.seed(), nonce).map_err(err)?;
            ratq_ok(&rcs_encode(&x, c, &set, nonce, r).map_err(err)?, case.formula())
        }
        Case::Unrotated(c) => {
            // Any real input is valid; a wide scale exercises overflow symbols.
            let scale = 10f64.powf(r.random_range(-2.0..1.5));
            let x: Vec<f64> = (0..c.dim()).map(|_| scale * standard_normal(r)).collect();
            ratq_ok(&ratq_encode(&x, c, nonce, r).map_err(err)?, case.formula())
        }
        Case::GainShape(c, _) => {
            let radius = 10f64.powf(r.random_range(-1.0..1.5));
            let x = random_ball_point(c.dim(), radius, r);
            let mut gain_rng = SeedBundle::new(r.random(), StreamLabel::Rounding).stream(nonce);
            let block = aratq_encode(&x, c, nonce, &mut gain_rng, r).map_err(err)?;
            let (bits, len) = block.to_bits(c).map_err(err)?;
            if len != case.formula() || !padding_is_zero(&bits, len) {
                return Err(format!("bit_len {len} != formula {}", case.formula()));
            }
            let back = GainShapeBlock::from_bits(&bits, len, c).map_err(err)?;
            if back != block || back.to_bits(c).map_err(err)? != (bits, len) {
                return Err("gain-shape round trip changed the bits".into());
            }
            Ok(())
        }
    }
}

fn c1() -> Verdict {
    let start = Instant::now();
    let cases = c1_cases();
    let mut r = rng(StreamLabel::Trial, 1);
    let mut failures = Vec::new();
    for i in 0..C1_INPUTS {
        let case = &cases[i % cases.len()];
        if let Err(e) = c1_check(case, i, &mut r) {
            failures.push(format!("input {i}: {e}"));
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        id: 1,
        name: "codec exactness",
        passed: failures.is_empty() && elapsed < C1_BUDGET,
        detail: format!(
            "{C1_INPUTS} inputs over {} configs, {} mismatches{}, {:.1?} (budget {C1_BUDGET:?})",
            cases.len(),
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default(),
            elapsed
        ),
    }
}

fn c2() -> Verdict {
    let start = Instant::now();
    let mut r = rng(StreamLabel::Trial, 2);
    let mut worst = 0.0f64;
    for d in [2usize, 4, 8, 16, 32, 64] {
        for _ in 0..20 {
            let v: Vec<f64> = (0..d).map(|_| standard_normal(&mut r)).collect();
            let fast = fwht(&v).unwrap();
            let naive: Vec<f64> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| if (i & j).count_ones().is_multiple_of(2) { v[j] } else { -v[j] })
                        .sum::<f64>()
                })
                .collect();
            let diff = fast.iter().zip(&naive).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = naive.iter().map(|a| a * a).sum::<f64>().sqrt();
            worst = worst.max(diff / scale);
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        id: 2,
        name: "WHT oracle equivalence",
        passed: worst <= C2_REL_TOL && elapsed < C2_BUDGET,
        detail: format!("max relative error {worst:e} (tol {C2_REL_TOL:e}), {elapsed:.1?}"),
    }
}

const C3_CONFIG: &str = r#"
kind = "quantize"
trials = 100000
seed = 3
[quantize]
dim = 1024
bound = 1.0
mode = "ratq-high"
points = 100
"#;

const C4_CONFIG: &str = r#"
kind = "psgd"
trials = 20
seed = 4
[psgd]
dim = 128
horizon = 1024
diameter = 1.0
bound = 1.0
oracle = "noisy-linear"
quantizer = "ratq-high"
"#;

const C5_CONFIG: &str = r#"
kind = "psgd"
trials = 20
seed = 5
[psgd]
dim = 128
horizon = 1024
diameter = 1.0
bound = 1.0
oracle = "noisy-linear"
quantizer = "ratq-low"
budget = 64
"#;

const C6_CONFIG: &str = r#"
kind = "psgd"
trials = 20
seed = 6
[psgd]
dim = 128
horizon = 1024
diameter = 1.0
bound = 1.0
oracle = "gaussian-linear"
quantizer = "aratq-high"
"#;

const C7_CONFIG: &str = r#"
kind = "dme"
trials = 10000
seed = 7
[dme]
dim = 256
clients = [8, 16, 32]
ratio_window = [1.6, 2.4]
"#;

const C8_CONFIG: &str = r#"
kind = "rd"
trials = 100
seed = 8
[rd]
dim = 4096
variance = 1.0
distortion = 0.05
sources = ["gaussian", "rademacher"]
rate_slack = 6.0
"#;

const C9_CONFIG: &str = r#"
kind = "adversarial"
trials = 20
seed = 9
[adversarial]
dim = 16
horizon = 1024
diameter = 1.0
bound = 1.0
uniform_range = 1.0
bias_samples = 100000
[adversarial.heavy_tailed]
alpha = 1
delta = 0.3
tail = 1.0
"#;

const STATISTICAL: [&str; 7] = [C3_CONFIG, C4_CONFIG, C5_CONFIG, C6_CONFIG, C7_CONFIG, C8_CONFIG, C9_CONFIG];

fn run(text: &str, workers: usize) -> (Artifact, Duration) {
    let cfg = ExperimentConfig::from_toml(text).expect("acceptance config is valid");
    let start = Instant::now();
    let artifact = run_with_workers(&cfg, workers).expect("experiment runs");
    (artifact, start.elapsed())
}

fn metric(s: &Summary, key: &str) -> f64 {
    *s.metrics.get(key).unwrap_or_else(|| panic!("summary has no metric {key}"))
}

fn param(s: &Summary, key: &str) -> f64 {
    *s.parameters.get(key).unwrap_or_else(|| panic!("summary has no parameter {key}"))
}

fn c3(s: &Summary, elapsed: Duration) -> Verdict {
    let (moment, se) = (metric(s, "mean_sq_norm"), metric(s, "sq_norm_se"));
    let moment_ok = moment <= 2.0 + C3_MOMENT_SE * se;
    let pooled_z = metric(s, "pooled_mean_error_z");
    let (chi2, chi2_mean) = (metric(s, "chi2"), metric(s, "chi2_expected"));
    let chi2_ok = s.checks.iter().any(|c| c.name == "unbiased_chi2" && c.passed);
    let overflows = metric(s, "overflows");
    let params_ok = (param(s, "h"), param(s, "s"), param(s, "k"), param(s, "bits")) == (4.0, 2.0, 7.0, 4096.0);
    Verdict {
        id: 3,
        name: "RATQ unbiasedness and second moment",
        passed: moment_ok
            && pooled_z.abs() <= C3_MEAN_SE
            && chi2_ok
            && overflows == 0.0
            && params_ok
            && metric(s, "roundtrip_failures") == 0.0
            && elapsed < C3_BUDGET,
        detail: format!(
            "E||Q||^2 = {moment:.5} <= 2 + {C3_MOMENT_SE}*{se:.1e}; pooled z = {pooled_z:.2}; \
             sum z^2 = {chi2:.0} vs {chi2_mean:.0}; max |z| = {:.2} over {} coords; \
             overflows = {overflows}; {elapsed:.1?}",
            metric(s, "max_abs_z"),
            metric(s, "chi2_dof"),
        ),
    }
}

fn gap_verdict(id: u8, name: &'static str, s: &Summary, bound: f64, budget: Duration, elapsed: Duration) -> Verdict {
    let (gap, se) = (metric(s, "mean_gap"), metric(s, "gap_se"));
    let emitted = param(s, "bound");
    Verdict {
        id,
        name,
        passed: gap + GAP_SE * se <= bound && (emitted - bound).abs() <= 1e-12 && elapsed < budget,
        detail: format!("mean gap {gap:.5} + {GAP_SE}*{se:.1e} <= {bound:.5}; {elapsed:.1?}"),
    }
}

fn c4(s: &Summary, elapsed: Duration) -> Verdict {
    let bound = std::f64::consts::SQRT_2 / 1024f64.sqrt();
    let mut v = gap_verdict(4, "PSGD high precision", s, bound, C4_BUDGET, elapsed);
    v.passed &= (bound - C4_BOUND).abs() < PIN_TOL;
    v
}

fn c5(s: &Summary, elapsed: Duration) -> Verdict {
    let sampled = param(s, "sampled_coordinates");
    let mu = sampled / 128.0;
    let bound = std::f64::consts::SQRT_2 / (mu * 1024.0).sqrt();
    let mut v = gap_verdict(5, "RCS low precision", s, bound, C5_BUDGET, elapsed);
    v.passed &= sampled == C5_SAMPLES as f64;
    v.detail = format!("mu*d = {sampled}; {}", v.detail);
    v
}

fn c6(s: &Summary, elapsed: Duration) -> Verdict {
    let mut v = gap_verdict(6, "A-RATQ mean-square regime", s, 3.0 / 1024f64.sqrt(), C6_BUDGET, elapsed);
    v.passed &= s.warnings.is_empty();
    v
}

fn c7(s: &Summary, elapsed: Duration) -> Verdict {
    let mut passed = elapsed < C7_BUDGET;
    let mut parts = Vec::new();
    for n in [8u32, 16, 32] {
        let (mse, se) = (metric(s, &format!("mse_n{n}")), metric(s, &format!("mse_se_n{n}")));
        passed &= mse <= 1.0 / f64::from(n) + C7_MSE_SE * se;
        parts.push(format!("MSE({n}) = {mse:.5}"));
    }
    for n in [8u32, 16] {
        let ratio = metric(s, &format!("mse_n{n}")) / metric(s, &format!("mse_n{}", 2 * n));
        passed &= (C7_RATIO[0]..=C7_RATIO[1]).contains(&ratio);
        parts.push(format!("ratio({n}) = {ratio:.3}"));
    }
    Verdict {
        id: 7,
        name: "DME",
        passed,
        detail: format!("{}; {elapsed:.1?}", parts.join(", ")),
    }
}

fn c8(s: &Summary, elapsed: Duration) -> Verdict {
    let rate_cap = 0.5 * 20f64.log2() + C8_RATE_SLACK;
    let mut passed = elapsed < C8_BUDGET;
    let mut parts = Vec::new();
    for src in ["gaussian", "rademacher"] {
        let (mse, se, rate) = (
            metric(s, &format!("{src}_mse")),
            metric(s, &format!("{src}_mse_se")),
            metric(s, &format!("{src}_rate")),
        );
        passed &= mse <= 0.05 + C8_MSE_SE * se && rate <= rate_cap;
        parts.push(format!("{src}: MSE {mse:.5}, rate {rate}"));
    }
    Verdict {
        id: 8,
        name: "rate-distortion",
        passed,
        detail: format!("{} (rate cap {rate_cap:.3}); {elapsed:.1?}", parts.join("; ")),
    }
}

fn c9(s: &Summary, elapsed: Duration) -> Verdict {
    let (ours, foil) = (metric(s, "aratq_mean_gap"), metric(s, "uniform-gain_mean_gap"));
    let (bias, se) = (metric(s, "aratq_bias"), metric(s, "aratq_bias_se"));
    let envelope = param(s, "B").powi(2) / param(s, "gain_top");
    let spikes_overflow = param(s, "spike_magnitude") > param(s, "uniform_range");
    Verdict {
        id: 9,
        name: "adversarial gain",
        passed: spikes_overflow && ours < foil && bias <= envelope + C9_BIAS_SE * se && elapsed < C9_BUDGET,
        detail: format!(
            "mean gap {ours:.5} (A-RATQ) < {foil:.5} (uniform gain); bias {bias:.4} <= {envelope:.4} + {C9_BIAS_SE}*{se:.1e}; {elapsed:.1?}"
        ),
    }
}

fn c10(first: &[(Vec<u8>, String)]) -> Verdict {
    let start = Instant::now();
    let mut mismatched = Vec::new();
    for (i, (text, (csv, summary))) in STATISTICAL.iter().zip(first).enumerate() {
        // A different pool size must not change a byte.
        let (again, _) = run(text, 3);
        if again.table.to_bytes().unwrap() != *csv || again.summary.to_toml() != *summary {
            mismatched.push(format!("C{}", i + 3));
        }
    }
    Verdict {
        id: 10,
        name: "determinism",
        passed: mismatched.is_empty(),
        detail: format!("reran C3-C9 on 3 workers: mismatches {mismatched:?}; {:.1?}", start.elapsed()),
    }
}

#[test]
fn acceptance_criteria() {
    let mut verdicts = Vec::new();
    let mut record = |v: Verdict| {
        announce(&v);
        verdicts.push((v.id, v.name, v.passed));
    };
    record(c1());
    record(c2());
    let graders: [fn(&Summary, Duration) -> Verdict; 7] = [c3, c4, c5, c6, c7, c8, c9];
    let mut first = Vec::new();
    for (text, grade) in STATISTICAL.iter().zip(graders) {
        let (artifact, elapsed) = run(text, 1);
        record(grade(&artifact.summary, elapsed));
        first.push((artifact.table.to_bytes().unwrap(), artifact.summary.to_toml()));
    }
    record(c10(&first));
    let failed: Vec<_> = verdicts.iter().filter(|v| !v.2).map(|v| format!("C{} {}", v.0, v.1)).collect();
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
