//! Declarative experiment configuration (TOML).
//!
//! One file describes one experiment: the top-level keys pick the kind, trial
//! count, master seed and output directory, and a table named after the kind
//! carries its parameters. Unknown keys are rejected so typos surface as
//! diagnostics instead of silently falling back to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ratq_core::params::{AratqParams, RatqParams, RdParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Quantize,
    Psgd,
    Dme,
    Rd,
    Adversarial,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Quantize => "quantize",
            Self::Psgd => "psgd",
            Self::Dme => "dme",
            Self::Rd => "rd",
            Self::Adversarial => "adversarial",
        }
    }
}

/// Parameter regime of a gradient quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizerMode {
    Unquantized,
    RatqHigh,
    RatqLow,
    AratqHigh,
    AratqLow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    NoisyLinear,
    NoisyQuadratic,
    GaussianLinear,
    HeavyTailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    /// Uniform points on the sphere of radius `B`.
    Sphere,
    /// `±B·e_i` for a rotating choice of `i`.
    Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Gaussian,
    /// `±√v` with equal probability.
    Rademacher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    /// Output directory; `--out` overrides it.
    pub output: Option<PathBuf>,
    /// Exit nonzero when a recorded bound check fails.
    #[serde(default = "yes")]
    pub check: bool,
    pub quantize: Option<QuantizeConfig>,
    pub psgd: Option<PsgdConfig>,
    pub dme: Option<DmeConfig>,
    pub rd: Option<RdConfig>,
    pub adversarial: Option<AdversarialConfig>,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizeConfig {
    pub dim: usize,
    #[serde(default = "one")]
    pub bound: f64,
    pub mode: QuantizerMode,
    /// Distinct input vectors; trial `t` uses vector `t mod points`.
    pub points: usize,
    #[serde(default = "sphere")]
    pub inputs: InputKind,
    /// Bit budget `r` (low-precision modes).
    pub budget: Option<usize>,
    /// Gain bits `r_g` (`aratq-low`).
    pub gain_bits: Option<usize>,
    /// Horizon `T` fixing the gain ladder (A-RATQ modes).
    pub horizon: Option<u64>,
    /// Write the first few encoded blocks with sidecar headers.
    #[serde(default)]
    pub save_blocks: usize,
}

fn sphere() -> InputKind {
    InputKind::Sphere
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsgdConfig {
    pub dim: usize,
    pub horizon: usize,
    #[serde(default = "one")]
    pub diameter: f64,
    #[serde(default = "one")]
    pub bound: f64,
    pub oracle: OracleKind,
    pub quantizer: QuantizerMode,
    pub budget: Option<usize>,
    pub gain_bits: Option<usize>,
    /// Overrides the default `D/(α√T)`.
    pub step_size: Option<f64>,
    /// Write one CSV row per iteration instead of one per trial.
    #[serde(default = "yes")]
    pub per_iteration: bool,
    #[serde(default)]
    pub heavy_tailed: HeavyTailedConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyTailedConfig {
    pub alpha: i8,
    pub delta: f64,
    pub tail: f64,
}

impl Default for HeavyTailedConfig {
    fn default() -> Self {
        Self {
            alpha: 1,
            delta: 0.3,
            tail: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmeConfig {
    pub dim: usize,
    pub clients: Vec<usize>,
    #[serde(default = "sphere")]
    pub inputs: InputKind,
    /// Accepted range of `MSE(n)/MSE(2n)`.
    #[serde(default = "ratio_window")]
    pub ratio_window: [f64; 2],
}

fn ratio_window() -> [f64; 2] {
    [1.6, 2.4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdConfig {
    pub dim: usize,
    #[serde(default = "one")]
    pub variance: f64,
    pub distortion: f64,
    #[serde(default = "gaussian_only")]
    pub sources: Vec<SourceKind>,
    /// Allowed excess of the rate over `½·log₂(v/D)`, in bits per dimension.
    #[serde(default = "rate_slack")]
    pub rate_slack: f64,
}

fn gaussian_only() -> Vec<SourceKind> {
    vec![SourceKind::Gaussian]
}

fn rate_slack() -> f64 {
    6.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialConfig {
    pub dim: usize,
    pub horizon: usize,
    #[serde(default = "one")]
    pub diameter: f64,
    #[serde(default = "one")]
    pub bound: f64,
    #[serde(default)]
    pub heavy_tailed: HeavyTailedConfig,
    /// Fixed range of the uniform-gain foil; defaults to `B`.
    pub uniform_range: Option<f64>,
    /// Oracle draws used to measure the gain quantizer's bias.
    pub bias_samples: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks cross-field constraints by deriving every parameter once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if i64::try_from(self.seed).is_err() {
            return Err(invalid("seed", "must fit in a signed 64-bit TOML integer"));
        }
        let present = [
            (ExperimentKind::Quantize, self.quantize.is_some()),
            (ExperimentKind::Psgd, self.psgd.is_some()),
            (ExperimentKind::Dme, self.dme.is_some()),
            (ExperimentKind::Rd, self.rd.is_some()),
            (ExperimentKind::Adversarial, self.adversarial.is_some()),
        ];
        for (kind, has) in present {
            if kind == self.kind && !has {
                return Err(invalid(kind.name(), format!("a `{}` experiment needs a [{}] table", kind.name(), kind.name())));
            }
            if kind != self.kind && has {
                return Err(invalid(kind.name(), format!("table does not belong in a `{}` experiment", self.kind.name())));
            }
        }
        match self.kind {
            ExperimentKind::Quantize => {
                let q = self.quantize.as_ref().expect("checked above");
                if q.points == 0 {
                    return Err(invalid("quantize.points", "must be at least 1"));
                }
                if q.mode == QuantizerMode::Unquantized {
                    return Err(invalid("quantize.mode", "nothing to measure without a quantizer"));
                }
                GradientSpec::from_quantize(q).resolve("quantize")?;
            }
            ExperimentKind::Psgd => {
                let p = self.psgd.as_ref().expect("checked above");
                if p.horizon == 0 {
                    return Err(invalid("psgd.horizon", "must be at least 1"));
                }
                positive("psgd.diameter", p.diameter)?;
                positive("psgd.bound", p.bound)?;
                if let Some(eta) = p.step_size {
                    positive("psgd.step_size", eta)?;
                }
                GradientSpec::from_psgd(p).resolve("psgd")?;
            }
            ExperimentKind::Dme => {
                let d = self.dme.as_ref().expect("checked above");
                if d.clients.is_empty() || d.clients.contains(&0) {
                    return Err(invalid("dme.clients", "need one or more positive client counts"));
                }
                if d.ratio_window[0].partial_cmp(&d.ratio_window[1]) != Some(std::cmp::Ordering::Less) {
                    return Err(invalid("dme.ratio_window", "lower end must be below the upper end"));
                }
                RatqParams::high_precision(d.dim, 1.0).map_err(|e| invalid("dme.dim", e.to_string()))?;
            }
            ExperimentKind::Rd => {
                let r = self.rd.as_ref().expect("checked above");
                if r.sources.is_empty() {
                    return Err(invalid("rd.sources", "list at least one source"));
                }
                RdParams::new(r.dim, r.variance, r.distortion).map_err(|e| invalid("rd", e.to_string()))?;
            }
            ExperimentKind::Adversarial => {
                let a = self.adversarial.as_ref().expect("checked above");
                if a.horizon == 0 {
                    return Err(invalid("adversarial.horizon", "must be at least 1"));
                }
                if a.bias_samples < 2 {
                    return Err(invalid("adversarial.bias_samples", "need at least 2 samples"));
                }
                positive("adversarial.diameter", a.diameter)?;
                positive("adversarial.bound", a.bound)?;
                if let Some(r) = a.uniform_range {
                    positive("adversarial.uniform_range", r)?;
                }
                ratq_core::optimize::HeavyTailed::new(
                    a.dim,
                    a.heavy_tailed.alpha,
                    a.heavy_tailed.delta,
                    a.heavy_tailed.tail,
                    a.bound,
                    a.diameter,
                )
                .map_err(|e| invalid("adversarial.heavy_tailed", e.to_string()))?;
                AratqParams::high_precision(a.dim, a.bound, a.horizon as u64)
                    .map_err(|e| invalid("adversarial", e.to_string()))?;
            }
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

/// The quantizer-selecting subset of a config section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSpec {
    pub mode: QuantizerMode,
    pub dim: usize,
    pub bound: f64,
    pub budget: Option<usize>,
    pub gain_bits: Option<usize>,
    pub horizon: Option<u64>,
}

/// Fully derived quantizer parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Unquantized { dim: usize, bound: f64 },
    Ratq(RatqParams),
    Aratq(AratqParams),
}

impl GradientSpec {
    pub fn from_quantize(q: &QuantizeConfig) -> Self {
        Self {
            mode: q.mode,
            dim: q.dim,
            bound: q.bound,
            budget: q.budget,
            gain_bits: q.gain_bits,
            horizon: q.horizon,
        }
    }

    pub fn from_psgd(p: &PsgdConfig) -> Self {
        Self {
            mode: p.quantizer,
            dim: p.dim,
            bound: p.bound,
            budget: p.budget,
            gain_bits: p.gain_bits,
            horizon: Some(p.horizon as u64),
        }
    }

    /// Derives the parameters; errors name the offending field of `section`.
    pub fn resolve(&self, section: &str) -> Result<Resolved, ConfigError> {
        let field = |name: &str| format!("{section}.{name}");
        let need = |v: Option<usize>, name: &str, why: &str| {
            v.ok_or_else(|| invalid(&field(name), format!("required by {why}")))
        };
        let horizon = || {
            self.horizon
                .ok_or_else(|| invalid(&field("horizon"), "required by the A-RATQ gain ladder"))
        };
        let wrap = |name: &str| {
            let f = field(name);
            move |e: ratq_core::Error| invalid(&f, e.to_string())
        };
        Ok(match self.mode {
            QuantizerMode::Unquantized => Resolved::Unquantized {
                dim: self.dim,
                bound: self.bound,
            },
            QuantizerMode::RatqHigh => {
                Resolved::Ratq(RatqParams::high_precision(self.dim, self.bound).map_err(wrap("dim"))?)
            }
            QuantizerMode::RatqLow => {
                let r = need(self.budget, "budget", "ratq-low")?;
                Resolved::Ratq(RatqParams::low_precision(self.dim, self.bound, r).map_err(wrap("budget"))?)
            }
            QuantizerMode::AratqHigh => Resolved::Aratq(
                AratqParams::high_precision(self.dim, self.bound, horizon()?).map_err(wrap("horizon"))?,
            ),
            QuantizerMode::AratqLow => {
                let r = need(self.budget, "budget", "aratq-low")?;
                let rg = need(self.gain_bits, "gain_bits", "aratq-low")?;
                Resolved::Aratq(
                    AratqParams::low_precision(self.dim, self.bound, horizon()?, r, rg)
                        .map_err(wrap("gain_bits"))?,
                )
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PSGD: &str = r#"
kind = "psgd"
trials = 3
seed = 1

[psgd]
dim = 16
horizon = 64
oracle = "noisy-linear"
quantizer = "ratq-low"
budget = 30
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(PSGD).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Psgd);
        assert!(cfg.check);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_field_names_its_line() {
        let text = PSGD.replace("budget = 30", "budgte = 30");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("budgte"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn missing_budget_is_reported() {
        let text = PSGD.replace("budget = 30\n", "");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("psgd.budget"), "{err}");
    }

    #[test]
    fn odd_gain_bits_are_rejected() {
        let text = PSGD
            .replace("ratq-low", "aratq-low")
            .replace("budget = 30", "budget = 40\ngain_bits = 5");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("gain_bits") && err.contains("even"), "{err}");
    }

    #[test]
    fn stray_table_is_rejected() {
        let text = format!("{PSGD}\n[dme]\ndim = 4\nclients = [2]\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
