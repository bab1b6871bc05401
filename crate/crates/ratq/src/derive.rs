//! Fully resolved parameter records, for `derive-params` and summaries.

use std::collections::BTreeMap;

use ratq_core::params::{RatqParams, RdParams};

use crate::config::{ConfigError, GradientSpec, QuantizerMode, Resolved};

/// Regimes accepted by `derive-params`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeriveMode {
    Quantizer(QuantizerMode),
    /// High-precision RATQ with `B = 1`, one block per client.
    Dme,
    Rd,
}

impl DeriveMode {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "ratq-high" => Self::Quantizer(QuantizerMode::RatqHigh),
            "ratq-low" => Self::Quantizer(QuantizerMode::RatqLow),
            "aratq-high" => Self::Quantizer(QuantizerMode::AratqHigh),
            "aratq-low" => Self::Quantizer(QuantizerMode::AratqLow),
            "dme" => Self::Dme,
            "rd" => Self::Rd,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeriveRequest {
    pub mode: DeriveMode,
    pub dim: usize,
    pub bound: f64,
    pub horizon: Option<u64>,
    pub budget: Option<usize>,
    pub gain_bits: Option<usize>,
    pub variance: Option<f64>,
    pub distortion: Option<f64>,
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Every derived constant for the request, keyed by name.
pub fn derive(req: &DeriveRequest) -> Result<BTreeMap<String, f64>, ConfigError> {
    match req.mode {
        DeriveMode::Quantizer(mode) => {
            let spec = GradientSpec {
                mode,
                dim: req.dim,
                bound: req.bound,
                budget: req.budget,
                gain_bits: req.gain_bits,
                horizon: req.horizon,
            };
            Ok(param_map(&spec.resolve("derive")?))
        }
        DeriveMode::Dme => {
            let p = RatqParams::high_precision(req.dim, 1.0).map_err(|e| invalid("derive.dim", e.to_string()))?;
            let mut map = param_map(&Resolved::Ratq(p.clone()));
            map.insert("bits_per_client".into(), p.bits as f64);
            Ok(map)
        }
        DeriveMode::Rd => {
            let v = req.variance.ok_or_else(|| invalid("derive.variance", "required by rd"))?;
            let d = req.distortion.ok_or_else(|| invalid("derive.distortion", "required by rd"))?;
            let p = RdParams::new(req.dim, v, d).map_err(|e| invalid("derive", e.to_string()))?;
            Ok(BTreeMap::from([
                ("d".into(), p.dim as f64),
                ("v".into(), p.variance),
                ("D".into(), p.distortion),
                ("m".into(), p.m),
                ("m0".into(), p.m0),
                ("h".into(), f64::from(p.ranges)),
                ("s".into(), p.subvector_len as f64),
                ("k".into(), f64::from(p.levels)),
                ("bits".into(), p.bits as f64),
                ("rate".into(), p.rate()),
            ]))
        }
    }
}

pub fn param_map(resolved: &Resolved) -> BTreeMap<String, f64> {
    let mut map = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        map.insert(k.to_string(), v);
    };
    match resolved {
        Resolved::Unquantized { dim, bound } => {
            put("d", *dim as f64);
            put("B", *bound);
            put("bits", 64.0 * *dim as f64);
            put("alpha", *bound);
        }
        Resolved::Ratq(p) => {
            put("d", p.dim as f64);
            put("padded_d", p.padded_dim as f64);
            put("B", p.norm_bound);
            put("m", p.m);
            put("m0", p.m0);
            put("h", f64::from(p.ranges));
            put("s", p.subvector_len as f64);
            put("k", f64::from(p.levels));
            put("mu", p.mu());
            put("sampled_coordinates", p.sample_count as f64);
            put("bits", p.bits as f64);
            put("alpha", p.alpha_bound());
        }
        Resolved::Aratq(p) => {
            let mut shape = param_map(&Resolved::Ratq(p.shape.clone()));
            shape.remove("B");
            for (k, v) in shape {
                let key = match k.as_str() {
                    "bits" | "alpha" => format!("shape_{k}"),
                    _ => k,
                };
                put(&key, v);
            }
            put("B", p.gain.norm_bound);
            put("T", p.horizon as f64);
            put("a_g", p.gain.ratio);
            put("h_g", f64::from(p.gain.ranges));
            put("k_g", f64::from(p.gain.levels));
            put("r_g", p.gain.bits() as f64);
            put("gain_top", p.gain.top());
            put("bits", p.bits() as f64);
            put("alpha", p.alpha_bound());
            put("beta", p.bias_bound());
        }
    }
    map
}

/// TOML rendering with the mode name first.
pub fn render(mode: &str, map: &BTreeMap<String, f64>) -> String {
    let mut table = toml::Table::new();
    table.insert("mode".into(), toml::Value::String(mode.into()));
    for (k, v) in map {
        table.insert(k.clone(), toml::Value::Float(*v));
    }
    toml::to_string(&table).expect("table serializes")
}
