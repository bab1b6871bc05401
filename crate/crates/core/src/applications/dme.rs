//! Distributed mean estimation: every client sends one RATQ block and the
//! server averages the decoded vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::numerics::{derive_seed, SeedBundle, StreamLabel};
use crate::ratq::{ratq_decode, ratq_encode, RatqConfig, NORM_SLACK};

/// Client vectors in the unit ball, each with its own seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DmeInstance {
    vectors: Vec<Vec<f64>>,
    seeds: Vec<u64>,
}

impl DmeInstance {
    /// Client `i` gets seed `derive_seed(master_seed, i)`.
    pub fn new(vectors: Vec<Vec<f64>>, master_seed: u64) -> Result<Self> {
        let Some(first) = vectors.first() else {
            bail!(Config, "need at least one client");
        };
        let d = first.len();
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != d {
                bail!(Dimension, "client {i} has dimension {} instead of {d}", v.len());
            }
            let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
            if norm.is_nan() || norm > 1.0 + NORM_SLACK {
                bail!(Input, "client {i} has norm {norm} outside the unit ball");
            }
        }
        let seeds = (0..vectors.len() as u64).map(|i| derive_seed(master_seed, i)).collect();
        Ok(Self { vectors, seeds })
    }

    pub fn clients(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    /// `x̄ = (1/n)·Σ x_i`.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.clients() as f64;
        let mut mean = vec![0.0; self.dim()];
        for v in &self.vectors {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x / n;
            }
        }
        mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmeOutcome {
    pub estimate: Vec<f64>,
    pub bits_per_client: usize,
    /// `‖estimate - x̄‖₂²`.
    pub squared_error: f64,
}

/// Each client encodes with `cfg` re-seeded to its own seed, so rotations and
/// rounding are independent across clients.
pub fn dme_estimate(inst: &DmeInstance, cfg: &RatqConfig) -> Result<DmeOutcome> {
    if cfg.dim() != inst.dim() {
        bail!(Dimension, "quantizer dimension {} does not match clients' {}", cfg.dim(), inst.dim());
    }
    if cfg.norm_bound() != Some(1.0) {
        bail!(Config, "mean estimation needs a quantizer for the unit ball");
    }
    let n = inst.clients() as f64;
    let mut estimate = vec![0.0; inst.dim()];
    for (v, &seed) in inst.vectors.iter().zip(&inst.seeds) {
        let client = cfg.with_seed(seed);
        let mut rng = SeedBundle::new(seed, StreamLabel::Rounding).stream(0);
        let block = ratq_encode(v, &client, 0, &mut rng)?;
        for (e, q) in estimate.iter_mut().zip(ratq_decode(&block, &client, 0)?) {
            *e += q / n;
        }
    }
    let squared_error = estimate
        .iter()
        .zip(inst.mean())
        .map(|(e, m)| (e - m) * (e - m))
        .sum();
    Ok(DmeOutcome {
        estimate,
        bits_per_client: cfg.bit_len(),
        squared_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RatqParams;

    #[test]
    fn zero_clients_estimate_exactly() {
        let inst = DmeInstance::new(vec![vec![0.0; 32]; 5], 1).unwrap();
        let cfg = RatqParams::high_precision(32, 1.0).unwrap().config(0).unwrap();
        let out = dme_estimate(&inst, &cfg).unwrap();
        assert_eq!(out.estimate, vec![0.0; 32]);
        assert_eq!(out.squared_error, 0.0);
        assert_eq!(out.bits_per_client, cfg.bit_len());
    }

    #[test]
    fn rejects_points_outside_ball() {
        let mut v = vec![0.0; 4];
        v[2] = 1.1;
        assert!(matches!(DmeInstance::new(vec![v], 0), Err(crate::Error::Input(_))));
        assert!(DmeInstance::new(vec![], 0).is_err());
        assert!(DmeInstance::new(vec![vec![0.0; 2], vec![0.0; 3]], 0).is_err());
    }

    #[test]
    fn client_seeds_are_distinct() {
        let inst = DmeInstance::new(vec![vec![0.0; 2]; 64], 9).unwrap();
        let mut seeds = inst.seeds().to_vec();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 64);
    }
}
