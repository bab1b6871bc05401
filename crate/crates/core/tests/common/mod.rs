#![allow(dead_code)]

use ratq_core::numerics::{standard_normal, SeedBundle, StreamLabel, StreamRng};

pub fn rng(seed: u64, counter: u64) -> StreamRng {
    SeedBundle::new(seed, StreamLabel::Trial).stream(counter)
}

/// Uniform point on the sphere of radius `r`.
pub fn sphere_point(d: usize, r: f64, rng: &mut StreamRng) -> Vec<f64> {
    let z: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
    let n = norm(&z);
    z.iter().map(|v| r * v / n).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Running per-coordinate mean and variance.
pub struct Moments {
    pub n: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    pub fn new(d: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; d],
            sum_sq: vec![0.0; d],
        }
    }

    pub fn push(&mut self, v: &[f64]) {
        self.n += 1;
        for ((s, q), x) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(v) {
            *s += x;
            *q += x * x;
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.n as f64).collect()
    }

    /// Standard error of each coordinate's mean.
    pub fn std_err(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let m = s / n;
                ((q / n - m * m).max(0.0) / (n - 1.0)).sqrt()
            })
            .collect()
    }

    /// z-scores of the mean against `target`.
    pub fn z_scores(&self, target: &[f64]) -> Vec<f64> {
        self.mean()
            .iter()
            .zip(self.std_err())
            .zip(target)
            .map(|((m, se), t)| match (se == 0.0, *m == *t) {
                (true, true) => 0.0,
                (true, false) => f64::INFINITY,
                _ => (m - t) / se,
            })
            .collect()
    }
}

/// Mean and standard error of a scalar sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Joint check that z-scores are consistent with unbiasedness: the sum of
/// squares stays within `4·sqrt(2d)` of `d` and no single score exceeds 5.
pub fn assert_unbiased(z: &[f64], what: &str) {
    let d = z.len() as f64;
    let chi = z.iter().map(|v| v * v).sum::<f64>();
    let worst = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(
        (chi - d).abs() <= 4.0 * (2.0 * d).sqrt() && worst < 5.0,
        "{what}: sum z² = {chi} for {d} coordinates, max |z| = {worst}"
    );
}
