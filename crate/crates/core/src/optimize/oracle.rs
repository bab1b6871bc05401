//! Noisy first-order oracles with known optima.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use rand::{Rng, RngCore};

use super::{distance, norm, project, Domain};
use crate::error::{bail, Result};
use crate::numerics::standard_normal;

/// Which bound the oracle's samples satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `‖ĝ(x)‖₂ ≤ B` surely.
    AlmostSure,
    /// `E‖ĝ(x)‖₂² ≤ B²`.
    MeanSquare,
}

/// A convex objective with an unbiased random subgradient.
pub trait Oracle: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn regime(&self) -> Regime;
    /// `B` in the regime's bound.
    fn bound(&self) -> f64;
    fn value(&self, x: &[f64]) -> f64;
    /// `E[ĝ(x)]`, an element of the subdifferential.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
    /// `min_{x ∈ dom} f(x)` when known in closed form.
    fn min_value(&self, dom: &Domain) -> Option<f64>;
    fn minimizer(&self, dom: &Domain) -> Option<Vec<f64>>;
    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum value and a minimizer of `⟨c, x⟩` on a ball.
fn linear_min(c: &[f64], dom: &Domain) -> (f64, Vec<f64>) {
    let n = norm(c);
    let value = dot(c, dom.center()) - dom.radius() * n;
    let point = if n == 0.0 {
        dom.center().to_vec()
    } else {
        dom.center()
            .iter()
            .zip(c)
            .map(|(m, ci)| m - dom.radius() * ci / n)
            .collect()
    };
    (value, point)
}

/// Coordinates are independent `±B/√d` with `P(+) = (1 + bias_i)/2`, so
/// every sample has norm exactly `B` and the mean is `bias·B/√d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyLinear {
    bias: Vec<f64>,
    bound: f64,
}

impl NoisyLinear {
    pub fn new(bias: Vec<f64>, bound: f64) -> Result<Self> {
        if bias.is_empty() {
            bail!(Dimension, "oracle needs at least one coordinate");
        }
        if let Some(b) = bias.iter().find(|b| !(-1.0..=1.0).contains(*b)) {
            bail!(Domain, "coordinate bias must lie in [-1, 1], got {b}");
        }
        if !(bound.is_finite() && bound > 0.0) {
            bail!(Domain, "oracle bound must be positive, got {bound}");
        }
        Ok(Self { bias, bound })
    }

    fn scale(&self) -> f64 {
        self.bound / libm::sqrt(self.bias.len() as f64)
    }
}

impl Oracle for NoisyLinear {
    fn name(&self) -> String {
        "noisy-linear".into()
    }

    fn dim(&self) -> usize {
        self.bias.len()
    }

    fn regime(&self) -> Regime {
        Regime::AlmostSure
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.subgradient(x), x)
    }

    fn subgradient(&self, _x: &[f64]) -> Vec<f64> {
        let s = self.scale();
        self.bias.iter().map(|b| b * s).collect()
    }

    fn min_value(&self, dom: &Domain) -> Option<f64> {
        Some(linear_min(&self.subgradient(dom.center()), dom).0)
    }

    fn minimizer(&self, dom: &Domain) -> Option<Vec<f64>> {
        Some(linear_min(&self.subgradient(dom.center()), dom).1)
    }

    fn sample(&self, _x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let s = self.scale();
        self.bias
            .iter()
            .map(|b| {
                // Deterministic coordinates draw nothing.
                if *b == 1.0 {
                    s
                } else if *b == -1.0 {
                    -s
                } else if rng.random::<f64>() < (1.0 + b) / 2.0 {
                    s
                } else {
                    -s
                }
            })
            .collect()
    }
}

/// `f(x) = (L/2)‖x - x*‖²` with additive noise uniform on the sphere of
/// radius `σ`. Samples are bounded by `L·max_{x∈dom}‖x - x*‖ + σ` on `dom`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyQuadratic {
    target: Vec<f64>,
    curvature: f64,
    noise: f64,
    bound: f64,
}

impl NoisyQuadratic {
    pub fn new(target: Vec<f64>, curvature: f64, noise: f64, dom: &Domain) -> Result<Self> {
        if target.len() != dom.dim() {
            bail!(Dimension, "target has length {} for a {}-dimensional domain", target.len(), dom.dim());
        }
        if !(curvature.is_finite() && curvature > 0.0) {
            bail!(Domain, "curvature must be positive, got {curvature}");
        }
        if !(noise.is_finite() && noise >= 0.0) {
            bail!(Domain, "noise radius must be nonnegative, got {noise}");
        }
        let reach = distance(&target, dom.center()) + dom.radius();
        Ok(Self {
            bound: curvature * reach + noise,
            target,
            curvature,
            noise,
        })
    }
}

impl Oracle for NoisyQuadratic {
    fn name(&self) -> String {
        "noisy-quadratic".into()
    }

    fn dim(&self) -> usize {
        self.target.len()
    }

    fn regime(&self) -> Regime {
        Regime::AlmostSure
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = distance(x, &self.target);
        0.5 * self.curvature * r * r
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.target).map(|(a, t)| self.curvature * (a - t)).collect()
    }

    fn min_value(&self, dom: &Domain) -> Option<f64> {
        let gap = (distance(&self.target, dom.center()) - dom.radius()).max(0.0);
        Some(0.5 * self.curvature * gap * gap)
    }

    fn minimizer(&self, dom: &Domain) -> Option<Vec<f64>> {
        Some(project(&self.target, dom))
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let mut g = self.subgradient(x);
        if self.noise > 0.0 {
            let z: Vec<f64> = (0..g.len()).map(|_| standard_normal(rng)).collect();
            let n = norm(&z);
            for (gi, zi) in g.iter_mut().zip(&z) {
                *gi += self.noise * zi / n;
            }
        }
        g
    }
}

/// `ĝ = c + (σ/√d)·z` with `z` standard normal: mean-square bounded with
/// `B² = ‖c‖² + σ²`, unbounded support.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinear {
    mean: Vec<f64>,
    sigma: f64,
}

impl GaussianLinear {
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        if mean.is_empty() {
            bail!(Dimension, "oracle needs at least one coordinate");
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            bail!(Domain, "noise level must be nonnegative, got {sigma}");
        }
        Ok(Self { mean, sigma })
    }
}

impl Oracle for GaussianLinear {
    fn name(&self) -> String {
        "gaussian-linear".into()
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn regime(&self) -> Regime {
        Regime::MeanSquare
    }

    fn bound(&self) -> f64 {
        libm::sqrt(dot(&self.mean, &self.mean) + self.sigma * self.sigma)
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.mean, x)
    }

    fn subgradient(&self, _x: &[f64]) -> Vec<f64> {
        self.mean.clone()
    }

    fn min_value(&self, dom: &Domain) -> Option<f64> {
        Some(linear_min(&self.mean, dom).0)
    }

    fn minimizer(&self, dom: &Domain) -> Option<Vec<f64>> {
        Some(linear_min(&self.mean, dom).1)
    }

    fn sample(&self, _x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let s = self.sigma / libm::sqrt(self.mean.len() as f64);
        self.mean.iter().map(|m| m + s * standard_normal(rng)).collect()
    }
}

/// Three-point law along `e₁`: `±(B/√2)e₁` each with probability
/// `(1 - δ^{1+y})/2` and the spike `(αB/(√2δ^y))e₁` with probability
/// `δ^{1+y}`. The mean is `αδB/√2·e₁`, the gradient of
/// `f(x) = δB/√2·|x(1) + αD/2|` on any ball of diameter `D` centered at the
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyTailed {
    dim: usize,
    alpha: f64,
    delta: f64,
    tail: f64,
    bound: f64,
    diameter: f64,
}

impl HeavyTailed {
    pub fn new(dim: usize, alpha: i8, delta: f64, tail: f64, bound: f64, diameter: f64) -> Result<Self> {
        if dim == 0 {
            bail!(Dimension, "oracle needs at least one coordinate");
        }
        if alpha != 1 && alpha != -1 {
            bail!(Domain, "alpha must be +1 or -1, got {alpha}");
        }
        if !(delta > 0.0 && delta < 1.0) {
            bail!(Domain, "delta must lie in (0, 1), got {delta}");
        }
        if !(0.0..=1.0).contains(&tail) {
            bail!(Domain, "tail exponent must lie in [0, 1], got {tail}");
        }
        if !(bound.is_finite() && bound > 0.0 && diameter.is_finite() && diameter > 0.0) {
            bail!(Domain, "bound and diameter must be positive");
        }
        Ok(Self {
            dim,
            alpha: f64::from(alpha),
            delta,
            tail,
            bound,
            diameter,
        })
    }

    /// Probability of the spike, `δ^{1+y}`.
    pub fn spike_probability(&self) -> f64 {
        libm::pow(self.delta, 1.0 + self.tail)
    }

    /// `B/(√2·δ^y)`.
    pub fn spike_magnitude(&self) -> f64 {
        self.bound / (SQRT_2 * libm::pow(self.delta, self.tail))
    }

    /// `(B²/2)(1 - δ^{1+y}) + (B²/2)δ^{1-y}`.
    pub fn second_moment(&self) -> f64 {
        let b2 = self.bound * self.bound;
        0.5 * b2 * (1.0 - self.spike_probability()) + 0.5 * b2 * libm::pow(self.delta, 1.0 - self.tail)
    }

    fn slope(&self) -> f64 {
        self.delta * self.bound / SQRT_2
    }

    fn kink(&self) -> f64 {
        -self.alpha * self.diameter / 2.0
    }

    /// Point of `[c₁ - r, c₁ + r]` closest to the kink.
    fn best_first_coordinate(&self, dom: &Domain) -> f64 {
        let c = dom.center()[0];
        self.kink().clamp(c - dom.radius(), c + dom.radius())
    }
}

impl Oracle for HeavyTailed {
    fn name(&self) -> String {
        "heavy-tailed".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn regime(&self) -> Regime {
        Regime::MeanSquare
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.slope() * (x[0] - self.kink()).abs()
    }

    fn subgradient(&self, _x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        g[0] = self.alpha * self.slope();
        g
    }

    fn min_value(&self, dom: &Domain) -> Option<f64> {
        Some(self.slope() * (self.best_first_coordinate(dom) - self.kink()).abs())
    }

    fn minimizer(&self, dom: &Domain) -> Option<Vec<f64>> {
        let mut x = dom.center().to_vec();
        x[0] = self.best_first_coordinate(dom);
        Some(x)
    }

    fn sample(&self, _x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let u: f64 = rng.random();
        let p = self.spike_probability();
        let base = self.bound / SQRT_2;
        let mut g = vec![0.0; self.dim];
        g[0] = if u < p {
            self.alpha * self.spike_magnitude()
        } else if u < p + (1.0 - p) / 2.0 {
            base
        } else {
            -base
        };
        g
    }
}

/// One member of each oracle family, all with bound `B` on a centered ball
/// of diameter `D`.
pub fn make_test_oracles(dim: usize, bound: f64, diameter: f64) -> Result<Vec<Box<dyn Oracle>>> {
    let dom = Domain::centered(dim, diameter)?;
    let alternating: Vec<f64> = (0..dim).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
    let signs: Vec<f64> = alternating.iter().map(|b| 2.0 * b).collect();
    let mut target = vec![0.0; dim];
    target[0] = diameter / 4.0;
    // L·(D/4 + D/2) + B/4 = B.
    let curvature = bound / diameter;
    let mean: Vec<f64> = alternating.iter().map(|b| b * bound / libm::sqrt(dim as f64)).collect();
    let sigma = bound * libm::sqrt(0.75);
    Ok(vec![
        Box::new(NoisyLinear::new(alternating, bound)?),
        Box::new(NoisyLinear::new(signs, bound)?),
        Box::new(NoisyQuadratic::new(target, curvature, bound / 4.0, &dom)?),
        Box::new(GaussianLinear::new(mean, sigma)?),
        Box::new(HeavyTailed::new(dim, 1, 0.1, 1.0, bound, diameter)?),
    ])
}
