//! Fast Walsh–Hadamard transform and the randomized rotation `R = H·D/√d`.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};

/// Unnormalized in-place Walsh–Hadamard transform (Sylvester ordering).
///
/// `v` must have a power-of-two length. The result is `H·v` where
/// `H[i][j] = (-1)^{popcount(i & j)}`; callers scale by `1/√d` themselves.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        bail!(Dimension, "Walsh-Hadamard length {n} is not a power of two");
    }
    let mut half = 1;
    while half < n {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
    Ok(())
}

/// Out-of-place variant of [`fwht_in_place`].
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Realization of the random rotation `R = (1/√d)·H·D`.
///
/// `D` is a diagonal of independent ±1 signs; both encoder and decoder
/// rebuild it from a shared seed so it never has to be transmitted.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationOperator {
    signs: Vec<f64>,
    scale: f64,
}

impl RotationOperator {
    pub fn new(signs: Vec<f64>) -> Result<Self> {
        let dim = signs.len();
        if !dim.is_power_of_two() {
            bail!(Dimension, "rotation dimension {dim} is not a power of two");
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            bail!(Domain, "rotation signs must all be +1 or -1");
        }
        Ok(Self {
            signs,
            scale: 1.0 / libm::sqrt(dim as f64),
        })
    }

    /// Draws the sign diagonal from `rng`, 64 signs per generator word.
    pub fn sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let mut signs = Vec::with_capacity(dim);
        while signs.len() < dim {
            let word = rng.next_u64();
            let take = (dim - signs.len()).min(64);
            signs.extend((0..take).map(|b| if (word >> b) & 1 == 1 { -1.0 } else { 1.0 }));
        }
        Self::new(signs)
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    /// `v ← R v`.
    pub fn forward_in_place(&self, v: &mut [f64]) -> Result<()> {
        self.check(v.len())?;
        for (x, s) in v.iter_mut().zip(&self.signs) {
            *x *= s;
        }
        fwht_in_place(v)?;
        for x in v.iter_mut() {
            *x *= self.scale;
        }
        Ok(())
    }

    /// `v ← R⁻¹ v = D (H/√d) v`, since `H/√d` is symmetric orthogonal and `D² = I`.
    pub fn inverse_in_place(&self, v: &mut [f64]) -> Result<()> {
        self.check(v.len())?;
        fwht_in_place(v)?;
        for (x, s) in v.iter_mut().zip(&self.signs) {
            *x *= s * self.scale;
        }
        Ok(())
    }

    pub fn rotate(&self, v: &[f64], direction: Direction) -> Result<Vec<f64>> {
        let mut out = v.to_vec();
        match direction {
            Direction::Forward => self.forward_in_place(&mut out)?,
            Direction::Inverse => self.inverse_in_place(&mut out)?,
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            bail!(
                Dimension,
                "vector of length {len} does not match rotation dimension {}",
                self.dim()
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{SeedBundle, StreamLabel};
    use alloc::vec;

    fn hadamard_entry(i: usize, j: usize) -> f64 {
        if (i & j).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    fn naive_hadamard(v: &[f64]) -> Vec<f64> {
        (0..v.len())
            .map(|i| v.iter().enumerate().map(|(j, x)| hadamard_entry(i, j) * x).sum())
            .collect()
    }

    #[test]
    fn unit_vectors() {
        assert_eq!(fwht(&[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0; 4]);
        assert_eq!(fwht(&[1.0, 1.0]).unwrap(), vec![2.0, 0.0]);
        assert_eq!(fwht(&[5.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(fwht(&[1.0, 2.0, 3.0]), Err(crate::Error::Dimension(_))));
        assert!(fwht(&[]).is_err());
    }

    #[test]
    fn matches_matrix_product() {
        let mut rng = SeedBundle::new(3, StreamLabel::Trial).stream(0);
        for d in [2usize, 4, 8, 16, 32, 64] {
            let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let fast = fwht(&v).unwrap();
            let slow = naive_hadamard(&v);
            let scale = slow.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn rotation_of_basis_vector() {
        let op = RotationOperator::new(vec![1.0, 1.0]).unwrap();
        let out = op.rotate(&[1.0, 0.0], Direction::Forward).unwrap();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        assert!((out[0] - r).abs() < 1e-15 && (out[1] - r).abs() < 1e-15);
    }

    #[test]
    fn rotation_rejects_bad_input() {
        assert!(RotationOperator::new(vec![1.0, 0.5]).is_err());
        assert!(RotationOperator::new(vec![1.0; 3]).is_err());
        let op = RotationOperator::new(vec![1.0; 4]).unwrap();
        assert!(op.rotate(&[1.0; 2], Direction::Forward).is_err());
    }

    #[test]
    fn inverse_undoes_forward() {
        let mut rng = SeedBundle::new(11, StreamLabel::RotationSigns).stream(0);
        let op = RotationOperator::sample(128, &mut rng).unwrap();
        let v: Vec<f64> = (0..128).map(|i| libm::sin(i as f64 * 0.37)).collect();
        let back = op
            .rotate(&op.rotate(&v, Direction::Forward).unwrap(), Direction::Inverse)
            .unwrap();
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
