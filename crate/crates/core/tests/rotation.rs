mod common;

use common::{norm, rng, sphere_point};
use proptest::prelude::*;
use ratq_core::numerics::{fwht, Direction, RotationOperator};

proptest! {
    #[test]
    fn rotation_preserves_norm_and_inverts(
        log_d in 0u32..9,
        seed in any::<u64>(),
        scale in 1e-3f64..1e3,
    ) {
        let d = 1usize << log_d;
        let mut r = rng(seed, 0);
        let op = RotationOperator::sample(d, &mut r).unwrap();
        let v = sphere_point(d, scale, &mut r);
        let fwd = op.rotate(&v, Direction::Forward).unwrap();
        prop_assert!((norm(&fwd) - norm(&v)).abs() <= 1e-10 * norm(&v));
        let back = op.rotate(&fwd, Direction::Inverse).unwrap();
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn fwht_known_vectors() {
    assert_eq!(fwht(&[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0; 4]);
    assert_eq!(fwht(&[1.0, 1.0]).unwrap(), vec![2.0, 0.0]);
    let op = RotationOperator::new(vec![1.0, 1.0]).unwrap();
    let out = op.rotate(&[1.0, 0.0], Direction::Forward).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((out[0] - h).abs() < 1e-15 && (out[1] - h).abs() < 1e-15);
}

/// Rotated coordinates of a fixed vector are subgaussian with variance
/// factor `B²/d`: `P(|RY(j)| ≥ x) ≤ 2·exp(-d x²/(2B²))`.
#[test]
fn rotated_coordinates_have_subgaussian_tails() {
    let (d, b, trials) = (64usize, 1.0, 100_000u64);
    let y = sphere_point(d, b, &mut rng(3, 0));
    let thresholds = [0.1, 0.2, 0.3, 0.4, 0.5];
    let mut hits = [0u64; 5];
    let j = 5;
    for t in 0..trials {
        let op = RotationOperator::sample(d, &mut rng(4, t)).unwrap();
        let c = op.rotate(&y, Direction::Forward).unwrap()[j].abs();
        for (h, x) in hits.iter_mut().zip(thresholds) {
            *h += u64::from(c >= x);
        }
    }
    for (h, x) in hits.iter().zip(thresholds) {
        let bound = (2.0 * (-(d as f64) * x * x / (2.0 * b * b)).exp()).min(1.0);
        let freq = *h as f64 / trials as f64;
        let sd = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(freq <= bound + 3.0 * sd, "x = {x}: {freq} exceeds {bound}");
    }
}
