//! Seeded, splittable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! 64-bit master seed, with the stream id formed from a purpose label and a
//! caller-chosen counter (block nonce, iteration, client index, ...). ChaCha is
//! counter based, so `(master_seed, label, counter)` pins down a stream and two
//! parties holding the same seed rebuild identical rotation signs and
//! subsampling sets without exchanging them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator behind every stream.
pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Distinct labels give disjoint ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamLabel {
    RotationSigns,
    Rounding,
    Subsampling,
    OracleNoise,
    Trial,
}

impl StreamLabel {
    fn id(self) -> u64 {
        match self {
            StreamLabel::RotationSigns => 1,
            StreamLabel::Rounding => 2,
            StreamLabel::Subsampling => 3,
            StreamLabel::OracleNoise => 4,
            StreamLabel::Trial => 5,
        }
    }
}

const COUNTER_BITS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedBundle {
    pub master_seed: u64,
    pub label: StreamLabel,
}

impl SeedBundle {
    pub fn new(master_seed: u64, label: StreamLabel) -> Self {
        Self { master_seed, label }
    }

    /// The stream for `counter` (only the low 60 bits are used).
    pub fn stream(&self, counter: u64) -> StreamRng {
        let mut key = [0u8; 32];
        let mut state = self.master_seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        let counter = counter & ((1 << COUNTER_BITS) - 1);
        rng.set_stream((self.label.id() << COUNTER_BITS) | counter);
        rng
    }
}

/// Derives an independent child seed, e.g. one per trial or per client.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut state = master_seed ^ splitmix64(&mut index.wrapping_add(0x5851_f42d_4c95_7f2d));
    splitmix64(&mut state)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One standard normal draw (Box–Muller, cosine branch).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - u lies in (0, 1], keeping the logarithm finite.
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}
