//! Random coordinate subsampling on top of RATQ.
//!
//! After the rotation only the coordinates in a shared random set `S` are
//! quantized (each as its own subvector) and the decoder rescales them by
//! `1/μ`, `μ = |S|/d`, which keeps the estimate unbiased.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{BlockLayout, EncodedBlock, RatqConfig};
use crate::adaptive::{atuq_decode_into, atuq_encode_into};
use crate::codec::BitWriter;
use crate::error::{bail, Result};
use crate::numerics::{SeedBundle, StreamLabel};

/// Sorted set of distinct coordinates in `0..dim`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsampleSet {
    indices: Vec<usize>,
    dim: usize,
}

impl SubsampleSet {
    /// Uniform `count`-subset of `0..dim` from the subsampling stream of
    /// `(seed, nonce)`, via a partial Fisher–Yates shuffle.
    pub fn draw(dim: usize, count: usize, seed: u64, nonce: u64) -> Result<Self> {
        if count == 0 || count > dim {
            bail!(Config, "cannot draw {count} coordinates out of {dim}");
        }
        let mut rng = SeedBundle::new(seed, StreamLabel::Subsampling).stream(nonce);
        let mut pool: Vec<usize> = (0..dim).collect();
        for i in 0..count {
            let j = rng.random_range(i..dim);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool.sort_unstable();
        Ok(Self { indices: pool, dim })
    }

    pub fn from_indices(dim: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() {
            bail!(Config, "a subsample set cannot be empty");
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            bail!(Config, "subsample indices must be distinct");
        }
        if indices[indices.len() - 1] >= dim {
            bail!(Dimension, "subsample index {} is outside 0..{dim}", indices[indices.len() - 1]);
        }
        Ok(Self { indices, dim })
    }

    pub fn full(dim: usize) -> Self {
        Self {
            indices: (0..dim).collect(),
            dim,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Sampling ratio `|S|/d`.
    pub fn mu(&self) -> f64 {
        self.indices.len() as f64 / self.dim as f64
    }

    /// FNV-1a over the dimension and the sorted indices.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        core::iter::once(self.dim)
            .chain(self.indices.iter().copied())
            .flat_map(|v| (v as u64).to_le_bytes())
            .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
    }
}

fn check(cfg: &RatqConfig, set: &SubsampleSet) -> Result<BlockLayout> {
    if cfg.subvector_len() != 1 {
        bail!(
            Config,
            "subsampling quantizes single coordinates, but the subvector length is {}",
            cfg.subvector_len()
        );
    }
    if set.dim() != cfg.padded_dim() {
        bail!(
            Dimension,
            "subsample set over {} coordinates for a {}-dimensional rotation",
            set.dim(),
            cfg.padded_dim()
        );
    }
    Ok(BlockLayout {
        coordinates: set.len(),
        ..cfg.layout()
    })
}

/// Encodes the rotated coordinates in `set`, in increasing index order.
pub fn rcs_encode<R: Rng + ?Sized>(
    y: &[f64],
    cfg: &RatqConfig,
    set: &SubsampleSet,
    nonce: u64,
    rng: &mut R,
) -> Result<EncodedBlock> {
    let layout = check(cfg, set)?;
    let (rotated, _) = cfg.prepare(y, nonce)?;
    let mut w = BitWriter::with_capacity(layout.bit_len());
    let mut symbols = Vec::with_capacity(1);
    for &i in set.indices() {
        symbols.clear();
        let index = atuq_encode_into(&rotated[i..=i], cfg.ladder(), cfg.levels(), rng, &mut symbols)?;
        layout.write_codeword(&mut w, index, &symbols)?;
    }
    Ok(EncodedBlock::from_writer(w, layout))
}

pub fn rcs_decode(block: &EncodedBlock, cfg: &RatqConfig, set: &SubsampleSet, nonce: u64) -> Result<Vec<f64>> {
    let layout = check(cfg, set)?;
    if block.layout != layout {
        bail!(Codec, "block layout {:?} does not match the configuration {:?}", block.layout, layout);
    }
    let mut r = layout.reader(block)?;
    let scale = 1.0 / set.mu();
    let mut buf = vec![0.0; cfg.padded_dim()];
    let mut symbols = Vec::with_capacity(1);
    let mut value = [0.0];
    for &i in set.indices() {
        let index = layout.read_codeword(&mut r, 1, &mut symbols)?;
        atuq_decode_into(index, &symbols, cfg.ladder(), cfg.levels(), &mut value)?;
        buf[i] = value[0] * scale;
    }
    cfg.finish_decode(buf, nonce)
}
