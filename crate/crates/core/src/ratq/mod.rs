//! RATQ: rotate, split into subvectors, ATUQ each subvector, bit-pack.
//!
//! # Bitstream layout
//!
//! Subvectors are written in index order. Each one contributes its range
//! index in `⌈log₂ h⌉` bits followed by one `⌈log₂(k+1)⌉`-bit field per
//! coordinate, the overflow symbol being the value `k`. Fields are big-endian,
//! the final byte is zero-padded, and nothing else is sent: rotation signs and
//! subsampling sets are rebuilt from the shared seed and the block nonce.
//!
//! Dimensions that are not a power of two are zero-padded before rotation and
//! the padded vector is quantized in full; the decoder truncates after the
//! inverse rotation.

mod rcs;

pub use rcs::{rcs_decode, rcs_encode, SubsampleSet};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::adaptive::{atuq_decode_into, atuq_encode_into, AdaptiveCodeword, RangeLadder};
use crate::codec::{BitReader, BitWriter};
use crate::error::{bail, Result};
use crate::numerics::{ceil_log2, RotationOperator, SeedBundle, StreamLabel};
use crate::scalar::LevelSymbol;

/// Relative slack on the `‖y‖₂ ≤ B` precondition.
pub const NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// Randomized Hadamard rotation (RATQ proper).
    Hadamard,
    /// No rotation: plain per-subvector ATUQ.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatqConfig {
    dim: usize,
    padded_dim: usize,
    norm_bound: Option<f64>,
    subvector_len: usize,
    levels: u32,
    ladder: RangeLadder,
    seed: u64,
    transform: Transform,
}

impl RatqConfig {
    /// Rotated quantizer for inputs with `‖y‖₂ ≤ norm_bound`.
    pub fn new(
        dim: usize,
        norm_bound: f64,
        subvector_len: usize,
        levels: u32,
        ladder: RangeLadder,
        seed: u64,
    ) -> Result<Self> {
        if !(norm_bound.is_finite() && norm_bound > 0.0) {
            bail!(Config, "norm bound must be positive and finite, got {norm_bound}");
        }
        Self::build(dim, Some(norm_bound), subvector_len, levels, ladder, seed, Transform::Hadamard)
    }

    /// Unrotated quantizer with no norm precondition; large inputs overflow.
    pub fn unrotated(
        dim: usize,
        subvector_len: usize,
        levels: u32,
        ladder: RangeLadder,
        seed: u64,
    ) -> Result<Self> {
        Self::build(dim, None, subvector_len, levels, ladder, seed, Transform::Identity)
    }

    fn build(
        dim: usize,
        norm_bound: Option<f64>,
        subvector_len: usize,
        levels: u32,
        ladder: RangeLadder,
        seed: u64,
        transform: Transform,
    ) -> Result<Self> {
        if dim == 0 {
            bail!(Config, "dimension must be at least 1");
        }
        if subvector_len == 0 {
            bail!(Config, "subvector length must be at least 1");
        }
        if levels < 2 {
            bail!(Config, "need at least 2 quantization levels, got {levels}");
        }
        let padded_dim = match transform {
            Transform::Hadamard => dim.next_power_of_two(),
            Transform::Identity => dim,
        };
        Ok(Self {
            dim,
            padded_dim,
            norm_bound,
            subvector_len,
            levels,
            ladder,
            seed,
            transform,
        })
    }

    /// Same quantizer with a different shared-randomness seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension actually quantized (next power of two when rotating).
    pub fn padded_dim(&self) -> usize {
        self.padded_dim
    }

    pub fn norm_bound(&self) -> Option<f64> {
        self.norm_bound
    }

    pub fn subvector_len(&self) -> usize {
        self.subvector_len
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn ladder(&self) -> &RangeLadder {
        &self.ladder
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout {
            coordinates: self.padded_dim,
            subvector_len: self.subvector_len,
            ranges: self.ladder.len() as u32,
            levels: self.levels,
        }
    }

    /// `⌈d/s⌉·⌈log₂ h⌉ + d·⌈log₂(k+1)⌉` with `d` the padded dimension.
    pub fn bit_len(&self) -> usize {
        self.layout().bit_len()
    }

    /// The rotation shared by encoder and decoder for block `nonce`.
    pub fn rotation(&self, nonce: u64) -> Result<Option<RotationOperator>> {
        match self.transform {
            Transform::Identity => Ok(None),
            Transform::Hadamard => {
                let mut rng = SeedBundle::new(self.seed, StreamLabel::RotationSigns).stream(nonce);
                RotationOperator::sample(self.padded_dim, &mut rng).map(Some)
            }
        }
    }

    /// `(9 + 3 ln s)/(k-1)²`: the worst-case MSE of the quantizer divided by `B²`
    /// when the ladder follows the `m = 3B²/d`, `m0 = (2B²/d) ln s` rule.
    pub fn mse_factor(&self) -> f64 {
        let s = self.subvector_len.min(self.padded_dim) as f64;
        let km1 = f64::from(self.levels - 1);
        (9.0 + 3.0 * libm::log(s)) / (km1 * km1)
    }

    /// Closed-form bound `B·sqrt((9 + 3 ln s)/(k-1)² + 1)` on `sqrt(E‖Q(Y)‖²)`.
    pub fn alpha_bound(&self) -> Option<f64> {
        self.norm_bound.map(|b| b * libm::sqrt(self.mse_factor() + 1.0))
    }

    /// Zero-pads `y`, checks it, and applies the rotation for `nonce`.
    fn prepare(&self, y: &[f64], nonce: u64) -> Result<(Vec<f64>, Option<RotationOperator>)> {
        if y.len() != self.dim {
            bail!(
                Dimension,
                "input has length {} but the quantizer expects {}",
                y.len(),
                self.dim
            );
        }
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            bail!(Input, "cannot quantize non-finite value {bad}");
        }
        if let Some(bound) = self.norm_bound {
            let norm = libm::sqrt(y.iter().map(|v| v * v).sum());
            if norm > bound * (1.0 + NORM_SLACK) {
                bail!(Input, "input norm {norm} exceeds the bound {bound}");
            }
        }
        let mut buf = vec![0.0; self.padded_dim];
        buf[..self.dim].copy_from_slice(y);
        let rotation = self.rotation(nonce)?;
        if let Some(r) = &rotation {
            r.forward_in_place(&mut buf)?;
        }
        Ok((buf, rotation))
    }

    fn finish_decode(&self, mut buf: Vec<f64>, nonce: u64) -> Result<Vec<f64>> {
        if let Some(r) = self.rotation(nonce)? {
            r.inverse_in_place(&mut buf)?;
        }
        buf.truncate(self.dim);
        Ok(buf)
    }
}

/// Shape of a fixed-length block: how many coordinates, grouped how, with
/// which field widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    /// Quantized coordinates carried by the block.
    pub coordinates: usize,
    pub subvector_len: usize,
    /// Ladder length `h`.
    pub ranges: u32,
    /// CUQ level count `k`.
    pub levels: u32,
}

impl BlockLayout {
    pub fn subvectors(&self) -> usize {
        self.coordinates.div_ceil(self.subvector_len)
    }

    pub fn header_bits(&self) -> u32 {
        ceil_log2(u64::from(self.ranges))
    }

    pub fn symbol_bits(&self) -> u32 {
        ceil_log2(u64::from(self.levels) + 1)
    }

    pub fn bit_len(&self) -> usize {
        self.subvectors() * self.header_bits() as usize
            + self.coordinates * self.symbol_bits() as usize
    }

    /// Length of subvector `i`; the last one is short when `s ∤ d`.
    pub fn subvector_size(&self, i: usize) -> usize {
        let start = i * self.subvector_len;
        self.subvector_len.min(self.coordinates - start)
    }

    pub fn pack(&self, codewords: &[AdaptiveCodeword]) -> Result<EncodedBlock> {
        if codewords.len() != self.subvectors() {
            bail!(
                Codec,
                "{} codewords for a layout of {} subvectors",
                codewords.len(),
                self.subvectors()
            );
        }
        let mut w = BitWriter::with_capacity(self.bit_len());
        for (i, cw) in codewords.iter().enumerate() {
            if cw.symbols.len() != self.subvector_size(i) {
                bail!(
                    Codec,
                    "subvector {i} has {} symbols, layout expects {}",
                    cw.symbols.len(),
                    self.subvector_size(i)
                );
            }
            self.write_codeword(&mut w, cw.range_index, &cw.symbols)?;
        }
        Ok(EncodedBlock::from_writer(w, *self))
    }

    pub fn unpack(&self, block: &EncodedBlock) -> Result<Vec<AdaptiveCodeword>> {
        let mut r = self.reader(block)?;
        (0..self.subvectors())
            .map(|i| {
                let mut symbols = Vec::with_capacity(self.subvector_size(i));
                let range_index = self.read_codeword(&mut r, self.subvector_size(i), &mut symbols)?;
                Ok(AdaptiveCodeword {
                    range_index,
                    symbols,
                })
            })
            .collect()
    }

    fn write_codeword(&self, w: &mut BitWriter, range_index: u32, symbols: &[LevelSymbol]) -> Result<()> {
        if range_index >= self.ranges {
            bail!(Codec, "range index {range_index} needs a ladder longer than {}", self.ranges);
        }
        w.write(u64::from(range_index), self.header_bits());
        for &s in symbols {
            if let LevelSymbol::Level(l) = s {
                if l >= self.levels {
                    bail!(Codec, "level {l} is outside a {}-level grid", self.levels);
                }
            }
            w.write(s.to_code(self.levels), self.symbol_bits());
        }
        Ok(())
    }

    fn reader<'a>(&self, block: &'a EncodedBlock) -> Result<BitReader<'a>> {
        if block.bit_len != self.bit_len() {
            bail!(
                Codec,
                "block carries {} bits but the layout needs {}",
                block.bit_len,
                self.bit_len()
            );
        }
        BitReader::new(&block.bits, block.bit_len)
    }

    fn read_codeword(&self, r: &mut BitReader<'_>, len: usize, out: &mut Vec<LevelSymbol>) -> Result<u32> {
        let range_index = r.read(self.header_bits())?;
        if range_index >= u64::from(self.ranges) {
            bail!(Codec, "range index {range_index} outside a ladder of {}", self.ranges);
        }
        out.clear();
        for _ in 0..len {
            out.push(LevelSymbol::from_code(r.read(self.symbol_bits())?, self.levels)?);
        }
        Ok(range_index as u32)
    }
}

/// The wire artifact: an exact-length bit string plus the layout it follows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBlock {
    pub bits: Vec<u8>,
    pub bit_len: usize,
    pub layout: BlockLayout,
}

impl EncodedBlock {
    /// Wraps externally supplied bytes, checking the framing.
    pub fn from_parts(bits: Vec<u8>, bit_len: usize, layout: BlockLayout) -> Result<Self> {
        let block = Self {
            bits,
            bit_len,
            layout,
        };
        layout.reader(&block)?;
        Ok(block)
    }

    fn from_writer(w: BitWriter, layout: BlockLayout) -> Self {
        let (bits, bit_len) = w.finish();
        Self {
            bits,
            bit_len,
            layout,
        }
    }

    /// Number of overflow symbols in the block.
    pub fn overflow_count(&self) -> Result<usize> {
        Ok(self
            .layout
            .unpack(self)?
            .iter()
            .map(AdaptiveCodeword::overflow_count)
            .sum())
    }
}

/// RATQ encoder for block `nonce`; `rng` drives the stochastic rounding.
pub fn ratq_encode<R: Rng + ?Sized>(
    y: &[f64],
    cfg: &RatqConfig,
    nonce: u64,
    rng: &mut R,
) -> Result<EncodedBlock> {
    let (rotated, _) = cfg.prepare(y, nonce)?;
    let layout = cfg.layout();
    let mut w = BitWriter::with_capacity(layout.bit_len());
    let mut symbols = Vec::with_capacity(cfg.subvector_len);
    for chunk in rotated.chunks(cfg.subvector_len) {
        symbols.clear();
        let index = atuq_encode_into(chunk, &cfg.ladder, cfg.levels, rng, &mut symbols)?;
        layout.write_codeword(&mut w, index, &symbols)?;
    }
    Ok(EncodedBlock::from_writer(w, layout))
}

/// RATQ decoder for block `nonce`.
pub fn ratq_decode(block: &EncodedBlock, cfg: &RatqConfig, nonce: u64) -> Result<Vec<f64>> {
    let layout = cfg.layout();
    if block.layout != layout {
        bail!(Codec, "block layout {:?} does not match the configuration {:?}", block.layout, layout);
    }
    let mut r = layout.reader(block)?;
    let mut buf = vec![0.0; cfg.padded_dim];
    let mut symbols = Vec::with_capacity(cfg.subvector_len);
    for chunk in buf.chunks_mut(cfg.subvector_len) {
        let index = layout.read_codeword(&mut r, chunk.len(), &mut symbols)?;
        atuq_decode_into(index, &symbols, &cfg.ladder, cfg.levels, chunk)?;
    }
    cfg.finish_decode(buf, nonce)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::StreamRng;
    use crate::params::RatqParams;
    use proptest::prelude::*;

    fn rounding(n: u64) -> StreamRng {
        SeedBundle::new(7, StreamLabel::Rounding).stream(n)
    }

    fn default_cfg(d: usize) -> RatqConfig {
        RatqParams::high_precision(d, 1.0).unwrap().config(17).unwrap()
    }

    #[test]
    fn paper_default_bit_budget() {
        let cfg = default_cfg(1024);
        assert_eq!(cfg.subvector_len(), 2);
        assert_eq!(cfg.levels(), 7);
        assert_eq!(cfg.ladder().len(), 4);
        assert_eq!(cfg.bit_len(), 512 * 2 + 1024 * 3);
        let y = vec![1.0 / 32.0; 1024];
        let block = ratq_encode(&y, &cfg, 0, &mut rounding(0)).unwrap();
        assert_eq!(block.bit_len, 4096);
        assert_eq!(block.bits.len(), 512);
    }

    #[test]
    fn zero_round_trips_exactly() {
        let cfg = default_cfg(64);
        let block = ratq_encode(&[0.0; 64], &cfg, 3, &mut rounding(0)).unwrap();
        for cw in cfg.layout().unpack(&block).unwrap() {
            assert_eq!(cw.range_index, 0);
        }
        assert_eq!(ratq_decode(&block, &cfg, 3).unwrap(), vec![0.0; 64]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = default_cfg(8);
        let mut r = rounding(0);
        assert!(matches!(ratq_encode(&[1.0; 8], &cfg, 0, &mut r), Err(crate::Error::Input(_))));
        assert!(matches!(ratq_encode(&[f64::NAN; 8], &cfg, 0, &mut r), Err(crate::Error::Input(_))));
        assert!(matches!(ratq_encode(&[0.1; 7], &cfg, 0, &mut r), Err(crate::Error::Dimension(_))));
        // Rounding slack on the norm bound.
        let mut y = vec![0.0; 8];
        y[0] = 1.0 + 1e-12;
        assert!(ratq_encode(&y, &cfg, 0, &mut r).is_ok());
    }

    #[test]
    fn decode_checks_length() {
        let cfg = default_cfg(16);
        let mut block = ratq_encode(&[0.1; 16], &cfg, 0, &mut rounding(0)).unwrap();
        block.bit_len -= 1;
        assert!(matches!(ratq_decode(&block, &cfg, 0), Err(crate::Error::Codec(_))));
    }

    #[test]
    fn short_last_subvector() {
        let ladder = RangeLadder::tetra(3.0 / 8.0, 0.0, 4).unwrap();
        let cfg = RatqConfig::new(8, 1.0, 3, 7, ladder, 1).unwrap();
        let layout = cfg.layout();
        assert_eq!(layout.subvectors(), 3);
        assert_eq!(
            (0..3).map(|i| layout.subvector_size(i)).collect::<Vec<_>>(),
            vec![3, 3, 2]
        );
        assert_eq!(cfg.bit_len(), 3 * 2 + 8 * 3);
    }

    #[test]
    fn non_power_of_two_is_padded() {
        let cfg = default_cfg(100);
        assert_eq!(cfg.padded_dim(), 128);
        let y: Vec<f64> = (0..100).map(|i| if i % 3 == 0 { 0.05 } else { -0.04 }).collect();
        let mut mean = vec![0.0; 100];
        let n = 4000;
        for t in 0..n {
            let block = ratq_encode(&y, &cfg, t, &mut rounding(t)).unwrap();
            let out = ratq_decode(&block, &cfg, t).unwrap();
            assert_eq!(out.len(), 100);
            for (m, o) in mean.iter_mut().zip(&out) {
                *m += o / n as f64;
            }
        }
        let err: f64 = mean.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        // E‖mean - y‖² ≤ mse_factor / n for an unbiased quantizer.
        assert!(err < 4.0 * cfg.mse_factor() / n as f64, "err = {err}");
    }

    #[test]
    fn overflow_is_counted() {
        let ladder = RangeLadder::tetra(1e-4, 0.0, 1).unwrap();
        let cfg = RatqConfig::new(4, 1.0, 2, 3, ladder, 1).unwrap();
        let block = ratq_encode(&[1.0, 0.0, 0.0, 0.0], &cfg, 0, &mut rounding(0)).unwrap();
        assert_eq!(block.overflow_count().unwrap(), 4);
        assert_eq!(ratq_decode(&block, &cfg, 0).unwrap(), vec![0.0; 4]);
    }

    fn arb_stream() -> impl Strategy<Value = (BlockLayout, Vec<AdaptiveCodeword>)> {
        (1usize..40, 1usize..6, 1u32..9, 2u32..20).prop_flat_map(|(coords, s, h, k)| {
            let layout = BlockLayout {
                coordinates: coords,
                subvector_len: s,
                ranges: h,
                levels: k,
            };
            let words: Vec<_> = (0..layout.subvectors())
                .map(|i| {
                    (
                        0..h,
                        prop::collection::vec(
                            (0..=k).prop_map(move |c| LevelSymbol::from_code(u64::from(c), k).unwrap()),
                            layout.subvector_size(i),
                        ),
                    )
                        .prop_map(|(range_index, symbols)| AdaptiveCodeword {
                            range_index,
                            symbols,
                        })
                })
                .collect();
            (Just(layout), words)
        })
    }

    proptest! {
        #[test]
        fn pack_unpack_is_identity((layout, words) in arb_stream()) {
            let block = layout.pack(&words).unwrap();
            prop_assert_eq!(block.bit_len, layout.bit_len());
            prop_assert_eq!(layout.unpack(&block).unwrap(), words.clone());
            // Re-packing the decoded stream reproduces the bytes.
            prop_assert_eq!(layout.pack(&layout.unpack(&block).unwrap()).unwrap(), block);
        }
    }
}
