//! A-RATQ: the norm goes through AGUQ, the direction through RATQ.
//!
//! The two halves draw rounding randomness from separate caller-supplied
//! streams, so given the input their outputs are independent and the product
//! of the decoded gain and shape is unbiased whenever the gain does not
//! overflow. On the wire the gain fields come first, followed by the shape
//! block.

use alloc::vec::Vec;

use rand::Rng;

use crate::adaptive::{aguq_decode, aguq_quantize, GainCodeword, LadderKind, RangeLadder};
use crate::codec::{BitReader, BitWriter};
use crate::error::{bail, Result};
use crate::numerics::ceil_log2;
use crate::ratq::{rcs_decode, rcs_encode, ratq_decode, ratq_encode, EncodedBlock, RatqConfig, SubsampleSet};
use crate::scalar::{LevelSymbol, UniformGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum GainQuantizer {
    /// AGUQ over a geometric ladder.
    Adaptive { ladder: RangeLadder, levels: u32 },
    /// Nonnegative CUQ on one fixed range; the experimental foil.
    Uniform { grid: UniformGrid },
}

impl GainQuantizer {
    pub fn adaptive(ladder: RangeLadder, levels: u32) -> Result<Self> {
        if !matches!(ladder.kind(), LadderKind::Geometric { .. }) {
            bail!(Config, "the gain quantizer needs a geometric ladder");
        }
        if levels < 2 {
            bail!(Config, "need at least 2 gain levels, got {levels}");
        }
        Ok(Self::Adaptive { ladder, levels })
    }

    pub fn uniform(range: f64, levels: u32) -> Result<Self> {
        Ok(Self::Uniform {
            grid: UniformGrid::nonnegative(range, levels)?,
        })
    }

    fn header_bits(&self) -> u32 {
        match self {
            Self::Adaptive { ladder, .. } => ceil_log2(ladder.len() as u64),
            Self::Uniform { .. } => 0,
        }
    }

    fn levels(&self) -> u32 {
        match self {
            Self::Adaptive { levels, .. } => *levels,
            Self::Uniform { grid } => grid.levels(),
        }
    }

    fn symbol_bits(&self) -> u32 {
        ceil_log2(u64::from(self.levels()) + 1)
    }

    /// `⌈log₂ h_g⌉ + ⌈log₂(k_g+1)⌉` (no header for the fixed-range foil).
    pub fn bits(&self) -> usize {
        (self.header_bits() + self.symbol_bits()) as usize
    }

    /// Largest gain that does not overflow.
    pub fn top(&self) -> f64 {
        match self {
            Self::Adaptive { ladder, .. } => ladder.top(),
            Self::Uniform { grid } => grid.range(),
        }
    }

    pub fn quantize<R: Rng + ?Sized>(&self, gain: f64, rng: &mut R) -> Result<(GainCodeword, f64)> {
        match self {
            Self::Adaptive { ladder, levels } => aguq_quantize(gain, ladder, *levels, rng),
            Self::Uniform { grid } => {
                let (symbol, value) = baseline_uniform_gain(gain, grid, rng)?;
                Ok((
                    GainCodeword {
                        range_index: 0,
                        symbol,
                    },
                    value,
                ))
            }
        }
    }

    pub fn decode(&self, cw: GainCodeword) -> Result<f64> {
        match self {
            Self::Adaptive { ladder, levels } => aguq_decode(cw, ladder, *levels),
            Self::Uniform { grid } => {
                if cw.range_index != 0 {
                    bail!(Codec, "a fixed-range gain has no range index {}", cw.range_index);
                }
                grid.decode_symbol(cw.symbol)
            }
        }
    }

    fn write(&self, w: &mut BitWriter, cw: GainCodeword) {
        w.write(u64::from(cw.range_index), self.header_bits());
        w.write(cw.symbol.to_code(self.levels()), self.symbol_bits());
    }

    fn read(&self, r: &mut BitReader<'_>) -> Result<GainCodeword> {
        let range_index = r.read(self.header_bits())? as u32;
        let symbol = LevelSymbol::from_code(r.read(self.symbol_bits())?, self.levels())?;
        Ok(GainCodeword {
            range_index,
            symbol,
        })
    }
}

/// Nonnegative CUQ of a gain on the fixed range `[0, M]`.
pub fn baseline_uniform_gain<R: Rng + ?Sized>(
    gain: f64,
    grid: &UniformGrid,
    rng: &mut R,
) -> Result<(LevelSymbol, f64)> {
    if gain < 0.0 {
        bail!(Domain, "gain must be nonnegative, got {gain}");
    }
    let symbol = grid.encode_value(gain, rng)?;
    Ok((symbol, grid.decode_symbol(symbol)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainShapeConfig {
    gain: GainQuantizer,
    shape: RatqConfig,
    sample_count: Option<usize>,
}

impl GainShapeConfig {
    /// `shape` must be a unit-norm RATQ config; `sample_count` switches the
    /// shape to coordinate subsampling (which needs `s = 1`).
    pub fn new(gain: GainQuantizer, shape: RatqConfig, sample_count: Option<usize>) -> Result<Self> {
        if shape.norm_bound() != Some(1.0) {
            bail!(Config, "the shape quantizer must be built for unit-norm inputs");
        }
        if let Some(n) = sample_count {
            if n == 0 || n > shape.padded_dim() {
                bail!(Config, "cannot subsample {n} of {} coordinates", shape.padded_dim());
            }
            if shape.subvector_len() != 1 {
                bail!(Config, "subsampled shapes need subvector length 1, got {}", shape.subvector_len());
            }
        }
        Ok(Self {
            gain,
            shape,
            sample_count,
        })
    }

    /// Same shape quantizer with a different gain quantizer.
    pub fn with_gain(&self, gain: GainQuantizer) -> Self {
        Self {
            gain,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            shape: self.shape.with_seed(seed),
            ..self.clone()
        }
    }

    pub fn gain(&self) -> &GainQuantizer {
        &self.gain
    }

    pub fn shape(&self) -> &RatqConfig {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn sample_count(&self) -> Option<usize> {
        self.sample_count
    }

    pub fn shape_bits(&self) -> usize {
        let layout = self.shape.layout();
        match self.sample_count {
            None => layout.bit_len(),
            Some(n) => n * (layout.header_bits() + layout.symbol_bits()) as usize,
        }
    }

    pub fn bits(&self) -> usize {
        self.gain.bits() + self.shape_bits()
    }

    /// Subsample set of block `nonce`, if the shape is subsampled.
    pub fn subsample_set(&self, nonce: u64) -> Result<Option<SubsampleSet>> {
        self.sample_count
            .map(|n| SubsampleSet::draw(self.shape.padded_dim(), n, self.shape.seed(), nonce))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainShapeBlock {
    pub gain: GainCodeword,
    pub shape: EncodedBlock,
}

impl GainShapeBlock {
    /// Gain fields followed by the shape bits, zero-padded to whole bytes.
    pub fn to_bits(&self, cfg: &GainShapeConfig) -> Result<(Vec<u8>, usize)> {
        let mut w = BitWriter::with_capacity(cfg.bits());
        cfg.gain.write(&mut w, self.gain);
        let mut r = BitReader::new(&self.shape.bits, self.shape.bit_len)?;
        while r.remaining() > 0 {
            let width = r.remaining().min(64) as u32;
            w.write(r.read(width)?, width);
        }
        Ok(w.finish())
    }

    pub fn from_bits(bytes: &[u8], bit_len: usize, cfg: &GainShapeConfig) -> Result<Self> {
        if bit_len != cfg.bits() {
            bail!(Codec, "block carries {bit_len} bits but the configuration needs {}", cfg.bits());
        }
        let mut r = BitReader::new(bytes, bit_len)?;
        let gain = cfg.gain.read(&mut r)?;
        let mut w = BitWriter::with_capacity(r.remaining());
        while r.remaining() > 0 {
            let width = r.remaining().min(64) as u32;
            w.write(r.read(width)?, width);
        }
        let (bits, len) = w.finish();
        let mut layout = cfg.shape.layout();
        if let Some(n) = cfg.sample_count {
            layout.coordinates = n;
        }
        Ok(Self {
            gain,
            shape: EncodedBlock::from_parts(bits, len, layout)?,
        })
    }
}

/// A-RATQ encoder. `gain_rng` and `shape_rng` must be distinct streams.
pub fn aratq_encode<R1, R2>(
    y: &[f64],
    cfg: &GainShapeConfig,
    nonce: u64,
    gain_rng: &mut R1,
    shape_rng: &mut R2,
) -> Result<GainShapeBlock>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        bail!(Input, "cannot quantize non-finite value {bad}");
    }
    if y.len() != cfg.dim() {
        bail!(Dimension, "input has length {} but the quantizer expects {}", y.len(), cfg.dim());
    }
    let norm = libm::sqrt(y.iter().map(|v| v * v).sum());
    let mut unit: Vec<f64> = if norm > 0.0 {
        y.iter().map(|v| v / norm).collect()
    } else {
        alloc::vec![0.0; y.len()]
    };
    if norm == 0.0 {
        unit[0] = 1.0;
    }
    let (gain, _) = cfg.gain.quantize(norm, gain_rng)?;
    let shape = match cfg.subsample_set(nonce)? {
        None => ratq_encode(&unit, &cfg.shape, nonce, shape_rng)?,
        Some(set) => rcs_encode(&unit, &cfg.shape, &set, nonce, shape_rng)?,
    };
    Ok(GainShapeBlock { gain, shape })
}

pub fn aratq_decode(block: &GainShapeBlock, cfg: &GainShapeConfig, nonce: u64) -> Result<Vec<f64>> {
    let gain = cfg.gain.decode(block.gain)?;
    let mut shape = match cfg.subsample_set(nonce)? {
        None => ratq_decode(&block.shape, &cfg.shape, nonce)?,
        Some(set) => rcs_decode(&block.shape, &cfg.shape, &set, nonce)?,
    };
    for v in &mut shape {
        *v *= gain;
    }
    Ok(shape)
}
