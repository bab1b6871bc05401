//! Adaptive dynamic-range selection around CUQ.
//!
//! ATUQ picks, per input vector, the smallest bound of a tetra-iterated ladder
//! that covers the vector's sup-norm and quantizes on `[-M_j, M_j]`. AGUQ does
//! the same for a scalar gain with a geometric ladder and a `[0, M_j]` grid.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::numerics::tetration;
use crate::scalar::{LevelSymbol, UniformGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderKind {
    /// `M_0² = m + m0`, `M_i² = m·e^{*i} + m0`.
    Tetra { m: f64, m0: f64 },
    /// `M_j² = base²·ratio^j`.
    Geometric { base: f64, ratio: f64 },
}

/// Nondecreasing sequence of dynamic-range bounds `M_0 ≤ … ≤ M_{h-1}`.
///
/// Tetra ladders saturate to `+∞` from `i = 4` on (see
/// [`numerics::SATURATED`](crate::numerics::SATURATED)).
#[derive(Debug, Clone, PartialEq)]
pub struct RangeLadder {
    kind: LadderKind,
    bounds: Vec<f64>,
}

impl RangeLadder {
    pub fn tetra(m: f64, m0: f64, h: u32) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            bail!(Domain, "ladder scale m must be positive and finite, got {m}");
        }
        if !(m0.is_finite() && m0 >= 0.0) {
            bail!(Domain, "ladder offset m0 must be nonnegative and finite, got {m0}");
        }
        if h == 0 {
            bail!(Domain, "a ladder needs at least one range");
        }
        let mut bounds = Vec::with_capacity(h as usize);
        bounds.push(libm::sqrt(m + m0));
        for i in 1..h {
            bounds.push(libm::sqrt(m * tetration(i)? + m0));
        }
        Ok(Self {
            kind: LadderKind::Tetra { m, m0 },
            bounds,
        })
    }

    pub fn geometric(base: f64, ratio: f64, h: u32) -> Result<Self> {
        if !(base.is_finite() && base > 0.0) {
            bail!(Domain, "geometric ladder base must be positive and finite, got {base}");
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            bail!(Domain, "geometric ladder ratio must exceed 1, got {ratio}");
        }
        if h == 0 {
            bail!(Domain, "a ladder needs at least one range");
        }
        let bounds = (0..h)
            .map(|j| base * libm::sqrt(libm::pow(ratio, f64::from(j))))
            .collect();
        Ok(Self {
            kind: LadderKind::Geometric { base, ratio },
            bounds,
        })
    }

    pub fn kind(&self) -> LadderKind {
        self.kind
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// `M_{h-1}`.
    pub fn top(&self) -> f64 {
        self.bounds[self.bounds.len() - 1]
    }

    /// `min{j : magnitude ≤ M_j}`, or `h - 1` when nothing covers it.
    pub fn select(&self, magnitude: f64) -> usize {
        self.bounds
            .iter()
            .position(|&b| magnitude <= b)
            .unwrap_or(self.bounds.len() - 1)
    }

    fn grid(&self, index: usize, levels: u32, nonnegative: bool) -> Result<UniformGrid> {
        let range = self.bounds[index];
        if range == f64::INFINITY {
            bail!(
                Domain,
                "range {index} of the ladder is saturated and cannot carry a uniform grid"
            );
        }
        if nonnegative {
            UniformGrid::nonnegative(range, levels)
        } else {
            UniformGrid::symmetric(range, levels)
        }
    }
}

/// ATUQ output for one (sub)vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptiveCodeword {
    pub range_index: u32,
    pub symbols: Vec<LevelSymbol>,
}

impl AdaptiveCodeword {
    /// Coordinates that fell outside the selected range.
    pub fn overflow_count(&self) -> usize {
        self.symbols.iter().filter(|s| s.is_overflow()).count()
    }
}

/// ATUQ encoder.
pub fn atuq_encode<R: Rng + ?Sized>(
    y: &[f64],
    ladder: &RangeLadder,
    levels: u32,
    rng: &mut R,
) -> Result<AdaptiveCodeword> {
    let mut symbols = Vec::with_capacity(y.len());
    let range_index = atuq_encode_into(y, ladder, levels, rng, &mut symbols)?;
    Ok(AdaptiveCodeword {
        range_index,
        symbols,
    })
}

/// ATUQ encoder appending symbols to `out`; returns the selected range index.
pub(crate) fn atuq_encode_into<R: Rng + ?Sized>(
    y: &[f64],
    ladder: &RangeLadder,
    levels: u32,
    rng: &mut R,
    out: &mut Vec<LevelSymbol>,
) -> Result<u32> {
    if y.is_empty() {
        bail!(Dimension, "ATUQ input is empty");
    }
    let mut sup = 0.0f64;
    for &v in y {
        if !v.is_finite() {
            bail!(Input, "cannot quantize non-finite value {v}");
        }
        sup = sup.max(v.abs());
    }
    let index = ladder.select(sup);
    let grid = ladder.grid(index, levels, false)?;
    for &v in y {
        out.push(grid.encode_value(v, rng)?);
    }
    Ok(index as u32)
}

/// ATUQ decoder.
pub fn atuq_decode(cw: &AdaptiveCodeword, ladder: &RangeLadder, levels: u32) -> Result<Vec<f64>> {
    let mut out = alloc::vec![0.0; cw.symbols.len()];
    atuq_decode_into(cw.range_index, &cw.symbols, ladder, levels, &mut out)?;
    Ok(out)
}

pub(crate) fn atuq_decode_into(
    range_index: u32,
    symbols: &[LevelSymbol],
    ladder: &RangeLadder,
    levels: u32,
    out: &mut [f64],
) -> Result<()> {
    let index = range_index as usize;
    if index >= ladder.len() {
        bail!(
            Codec,
            "range index {index} is outside a ladder of {} ranges",
            ladder.len()
        );
    }
    let grid = ladder.grid(index, levels, false)?;
    for (o, &s) in out.iter_mut().zip(symbols) {
        *o = grid.decode_symbol(s)?;
    }
    Ok(())
}

/// AGUQ output: selected range plus one level symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GainCodeword {
    pub range_index: u32,
    pub symbol: LevelSymbol,
}

/// AGUQ: quantizes a nonnegative gain on the smallest covering `[0, M_{g,j}]`.
///
/// A gain above the top of the ladder yields the overflow symbol (with the
/// top range index) and decodes to 0. Returns the codeword and its decoded
/// value.
pub fn aguq_quantize<R: Rng + ?Sized>(
    gain: f64,
    ladder: &RangeLadder,
    levels: u32,
    rng: &mut R,
) -> Result<(GainCodeword, f64)> {
    if !gain.is_finite() {
        bail!(Input, "cannot quantize non-finite gain {gain}");
    }
    if gain < 0.0 {
        bail!(Domain, "gain must be nonnegative, got {gain}");
    }
    let index = ladder.select(gain);
    let grid = ladder.grid(index, levels, true)?;
    let symbol = grid.encode_value(gain, rng)?;
    let value = grid.decode_symbol(symbol)?;
    Ok((
        GainCodeword {
            range_index: index as u32,
            symbol,
        },
        value,
    ))
}

pub fn aguq_decode(cw: GainCodeword, ladder: &RangeLadder, levels: u32) -> Result<f64> {
    let index = cw.range_index as usize;
    if index >= ladder.len() {
        bail!(
            Codec,
            "gain range index {index} is outside a ladder of {} ranges",
            ladder.len()
        );
    }
    ladder.grid(index, levels, true)?.decode_symbol(cw.symbol)
}
