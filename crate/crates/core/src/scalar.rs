//! Coordinate-wise uniform quantizer (CUQ) with unbiased stochastic rounding.
//!
//! A [`UniformGrid`] holds `k` evenly spaced levels spanning either `[-M, M]`
//! or `[0, M]`. In-range values are rounded to one of the two bracketing levels
//! with probabilities chosen so the decoded value is unbiased; values outside
//! the range produce [`LevelSymbol::Overflow`], which decodes to zero.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridVariant {
    /// Levels `-M + ℓ·2M/(k-1)`.
    Symmetric,
    /// Levels `ℓ·M/(k-1)`.
    Nonnegative,
}

/// One CUQ output symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevelSymbol {
    Level(u32),
    /// The input fell outside the dynamic range.
    Overflow,
}

impl LevelSymbol {
    /// Wire value: levels map to themselves and overflow maps to `k`.
    pub fn to_code(self, levels: u32) -> u64 {
        match self {
            LevelSymbol::Level(l) => u64::from(l),
            LevelSymbol::Overflow => u64::from(levels),
        }
    }

    pub fn from_code(code: u64, levels: u32) -> Result<Self> {
        match code {
            c if c < u64::from(levels) => Ok(LevelSymbol::Level(c as u32)),
            c if c == u64::from(levels) => Ok(LevelSymbol::Overflow),
            c => bail!(Codec, "symbol code {c} exceeds overflow code {levels}"),
        }
    }

    pub fn is_overflow(self) -> bool {
        self == LevelSymbol::Overflow
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    range: f64,
    levels: u32,
    variant: GridVariant,
}

impl UniformGrid {
    pub fn new(range: f64, levels: u32, variant: GridVariant) -> Result<Self> {
        if !(range.is_finite() && range > 0.0) {
            bail!(Domain, "grid range must be positive and finite, got {range}");
        }
        if levels < 2 {
            bail!(Domain, "a uniform grid needs at least 2 levels, got {levels}");
        }
        Ok(Self {
            range,
            levels,
            variant,
        })
    }

    pub fn symmetric(range: f64, levels: u32) -> Result<Self> {
        Self::new(range, levels, GridVariant::Symmetric)
    }

    pub fn nonnegative(range: f64, levels: u32) -> Result<Self> {
        Self::new(range, levels, GridVariant::Nonnegative)
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn variant(&self) -> GridVariant {
        self.variant
    }

    /// Value of level `l`. Both endpoints come out exact.
    pub fn level(&self, l: u32) -> f64 {
        let top = f64::from(self.levels - 1);
        match self.variant {
            GridVariant::Symmetric => self.range * ((2.0 * f64::from(l) - top) / top),
            GridVariant::Nonnegative => self.range * (f64::from(l) / top),
        }
    }

    /// Distance between neighbouring levels.
    pub fn step(&self) -> f64 {
        let top = f64::from(self.levels - 1);
        match self.variant {
            GridVariant::Symmetric => 2.0 * self.range / top,
            GridVariant::Nonnegative => self.range / top,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        match self.variant {
            GridVariant::Symmetric => y.abs() <= self.range,
            GridVariant::Nonnegative => (0.0..=self.range).contains(&y),
        }
    }

    /// Stochastically rounds one value.
    ///
    /// Intervals are half-open `(B(ℓ), B(ℓ+1)]`, the lower endpoint maps to
    /// level 0, and a value equal to a level always returns that level. At
    /// most one uniform is drawn, and only when the value is strictly between
    /// two levels.
    pub fn encode_value<R: Rng + ?Sized>(&self, y: f64, rng: &mut R) -> Result<LevelSymbol> {
        if !y.is_finite() {
            bail!(Input, "cannot quantize non-finite value {y}");
        }
        if self.variant == GridVariant::Nonnegative && y < 0.0 {
            bail!(Input, "nonnegative grid received negative value {y}");
        }
        if !self.contains(y) {
            return Ok(LevelSymbol::Overflow);
        }
        let top = self.levels - 1;
        let origin = self.level(0);
        let guess = libm::floor((y - origin) / self.step());
        let mut lo = if guess <= 0.0 {
            0
        } else {
            (guess as u32).min(top - 1)
        };
        // Settle on B(lo) < y <= B(lo + 1) using the exact level values.
        while lo > 0 && y <= self.level(lo) {
            lo -= 1;
        }
        while lo + 1 < top && y > self.level(lo + 1) {
            lo += 1;
        }
        let (below, above) = (self.level(lo), self.level(lo + 1));
        if y <= below {
            return Ok(LevelSymbol::Level(lo));
        }
        if y == above {
            return Ok(LevelSymbol::Level(lo + 1));
        }
        let p_up = (y - below) / (above - below);
        let u: f64 = rng.random();
        Ok(LevelSymbol::Level(if u < p_up { lo + 1 } else { lo }))
    }

    pub fn decode_symbol(&self, symbol: LevelSymbol) -> Result<f64> {
        match symbol {
            LevelSymbol::Overflow => Ok(0.0),
            LevelSymbol::Level(l) if l < self.levels => Ok(self.level(l)),
            LevelSymbol::Level(l) => {
                bail!(Codec, "level {l} is outside a {}-level grid", self.levels)
            }
        }
    }
}

/// CUQ encoder: rounds every coordinate of `y` on `grid`.
pub fn cuq_encode<R: Rng + ?Sized>(
    y: &[f64],
    grid: &UniformGrid,
    rng: &mut R,
) -> Result<Vec<LevelSymbol>> {
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        bail!(Input, "cannot quantize non-finite value {bad}");
    }
    y.iter().map(|&v| grid.encode_value(v, rng)).collect()
}

/// CUQ decoder: maps symbols back to grid values, overflow to zero.
pub fn cuq_decode(symbols: &[LevelSymbol], grid: &UniformGrid) -> Result<Vec<f64>> {
    symbols.iter().map(|&s| grid.decode_symbol(s)).collect()
}
