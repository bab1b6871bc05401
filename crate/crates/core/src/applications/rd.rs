//! Lossy compression of a vector with `v`-subgaussian coordinates using the
//! unrotated quantizer.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::params::RdParams;
use crate::ratq::{ratq_decode, ratq_encode};

#[derive(Debug, Clone, PartialEq)]
pub struct RdOutcome {
    pub reconstruction: Vec<f64>,
    /// Exact bits per dimension of the emitted block.
    pub rate: f64,
    /// `‖x̂ - x‖₂²/d`.
    pub mse: f64,
    /// Part of `mse` from coordinates that were quantized in range.
    pub in_range_error: f64,
    /// Part of `mse` from coordinates that overflowed (and decoded to 0).
    pub overflow_error: f64,
    pub overflow_count: usize,
}

pub fn rd_quantize<R: Rng + ?Sized>(x: &[f64], params: &RdParams, rng: &mut R) -> Result<RdOutcome> {
    let cfg = params.config(0)?;
    let block = ratq_encode(x, &cfg, 0, rng)?;
    let reconstruction = ratq_decode(&block, &cfg, 0)?;
    let d = x.len() as f64;
    let (mut in_range, mut overflow, mut overflow_count) = (0.0, 0.0, 0);
    let codewords = cfg.layout().unpack(&block)?;
    let symbols = codewords.iter().flat_map(|cw| cw.symbols.iter());
    for ((xi, yi), s) in x.iter().zip(&reconstruction).zip(symbols) {
        let e = (xi - yi) * (xi - yi);
        if s.is_overflow() {
            overflow += e;
            overflow_count += 1;
        } else {
            in_range += e;
        }
    }
    Ok(RdOutcome {
        reconstruction,
        rate: block.bit_len as f64 / d,
        mse: (in_range + overflow) / d,
        in_range_error: in_range / d,
        overflow_error: overflow / d,
        overflow_count,
    })
}
