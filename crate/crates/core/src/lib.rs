//! Fixed-length stochastic gradient quantizers and the machinery around them.
//!
//! The quantizers in this crate all emit a bit string whose length depends
//! only on their configuration, never on the input:
//!
//! * [`scalar`]: coordinate-wise uniform quantization (CUQ) with unbiased
//!   stochastic rounding and an overflow symbol.
//! * [`adaptive`]: CUQ wrapped in an adaptive choice of dynamic range from a
//!   tetra-iterated (ATUQ) or geometric (AGUQ) ladder.
//! * [`ratq`]: randomized Hadamard rotation followed by ATUQ on subvectors,
//!   the exact bit codec, and random coordinate subsampling (RCS).
//! * [`gain_shape`]: A-RATQ, which quantizes the norm with AGUQ and the
//!   direction with RATQ.
//!
//! On top of those sit [`optimize`] (quantized projected SGD plus a suite of
//! test oracles) and [`applications`] (distributed mean estimation and a
//! subgaussian rate-distortion quantizer). [`params`] derives every
//! quantizer parameter from the handful of quantities a user actually knows.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod adaptive;
pub mod applications;
pub mod codec;
pub mod error;
pub mod gain_shape;
pub mod numerics;
pub mod optimize;
pub mod params;
pub mod ratq;
pub mod scalar;

pub use error::{Error, Result};
