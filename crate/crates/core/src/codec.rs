//! MSB-first bit packing for fixed-width fields.

use alloc::vec::Vec;

use crate::error::{bail, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            bit_len: 0,
        }
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "{value} does not fit in {width} bits");
        for shift in (0..width).rev() {
            let bit = (value >> shift) & 1;
            let offset = self.bit_len % 8;
            if offset == 0 {
                self.bytes.push(0);
            }
            if bit == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 0x80 >> offset;
            }
            self.bit_len += 1;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    /// Bytes with the final byte zero-padded, and the exact bit count.
    pub fn finish(self) -> (Vec<u8>, usize) {
        (self.bytes, self.bit_len)
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    /// Reader over the first `bit_len` bits of `bytes`.
    ///
    /// `bytes` must be exactly `⌈bit_len / 8⌉` long with zero padding bits.
    pub fn new(bytes: &'a [u8], bit_len: usize) -> Result<Self> {
        if bytes.len() != bit_len.div_ceil(8) {
            bail!(
                Codec,
                "{} bytes cannot hold exactly {bit_len} bits",
                bytes.len()
            );
        }
        let pad = bytes.len() * 8 - bit_len;
        if pad > 0 && bytes[bytes.len() - 1] & ((1u8 << pad) - 1) != 0 {
            bail!(Codec, "padding bits after bit {bit_len} are not zero");
        }
        Ok(Self {
            bytes,
            bit_len,
            pos: 0,
        })
    }

    pub fn read(&mut self, width: u32) -> Result<u64> {
        if self.pos + width as usize > self.bit_len {
            bail!(
                Codec,
                "read of {width} bits at offset {} runs past {} bits",
                self.pos,
                self.bit_len
            );
        }
        let mut value = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            value = (value << 1) | u64::from(bit);
            self.pos += 1;
        }
        Ok(value)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bit_len - self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn msb_first_layout() {
        let mut w = BitWriter::new();
        w.write(0b10, 2);
        w.write(0b011, 3);
        let (bytes, len) = w.finish();
        assert_eq!(len, 5);
        assert_eq!(bytes, vec![0b1001_1000]);
    }

    #[test]
    fn zero_width_fields_are_free() {
        let mut w = BitWriter::new();
        w.write(0, 0);
        assert_eq!(w.finish(), (vec![], 0));
    }

    #[test]
    fn reader_rejects_bad_framing() {
        assert!(BitReader::new(&[0, 0], 5).is_err());
        assert!(BitReader::new(&[0b0000_0100], 5).is_err());
        let mut r = BitReader::new(&[0b1110_0000], 3).unwrap();
        assert_eq!(r.read(3).unwrap(), 0b111);
        assert!(r.read(1).is_err());
    }

    proptest! {
        #[test]
        fn fields_round_trip(fields in prop::collection::vec((0u32..=64, any::<u64>()), 0..64)) {
            let fields: Vec<(u32, u64)> = fields
                .into_iter()
                .map(|(w, v)| (w, if w == 64 { v } else { v & ((1u64 << w) - 1) }))
                .collect();
            let mut w = BitWriter::new();
            for &(width, value) in &fields {
                w.write(value, width);
            }
            let total: usize = fields.iter().map(|&(w, _)| w as usize).sum();
            let (bytes, len) = w.finish();
            prop_assert_eq!(len, total);
            let mut r = BitReader::new(&bytes, len).unwrap();
            for &(width, value) in &fields {
                prop_assert_eq!(r.read(width).unwrap(), value);
            }
            prop_assert_eq!(r.remaining(), 0);
        }
    }
}
