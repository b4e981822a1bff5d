//! Bit-exact buffers and cursors.
//!
//! Bits are packed MSB-first within each byte; the final partial byte is
//! zero-padded on the right and the bit length travels out of band (in
//! container headers), never inferred from padding. Every codec in this
//! crate is bit-order sensitive, so MSB-first is part of the on-disk
//! contract.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Growable bit vector. Immutable values are safe to share across threads;
/// cursors are single-owner mutable state.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct BitBuffer {
    bytes: Vec<u8>,
    len: usize,
}

impl BitBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitBuffer {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        if self.len & 7 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len & 7);
        }
        self.len += 1;
    }

    pub fn push_run(&mut self, bit: bool, count: usize) {
        for _ in 0..count {
            self.push(bit);
        }
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        if index >= self.len {
            return None;
        }
        Some(self.bytes[index >> 3] & (0x80 >> (index & 7)) != 0)
    }

    /// Removes and returns the last bit.
    pub fn pop(&mut self) -> Option<bool> {
        if self.len == 0 {
            return None;
        }
        self.len -= 1;
        let bit = self.bytes[self.len >> 3] & (0x80 >> (self.len & 7)) != 0;
        // keep the pad-bits-are-zero invariant
        self.bytes[self.len >> 3] &= !(0x80 >> (self.len & 7));
        self.bytes.truncate(self.len.div_ceil(8));
        Some(bit)
    }

    /// Shortens the buffer to `len` bits; no-op when already shorter.
    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.len = len;
        self.bytes.truncate(len.div_ceil(8));
        if len & 7 != 0 {
            let last = self.bytes.len() - 1;
            self.bytes[last] &= 0xFFu8 << (8 - (len & 7));
        }
    }

    pub fn extend_from(&mut self, other: &BitBuffer) {
        for bit in other.iter() {
            self.push(bit);
        }
    }

    pub fn iter(&self) -> Bits<'_> {
        Bits { buf: self, pos: 0 }
    }

    /// Packed MSB-first bytes; the bit length is [`len`](Self::len).
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Inverse of [`as_bytes`](Self::as_bytes) + [`len`](Self::len).
    /// Pad bits in the final partial byte are ignored (forced to zero).
    pub fn unpack(bytes: &[u8], bit_len: usize) -> Result<Self> {
        if bit_len > bytes.len() * 8 {
            return Err(Error::LengthMismatch {
                bits: bit_len,
                bytes: bytes.len(),
            });
        }
        let nbytes = bit_len.div_ceil(8);
        let mut out = BitBuffer {
            bytes: bytes[..nbytes].to_vec(),
            len: bit_len,
        };
        if bit_len & 7 != 0 {
            let last = nbytes - 1;
            out.bytes[last] &= 0xFFu8 << (8 - (bit_len & 7));
        }
        Ok(out)
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn count_zeros(&self) -> usize {
        self.len - self.count_ones()
    }
}

impl fmt::Debug for BitBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitBuffer[{}; ", self.len)?;
        for bit in self.iter().take(64) {
            write!(f, "{}", if bit { '1' } else { '0' })?;
        }
        if self.len > 64 {
            write!(f, "…")?;
        }
        write!(f, "]")
    }
}

impl FromIterator<bool> for BitBuffer {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut buf = BitBuffer::new();
        for bit in iter {
            buf.push(bit);
        }
        buf
    }
}

impl FromStr for BitBuffer {
    type Err = Error;

    /// Parses a string of `0`/`1` characters.
    fn from_str(s: &str) -> Result<Self> {
        let mut buf = BitBuffer::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => buf.push(false),
                '1' => buf.push(true),
                other => return Err(Error::Parameter(format!("invalid bit character {other:?}"))),
            }
        }
        Ok(buf)
    }
}

impl<'a> IntoIterator for &'a BitBuffer {
    type Item = bool;
    type IntoIter = Bits<'a>;

    fn into_iter(self) -> Bits<'a> {
        self.iter()
    }
}

pub struct Bits<'a> {
    buf: &'a BitBuffer,
    pos: usize,
}

impl Iterator for Bits<'_> {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let bit = self.buf.get(self.pos)?;
        self.pos += 1;
        Some(bit)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.buf.len - self.pos;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for Bits<'_> {}

/// Read position into a [`BitBuffer`]. Reading past the end yields `None`,
/// never silent padding.
pub struct BitCursor<'a> {
    buf: &'a BitBuffer,
    pos: usize,
}

impl<'a> BitCursor<'a> {
    pub fn new(buf: &'a BitBuffer) -> Self {
        BitCursor { buf, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Option<bool> {
        let bit = self.buf.get(self.pos)?;
        self.pos += 1;
        Some(bit)
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len - self.pos
    }

    pub fn is_exhausted(&self) -> bool {
        self.pos >= self.buf.len
    }
}
