//! Invertible distribution transformer between unbiased and p-biased bit
//! streams, plus seeded sources for Monte Carlo work.
//!
//! The transformer is a fixed-precision binary arithmetic coder: 32-bit
//! interval registers, 16-bit quantized probabilities, carry-free
//! renormalization. The forward direction runs the coder as a *decoder*:
//! the unbiased input is read as a binary code string and decoded into
//! biased symbols at an asymptotic cost of h(p) input bits per output bit.
//! The inverse re-encodes the biased symbols, which reproduces the consumed
//! input prefix bit-for-bit.
//!
//! "Consumed" counts only input bits fully determined by the emitted
//! symbols. The decoder's code window trails behind by up to 32 bits plus
//! any pending middle-straddle bits, so message-level drivers keep emitting
//! symbols (drawing deterministic padding once the message ends) until the
//! whole message is determined; the exact counts recorded in the container
//! let the inverse stop without any flush tail.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::bitstream::{BitBuffer, BitCursor};
use crate::{Error, Result};

const HALF: u32 = 1 << 31;
const QUARTER: u32 = 1 << 30;
const THREE_QUARTERS: u32 = 3 << 30;

/// Bits pulled to prime a decoder's code window before the first symbol.
pub(crate) const CODE_BITS: u32 = 32;

/// A bias quantized to `numerator / 2^16`, the exact value both transform
/// directions use. Quantization error is at most 2^-17.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct QuantizedBias {
    numerator: u16,
}

impl QuantizedBias {
    /// Rounds `p` to the nearest representable bias, never to 0 or 1.
    pub fn quantize(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("bias must lie in (0,1), got {p}")));
        }
        let raw = (p * 65536.0).round() as i64;
        let numerator = raw.clamp(1, 65535) as u16;
        Ok(QuantizedBias { numerator })
    }

    /// Restores a bias from its wire form; zero is invalid.
    pub fn from_numerator(numerator: u16) -> Result<Self> {
        if numerator == 0 {
            return Err(Error::Parameter("bias numerator must be nonzero".into()));
        }
        Ok(QuantizedBias { numerator })
    }

    pub fn numerator(&self) -> u16 {
        self.numerator
    }

    /// Pr{0} as realized.
    pub fn value(&self) -> f64 {
        self.numerator as f64 / 65536.0
    }
}

/// Splits `[low, high]` at the quantized zero-probability. The subinterval
/// for symbol 0 is `[low, split-1]`, for symbol 1 `[split, high]`; widths
/// stay positive because renormalization keeps the range above 2^30.
#[inline]
fn split_point(low: u32, high: u32, numerator: u16) -> u32 {
    let range = (high - low) as u64 + 1;
    low + ((range * numerator as u64) >> 16) as u32
}

/// Forward transformer state: decodes an unbiased code stream into biased
/// symbols while mirroring the inverse encoder's emission schedule.
pub struct BiasDecoder {
    bias: QuantizedBias,
    low: u32,
    high: u32,
    code: u32,
    primed: bool,
    pending: u64,
    determined: u64,
    pulled: u64,
}

impl BiasDecoder {
    pub fn new(bias: QuantizedBias) -> Self {
        BiasDecoder {
            bias,
            low: 0,
            high: u32::MAX,
            code: 0,
            primed: false,
            pending: 0,
            determined: 0,
            pulled: 0,
        }
    }

    /// Input bits fully determined by the symbols emitted so far; re-encoding
    /// those symbols reproduces exactly this prefix of the pulled stream.
    pub fn determined(&self) -> u64 {
        self.determined
    }

    /// Total bits pulled, code-window fill included.
    pub fn pulled(&self) -> u64 {
        self.pulled
    }

    /// Decodes one biased symbol, pulling code bits as renormalization
    /// demands them. Returns `None` when the source runs dry.
    pub fn next_symbol(&mut self, pull: &mut impl FnMut() -> Option<bool>) -> Option<bool> {
        if !self.primed {
            for _ in 0..CODE_BITS {
                self.code = (self.code << 1) | pull()? as u32;
                self.pulled += 1;
            }
            self.primed = true;
        }
        let split = split_point(self.low, self.high, self.bias.numerator);
        let symbol = self.code >= split;
        if symbol {
            self.low = split;
        } else {
            self.high = split - 1;
        }
        loop {
            if self.high < HALF {
                self.determined += 1 + self.pending;
                self.pending = 0;
            } else if self.low >= HALF {
                self.determined += 1 + self.pending;
                self.pending = 0;
                self.low -= HALF;
                self.high -= HALF;
                self.code -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.code -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.code = (self.code << 1) | pull()? as u32;
            self.pulled += 1;
        }
        Some(symbol)
    }
}

/// Inverse transformer state: re-encodes biased symbols, emitting the
/// determined unbiased bits as renormalizations resolve them.
pub struct BiasEncoder {
    bias: QuantizedBias,
    low: u32,
    high: u32,
    pending: u64,
    out: BitBuffer,
}

impl BiasEncoder {
    pub fn new(bias: QuantizedBias) -> Self {
        BiasEncoder {
            bias,
            low: 0,
            high: u32::MAX,
            pending: 0,
            out: BitBuffer::new(),
        }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    /// Absorbs one symbol and returns the number of window shifts it caused
    /// (equal to the bits the forward decoder pulled for the same symbol).
    pub fn push_symbol(&mut self, symbol: bool) -> u32 {
        let split = split_point(self.low, self.high, self.bias.numerator);
        if symbol {
            self.low = split;
        } else {
            self.high = split - 1;
        }
        let mut shifts = 0;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            shifts += 1;
        }
        shifts
    }

    pub fn bits(&self) -> &BitBuffer {
        &self.out
    }

    pub fn into_bits(self) -> BitBuffer {
        self.out
    }
}

/// Forward transform output: the biased bits and how much input they pin down.
#[derive(Debug)]
pub struct BiasedStream {
    pub bits: BitBuffer,
    /// Length of the input prefix reproducible from `bits`.
    pub consumed: usize,
}

/// Converts an unbiased stream into exactly `n_out` p-biased symbols.
///
/// Deterministic given `(u, bias, n_out)`. Fails with [`Error::Underflow`]
/// when `u` runs out before `n_out` symbols are produced.
pub fn bias_transform(u: &BitBuffer, bias: QuantizedBias, n_out: usize) -> Result<BiasedStream> {
    let mut cursor = BitCursor::new(u);
    let mut pull = || cursor.read_bit();
    let mut dec = BiasDecoder::new(bias);
    let mut bits = BitBuffer::with_capacity(n_out);
    for produced in 0..n_out {
        match dec.next_symbol(&mut pull) {
            Some(sym) => bits.push(sym),
            None => return Err(Error::Underflow { produced }),
        }
    }
    Ok(BiasedStream {
        bits,
        consumed: dec.determined() as usize,
    })
}

/// Deterministic padding used once a message is exhausted. The values never
/// need to be reconstructed on decode; they only have to be fixed and free
/// of degenerate patterns that could stall renormalization.
pub(crate) fn pad_bit(index: u64) -> bool {
    splitmix64(index) >> 63 == 1
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Emits biased symbols until every bit of `u` is determined, padding pulls
/// past the end of the message. `bias_inverse` of the result starts with
/// `u` exactly.
pub fn transform_message(u: &BitBuffer, bias: QuantizedBias) -> BitBuffer {
    let n = u.len();
    let mut dec = BiasDecoder::new(bias);
    let mut pos = 0usize;
    let mut pull = || {
        let bit = if pos < n {
            u.get(pos).expect("in range")
        } else {
            pad_bit((pos - n) as u64)
        };
        pos += 1;
        Some(bit)
    };
    let mut out = BitBuffer::with_capacity(n + n / 2);
    // generous stall guard: ~4x the h(p)-expected symbol count
    let cap =
        (4.0 * (n as f64 + 128.0) / crate::analysis::binary_entropy(bias.value())) as u64 + 4096;
    let mut emitted = 0u64;
    while (dec.determined() as usize) < n {
        let sym = dec
            .next_symbol(&mut pull)
            .expect("padded source never runs dry");
        out.push(sym);
        emitted += 1;
        assert!(
            emitted < cap,
            "transformer failed to determine the message within {cap} symbols"
        );
    }
    out
}

/// Exact inverse of the forward transform: re-encodes the biased symbols
/// and returns every input bit they determine, in order.
pub fn bias_inverse(b: &BitBuffer, bias: QuantizedBias) -> BitBuffer {
    let mut enc = BiasEncoder::new(bias);
    for sym in b.iter() {
        enc.push_symbol(sym);
    }
    enc.into_bits()
}

/// Seeded i.i.d. bits with `Pr{0} = bias`. Not invertible; simulation only.
pub fn biased_source(seed: u64, bias: QuantizedBias, n: usize) -> BitBuffer {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let num = bias.numerator as u32;
    (0..n).map(|_| (rng.next_u32() & 0xFFFF) >= num).collect()
}

/// Seeded i.i.d. unbiased bits.
pub fn unbiased_source(seed: u64, n: usize) -> BitBuffer {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = BitBuffer::with_capacity(n);
    let mut word = 0u64;
    for i in 0..n {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        out.push(word >> 63 == 1);
        word <<= 1;
    }
    out
}
