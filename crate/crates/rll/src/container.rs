//! Self-describing framed format for encoded streams.
//!
//! Every field a decoder needs travels in the header: the constraint, the
//! codec parameters (sliding index and quantized bias, or the factorization
//! plan with its per-chain biases), the message bit length, and the biased
//! unit counts that pin down termination. All integers are little-endian
//! fixed width; payload bits are packed MSB-first with an explicit length.

use crate::analysis::{Constraint, RunLimit};
use crate::bitstream::BitBuffer;
use crate::transformer::QuantizedBias;
use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"DKCB";
const VERSION: u8 = 1;

const ALGO_SS: u8 = 0;
const ALGO_IL: u8 = 1;

/// One factor of an interleaved plan as serialized: its arity P, its stride,
/// and the P-1 chain biases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainerFactor {
    pub arity: u32,
    pub stride: u64,
    pub biases: Vec<QuantizedBias>,
}

/// Codec-specific header fields.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmParams {
    SymbolSliding {
        j: u32,
        bias: QuantizedBias,
        /// Biased symbols the decoder feeds to the inverse transformer;
        /// anything past this count is flush output.
        biased_bits: u64,
    },
    Interleaved {
        /// Canonical plan order (ascending stride) with per-chain biases,
        /// so decoding needs no re-derivation.
        factors: Vec<ContainerFactor>,
        phrases: u64,
    },
}

/// Framed encoded message: header plus packed payload bits.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedContainer {
    pub constraint: Constraint,
    pub params: AlgorithmParams,
    pub message_bits: u64,
    pub payload: BitBuffer,
}

impl EncodedContainer {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload.as_bytes().len() + 64);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(match self.params {
            AlgorithmParams::SymbolSliding { .. } => ALGO_SS,
            AlgorithmParams::Interleaved { .. } => ALGO_IL,
        });
        out.extend_from_slice(&self.constraint.d().to_le_bytes());
        match self.constraint.k() {
            RunLimit::Finite(k) => {
                out.push(0);
                out.extend_from_slice(&k.to_le_bytes());
            }
            RunLimit::Infinite => {
                out.push(1);
                out.extend_from_slice(&0u32.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.message_bits.to_le_bytes());
        match &self.params {
            AlgorithmParams::SymbolSliding {
                j,
                bias,
                biased_bits,
            } => {
                out.extend_from_slice(&j.to_le_bytes());
                out.extend_from_slice(&bias.numerator().to_le_bytes());
                out.extend_from_slice(&biased_bits.to_le_bytes());
            }
            AlgorithmParams::Interleaved { factors, phrases } => {
                out.push(factors.len() as u8);
                for f in factors {
                    out.extend_from_slice(&f.arity.to_le_bytes());
                    out.extend_from_slice(&f.stride.to_le_bytes());
                    for b in &f.biases {
                        out.extend_from_slice(&b.numerator().to_le_bytes());
                    }
                }
                out.extend_from_slice(&phrases.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(self.payload.as_bytes());
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = Reader { data, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::CorruptContainer("bad magic".into()));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::CorruptContainer(format!(
                "unsupported version {version}"
            )));
        }
        let algo = r.u8()?;
        let d = r.u32()?;
        let k_flag = r.u8()?;
        let k_raw = r.u32()?;
        let k = match k_flag {
            0 => RunLimit::Finite(k_raw),
            1 => RunLimit::Infinite,
            other => return Err(Error::CorruptContainer(format!("bad k flag {other}"))),
        };
        let constraint = Constraint::new(d, k)
            .map_err(|e| Error::CorruptContainer(format!("invalid constraint: {e}")))?;
        let message_bits = r.u64()?;
        let params =
            match algo {
                ALGO_SS => {
                    let j = r.u32()?;
                    let bias = QuantizedBias::from_numerator(r.u16()?)
                        .map_err(|e| Error::CorruptContainer(format!("invalid bias: {e}")))?;
                    let biased_bits = r.u64()?;
                    AlgorithmParams::SymbolSliding {
                        j,
                        bias,
                        biased_bits,
                    }
                }
                ALGO_IL => {
                    if constraint.k().is_infinite() {
                        return Err(Error::CorruptContainer(
                            "interleaved codec requires finite k".into(),
                        ));
                    }
                    let n_factors = r.u8()? as usize;
                    let mut factors = Vec::with_capacity(n_factors);
                    for _ in 0..n_factors {
                        let arity = r.u32()?;
                        // arity is a prime factor of k-d+1 <= 2^16
                        if !(2..=1 << 16).contains(&arity) {
                            return Err(Error::CorruptContainer(format!(
                                "factor arity {arity} out of range"
                            )));
                        }
                        let stride = r.u64()?;
                        let mut biases = Vec::with_capacity(arity as usize - 1);
                        for _ in 0..arity - 1 {
                            biases.push(QuantizedBias::from_numerator(r.u16()?).map_err(|e| {
                                Error::CorruptContainer(format!("invalid bias: {e}"))
                            })?);
                        }
                        factors.push(ContainerFactor {
                            arity,
                            stride,
                            biases,
                        });
                    }
                    let phrases = r.u64()?;
                    AlgorithmParams::Interleaved { factors, phrases }
                }
                other => {
                    return Err(Error::CorruptContainer(format!(
                        "unknown algorithm id {other}"
                    )))
                }
            };
        let payload_bits = r.u64()? as usize;
        let payload_bytes = r.take(payload_bits.div_ceil(8))?;
        if r.pos != data.len() {
            return Err(Error::CorruptContainer(format!(
                "{} trailing bytes after payload",
                data.len() - r.pos
            )));
        }
        let payload = BitBuffer::unpack(payload_bytes, payload_bits)
            .map_err(|e| Error::CorruptContainer(format!("payload: {e}")))?;
        Ok(EncodedContainer {
            constraint,
            params,
            message_bits,
            payload,
        })
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.data.len())
            .ok_or_else(|| Error::CorruptContainer("truncated header or payload".into()))?;
        let slice = &self.data[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
