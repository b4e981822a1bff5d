//! The SS(j) constrained encoder/decoder. Bit stuffing is SS(0), bit
//! flipping is SS(1).
//!
//! With n = k-d, the encoder tracks the run ρ of pending zeros and, per
//! input bit:
//!
//! - a zero that brings ρ to n: replace the run with the phrase `0^(n-j) 1`
//! - a one arriving at n-j ≤ ρ ≤ n-1: insert a zero before it
//! - a one arriving at ρ < n-j: pass
//!
//! then d zeros are stuffed after every emitted one. When k = ∞ the
//! run-length rules are skipped and only the stuffing applies. After the
//! biased stream is exhausted a single flush one is pushed through the same
//! rules, closing any open run legally; the decoder strips it, and the
//! container records the exact biased-bit count so flush output past it is
//! discarded.

use crate::analysis::{Constraint, SlidingConfig};
use crate::bitstream::BitBuffer;
use crate::container::{AlgorithmParams, EncodedContainer};
use crate::transformer::{bias_inverse, transform_message, QuantizedBias};
use crate::{Error, Result};

/// A bit stream satisfying (d,k): interior zero runs in `[d,k]`, leading run
/// at most k, and exactly d trailing zeros after the final one.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedStream {
    pub bits: BitBuffer,
    pub constraint: Constraint,
}

/// Single-owner encoder state machine.
pub struct SlidingEncoder {
    constraint: Constraint,
    /// k-d for finite k; None disables the run-length rules.
    span: Option<u32>,
    j: u32,
    rho: u32,
    out: BitBuffer,
}

impl SlidingEncoder {
    pub fn new(cfg: &SlidingConfig) -> Self {
        SlidingEncoder {
            constraint: cfg.constraint(),
            span: cfg.constraint().span(),
            j: cfg.j(),
            rho: 0,
            out: BitBuffer::new(),
        }
    }

    fn emit_phrase(&mut self, zeros: u32) {
        self.out.push_run(false, zeros as usize);
        self.out.push(true);
        self.out.push_run(false, self.constraint.d() as usize);
        self.rho = 0;
    }

    pub fn push(&mut self, bit: bool) {
        let Some(n) = self.span else {
            // k = inf: plain stuffing
            if bit {
                self.out.push(true);
                self.out.push_run(false, self.constraint.d() as usize);
            } else {
                self.out.push(false);
            }
            return;
        };
        if !bit {
            self.rho += 1;
            if self.rho == n {
                self.emit_phrase(n - self.j);
            }
        } else if self.rho >= n - self.j {
            self.emit_phrase(self.rho + 1);
        } else {
            self.emit_phrase(self.rho);
        }
    }

    /// Constrained bits emitted so far. Read before [`finish`](Self::finish)
    /// to account rates with the flush excluded.
    pub fn encoded_len(&self) -> usize {
        self.out.len()
    }

    /// Pushes the flush one through the encoder and returns the stream.
    pub fn finish(mut self) -> ConstrainedStream {
        if self.span.is_some() {
            self.push(true);
        } else {
            self.out.push(true);
            self.out.push_run(false, self.constraint.d() as usize);
        }
        ConstrainedStream {
            bits: self.out,
            constraint: self.constraint,
        }
    }
}

/// Encodes a biased stream into a (d,k) stream, flush phrase included.
pub fn ss_encode(biased: &BitBuffer, cfg: &SlidingConfig) -> ConstrainedStream {
    let mut enc = SlidingEncoder::new(cfg);
    for bit in biased.iter() {
        enc.push(bit);
    }
    enc.finish()
}

fn corrupt(bit_offset: usize, detail: impl Into<String>) -> Error {
    Error::CorruptStream {
        bit_offset,
        detail: detail.into(),
    }
}

/// Exact inverse of [`ss_encode`]: removes the d stuffed zeros after every
/// one, inverts the run-length rules, and strips the terminal flush one.
pub fn ss_decode(stream: &ConstrainedStream, cfg: &SlidingConfig) -> Result<BitBuffer> {
    if stream.constraint != cfg.constraint() {
        return Err(Error::Parameter(format!(
            "stream constraint {} does not match codec constraint {}",
            stream.constraint,
            cfg.constraint()
        )));
    }
    let bits = &stream.bits;
    let d = cfg.constraint().d();
    let mut out = BitBuffer::with_capacity(bits.len());
    let mut pos = 0usize;
    let mut first_phrase = true;
    while pos < bits.len() {
        if !first_phrase {
            // the d zeros stuffed after the previous one
            for _ in 0..d {
                match bits.get(pos) {
                    Some(false) => pos += 1,
                    Some(true) => {
                        return Err(corrupt(pos, "one inside stuffed zeros (gap below d)"))
                    }
                    None => return Err(corrupt(pos, "stream ends inside stuffed zeros")),
                }
            }
            if pos == bits.len() {
                break; // trailing stuffed zeros of the flush phrase
            }
        }
        let run_start = pos;
        let mut gap = 0u32;
        loop {
            match bits.get(pos) {
                Some(false) => {
                    gap += 1;
                    pos += 1;
                }
                Some(true) => {
                    pos += 1;
                    break;
                }
                None => {
                    if first_phrase {
                        return Err(corrupt(run_start, "no phrase boundary in stream"));
                    }
                    return Err(corrupt(run_start, "stream ends without a closing one"));
                }
            }
        }
        match cfg.constraint().span() {
            Some(n) => {
                let j = cfg.j();
                if gap > n {
                    return Err(corrupt(
                        run_start,
                        format!("zero run {gap} exceeds k-d = {n}"),
                    ));
                }
                if gap == n - j {
                    out.push_run(false, n as usize); // replaced run: no one in the message
                } else if gap > n - j {
                    out.push_run(false, gap as usize - 1); // drop the inserted zero
                    out.push(true);
                } else {
                    out.push_run(false, gap as usize);
                    out.push(true);
                }
            }
            None => {
                out.push_run(false, gap as usize);
                out.push(true);
            }
        }
        first_phrase = false;
    }
    if first_phrase {
        return Err(corrupt(0, "empty stream has no flush phrase"));
    }
    match out.pop() {
        Some(true) => Ok(out),
        _ => Err(corrupt(bits.len(), "flush phrase does not decode to a one")),
    }
}

/// Full pipeline: distribution transformer then SS(j) encoder, framed with
/// everything the decoder needs.
pub fn full_encode(message: &BitBuffer, cfg: &SlidingConfig) -> EncodedContainer {
    let bias = QuantizedBias::quantize(cfg.p()).expect("config bias is validated");
    let biased = transform_message(message, bias);
    let stream = ss_encode(&biased, cfg);
    EncodedContainer {
        constraint: cfg.constraint(),
        params: AlgorithmParams::SymbolSliding {
            j: cfg.j(),
            bias,
            biased_bits: biased.len() as u64,
        },
        message_bits: message.len() as u64,
        payload: stream.bits,
    }
}

/// Exact inverse of [`full_encode`].
pub fn full_decode(container: &EncodedContainer) -> Result<BitBuffer> {
    let AlgorithmParams::SymbolSliding {
        j,
        bias,
        biased_bits,
    } = &container.params
    else {
        return Err(Error::CorruptContainer(
            "container does not hold a symbol-sliding stream".into(),
        ));
    };
    let cfg = SlidingConfig::new(container.constraint, *j, bias.value())
        .map_err(|e| Error::CorruptContainer(format!("invalid codec parameters: {e}")))?;
    let stream = ConstrainedStream {
        bits: container.payload.clone(),
        constraint: container.constraint,
    };
    let mut biased = ss_decode(&stream, &cfg)?;
    if (biased.len() as u64) < *biased_bits {
        return Err(Error::CorruptContainer(format!(
            "payload decodes to {} biased bits, header claims {}",
            biased.len(),
            biased_bits
        )));
    }
    biased.truncate(*biased_bits as usize);
    let mut message = bias_inverse(&biased, *bias);
    if (message.len() as u64) < container.message_bits {
        return Err(Error::CorruptContainer(format!(
            "biased stream determines {} message bits, header claims {}",
            message.len(),
            container.message_bits
        )));
    }
    message.truncate(container.message_bits as usize);
    Ok(message)
}
