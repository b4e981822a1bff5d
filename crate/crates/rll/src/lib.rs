//! Encoders, decoders, and analysis tools for (d,k) run-length-limited
//! binary sequences.
//!
//! A binary sequence is (d,k) constrained when every run of zeros between
//! consecutive ones has length at least `d` and at most `k` (`k` may be
//! infinite). This crate provides:
//!
//! - [`analysis`]: characteristic polynomials, Shannon capacity, maxentropic
//!   and algorithmic phrase distributions, and the SS(j) rate formula with
//!   numeric optimization over the bias `p` and sliding index `j`.
//! - [`transformer`]: an invertible distribution transformer between
//!   unbiased and p-biased i.i.d. bit streams (fixed-precision arithmetic
//!   coder), plus seeded bit sources for simulation.
//! - [`sliding`]: the symbol-sliding codec SS(j); bit stuffing and bit
//!   flipping are the j=0 and j=1 special cases.
//! - [`interleaved`]: the interleaved construction for constraints with
//!   k-d+1 composite, built from a factorization of the characteristic
//!   polynomial and per-factor transformer chains.
//! - [`container`]: the self-describing framed format that makes every
//!   codec exactly invertible on finite messages.
//! - [`harness`]: constraint validation, phrase statistics, Monte Carlo
//!   rate estimation, and tabular benchmark reproduction.

pub mod analysis;
pub mod bitstream;
pub mod container;
pub mod harness;
pub mod interleaved;
pub mod sliding;
pub mod transformer;

pub use analysis::{
    CapacityResult, Constraint, PhraseDistribution, RateProfile, RunLimit, SlidingConfig,
};
pub use bitstream::{BitBuffer, BitCursor};
pub use container::EncodedContainer;
pub use transformer::QuantizedBias;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A mathematical precondition was violated (e.g. evaluation outside the
    /// function's domain).
    Domain(String),
    /// An argument is structurally invalid (bad constraint, index out of
    /// range, unsupported combination).
    Parameter(String),
    /// The transformer ran out of input bits before producing the requested
    /// number of output symbols.
    Underflow { produced: usize },
    /// Declared bit length does not fit the available bytes.
    LengthMismatch { bits: usize, bytes: usize },
    /// k-d+1 is prime, so the interleaved construction does not apply.
    NotFactorable { phrase_count: u64 },
    /// An encoded stream violates the constraint or reaches an impossible
    /// decoder state.
    CorruptStream { bit_offset: usize, detail: String },
    /// A container header or its relation to the payload is inconsistent.
    CorruptContainer(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Underflow { produced } => {
                write!(f, "input exhausted after producing {produced} symbols")
            }
            Error::LengthMismatch { bits, bytes } => {
                write!(f, "bit length {bits} exceeds the {bytes} available bytes")
            }
            Error::NotFactorable { phrase_count } => {
                write!(
                    f,
                    "phrase count {phrase_count} is prime; constraint is not factorable"
                )
            }
            Error::CorruptStream { bit_offset, detail } => {
                write!(f, "corrupt stream at bit {bit_offset}: {detail}")
            }
            Error::CorruptContainer(msg) => write!(f, "corrupt container: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
