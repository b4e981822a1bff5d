//! The interleaved construction for constraints with k-d+1 composite.
//!
//! Writing k-d+1 = P_1·P_2·…·P_n (ascending primes) factors the
//! characteristic polynomial as
//!
//! ```text
//! H(z) = z^-(d+1) · Π_i F_i(z),   F_i(z) = 1 + z^-η + z^-2η + … + z^-(P_i-1)η
//! ```
//!
//! with stride η = P_1·…·P_(i-1). Each factor contributes an independent
//! delay digit in {0, η, …, (P_i-1)η}; the digits sum to j and the encoder
//! emits the phrase `0^(d+j) 1`. A factor of arity P is driven by a chain
//! of P-1 transformers whose biases are conditional stop probabilities
//! matching the maxentropic tail ratios, so Σ(P_i - 1) transformers suffice
//! (strictly fewer than k-d whenever n ≥ 2).
//!
//! Per phrase, factors are consulted in descending-stride order (the most
//! significant digit first) and a chain transformer is consulted only while
//! every earlier one in its chain said "continue". All transformers pull
//! unbiased bits on demand from the single input; the decoder replays the
//! identical consult schedule to merge the recovered bits back in order.

use crate::analysis::{solve_lambda, Constraint, DEFAULT_TOLERANCE};
use crate::bitstream::BitBuffer;
use crate::container::{AlgorithmParams, ContainerFactor, EncodedContainer};
use crate::transformer::{pad_bit, BiasDecoder, BiasEncoder, QuantizedBias, CODE_BITS};
use crate::{Error, Result};

/// Largest supported phrase alphabet; keeps codebook enumeration and the
/// expansion check bounded.
const MAX_PHRASE_COUNT: u64 = 1 << 16;

/// One factor of the plan: arity P_i and stride η_(i-1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    pub arity: u32,
    pub stride: u64,
}

/// Prime factorization of k-d+1 with strides, in ascending construction
/// order (stride 1 first).
#[derive(Clone, Debug)]
pub struct FactorizationPlan {
    constraint: Constraint,
    factors: Vec<Factor>,
}

impl FactorizationPlan {
    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// The z^-(d+1) delay in front of the factored polynomial.
    pub fn leading_delay(&self) -> u32 {
        self.constraint.d() + 1
    }

    /// For all-binary plans (k-d+1 = 2^m) the leading term can be rewritten
    /// as z^-(d-m+1) against unconstrained-channel factors; the exponent may
    /// be negative. Bookkeeping only: delays are absorbed into the codebook.
    pub fn pow2_leading_exponent(&self) -> Option<i64> {
        if self.factors.iter().all(|f| f.arity == 2) {
            Some(self.constraint.d() as i64 - self.factors.len() as i64 + 1)
        } else {
            None
        }
    }

    /// Number of transformers the construction needs: Σ (P_i - 1).
    pub fn transformer_count(&self) -> usize {
        self.factors.iter().map(|f| f.arity as usize - 1).sum()
    }
}

/// Factors k-d+1 into ascending primes and verifies the polynomial identity
/// by expanding the product back into its exponent multiset.
pub fn factorize(c: &Constraint) -> Result<FactorizationPlan> {
    let span = c
        .span()
        .ok_or_else(|| Error::Parameter("interleaved construction requires finite k".into()))?;
    let phrase_count = span as u64 + 1;
    if phrase_count > MAX_PHRASE_COUNT {
        return Err(Error::Parameter(format!(
            "phrase alphabet {phrase_count} exceeds supported maximum {MAX_PHRASE_COUNT}"
        )));
    }
    let mut primes = Vec::new();
    let mut rest = phrase_count;
    let mut p = 2u64;
    while p * p <= rest {
        while rest.is_multiple_of(p) {
            primes.push(p);
            rest /= p;
        }
        p += 1;
    }
    if rest > 1 {
        primes.push(rest);
    }
    if primes.len() < 2 {
        return Err(Error::NotFactorable { phrase_count });
    }
    let mut factors = Vec::with_capacity(primes.len());
    let mut stride = 1u64;
    for p in primes {
        factors.push(Factor {
            arity: p as u32,
            stride,
        });
        stride *= p;
    }
    let plan = FactorizationPlan {
        constraint: *c,
        factors,
    };

    // expand z^-(d+1)·ΠF_i and check the exponent multiset is {d+1,…,k+1}
    let mut exponents = vec![plan.leading_delay() as u64];
    for f in &plan.factors {
        let mut next = Vec::with_capacity(exponents.len() * f.arity as usize);
        for t in 0..f.arity as u64 {
            next.extend(exponents.iter().map(|e| e + t * f.stride));
        }
        exponents = next;
    }
    exponents.sort_unstable();
    let expected: Vec<u64> =
        (c.d() as u64 + 1..=c.k().finite().expect("finite") as u64 + 1).collect();
    assert_eq!(
        exponents, expected,
        "factor expansion does not reproduce H(z) for {c}"
    );
    Ok(plan)
}

/// Conditional stop probabilities for one factor chain: entry t (0-based)
/// is `λ^-tη / Σ_{s=t}^{P-1} λ^-sη`, the probability of stopping at delay
/// t·η given the chain got that far. For P = 2 this is `1/(1+λ^-η)`.
pub fn chain_stop_probabilities(lambda: f64, stride: u64, arity: u32) -> Vec<f64> {
    (0..arity - 1)
        .map(|t| {
            let tail: f64 = (t..arity)
                .map(|s| lambda.powf(-((s as u64 * stride) as f64)))
                .sum();
            lambda.powf(-((t as u64 * stride) as f64)) / tail
        })
        .collect()
}

/// Chain of biases for one factor.
#[derive(Clone, Debug)]
pub struct ChainFactor {
    pub arity: u32,
    pub stride: u64,
    exact: Vec<f64>,
    quantized: Vec<QuantizedBias>,
}

impl ChainFactor {
    /// Stop probabilities before quantization.
    pub fn exact(&self) -> &[f64] {
        &self.exact
    }

    /// The biases the codec actually runs with.
    pub fn quantized(&self) -> &[QuantizedBias] {
        &self.quantized
    }

    /// Distribution over delays {0, η, …, (P-1)η} induced by the exact
    /// chain; equals the maxentropic conditional distribution.
    pub fn delay_distribution(&self) -> Vec<f64> {
        let mut remaining = 1.0;
        let mut out = Vec::with_capacity(self.arity as usize);
        for stop in &self.exact {
            out.push(remaining * stop);
            remaining *= 1.0 - stop;
        }
        out.push(remaining);
        out
    }
}

/// Transformer bias chains for every factor of a plan, derived by working
/// backwards from the maxentropic phrase probabilities at root `lambda`.
#[derive(Clone, Debug)]
pub struct DtChain {
    factors: Vec<ChainFactor>,
}

impl DtChain {
    pub fn factors(&self) -> &[ChainFactor] {
        &self.factors
    }

    pub fn transformer_count(&self) -> usize {
        self.factors.iter().map(|f| f.quantized.len()).sum()
    }
}

pub fn derive_biases(plan: &FactorizationPlan, lambda: f64) -> DtChain {
    let factors = plan
        .factors()
        .iter()
        .map(|f| {
            let exact = chain_stop_probabilities(lambda, f.stride, f.arity);
            let quantized = exact
                .iter()
                .map(|&p| QuantizedBias::quantize(p).expect("stop probabilities lie in (0,1)"))
                .collect();
            ChainFactor {
                arity: f.arity,
                stride: f.stride,
                exact,
                quantized,
            }
        })
        .collect();
    DtChain { factors }
}

/// Bijection between per-factor digit vectors and phrases `0^(d+j) 1` with
/// `j = Σ digit_i · η_(i-1)`.
#[derive(Clone, Debug)]
pub struct Codebook {
    d: u32,
    size: u64,
    factors: Vec<Factor>,
}

impl Codebook {
    /// Number of phrases, k-d+1.
    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Digits are indexed parallel to the plan's factors (ascending stride).
    pub fn phrase_gap(&self, digits: &[u32]) -> u32 {
        debug_assert_eq!(digits.len(), self.factors.len());
        let j: u64 = digits
            .iter()
            .zip(&self.factors)
            .map(|(&digit, f)| digit as u64 * f.stride)
            .sum();
        self.d + j as u32
    }

    /// Inverse mapping; fails when the gap lies outside [d, k].
    pub fn digits_for_gap(&self, gap: u32) -> Result<Vec<u32>> {
        if gap < self.d || (gap - self.d) as u64 >= self.size {
            return Err(Error::Parameter(format!(
                "gap {gap} outside [{}, {}]",
                self.d,
                self.d as u64 + self.size - 1
            )));
        }
        let mut rem = (gap - self.d) as u64;
        let mut digits = vec![0u32; self.factors.len()];
        for (i, f) in self.factors.iter().enumerate().rev() {
            digits[i] = (rem / f.stride) as u32;
            rem %= f.stride;
        }
        debug_assert_eq!(rem, 0);
        Ok(digits)
    }
}

pub fn build_codebook(plan: &FactorizationPlan) -> Codebook {
    let size = plan
        .factors()
        .iter()
        .map(|f| f.arity as u64)
        .product::<u64>();
    let book = Codebook {
        d: plan.constraint().d(),
        size,
        factors: plan.factors().to_vec(),
    };
    // bijectivity onto 0^d 1 .. 0^k 1 by exhaustive enumeration
    let mut seen = vec![false; size as usize];
    let mut digits = vec![0u32; book.factors.len()];
    loop {
        let gap = book.phrase_gap(&digits);
        let index = (gap - book.d) as usize;
        assert!(
            index < size as usize && !seen[index],
            "codebook is not a bijection"
        );
        seen[index] = true;
        assert_eq!(book.digits_for_gap(gap).expect("gap in range"), digits);
        // odometer over the mixed-radix digit space
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                assert!(seen.iter().all(|&s| s), "codebook misses phrases");
                return book;
            }
            digits[pos] += 1;
            if digits[pos] < book.factors[pos].arity {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Encoder-side accounting for rate estimation.
#[derive(Clone, Copy, Debug)]
pub struct IlEncodeStats {
    /// Output bits emitted through the last phrase that still pulled real
    /// message bits; the remainder is flush driven purely by padding.
    pub core_output_bits: u64,
    pub total_output_bits: u64,
    pub phrases: u64,
}

struct SharedSource<'a> {
    data: &'a BitBuffer,
    pos: usize,
}

impl SharedSource<'_> {
    fn pull(&mut self) -> bool {
        let n = self.data.len();
        let bit = if self.pos < n {
            self.data.get(self.pos).expect("in range")
        } else {
            pad_bit((self.pos - n) as u64)
        };
        self.pos += 1;
        bit
    }

    fn exhausted(&self) -> bool {
        self.pos >= self.data.len()
    }
}

/// Flattened transformer slots in consult order: factors by descending
/// stride, chain positions in order. Returns (plan factor index, chain
/// position, slot bias).
fn consult_slots(chain: &DtChain) -> Vec<(usize, usize, QuantizedBias)> {
    let mut order: Vec<usize> = (0..chain.factors().len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(chain.factors()[i].stride));
    let mut slots = Vec::with_capacity(chain.transformer_count());
    for fi in order {
        for (t, &bias) in chain.factors()[fi].quantized.iter().enumerate() {
            slots.push((fi, t, bias));
        }
    }
    slots
}

/// Encodes a message with the interleaved construction, returning the
/// container and rate-accounting stats.
pub fn il_encode_with_stats(
    message: &BitBuffer,
    c: &Constraint,
) -> Result<(EncodedContainer, IlEncodeStats)> {
    let plan = factorize(c)?;
    let lambda = solve_lambda(c, DEFAULT_TOLERANCE).lambda;
    let chain = derive_biases(&plan, lambda);
    let codebook = build_codebook(&plan);
    let slots = consult_slots(&chain);
    let n_factors = plan.factors().len();

    // slot index by (factor, chain position) for the consult loop;
    // consult_slots emits chain positions in order within each factor
    let mut slot_of = vec![Vec::new(); n_factors];
    for (si, &(fi, _, _)) in slots.iter().enumerate() {
        slot_of[fi].push(si);
    }
    let consult_factor_order: Vec<usize> = {
        let mut order: Vec<usize> = (0..n_factors).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(plan.factors()[i].stride));
        order
    };

    let mut decoders: Vec<BiasDecoder> = slots
        .iter()
        .map(|&(_, _, bias)| BiasDecoder::new(bias))
        .collect();
    let mut real_pulled = vec![0u64; slots.len()];
    let mut source = SharedSource {
        data: message,
        pos: 0,
    };

    let mut payload = BitBuffer::new();
    let mut phrases = 0u64;
    let mut core_output_bits = 0u64;
    // Stall guard. The flush tail runs until every slot's window lag is
    // determined; a slot consulted with probability q at bias b needs about
    // (CODE_BITS + pending)/h(b) symbols and 1/q phrases per symbol, so
    // budget generously per slot on top of the ~message/C core phrases.
    let tail_allowance: f64 = {
        let mut total = 0.0;
        for cf in chain.factors() {
            let mut consult_prob = 1.0f64;
            for &stop in cf.exact() {
                let h = crate::analysis::binary_entropy(stop).max(1e-6);
                total += 256.0 / (h * consult_prob.max(1e-12));
                consult_prob *= 1.0 - stop;
            }
        }
        total.min(1e15)
    };
    let phrase_cap = 20 * message.len() as u64 + 10_000 + tail_allowance as u64;
    loop {
        let done = source.exhausted()
            && decoders
                .iter()
                .zip(&real_pulled)
                .all(|(dec, &real)| dec.determined() >= real);
        if done {
            break;
        }
        assert!(
            phrases < phrase_cap,
            "interleaved encoder failed to terminate"
        );
        let pulled_before = source.pos;
        let mut digits = vec![0u32; n_factors];
        for &fi in &consult_factor_order {
            let arity = plan.factors()[fi].arity;
            let mut digit = 0u32;
            for &si in slot_of[fi].iter().take((arity - 1) as usize) {
                let message_len = message.len();
                let src = &mut source;
                let real = &mut real_pulled[si];
                let mut pull = || {
                    if src.pos < message_len {
                        *real += 1;
                    }
                    Some(src.pull())
                };
                let sym = decoders[si]
                    .next_symbol(&mut pull)
                    .expect("padded source never runs dry");
                if !sym {
                    break; // stop: later chain transformers are skipped
                }
                digit += 1;
            }
            digits[fi] = digit;
        }
        let gap = codebook.phrase_gap(&digits);
        payload.push_run(false, gap as usize);
        payload.push(true);
        phrases += 1;
        if pulled_before < message.len() {
            core_output_bits = payload.len() as u64;
        }
    }

    let factors = plan
        .factors()
        .iter()
        .zip(chain.factors())
        .map(|(f, cf)| ContainerFactor {
            arity: f.arity,
            stride: f.stride,
            biases: cf.quantized.clone(),
        })
        .collect();
    let stats = IlEncodeStats {
        core_output_bits,
        total_output_bits: payload.len() as u64,
        phrases,
    };
    let container = EncodedContainer {
        constraint: *c,
        params: AlgorithmParams::Interleaved { factors, phrases },
        message_bits: message.len() as u64,
        payload,
    };
    Ok((container, stats))
}

/// Encodes a message with the interleaved construction. The final partial
/// phrase can never lose message bits: phrases are emitted until every
/// pulled message bit is determined.
pub fn il_encode(message: &BitBuffer, c: &Constraint) -> Result<EncodedContainer> {
    il_encode_with_stats(message, c).map(|(container, _)| container)
}

/// Exact inverse of [`il_encode`]: parses phrases back to digit vectors,
/// replays every chain consult through the inverse transformers, and merges
/// the recovered bits in the original pull order.
pub fn il_decode(container: &EncodedContainer) -> Result<BitBuffer> {
    let AlgorithmParams::Interleaved { factors, phrases } = &container.params else {
        return Err(Error::CorruptContainer(
            "container does not hold an interleaved stream".into(),
        ));
    };
    let c = container.constraint;
    let k = c
        .k()
        .finite()
        .ok_or_else(|| Error::CorruptContainer("interleaved codec requires finite k".into()))?;
    let span = (k - c.d()) as u64;
    let product: u64 = factors
        .iter()
        .try_fold(1u64, |acc, f| acc.checked_mul(f.arity as u64))
        .ok_or_else(|| Error::CorruptContainer("factor arity product overflows".into()))?;
    if product != span + 1 {
        return Err(Error::CorruptContainer(format!(
            "plan covers {product} phrases but the constraint has {}",
            span + 1
        )));
    }
    let mut stride = 1u64;
    for f in factors {
        if f.stride != stride {
            return Err(Error::CorruptContainer(format!(
                "factor stride {} does not match canonical {stride}",
                f.stride
            )));
        }
        stride *= f.arity as u64; // bounded: the product matched span+1
    }
    let plan = FactorizationPlan {
        constraint: c,
        factors: factors
            .iter()
            .map(|f| Factor {
                arity: f.arity,
                stride: f.stride,
            })
            .collect(),
    };
    let codebook = build_codebook(&plan);

    // parse phrase gaps, validating [d, k]; size from the payload itself,
    // never from the untrusted header count
    let bits = &container.payload;
    let mut gaps = Vec::with_capacity(bits.count_ones());
    let mut run_start = 0usize;
    let mut gap = 0u32;
    for pos in 0..bits.len() {
        if bits.get(pos).expect("in range") {
            if gap < c.d() || gap > k {
                return Err(Error::CorruptStream {
                    bit_offset: run_start,
                    detail: format!("phrase {} gap {gap} outside [{}, {k}]", gaps.len(), c.d()),
                });
            }
            gaps.push(gap);
            gap = 0;
            run_start = pos + 1;
        } else {
            gap += 1;
        }
    }
    if gap > 0 {
        return Err(Error::CorruptStream {
            bit_offset: run_start,
            detail: "trailing zeros after the final phrase".into(),
        });
    }
    if gaps.len() as u64 != *phrases {
        return Err(Error::CorruptContainer(format!(
            "payload holds {} phrases, header claims {phrases}",
            gaps.len()
        )));
    }

    // replay consults: feed symbols to the inverse transformers and record
    // how many bits the forward decoder pulled at each consult
    let chain_stub = DtChain {
        factors: factors
            .iter()
            .map(|f| ChainFactor {
                arity: f.arity,
                stride: f.stride,
                exact: f.biases.iter().map(|b| b.value()).collect(),
                quantized: f.biases.clone(),
            })
            .collect(),
    };
    let slots = consult_slots(&chain_stub);
    let mut slot_of = vec![Vec::new(); factors.len()];
    for (si, &(fi, _, _)) in slots.iter().enumerate() {
        slot_of[fi].push(si);
    }
    let consult_factor_order: Vec<usize> = {
        let mut order: Vec<usize> = (0..factors.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(factors[i].stride));
        order
    };
    let mut encoders: Vec<BiasEncoder> = slots
        .iter()
        .map(|&(_, _, bias)| BiasEncoder::new(bias))
        .collect();
    let mut primed = vec![false; slots.len()];
    let mut schedule: Vec<(u32, u32)> = Vec::new(); // (slot, pulls at this consult)
    for &gap in &gaps {
        let digits = codebook
            .digits_for_gap(gap)
            .map_err(|e| Error::CorruptContainer(format!("unmappable gap {gap}: {e}")))?;
        for &fi in &consult_factor_order {
            let digit = digits[fi];
            let consulted = (digit + 1).min(factors[fi].arity - 1);
            for (t, &si) in slot_of[fi].iter().enumerate().take(consulted as usize) {
                let symbol = (t as u32) < digit;
                let shifts = encoders[si].push_symbol(symbol);
                let pulls = if primed[si] {
                    shifts
                } else {
                    CODE_BITS + shifts
                };
                primed[si] = true;
                schedule.push((si as u32, pulls));
            }
        }
    }

    // merge recovered bits in pull order, stopping at the message length;
    // cap the allocation hint by what the payload could possibly determine
    let n = container.message_bits as usize;
    let mut out = BitBuffer::with_capacity(n.min(bits.len().saturating_mul(64)));
    let mut taken = vec![0usize; slots.len()];
    'merge: for &(si, pulls) in &schedule {
        let si = si as usize;
        for _ in 0..pulls {
            if out.len() == n {
                break 'merge;
            }
            let Some(bit) = encoders[si].bits().get(taken[si]) else {
                return Err(Error::CorruptContainer(
                    "transformer ran out of determined bits during merge".into(),
                ));
            };
            taken[si] += 1;
            out.push(bit);
        }
    }
    if out.len() < n {
        return Err(Error::CorruptContainer(format!(
            "payload determines {} message bits, header claims {n}",
            out.len()
        )));
    }
    Ok(out)
}
