//! Closed-form analysis of (d,k) constraints.
//!
//! A (d,k) sequence is a concatenation of phrases `0^t 1` with `t ∈ [d,k]`.
//! Its Shannon capacity is `C = log2(λ)` where `λ > 1` is the root of the
//! characteristic equation `H(z) = 1`,
//!
//! ```text
//! H(z) = Σ_{t=d+1}^{k+1} z^-t          (finite k)
//! H(z) = z^-1 + z^-(d+1)               (k = ∞)
//! ```
//!
//! The maxentropic phrase distribution assigns probability `λ^-len` to each
//! phrase of length `len`. Symbol sliding with index `j` permutes the bit
//! stuffing phrase probabilities and its information rate is
//!
//! ```text
//! R_j(p) = h(p) · (1 - p^n) / (1 - p^n + (1-p)·(p^(n-j) - j·p^n + d)),   n = k-d
//! ```
//!
//! with `h` the binary entropy function. Everything here is pure and
//! side-effect free; all functions may be called from any thread.

use serde::Serialize;

use crate::{Error, Result};

/// Default residual tolerance for [`solve_lambda`].
pub const DEFAULT_TOLERANCE: f64 = 1e-14;

/// Upper bound of the run-length window: finite `k` or no upper limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RunLimit {
    Finite(u32),
    Infinite,
}

impl RunLimit {
    pub fn finite(self) -> Option<u32> {
        match self {
            RunLimit::Finite(k) => Some(k),
            RunLimit::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, RunLimit::Infinite)
    }
}

impl std::fmt::Display for RunLimit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunLimit::Finite(k) => write!(f, "{k}"),
            RunLimit::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for RunLimit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "INF" => Ok(RunLimit::Infinite),
            other => other.parse::<u32>().map(RunLimit::Finite).map_err(|_| {
                Error::Parameter(format!(
                    "k must be a non-negative integer or 'inf', got {other:?}"
                ))
            }),
        }
    }
}

/// The (d,k) pair every operation is parameterized by.
///
/// Invariant: `d < k`, and `k ≥ d+1` when finite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Constraint {
    d: u32,
    k: RunLimit,
}

impl Constraint {
    pub fn new(d: u32, k: RunLimit) -> Result<Self> {
        if let RunLimit::Finite(k) = k {
            if k <= d {
                return Err(Error::Parameter(format!("need k > d, got d={d}, k={k}")));
            }
        }
        Ok(Constraint { d, k })
    }

    /// Shorthand for a finite constraint.
    pub fn finite(d: u32, k: u32) -> Result<Self> {
        Constraint::new(d, RunLimit::Finite(k))
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn k(&self) -> RunLimit {
        self.k
    }

    /// `k - d` for finite k: the number of free phrase choices minus one.
    pub fn span(&self) -> Option<u32> {
        self.k.finite().map(|k| k - self.d)
    }
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.d, self.k)
    }
}

/// Root of the characteristic equation together with the capacity it implies.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CapacityResult {
    /// The real root λ > 1 of H(z) = 1.
    pub lambda: f64,
    /// C = log2(λ), bits of information per channel bit.
    pub capacity: f64,
    /// |H(λ) - 1| at the returned root.
    pub residual: f64,
}

/// Probability vector over the phrases `0^{k-i} 1`, indexed `i = 0..=k-d`.
///
/// Index 0 is the longest phrase `0^k 1`, index `k-d` the shortest `0^d 1`.
#[derive(Clone, Debug, Serialize)]
pub struct PhraseDistribution {
    constraint: Constraint,
    probs: Vec<f64>,
}

impl PhraseDistribution {
    pub fn new(constraint: Constraint, probs: Vec<f64>) -> Result<Self> {
        let span = constraint
            .span()
            .ok_or_else(|| Error::Parameter("phrase distributions require finite k".into()))?;
        if probs.len() != span as usize + 1 {
            return Err(Error::Parameter(format!(
                "expected {} phrase probabilities, got {}",
                span + 1,
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Parameter(
                "phrase probabilities must lie in [0,1]".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "phrase probabilities sum to {sum}, not 1"
            )));
        }
        Ok(PhraseDistribution { constraint, probs })
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of zeros in the phrase at index `i` (the gap before its one).
    pub fn gap_of_index(&self, i: usize) -> u32 {
        self.constraint.k.finite().expect("finite by construction") - i as u32
    }

    /// Probability of the phrase with `gap` zeros.
    pub fn prob_of_gap(&self, gap: u32) -> Option<f64> {
        let k = self.constraint.k.finite().expect("finite by construction");
        if gap < self.constraint.d || gap > k {
            return None;
        }
        Some(self.probs[(k - gap) as usize])
    }
}

/// Parameterization of the SS(j) codec: a constraint, a sliding index, and
/// a bias `p = Pr{0}` for the transformed input stream.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlidingConfig {
    constraint: Constraint,
    j: u32,
    p: f64,
}

impl SlidingConfig {
    /// `j` must satisfy `0 ≤ j ≤ k-d` for finite k (out-of-range j is
    /// rejected, not clamped); with `k = ∞` every j collapses to plain
    /// stuffing. `p` must lie strictly inside (0,1).
    pub fn new(constraint: Constraint, j: u32, p: f64) -> Result<Self> {
        if let Some(span) = constraint.span() {
            if j > span {
                return Err(Error::Parameter(format!(
                    "sliding index {j} out of range for {constraint} (max {span})"
                )));
            }
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("bias must lie in (0,1), got {p}")));
        }
        Ok(SlidingConfig { constraint, j, p })
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Result of rate optimization: the best (j, p) found and what it achieves.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateProfile {
    pub j_star: u32,
    pub p_star: f64,
    /// Information rate R in bits per channel bit.
    pub rate: f64,
    /// R / C(d,k).
    pub efficiency: f64,
}

/// Evaluates the characteristic polynomial H(z) for `z > 1`.
///
/// The monotonicity argument behind the root bracket requires z > 1, so
/// smaller arguments are a domain error.
pub fn char_poly_eval(c: &Constraint, z: f64) -> Result<f64> {
    if !z.is_finite() || z <= 1.0 {
        return Err(Error::Domain(format!(
            "characteristic polynomial evaluated at z={z} <= 1"
        )));
    }
    let w = 1.0 / z;
    match c.k {
        RunLimit::Finite(k) => {
            let mut term = w.powi(c.d as i32 + 1);
            let mut sum = 0.0;
            for _ in (c.d + 1)..=(k + 1) {
                sum += term;
                term *= w;
            }
            Ok(sum)
        }
        RunLimit::Infinite => Ok(w + w.powi(c.d as i32 + 1)),
    }
}

fn char_poly_derivative(c: &Constraint, z: f64) -> f64 {
    // dH/dz = Σ -t·z^(-t-1)
    let w = 1.0 / z;
    match c.k {
        RunLimit::Finite(k) => {
            let mut term = w.powi(c.d as i32 + 2);
            let mut sum = 0.0;
            for t in (c.d + 1)..=(k + 1) {
                sum -= t as f64 * term;
                term *= w;
            }
            sum
        }
        RunLimit::Infinite => -w * w - (c.d as f64 + 1.0) * w.powi(c.d as i32 + 2),
    }
}

/// Finds the root λ of H(z) = 1 by bisection on [1+ε, 2] (H is strictly
/// decreasing there and H(2) ≤ 1 ≤ H(1+)), refined by one Newton step.
pub fn solve_lambda(c: &Constraint, tol: f64) -> CapacityResult {
    debug_assert!(tol > 0.0);
    let mut lo = 1.0 + 1e-12;
    let mut hi = 2.0;
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        let val = char_poly_eval(c, mid).expect("mid > 1");
        if val > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (char_poly_eval(c, 0.5 * (lo + hi)).expect("bracket > 1") - 1.0).abs() <= tol {
            break;
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    // one Newton step sharpens the bisection estimate to machine precision
    let f = char_poly_eval(c, lambda).expect("lambda > 1") - 1.0;
    let df = char_poly_derivative(c, lambda);
    let refined = lambda - f / df;
    if refined > 1.0 && refined <= 2.0 {
        let better = (char_poly_eval(c, refined).expect("refined > 1") - 1.0).abs()
            <= (char_poly_eval(c, lambda).expect("lambda > 1") - 1.0).abs();
        if better {
            lambda = refined;
        }
    }
    let residual = (char_poly_eval(c, lambda).expect("lambda > 1") - 1.0).abs();
    CapacityResult {
        lambda,
        capacity: lambda.log2(),
        residual,
    }
}

/// Maxentropic phrase probabilities: entry `i` equals `λ^-(k+1-i)`.
///
/// Their sum is H(λ) = 1. Only finite k has a finite phrase alphabet; the
/// two-phrase structure of k = ∞ is handled inside the codecs directly.
pub fn maxentropic_distribution(c: &Constraint) -> Result<PhraseDistribution> {
    let k =
        c.k.finite()
            .ok_or_else(|| Error::Parameter("maxentropic distribution requires finite k".into()))?;
    let lambda = solve_lambda(c, DEFAULT_TOLERANCE).lambda;
    let probs: Vec<f64> = (0..=(k - c.d))
        .map(|i| lambda.powi(-((k + 1 - i) as i32)))
        .collect();
    PhraseDistribution::new(*c, probs)
}

/// Phrase probabilities of SS(j): the all-zeros word's probability `p^n`
/// sits at index j, entries below j are promoted one slot.
///
/// The vector telescopes to exactly 1 for any p.
pub fn sliding_distribution(cfg: &SlidingConfig) -> Result<PhraseDistribution> {
    let n = cfg
        .constraint
        .span()
        .ok_or_else(|| Error::Parameter("sliding distribution requires finite k".into()))?;
    let p = cfg.p;
    let q = 1.0 - p;
    let probs: Vec<f64> = (0..=n)
        .map(|i| {
            if i == cfg.j {
                p.powi(n as i32)
            } else if i < cfg.j {
                p.powi((n - i - 1) as i32) * q
            } else {
                p.powi((n - i) as i32) * q
            }
        })
        .collect();
    PhraseDistribution::new(cfg.constraint, probs)
}

/// Binary entropy `h(p) = -p·log2 p - (1-p)·log2(1-p)`, extended by
/// continuity with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&p),
        "entropy argument {p} outside [0,1]"
    );
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Average information rate of SS(j):
/// `R_j = h(p)·(1-p^n) / (1-p^n + (1-p)(p^(n-j) - j·p^n + d))`.
pub fn sliding_rate(cfg: &SlidingConfig) -> Result<f64> {
    let (l_in, l_out) = word_lengths(cfg)?;
    Ok(binary_entropy(cfg.p) * l_in / l_out)
}

/// Average word lengths at the input and output of the SS(j) constrained
/// encoder: `L_in = (1-p^n)/(1-p)` and
/// `L_out = (1-p^n + (1-p)(p^(n-j) - j·p^n + d)) / (1-p)`.
pub fn word_lengths(cfg: &SlidingConfig) -> Result<(f64, f64)> {
    let n = cfg
        .constraint
        .span()
        .ok_or_else(|| Error::Parameter("word lengths require finite k".into()))?;
    let p = cfg.p;
    let q = 1.0 - p;
    let pn = p.powi(n as i32);
    let l_in = (1.0 - pn) / q;
    let l_out = (1.0 - pn
        + q * (p.powi((n - cfg.j) as i32) - cfg.j as f64 * pn + cfg.constraint.d as f64))
        / q;
    Ok((l_in, l_out))
}

/// The bias where SS(j) overtakes SS(j-1): the unique positive root of
/// `p^j + p = 1`, which equals `λ_{j-1,∞}^-1`.
pub fn rate_comparison_threshold(j: u32) -> Result<f64> {
    if j == 0 {
        return Err(Error::Parameter("comparison threshold needs j >= 1".into()));
    }
    // p^j + p - 1 is strictly increasing on (0,1) with a sign change
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.powi(j as i32) + mid < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const SCAN_POINTS: u32 = 200;
const GOLDEN_BRACKET: f64 = 1e-10;

/// Maximizes `sliding_rate` over p for a fixed j: a coarse 200-point scan
/// guards against non-unimodality, then golden-section search narrows the
/// surviving bracket to 1e-10.
fn optimize_bias(c: &Constraint, j: u32) -> (f64, f64) {
    let rate_at = |p: f64| {
        let cfg = SlidingConfig::new(*c, j, p).expect("scan stays inside (0,1)");
        sliding_rate(&cfg).expect("finite k")
    };
    let mut best_i = 1;
    let mut best_rate = -1.0;
    for i in 1..SCAN_POINTS {
        let r = rate_at(i as f64 / SCAN_POINTS as f64);
        if r > best_rate {
            best_rate = r;
            best_i = i;
        }
    }
    let step = 1.0 / SCAN_POINTS as f64;
    let mut lo = (best_i as f64 * step - step).max(1e-9);
    let mut hi = (best_i as f64 * step + step).min(1.0 - 1e-9);
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = rate_at(a);
    let mut fb = rate_at(b);
    while hi - lo > GOLDEN_BRACKET {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = rate_at(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = rate_at(b);
        }
    }
    let p = 0.5 * (lo + hi);
    (p, rate_at(p))
}

/// Finds the rate-maximizing bias for a single sliding index, or for every
/// index `0..=k-d` when `j` is `None`. Ties break toward smaller j.
pub fn optimize_rate(c: &Constraint, j: Option<u32>) -> Result<RateProfile> {
    let span = c
        .span()
        .ok_or_else(|| Error::Parameter("rate optimization requires finite k".into()))?;
    let capacity = solve_lambda(c, DEFAULT_TOLERANCE).capacity;
    let candidates: Vec<u32> = match j {
        Some(j) => {
            if j > span {
                return Err(Error::Parameter(format!(
                    "sliding index {j} out of range for {c} (max {span})"
                )));
            }
            vec![j]
        }
        None => (0..=span).collect(),
    };
    let mut best: Option<RateProfile> = None;
    for cand in candidates {
        let (p, rate) = optimize_bias(c, cand);
        if best.as_ref().is_none_or(|b| rate > b.rate) {
            best = Some(RateProfile {
                j_star: cand,
                p_star: p,
                rate,
                efficiency: rate / capacity,
            });
        }
    }
    Ok(best.expect("at least one candidate"))
}
