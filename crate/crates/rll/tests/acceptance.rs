//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them all).

use std::time::Instant;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use rll::analysis::{
    maxentropic_distribution, rate_comparison_threshold, sliding_distribution, sliding_rate,
    solve_lambda, Constraint, RunLimit, SlidingConfig,
};
use rll::bitstream::BitBuffer;
use rll::harness::{
    chi_square_statistic, estimate_rate, rate_identity_residual, reproduce_table4,
    validate_constraint, CodecConfig,
};
use rll::interleaved::{il_decode, il_encode};
use rll::sliding::{full_decode, full_encode, ss_encode};
use rll::transformer::{biased_source, unbiased_source, QuantizedBias};

fn criterion(number: u32, name: &str, failures: &[String], detail: String) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("acceptance criterion {number:2} ({name}): {verdict} — {detail}");
    for f in failures {
        println!("    {f}");
    }
    assert!(
        failures.is_empty(),
        "criterion {number} ({name}): {} failure(s)",
        failures.len()
    );
}

fn finite(d: u32, k: u32) -> Constraint {
    Constraint::finite(d, k).unwrap()
}

#[test]
fn c01_capacity_table() {
    let start = Instant::now();
    let expected = [
        (1u32, 3u32, 0.5515),
        (1, 7, 0.6793),
        (2, 5, 0.4650),
        (2, 10, 0.5418),
        (3, 6, 0.3746),
        (4, 8, 0.3432),
        (5, 9, 0.2979),
    ];
    let mut failures = Vec::new();
    for (d, k, c_ref) in expected {
        let r = solve_lambda(&finite(d, k), 1e-14);
        if (r.capacity - c_ref).abs() > 5e-5 {
            failures.push(format!(
                "C({d},{k}) = {:.6}, expected {c_ref} ± 5e-5",
                r.capacity
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 1.0 {
        failures.push(format!("runtime {elapsed:?} exceeds 1 s"));
    }
    criterion(
        1,
        "capacity table",
        &failures,
        format!("7 constraints in {elapsed:?}"),
    );
}

#[test]
fn c02_efficiency_table() {
    let start = Instant::now();
    let rows = reproduce_table4();
    let expected_j = [2u32, 1, 3, 2, 2, 4, 3];
    let mut failures = Vec::new();
    for (row, &j_ref) in rows.iter().zip(&expected_j) {
        let cells = [
            ("stuffing", row.delta_stuffing_pct),
            ("flipping", row.delta_flipping_pct),
            ("sliding", row.delta_sliding_pct),
        ];
        for (name, delta) in cells {
            if delta.abs() > 0.01 {
                failures.push(format!(
                    "({},{}) {name}: computed optimum differs from the published figure by {delta:+.4} points",
                    row.d, row.k
                ));
            }
        }
        if row.sliding_index != j_ref {
            failures.push(format!(
                "({},{}) j* = {}, expected {j_ref}",
                row.d, row.k, row.sliding_index
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 10.0 {
        failures.push(format!("runtime {elapsed:?} exceeds 10 s"));
    }
    criterion(
        2,
        "efficiency table",
        &failures,
        format!("21 efficiency cells + 7 indices in {elapsed:?}"),
    );
}

#[test]
fn c03_capacity_equalities() {
    let mut failures = Vec::new();
    for d in 1..=10u32 {
        let a = solve_lambda(&finite(d, 2 * d + 1), 1e-14).capacity;
        let b = solve_lambda(&Constraint::new(d + 1, RunLimit::Infinite).unwrap(), 1e-14).capacity;
        if (a - b).abs() > 1e-10 {
            failures.push(format!(
                "|C({d},{}) - C({},inf)| = {:.2e}",
                2 * d + 1,
                d + 1,
                (a - b).abs()
            ));
        }
    }
    let a = solve_lambda(&finite(2, 4), 1e-14).capacity;
    let b = solve_lambda(&finite(1, 2), 1e-14).capacity;
    if (a - b).abs() > 1e-10 {
        failures.push(format!("|C(2,4) - C(1,2)| = {:.2e}", (a - b).abs()));
    }
    criterion(
        3,
        "capacity equalities",
        &failures,
        "11 identities ≤ 1e-10".into(),
    );
}

#[test]
fn c04_crossover_property() {
    let mut failures = Vec::new();
    let mut points = 0u64;
    for d in 0..=6u32 {
        for k in (d + 1)..=12u32 {
            let capacity = solve_lambda(&finite(d, k), 1e-14).capacity;
            for j in 1..=(k - d) {
                let threshold = rate_comparison_threshold(j).unwrap();
                for step in 1..=19 {
                    let p = step as f64 * 0.05;
                    let r_hi =
                        sliding_rate(&SlidingConfig::new(finite(d, k), j, p).unwrap()).unwrap();
                    let r_lo =
                        sliding_rate(&SlidingConfig::new(finite(d, k), j - 1, p).unwrap()).unwrap();
                    // no configuration on the grid may beat capacity
                    if r_hi.max(r_lo) > capacity + 1e-9 {
                        failures.push(format!(
                            "rate above capacity at d={d} k={k} j={j} p={p}: {:.12} > {capacity:.12}",
                            r_hi.max(r_lo)
                        ));
                    }
                    let rate_gap = r_hi - r_lo;
                    let bias_gap = p - threshold;
                    points += 1;
                    if rate_gap.abs() <= 1e-12 || bias_gap.abs() <= 1e-12 {
                        continue; // dead zone at equality
                    }
                    if (rate_gap > 0.0) != (bias_gap > 0.0) {
                        failures.push(format!(
                            "sign mismatch at d={d} k={k} j={j} p={p}: ΔR = {rate_gap:.3e}, p - p* = {bias_gap:.3e}"
                        ));
                    }
                }
            }
        }
    }
    criterion(
        4,
        "rate crossover vs threshold",
        &failures,
        format!("{points} grid points"),
    );
}

#[test]
fn c05_optimal_distribution_matches() {
    let mut cases: Vec<(Constraint, u32, f64)> = Vec::new();
    for d in 0..=5u32 {
        let c = finite(d, d + 1);
        let lambda = solve_lambda(&c, 1e-14).lambda;
        cases.push((c, 0, lambda.powi(-(d as i32 + 2))));
        cases.push((c, 1, lambda.powi(-(d as i32 + 1))));
    }
    {
        let c = finite(2, 4);
        let lambda = solve_lambda(&c, 1e-14).lambda;
        cases.push((c, 1, lambda.powi(-2)));
    }
    for d in 1..=5u32 {
        let c = finite(d, 2 * d + 1);
        let lambda = solve_lambda(&c, 1e-14).lambda;
        cases.push((c, d + 1, 1.0 / lambda));
    }
    let mut failures = Vec::new();
    for (c, j, p) in &cases {
        let cfg = SlidingConfig::new(*c, *j, *p).unwrap();
        let algo = sliding_distribution(&cfg).unwrap();
        let max = maxentropic_distribution(c).unwrap();
        let worst = algo
            .probs()
            .iter()
            .zip(max.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if worst > 1e-10 {
            failures.push(format!("{c} j={j}: max entry gap {worst:.2e}"));
        }
    }
    criterion(
        5,
        "optimal phrase distributions",
        &failures,
        format!("{} cases", cases.len()),
    );
}

#[test]
fn c06_roundtrips() {
    let mut failures = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(0x6C06);

    // symbol sliding across the finite grid plus k = inf
    let mut ss_trials = 0u32;
    'ss: while ss_trials < 10_000 {
        let d = rng.next_u32() % 6;
        let k_pick = rng.next_u32() % 8;
        let constraint = if k_pick == 7 {
            Constraint::new(d, RunLimit::Infinite).unwrap()
        } else {
            finite(d, d + 1 + k_pick)
        };
        let span = constraint.span().unwrap_or(0);
        let j = if span == 0 {
            0
        } else {
            rng.next_u32() % (span + 1)
        };
        let p = 0.25 + 0.55 * (rng.next_u32() as f64 / u32::MAX as f64);
        let cfg = SlidingConfig::new(constraint, j, p).unwrap();
        let n = (rng.next_u32() % 256) as usize;
        let message = unbiased_source(rng.next_u64(), n);
        let container = full_encode(&message, &cfg);
        let report = validate_constraint(&container.payload, &constraint);
        if !report.ok {
            failures.push(format!(
                "ss {constraint} j={j}: {} constraint violations",
                report.violations.len()
            ));
            break 'ss;
        }
        match full_decode(&container) {
            Ok(back) if back == message => {}
            Ok(_) => {
                failures.push(format!("ss {constraint} j={j} n={n}: roundtrip mismatch"));
                break 'ss;
            }
            Err(e) => {
                failures.push(format!("ss {constraint} j={j} n={n}: decode failed: {e}"));
                break 'ss;
            }
        }
        ss_trials += 1;
    }

    // interleaved across factorable constraints
    let il_constraints = [
        (1u32, 4u32),
        (1, 8),
        (3, 6),
        (2, 9),
        (0, 11),
        (4, 9),
        (2, 13),
        (0, 14),
    ];
    let mut il_trials = 0u32;
    'il: while il_trials < 10_000 {
        let (d, k) = il_constraints[(rng.next_u32() as usize) % il_constraints.len()];
        let constraint = finite(d, k);
        let n = (rng.next_u32() % 256) as usize;
        let message = unbiased_source(rng.next_u64(), n);
        let container = match il_encode(&message, &constraint) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("il {constraint} n={n}: encode failed: {e}"));
                break 'il;
            }
        };
        let report = validate_constraint(&container.payload, &constraint);
        if !report.ok {
            failures.push(format!(
                "il {constraint}: {} constraint violations",
                report.violations.len()
            ));
            break 'il;
        }
        match il_decode(&container) {
            Ok(back) if back == message => {}
            Ok(_) => {
                failures.push(format!("il {constraint} n={n}: roundtrip mismatch"));
                break 'il;
            }
            Err(e) => {
                failures.push(format!("il {constraint} n={n}: decode failed: {e}"));
                break 'il;
            }
        }
        il_trials += 1;
    }

    criterion(
        6,
        "randomized roundtrips",
        &failures,
        format!("{ss_trials} sliding + {il_trials} interleaved messages, all streams valid"),
    );
}

#[test]
fn c07_monte_carlo_vs_formula() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0x6C07);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let d = rng.next_u32() % 5;
        let k = d + 1 + rng.next_u32() % 7;
        let j = rng.next_u32() % (k - d + 1);
        let p = 0.35 + 0.55 * (rng.next_u32() as f64 / u32::MAX as f64);
        let cfg = SlidingConfig::new(finite(d, k), j, p).unwrap();
        let report = estimate_rate(&CodecConfig::Sliding(cfg), 1_000_000, 42 + trial).unwrap();
        let rel = (report.empirical_rate - report.analytic_rate).abs() / report.analytic_rate;
        worst = worst.max(rel);
        if rel >= 0.005 {
            failures.push(format!(
                "({d},{k}) j={j} p={p:.4}: empirical {:.6} vs analytic {:.6} ({:.3}% off)",
                report.empirical_rate,
                report.analytic_rate,
                100.0 * rel
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 60.0 {
        failures.push(format!("runtime {elapsed:?} exceeds 60 s"));
    }
    criterion(
        7,
        "Monte Carlo vs rate formula",
        &failures,
        format!(
            "20 configs at 10^6 bits, worst deviation {:.3}%, {elapsed:?}",
            100.0 * worst
        ),
    );
}

#[test]
fn c08_interleaved_optimality() {
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for (d, k) in [(1u32, 4u32), (2, 9), (0, 11)] {
        let constraint = finite(d, k);
        let report = estimate_rate(&CodecConfig::Interleaved(constraint), 1_000_000, 42).unwrap();
        let rel = (report.empirical_rate - report.capacity).abs() / report.capacity;
        if rel >= 0.005 {
            failures.push(format!(
                "({d},{k}): empirical {:.6} vs capacity {:.6} ({:.3}% off)",
                report.empirical_rate,
                report.capacity,
                100.0 * rel
            ));
        }

        // phrase histogram against the maxentropic distribution
        let message = unbiased_source(42, 1_000_000);
        let container = il_encode(&message, &constraint).unwrap();
        let scan = validate_constraint(&container.payload, &constraint);
        if !scan.ok {
            failures.push(format!("({d},{k}): encoded stream violates the constraint"));
            continue;
        }
        let expected = maxentropic_distribution(&constraint).unwrap();
        let observed: Vec<u64> = (0..=(k - d))
            .map(|i| *scan.gap_histogram.get(&(k - i)).unwrap_or(&0))
            .collect();
        let stat = chi_square_statistic(&observed, expected.probs());
        let dof = (k - d) as f64;
        let critical = ChiSquared::new(dof).unwrap().inverse_cdf(0.999);
        if stat >= critical {
            failures.push(format!(
                "({d},{k}): chi-square {stat:.2} ≥ critical {critical:.2} at α = 0.001"
            ));
        }
        details.push(format!(
            "({d},{k}) {:.2}%/χ²={stat:.1}<{critical:.1}",
            100.0 * rel
        ));
    }
    criterion(
        8,
        "interleaved rate and statistics",
        &failures,
        details.join("  "),
    );
}

#[test]
fn c09_chain_entropy_identity() {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for d in 0..=4u32 {
        for m in 1..=4u32 {
            let residual = rate_identity_residual(d, m).unwrap();
            worst = worst.max(residual);
            if residual > 1e-10 {
                failures.push(format!("d={d} m={m}: residual {residual:.2e}"));
            }
        }
    }
    criterion(
        9,
        "chain entropy identity",
        &failures,
        format!("worst residual {worst:.2e}"),
    );
}

/// Bit stuffer transcribed independently from the rule list: insert a one
/// after every run of k-d zeros, then stuff d zeros after every one.
fn reference_stuff(input: &BitBuffer, d: u32, k: u32) -> BitBuffer {
    let n = k - d;
    let mut out = BitBuffer::new();
    let mut run = 0u32;
    let feed = |bit: bool, out: &mut BitBuffer, run: &mut u32| {
        if bit {
            out.push(true);
            out.push_run(false, d as usize);
            *run = 0;
        } else {
            out.push(false);
            *run += 1;
            if *run == n {
                out.push(true);
                out.push_run(false, d as usize);
                *run = 0;
            }
        }
    };
    for bit in input.iter() {
        feed(bit, &mut out, &mut run);
    }
    feed(true, &mut out, &mut run);
    out
}

/// Bit flipper transcribed independently: flip the bit following every run
/// of k-d-1 zeros, insert a one after runs of k-d zeros, stuff d zeros.
fn reference_flip(input: &BitBuffer, d: u32, k: u32) -> BitBuffer {
    let n = k - d;
    let mut out = BitBuffer::new();
    let mut run = 0u32;
    let mut flip_next = false;
    let feed = |raw: bool, out: &mut BitBuffer, run: &mut u32, flip_next: &mut bool| {
        let bit = if *flip_next { !raw } else { raw };
        *flip_next = false;
        if bit {
            out.push(true);
            out.push_run(false, d as usize);
            *run = 0;
        } else {
            out.push(false);
            *run += 1;
            if *run == n {
                out.push(true);
                out.push_run(false, d as usize);
                *run = 0;
            } else if *run == n - 1 {
                *flip_next = true;
            }
        }
    };
    for bit in input.iter() {
        feed(bit, &mut out, &mut run, &mut flip_next);
    }
    feed(true, &mut out, &mut run, &mut flip_next);
    out
}

#[test]
fn c10_reference_oracle_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x6C10);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let d = rng.next_u32() % 5;
        let k = d + 1 + rng.next_u32() % 7;
        let p = 0.3 + 0.5 * (rng.next_u32() as f64 / u32::MAX as f64);
        let n = (rng.next_u32() % 400) as usize;
        let input = biased_source(rng.next_u64(), QuantizedBias::quantize(p).unwrap(), n);
        let stuffed = ss_encode(&input, &SlidingConfig::new(finite(d, k), 0, p).unwrap());
        if stuffed.bits != reference_stuff(&input, d, k) {
            failures.push(format!(
                "trial {trial}: SS(0) differs from reference stuffing at ({d},{k})"
            ));
            break;
        }
        if k - d >= 2 {
            let flipped = ss_encode(&input, &SlidingConfig::new(finite(d, k), 1, p).unwrap());
            if flipped.bits != reference_flip(&input, d, k) {
                failures.push(format!(
                    "trial {trial}: SS(1) differs from reference flipping at ({d},{k})"
                ));
                break;
            }
        }
    }
    criterion(
        10,
        "reference codec equivalence",
        &failures,
        "1000 stuffing + flipping inputs".into(),
    );
}
