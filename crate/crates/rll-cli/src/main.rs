//! Command-line workbench for (d,k) run-length-limited coding.
//!
//! Exit codes: 0 on success, 1 on validation or I/O failure, 2 on usage
//! errors (including parameters the library rejects).

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rll::analysis::{
    optimize_rate, solve_lambda, Constraint, RunLimit, SlidingConfig, DEFAULT_TOLERANCE,
};
use rll::bitstream::BitBuffer;
use rll::container::{AlgorithmParams, EncodedContainer};
use rll::harness::{estimate_rate, reproduce_table4, validate_constraint, CodecConfig};
use rll::interleaved::{build_codebook, derive_biases, factorize, il_decode, il_encode};
use rll::sliding::{full_decode, full_encode};

#[derive(Parser)]
#[command(
    name = "rll",
    version,
    about = "Workbench for (d,k) run-length-limited coding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Ss,
    Il,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the characteristic equation and report λ and C(d,k)
    Capacity {
        #[arg(long)]
        d: u32,
        /// Upper run limit, a number or "inf"
        #[arg(long)]
        k: RunLimit,
        #[arg(long)]
        json: bool,
    },
    /// Maximize the SS(j) information rate over the bias (and over j)
    Optimize {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: u32,
        /// Fix the sliding index instead of scanning 0..=k-d
        #[arg(long)]
        j: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Encode a file into a framed constrained stream
    Encode {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: RunLimit,
        /// Sliding index (ss only; default: optimized)
        #[arg(long)]
        j: Option<u32>,
        /// Bias Pr{0} (ss only; default: optimized)
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "in")]
        input: String,
        #[arg(long = "out")]
        output: String,
    },
    /// Decode a framed constrained stream back to the original file
    Decode {
        #[arg(long = "in")]
        input: String,
        #[arg(long = "out")]
        output: String,
    },
    /// Monte Carlo rate estimate over seeded random input
    Simulate {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: RunLimit,
        #[arg(long)]
        j: Option<u32>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        bits: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Factor the characteristic polynomial and derive transformer chains
    Factor {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        json: bool,
    },
    /// Reproduce the benchmark efficiency table
    Table4 {
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        #[arg(long)]
        json: bool,
    },
    /// Validate a raw bit stream against a constraint
    Check {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        k: RunLimit,
        #[arg(long)]
        json: bool,
    },
}

enum CliError {
    Lib(rll::Error),
    Io(String, std::io::Error),
}

impl From<rll::Error> for CliError {
    fn from(e: rll::Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{path}: {e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            // bad arguments are usage errors; broken data is a failure
            CliError::Lib(rll::Error::Domain(_))
            | CliError::Lib(rll::Error::Parameter(_))
            | CliError::Lib(rll::Error::NotFactorable { .. }) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

fn read_file(path: &str) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(path.into(), e))
}

fn write_file(path: &str, data: &[u8]) -> Result<(), CliError> {
    fs::write(path, data).map_err(|e| CliError::Io(path.into(), e))
}

fn sliding_config(
    constraint: Constraint,
    j: Option<u32>,
    p: Option<f64>,
) -> Result<SlidingConfig, CliError> {
    match (j, p) {
        (Some(j), Some(p)) => Ok(SlidingConfig::new(constraint, j, p)?),
        _ => {
            let profile = match constraint.k() {
                RunLimit::Finite(_) => optimize_rate(&constraint, j)?,
                RunLimit::Infinite => {
                    // stuffing is optimal at p = 1/λ
                    let lambda = solve_lambda(&constraint, DEFAULT_TOLERANCE).lambda;
                    return Ok(SlidingConfig::new(
                        constraint,
                        j.unwrap_or(0),
                        p.unwrap_or(1.0 / lambda),
                    )?);
                }
            };
            let j = j.unwrap_or(profile.j_star);
            let p = p.unwrap_or(profile.p_star);
            eprintln!("using j={j}, p={p:.6}");
            Ok(SlidingConfig::new(constraint, j, p)?)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Capacity { d, k, json } => {
            let c = Constraint::new(d, k)?;
            let r = solve_lambda(&c, DEFAULT_TOLERANCE);
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "d": d, "k": k.finite(),
                        "lambda": r.lambda, "capacity": r.capacity, "residual": r.residual,
                    })
                );
            } else {
                println!("constraint {c}");
                println!("lambda    {:.12}", r.lambda);
                println!("capacity  {:.12}", r.capacity);
                println!("residual  {:.2e}", r.residual);
            }
        }
        Command::Optimize { d, k, j, json } => {
            let c = Constraint::finite(d, k)?;
            let profile = optimize_rate(&c, j)?;
            let capacity = solve_lambda(&c, DEFAULT_TOLERANCE).capacity;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "d": d, "k": k,
                        "j_star": profile.j_star, "p_star": profile.p_star,
                        "rate": profile.rate, "capacity": capacity,
                        "efficiency": profile.efficiency,
                    })
                );
            } else {
                println!("constraint {c}");
                println!("j*         {}", profile.j_star);
                println!("p*         {:.10}", profile.p_star);
                println!("rate       {:.10}", profile.rate);
                println!("capacity   {:.10}", capacity);
                println!("efficiency {:.4}%", 100.0 * profile.efficiency);
            }
        }
        Command::Encode {
            algo,
            d,
            k,
            j,
            p,
            input,
            output,
        } => {
            let constraint = Constraint::new(d, k)?;
            let bytes = read_file(&input)?;
            let message = BitBuffer::unpack(&bytes, bytes.len() * 8)?;
            let container = match algo {
                Algo::Ss => full_encode(&message, &sliding_config(constraint, j, p)?),
                Algo::Il => {
                    if j.is_some() || p.is_some() {
                        return Err(rll::Error::Parameter(
                            "--j/--p only apply to the ss codec".into(),
                        )
                        .into());
                    }
                    il_encode(&message, &constraint)?
                }
            };
            write_file(&output, &container.to_bytes())?;
            eprintln!(
                "{} bits -> {} constrained bits",
                message.len(),
                container.payload.len()
            );
        }
        Command::Decode { input, output } => {
            let bytes = read_file(&input)?;
            let container = EncodedContainer::from_bytes(&bytes)?;
            let message = match container.params {
                AlgorithmParams::SymbolSliding { .. } => full_decode(&container)?,
                AlgorithmParams::Interleaved { .. } => il_decode(&container)?,
            };
            if message.len() % 8 != 0 {
                return Err(rll::Error::CorruptContainer(format!(
                    "message length {} is not a whole number of bytes",
                    message.len()
                ))
                .into());
            }
            write_file(&output, message.as_bytes())?;
        }
        Command::Simulate {
            algo,
            d,
            k,
            j,
            p,
            bits,
            seed,
            json,
        } => {
            let constraint = Constraint::new(d, k)?;
            let config = match algo {
                Algo::Ss => CodecConfig::Sliding(sliding_config(constraint, j, p)?),
                Algo::Il => {
                    if j.is_some() || p.is_some() {
                        return Err(rll::Error::Parameter(
                            "--j/--p only apply to the ss codec".into(),
                        )
                        .into());
                    }
                    CodecConfig::Interleaved(constraint)
                }
            };
            let report = estimate_rate(&config, bits, seed)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable")
                );
            } else {
                println!(
                    "constraint     ({},{})",
                    report.d,
                    report.k.map_or("inf".into(), |k| k.to_string())
                );
                println!("algorithm      {}", report.algorithm);
                println!("analytic rate  {:.6}", report.analytic_rate);
                println!("empirical rate {:.6}", report.empirical_rate);
                println!("capacity       {:.6}", report.capacity);
                println!("efficiency     {:.4}%", 100.0 * report.efficiency);
                println!(
                    "sample bits    {} (seed {})",
                    report.sample_bits, report.seed
                );
            }
        }
        Command::Factor { d, k, json } => {
            let c = Constraint::finite(d, k)?;
            let plan = factorize(&c)?;
            let lambda = solve_lambda(&c, DEFAULT_TOLERANCE).lambda;
            let chain = derive_biases(&plan, lambda);
            let codebook = build_codebook(&plan);
            if json {
                let factors: Vec<_> = plan
                    .factors()
                    .iter()
                    .zip(chain.factors())
                    .map(|(f, cf)| {
                        serde_json::json!({
                            "arity": f.arity,
                            "stride": f.stride,
                            "biases": cf.exact(),
                            "bias_numerators":
                                cf.quantized().iter().map(|b| b.numerator()).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                println!(
                    "{}",
                    serde_json::json!({
                        "d": d, "k": k, "lambda": lambda,
                        "phrase_count": codebook.len(),
                        "transformer_count": plan.transformer_count(),
                        "factors": factors,
                    })
                );
            } else {
                println!(
                    "constraint {c}: {} phrases, λ = {lambda:.10}",
                    codebook.len()
                );
                for (f, cf) in plan.factors().iter().zip(chain.factors()) {
                    let biases: Vec<String> =
                        cf.exact().iter().map(|b| format!("{b:.10}")).collect();
                    println!(
                        "factor arity {} stride {}: chain biases [{}]",
                        f.arity,
                        f.stride,
                        biases.join(", ")
                    );
                }
                println!("transformers needed: {}", plan.transformer_count());
            }
        }
        Command::Table4 { csv, json } => {
            let rows = reproduce_table4();
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&rows).expect("serializable")
                );
            } else if csv {
                println!(
                    "d,k,capacity,stuffing_pct,flipping_pct,sliding_pct,sliding_index,\
                     published_capacity,published_stuffing_pct,published_flipping_pct,\
                     published_sliding_pct,published_sliding_index,\
                     delta_capacity,delta_stuffing_pct,delta_flipping_pct,delta_sliding_pct"
                );
                for r in rows {
                    println!(
                        "{},{},{:.4},{:.4},{:.4},{:.4},{},{:.4},{:.2},{:.2},{:.2},{},{:+.5},{:+.4},{:+.4},{:+.4}",
                        r.d,
                        r.k,
                        r.capacity,
                        r.stuffing_pct,
                        r.flipping_pct,
                        r.sliding_pct,
                        r.sliding_index,
                        r.published.capacity,
                        r.published.stuffing_pct,
                        r.published.flipping_pct,
                        r.published.sliding_pct,
                        r.published.sliding_index,
                        r.delta_capacity,
                        r.delta_stuffing_pct,
                        r.delta_flipping_pct,
                        r.delta_sliding_pct,
                    );
                }
            } else {
                println!("(d,k)   capacity  stuff%    flip%     slide%    j*   published(stuff/flip/slide/j)");
                for r in rows {
                    println!(
                        "({},{})  {:.4}    {:7.4}  {:7.4}  {:8.4}  {}    {:.2}/{:.2}/{:.2}/{}",
                        r.d,
                        r.k,
                        r.capacity,
                        r.stuffing_pct,
                        r.flipping_pct,
                        r.sliding_pct,
                        r.sliding_index,
                        r.published.stuffing_pct,
                        r.published.flipping_pct,
                        r.published.sliding_pct,
                        r.published.sliding_index,
                    );
                }
            }
        }
        Command::Check { input, d, k, json } => {
            let c = Constraint::new(d, k)?;
            let bytes = read_file(&input)?;
            let bits = BitBuffer::unpack(&bytes, bytes.len() * 8)?;
            let report = validate_constraint(&bits, &c);
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable")
                );
            } else if report.ok {
                println!("ok: {} bits satisfy {c}", bits.len());
            } else {
                println!("{} violation(s) of {c}:", report.violations.len());
                for v in report.violations.iter().take(20) {
                    println!("  bit {}: zero run of {}", v.offset, v.gap);
                }
                if report.violations.len() > 20 {
                    println!("  … and {} more", report.violations.len() - 20);
                }
            }
            if !report.ok {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
