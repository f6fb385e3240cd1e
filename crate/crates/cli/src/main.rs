//! `piltz` — exact Piltz divisor sums, rigorous error-term evaluation, and
//! checkpointed verification of explicit envelopes.
//!
//! Exit codes: 0 = success / PASS; 1 = verification FAIL (violations or
//! uncertified points found); 2 = usage or domain error.
//!
//! The working precision (decimal digits) can be overridden with the
//! `PDL_PRECISION` environment variable.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use piltz_core::approx::ApproxReal;
use piltz_core::bounds;
use piltz_core::classnum::{self, ClassNumberMode, ClassNumberQuery};
use piltz_core::divisor;
use piltz_core::lambda;
use piltz_core::lemmas;
use piltz_core::mainterm::{self, JumpSide};
use piltz_core::verify::{self, VerificationConfig};

#[derive(Parser)]
#[command(
    name = "piltz",
    version,
    about = "Exact divisor sums T_k(x), rigorous error terms, and explicit-bound verification",
    after_help = "CSV column orders:\n  \
      sieve:      n,d_k\n  \
      lambda --table2:  k,lambda_prev_printed,c_printed,c_recomputed,c_recomputed_3dp,matches_paper\n  \
      lambda --table1:  k,log_x0,c_printed,lambda_printed,lambda_chained_from_4662,lambda_chained_from_3631,matches_4662_conv,matches_3631_conv\n  \
      corollary:  k,lambda_k,bound,holds\n  \
      bounds-dump --gammas N:  r,value,radius_le\n\n\
      Numeric flags accept plain integers, scientific notation (1e7), and\n  \
      exp notation for logarithmic thresholds (exp:32 means e^32).\n\n\
      PDL_PRECISION=<digits> overrides the working precision."
)]
struct Cli {
    /// Emit a JSON document (with embedded run manifest) instead of text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact d_k(n) on [from, to], as CSV
    Sieve {
        #[arg(long)]
        k: u32,
        #[arg(long, value_parser = parse_u64_sci)]
        from: u64,
        #[arg(long, value_parser = parse_u64_sci)]
        to: u64,
    },
    /// Exact T_k(x); prints the integer on stdout
    Summatory {
        #[arg(long)]
        k: u32,
        #[arg(long, value_parser = parse_u64_sci)]
        x: u64,
        /// naive | hyperbola
        #[arg(long, default_value = "hyperbola")]
        method: String,
    },
    /// Error term Δ_k at an integer jump point (both one-sided values)
    Delta {
        #[arg(long)]
        k: u32,
        #[arg(long, value_parser = parse_u64_sci)]
        x: u64,
        /// at | left | both
        #[arg(long, default_value = "both")]
        side: String,
    },
    /// Scan all integer jumps of T_k on a range against an envelope
    Verify(ScanArgs),
    /// Like verify, but report only the supremum statistics
    MaxRatio(ScanArgs),
    /// Constant-recursion tables with recomputed columns and match flags
    Lambda {
        /// the higher-order (k, x0, c, lambda_k) rows
        #[arg(long, conflicts_with = "table2")]
        table1: bool,
        /// the (k, lambda_prev, c) rows
        #[arg(long)]
        table2: bool,
    },
    /// Growth-bound check lambda_k <= 1.19 k^(3k-9) lambda_3 for k in [7, k_max]
    Corollary {
        #[arg(long, default_value_t = 12)]
        k_max: u32,
        /// base constant for the chain (decimal)
        #[arg(long, default_value = "4.662")]
        lambda3: String,
    },
    /// Seeded lemma property suites (quadrature, telescoping, ground truth)
    CheckLemmas {
        /// seed for the sample generator (required: reproducibility is the product)
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: u32,
        /// all | log-power-integral | tail-integral | telescoping | divisor-error-terms
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Class-number upper bound from degree and Minkowski bound
    Classnum {
        #[arg(long)]
        degree: u32,
        /// Minkowski bound (decimal; floored internally)
        #[arg(long)]
        bound: String,
        /// exact | envelope
        #[arg(long, default_value = "exact")]
        mode: String,
        /// error instead of falling back to the exact sum when the envelope
        /// is not valid at the given bound
        #[arg(long)]
        no_fallback: bool,
    },
    /// Dump the bound registry as JSON (or the Stieltjes table as CSV)
    BoundsDump {
        /// instead of the registry, export gamma_0..gamma_N as CSV
        #[arg(long)]
        gammas: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct ScanArgs {
    #[arg(long)]
    k: u32,
    #[arg(long, value_parser = parse_u64_sci)]
    from: u64,
    #[arg(long, value_parser = parse_u64_sci)]
    to: u64,
    /// thm1 | delta2 | delta2-voronoi | bordelles-t3 | cully-trudgian-t4 | thm2 | xpowlog
    #[arg(long)]
    bound: String,
    /// envelope constant for thm2/xpowlog (decimal)
    #[arg(long)]
    lambda: Option<String>,
    /// x exponent for xpowlog, as a fraction like 2/3
    #[arg(long, value_parser = parse_frac)]
    x_pow: Option<(u32, u32)>,
    /// log exponent for xpowlog, as a fraction like 1/3
    #[arg(long, value_parser = parse_frac)]
    log_pow: Option<(u32, u32)>,
    /// validity threshold for thm2/xpowlog bounds
    #[arg(long, value_parser = parse_u64_sci, default_value = "2")]
    bound_from: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_parser = parse_u64_sci, default_value = "1000000")]
    block_size: u64,
    #[arg(long, value_parser = parse_u64_sci, default_value = "1")]
    stride: u64,
    /// checkpoint file; resumes when it already exists
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// stop after completing this many new blocks (for staged runs)
    #[arg(long)]
    stop_after_blocks: Option<u64>,
    /// force exact integer comparisons at every point
    #[arg(long)]
    exact_compare: bool,
    /// write the JSON report here in addition to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// write the per-block report as CSV here
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

/// Accepts 12345, 1e7, 2.5e3 (must be integral), and exp:32 (= ⌊e^32⌋).
fn parse_u64_sci(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("exp:") {
        let m: u32 = rest.parse().map_err(|_| format!("bad exp: value {rest:?}"))?;
        if m > 43 {
            return Err("exp: argument too large for an integer range".into());
        }
        let v = ApproxReal::from_u64(m as u64)
            .exp()
            .map_err(|e| e.to_string())?;
        let f = piltz_core::approx::frac_bits();
        use num_like_floor::floor_u64;
        return floor_u64(&v, f);
    }
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    // scientific notation with an integral value
    let lower = s.to_ascii_lowercase();
    if let Some((mant, exp)) = lower.split_once('e') {
        let exp: u32 = exp.parse().map_err(|_| format!("bad exponent in {s:?}"))?;
        let (int_part, frac_part) = match mant.split_once('.') {
            Some((a, b)) => (a, b),
            None => (mant, ""),
        };
        if frac_part.len() as u32 > exp {
            return Err(format!("{s:?} is not an integer"));
        }
        let digits = format!("{int_part}{frac_part}");
        let base: u64 = digits.parse().map_err(|_| format!("bad mantissa in {s:?}"))?;
        return 10u64
            .checked_pow(exp - frac_part.len() as u32)
            .and_then(|p| base.checked_mul(p))
            .ok_or_else(|| format!("{s:?} overflows u64"));
    }
    Err(format!("cannot parse {s:?} as an integer"))
}

mod num_like_floor {
    use piltz_core::approx::ApproxReal;
    pub fn floor_u64(v: &ApproxReal, f: u64) -> Result<u64, String> {
        let m = v.lo();
        u64::try_from(&(m.magnitude() >> f).clone()).map_err(|_| "value too large".to_string())
    }
}

fn parse_frac(s: &str) -> Result<(u32, u32), String> {
    match s.split_once('/') {
        Some((a, b)) => {
            let n = a.parse().map_err(|_| format!("bad fraction {s:?}"))?;
            let d: u32 = b.parse().map_err(|_| format!("bad fraction {s:?}"))?;
            if d == 0 {
                return Err("fraction denominator must be nonzero".into());
            }
            Ok((n, d))
        }
        None => {
            let n = s.parse().map_err(|_| format!("bad fraction {s:?}"))?;
            Ok((n, 1))
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    subcommand: String,
    argv: Vec<String>,
    seed: Option<u64>,
    precision_digits: u64,
    output_paths: Vec<String>,
    timestamp_ms: u128,
    wall_time_ms: u128,
}

fn manifest(subcommand: &str, seed: Option<u64>, outputs: &[String], wall_ms: u128) -> Manifest {
    Manifest {
        tool: "piltz",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: subcommand.into(),
        argv: std::env::args().skip(1).collect(),
        seed,
        precision_digits: piltz_core::approx::precision_digits(),
        output_paths: outputs.to_vec(),
        timestamp_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        wall_time_ms: wall_ms,
    }
}

fn emit_json<T: Serialize>(m: Manifest, data: &T) {
    let doc = serde_json::json!({ "manifest": m, "data": data });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
}

fn scan_config(args: &ScanArgs) -> Result<VerificationConfig, piltz_core::Error> {
    let bound = match args.bound.as_str() {
        "thm2" => {
            let lambda = args.lambda.as_deref().ok_or_else(|| {
                piltz_core::Error::Domain("--bound thm2 requires --lambda".into())
            })?;
            bounds::thm2_scan_bound(args.k, lambda, args.bound_from)?
        }
        "xpowlog" => {
            let c = args.lambda.as_deref().ok_or_else(|| {
                piltz_core::Error::Domain("--bound xpowlog requires --lambda".into())
            })?;
            let x = args.x_pow.ok_or_else(|| {
                piltz_core::Error::Domain("--bound xpowlog requires --x-pow".into())
            })?;
            let l = args.log_pow.unwrap_or((0, 1));
            bounds::custom_scan_bound(c, x, l, args.bound_from)?
        }
        id => bounds::scan_bound(id)?,
    };
    let mut cfg = VerificationConfig::new(args.k, args.from, args.to, bound);
    cfg.block_size = args.block_size;
    cfg.worker_count = args.workers;
    cfg.sample_stride = args.stride;
    cfg.checkpoint_path = args.checkpoint.clone();
    cfg.stop_after_blocks = args.stop_after_blocks;
    cfg.exact_compare = args.exact_compare;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, piltz_core::Error> {
    let start = std::time::Instant::now();
    match cli.command {
        Command::Sieve { k, from, to } => {
            let block = divisor::sieve_block(k, from, to)?;
            if cli.json {
                #[derive(Serialize)]
                struct SieveOut {
                    k: u32,
                    lo: u64,
                    hi: u64,
                    values: Vec<u64>,
                }
                emit_json(
                    manifest("sieve", None, &[], start.elapsed().as_millis()),
                    &SieveOut {
                        k,
                        lo: from,
                        hi: to,
                        values: block.values,
                    },
                );
            } else {
                // tolerate a closed pipe (e.g. `piltz sieve ... | head`)
                use std::io::Write;
                let stdout = std::io::stdout();
                let mut w = std::io::BufWriter::new(stdout.lock());
                let _ = writeln!(w, "n,d_{k}");
                for n in from..=to {
                    if writeln!(w, "{n},{}", block.value(n)).is_err() {
                        break;
                    }
                }
            }
            Ok(0)
        }
        Command::Summatory { k, x, method } => {
            let v = match method.as_str() {
                "naive" => divisor::summatory_naive(k, x)?,
                "hyperbola" => divisor::summatory_hyperbola(k, x)?,
                other => {
                    return Err(piltz_core::Error::Domain(format!(
                        "unknown method {other:?} (naive | hyperbola)"
                    )))
                }
            };
            if cli.json {
                #[derive(Serialize)]
                struct SummatoryOut {
                    k: u32,
                    x: u64,
                    value: String,
                    method: divisor::SummatoryMethod,
                }
                emit_json(
                    manifest("summatory", None, &[], start.elapsed().as_millis()),
                    &SummatoryOut {
                        k,
                        x,
                        value: v.value.to_string(),
                        method: v.method,
                    },
                );
            } else {
                println!("{}", v.value);
            }
            Ok(0)
        }
        Command::Delta { k, x, side } => {
            let sides: Vec<JumpSide> = match side.as_str() {
                "at" => vec![JumpSide::AtPoint],
                "left" => vec![JumpSide::LeftLimit],
                "both" => vec![JumpSide::LeftLimit, JumpSide::AtPoint],
                other => {
                    return Err(piltz_core::Error::Domain(format!(
                        "unknown side {other:?} (at | left | both)"
                    )))
                }
            };
            #[derive(Serialize)]
            struct DeltaOut {
                k: u32,
                x: u64,
                side: JumpSide,
                t_value: String,
                delta: String,
                radius_le: String,
            }
            let mut outs = Vec::new();
            for s in sides {
                let d = mainterm::delta_at(k, x, s)?;
                outs.push(DeltaOut {
                    k,
                    x,
                    side: s,
                    t_value: d.t_value.to_string(),
                    delta: d.delta.to_decimal(30),
                    radius_le: format!("{:.2e}", d.delta.radius_f64_upper()),
                });
            }
            if cli.json {
                emit_json(manifest("delta", None, &[], start.elapsed().as_millis()), &outs);
            } else {
                for o in outs {
                    println!(
                        "x={} side={} T_{}={} delta={} (radius <= {})",
                        o.x, o.side, o.k, o.t_value, o.delta, o.radius_le
                    );
                }
            }
            Ok(0)
        }
        Command::Verify(args) => {
            let cfg = scan_config(&args)?;
            let report = verify::verify_range(&cfg)?;
            let outputs: Vec<String> = args
                .out
                .iter()
                .chain(args.csv_out.iter())
                .map(|p| p.display().to_string())
                .collect();
            if let Some(path) = &args.out {
                std::fs::write(path, serde_json::to_string_pretty(&report).unwrap())?;
            }
            if let Some(path) = &args.csv_out {
                std::fs::write(path, report.to_csv())?;
            }
            let code = match report.result.status.as_str() {
                "PASS" | "PARTIAL" => 0,
                _ => 1,
            };
            if cli.json {
                emit_json(
                    manifest("verify", None, &outputs, start.elapsed().as_millis()),
                    &report,
                );
            } else {
                println!(
                    "{}: k={} [{}, {}] against {}",
                    report.result.status, cfg.k, cfg.x_lo, cfg.x_hi, cfg.bound.id
                );
                println!(
                    "  blocks {}/{}  points {}  violations {}  indeterminate {}",
                    report.result.blocks_completed,
                    report.result.blocks_total,
                    report.result.points_checked,
                    report.result.violation_count,
                    report.result.indeterminate_count
                );
                println!(
                    "  max |delta|/bound = {} at x = {} ({})",
                    report.result.max_ratio, report.result.argmax, report.result.argmax_side
                );
                for v in report.result.violations.iter().take(20) {
                    println!("  violation: x={} side={} delta={} bound={}", v.x, v.side, v.delta, v.bound);
                }
                if report.result.violations.len() > 20 {
                    println!("  ... {} more", report.result.violations.len() - 20);
                }
            }
            Ok(code)
        }
        Command::MaxRatio(args) => {
            let cfg = scan_config(&args)?;
            let report = verify::verify_range(&cfg)?;
            if cli.json {
                #[derive(Serialize)]
                struct MaxOut {
                    max_ratio: String,
                    argmax: u64,
                    side: String,
                    status: String,
                }
                emit_json(
                    manifest("max-ratio", None, &[], start.elapsed().as_millis()),
                    &MaxOut {
                        max_ratio: report.result.max_ratio.clone(),
                        argmax: report.result.argmax,
                        side: report.result.argmax_side.clone(),
                        status: report.result.status.clone(),
                    },
                );
            } else {
                println!(
                    "{} at x = {} ({})",
                    report.result.max_ratio, report.result.argmax, report.result.argmax_side
                );
            }
            Ok(if report.result.violation_count > 0 { 1 } else { 0 })
        }
        Command::Lambda { table1, table2 } => {
            if table1 == table2 {
                return Err(piltz_core::Error::Domain(
                    "pass exactly one of --table1 / --table2".into(),
                ));
            }
            if table2 {
                let rows = lambda::c_column_report()?;
                if cli.json {
                    emit_json(manifest("lambda", None, &[], start.elapsed().as_millis()), &rows);
                } else {
                    print!("{}", lambda::c_column_csv()?);
                }
            } else {
                let rows = lambda::higher_order_report()?;
                if cli.json {
                    emit_json(manifest("lambda", None, &[], start.elapsed().as_millis()), &rows);
                } else {
                    print!("{}", lambda::higher_order_csv()?);
                }
            }
            Ok(0)
        }
        Command::Corollary { k_max, lambda3 } => {
            let l3 = ApproxReal::from_decimal_str(&lambda3)?;
            let rows = lambda::corollary_check(k_max, &l3)?;
            let all_hold = rows.iter().all(|r| r.holds);
            if cli.json {
                emit_json(manifest("corollary", None, &[], start.elapsed().as_millis()), &rows);
            } else {
                print!("{}", lambda::corollary_csv(&rows));
            }
            Ok(if all_hold { 0 } else { 1 })
        }
        Command::CheckLemmas {
            seed,
            samples,
            suite,
        } => {
            let reports = match suite.as_str() {
                "all" => lemmas::lemma_property_suite(seed, samples)?.suites,
                "log-power-integral" => vec![lemmas::log_power_integral_suite(
                    seed,
                    samples,
                    lemmas::DEFAULT_MAX_EVALS,
                )],
                "tail-integral" => vec![lemmas::tail_integral_suite(
                    seed,
                    samples,
                    lemmas::DEFAULT_MAX_EVALS,
                )],
                "telescoping" => vec![lemmas::telescoping_suite(seed, samples)],
                "divisor-error-terms" => vec![lemmas::divisor_error_term_suite(seed, samples)?],
                other => {
                    return Err(piltz_core::Error::Domain(format!(
                        "unknown suite {other:?}"
                    )))
                }
            };
            let clean = reports.iter().all(|r| r.violated == 0 && r.inconclusive == 0);
            if cli.json {
                emit_json(
                    manifest("check-lemmas", Some(seed), &[], start.elapsed().as_millis()),
                    &reports,
                );
            } else {
                for r in &reports {
                    println!(
                        "{}: {} samples, {} hold, {} violated, {} inconclusive, min margin {}",
                        r.name,
                        r.samples,
                        r.holds,
                        r.violated,
                        r.inconclusive,
                        r.min_margin.as_deref().unwrap_or("-")
                    );
                    for e in r.notable.iter().take(10) {
                        println!("  {} -> {:?}", e.params, e.outcome);
                    }
                }
            }
            Ok(if clean { 0 } else { 1 })
        }
        Command::Classnum {
            degree,
            bound,
            mode,
            no_fallback,
        } => {
            let mode = match mode.as_str() {
                "exact" => ClassNumberMode::ExactSum,
                "envelope" => ClassNumberMode::Envelope,
                other => {
                    return Err(piltz_core::Error::Domain(format!(
                        "unknown mode {other:?} (exact | envelope)"
                    )))
                }
            };
            let cert = classnum::class_number_bound(&ClassNumberQuery {
                degree,
                minkowski_bound: ApproxReal::from_decimal_str(&bound)?,
                mode,
                fallback: !no_fallback,
            })?;
            if cli.json {
                emit_json(manifest("classnum", None, &[], start.elapsed().as_millis()), &cert);
            } else {
                println!("{}", serde_json::to_string_pretty(&cert).unwrap());
            }
            Ok(0)
        }
        Command::BoundsDump { gammas } => {
            match gammas {
                Some(max_r) => {
                    let table = piltz_core::gamma::StieltjesTable::shared(max_r);
                    if cli.json {
                        #[derive(Serialize)]
                        struct G {
                            r: usize,
                            value: String,
                            radius_le: String,
                        }
                        let rows: Vec<G> = (0..=max_r)
                            .map(|r| G {
                                r,
                                value: table.gamma(r).to_decimal(45),
                                radius_le: format!("{:.2e}", table.gamma(r).radius_f64_upper()),
                            })
                            .collect();
                        emit_json(
                            manifest("bounds-dump", None, &[], start.elapsed().as_millis()),
                            &rows,
                        );
                    } else {
                        print!("{}", table.to_csv());
                    }
                }
                None => {
                    if cli.json {
                        emit_json(
                            manifest("bounds-dump", None, &[], start.elapsed().as_millis()),
                            &bounds::registry(),
                        );
                    } else {
                        println!("{}", bounds::registry_json());
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
