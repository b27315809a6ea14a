//! Command-line front end. Every successful invocation writes exactly one
//! JSON document, to stdout or to `--out`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::certify::{certify_perfect, Verdict};
use crate::error::{Error, Result};
use crate::formats::{
    is_perfect, parse_format, perfect_threshold_q, typical_rank_bounds, CanonicalFormat,
};
use crate::probe::{generic_rank_probe, typical_rank_sample, write_residuals_csv, AlsOptions};
use crate::tensor::eval_phi;
use crate::witness::{build_witness_with, CoefficientRule};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "tenperf",
    version,
    about = "Typical ranks and perfect tensor formats"
)]
pub struct Cli {
    /// Write the JSON document here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form lower and upper typical rank bounds.
    Bounds(FormatArg),
    /// Whether the format is perfect.
    Perfect(FormatArg),
    /// Certify a perfect format by exact Jacobian rank.
    Certify(FormatArg),
    /// Show the witness point of a perfect format.
    Witness(WitnessArgs),
    /// Smallest r whose Jacobian at random points has full rank.
    GenericRank(GenericRankArgs),
    /// Monte-Carlo ALS estimate of how often rank r suffices.
    ProbeAls(ProbeAlsArgs),
}

#[derive(Debug, Args)]
pub struct FormatArg {
    /// Dimensions joined by `x`, e.g. `2x2x3`.
    pub format: String,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    pub format: String,
    /// Include the factor vectors and the evaluated tensor.
    #[arg(long)]
    pub dump: bool,
    #[arg(long, default_value = "standard")]
    pub rule: CoefficientRule,
}

#[derive(Debug, Args)]
pub struct GenericRankArgs {
    pub format: String,
    #[arg(long)]
    pub max_r: usize,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ProbeAlsArgs {
    pub format: String,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 3000)]
    pub max_iters: usize,
    /// Residual below which a sample counts as rank at most `rank`.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Relative objective decrease below which a run stops.
    #[arg(long, default_value_t = 1e-12)]
    pub stall_tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Also write per-sample residuals as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct BoundsDoc {
    lower: u64,
    upper: u64,
    q: u64,
}

#[derive(Serialize)]
struct PerfectDoc {
    perfect: bool,
    q: u64,
    interval: [u64; 2],
}

/// Result of one invocation: the exit status and the document to emit.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: i32,
    pub document: Value,
}

fn canonical(text: &str) -> Result<CanonicalFormat> {
    parse_format(text)?.canonicalize()
}

fn doc<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("plain data serializes")
}

/// Runs a parsed command. Errors are usage or internal failures (status 1).
pub fn run(command: &Command) -> Result<Outcome> {
    let ok = |document| Outcome {
        status: 0,
        document,
    };
    match command {
        Command::Bounds(a) => {
            let f = canonical(&a.format)?;
            let b = typical_rank_bounds(&f);
            Ok(ok(doc(&BoundsDoc {
                lower: b.lower,
                upper: b.upper,
                q: b.q,
            })))
        }
        Command::Perfect(a) => {
            let v = is_perfect(&canonical(&a.format)?);
            Ok(ok(doc(&PerfectDoc {
                perfect: v.perfect,
                q: v.q,
                interval: v.interval,
            })))
        }
        Command::Certify(a) => {
            let cert = certify_perfect(&canonical(&a.format)?);
            Ok(Outcome {
                status: cert.verdict.exit_code(),
                document: doc(&cert),
            })
        }
        Command::Witness(a) => {
            let f = canonical(&a.format)?;
            let w = match build_witness_with(&f, a.rule) {
                Ok(w) => w,
                Err(Error::NotPerfect { .. }) => {
                    return Ok(Outcome {
                        status: Verdict::NotApplicable.exit_code(),
                        document: json!({
                            "format": f.dims(),
                            "q": perfect_threshold_q(&f),
                            "verdict": Verdict::NotApplicable,
                        }),
                    })
                }
                Err(e) => return Err(e),
            };
            let mut d = json!({
                "format": f.dims(),
                "r": f.largest(),
                "q": perfect_threshold_q(&f),
                "rule": a.rule,
                "support": w.support.tuples,
            });
            if a.dump {
                let t = eval_phi(&w.terms(), f.dims())?;
                d["factors"] = doc(&w.groups);
                d["tensor"] = doc(&t
                    .map(|&x| num_rational::BigRational::from_integer(x.into()))
                    .to_dump());
            }
            Ok(ok(d))
        }
        Command::GenericRank(a) => {
            let rep = generic_rank_probe(&canonical(&a.format)?, a.max_r, a.trials, a.seed)?;
            Ok(ok(doc(&rep)))
        }
        Command::ProbeAls(a) => {
            if a.tol.is_nan() || a.tol <= 0.0 || a.stall_tol.is_nan() || a.stall_tol < 0.0 {
                return Err(Error::InvalidArgument("tolerances must be positive".into()));
            }
            let opts = AlsOptions {
                max_iters: a.max_iters,
                tol: a.stall_tol,
            };
            let rep = typical_rank_sample(
                &canonical(&a.format)?,
                a.rank,
                a.samples,
                a.restarts,
                &opts,
                a.tol,
                a.seed,
            )?;
            if let Some(path) = &a.csv {
                let file = File::create(path).map_err(|e| io_error(path, e))?;
                write_residuals_csv(&rep, BufWriter::new(file)).map_err(|e| io_error(path, e))?;
            }
            Ok(ok(doc(&rep)))
        }
    }
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

/// Serializes `outcome` as pretty JSON with a trailing newline.
pub fn render(outcome: &Outcome) -> String {
    let mut s = serde_json::to_string_pretty(&outcome.document).expect("json value");
    s.push('\n');
    s
}

/// Full entry point: parses `args`, runs, writes output, returns the status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match run(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let text = render(&outcome);
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| io_error(path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::InvalidArgument(format!("stdout: {e}"))),
    };
    match written {
        Ok(()) => outcome.status,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
