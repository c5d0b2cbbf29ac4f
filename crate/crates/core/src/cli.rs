//! `geomprod` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::combinatorics::{factor_count, IndexSet};
use crate::error::Error;
use crate::multiproduct::{component_estimate, estimate, Estimate, GmpConfig, Parity};
use crate::oracle::{euler_partial_product, sinc, BuiltinFunction};
use crate::signal::{coverage_check, forecast, load_csv, normalize, NormalizeMode};
use crate::sweeps::{
    fmt_float, grid_eval, halving_schedule, write_csv, Coupling, SweepSpec, XGrid, DEFAULT_CUTOFF,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const THREADS_ENV: &str = "GEOMPROD_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "geomprod",
    version,
    about = "Extrapolation by geometric multiproducts"
)]
struct Cli {
    /// Output format; the default depends on the subcommand.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate f(x) for a built-in function.
    Estimate {
        #[arg(long, value_parser = parse_function)]
        function: BuiltinFunction,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[command(flatten)]
        gmp: GmpArgs,
    },
    /// Estimate the single component f_k(x) = exp(c_k x^k).
    Component {
        #[arg(long, value_parser = parse_function)]
        function: BuiltinFunction,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        gmp: GmpArgs,
    },
    /// Compare the truncated Euler cosine product with sin(x)/x.
    Euler {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long)]
        n: u32,
    },
    /// Error table over an x grid and an r schedule.
    Sweep {
        #[arg(long, value_parser = parse_function)]
        function: BuiltinFunction,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x_start: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_stop: f64,
        #[arg(long, default_value_t = 0.05)]
        x_step: f64,
        /// Comma-separated ratios (each a decimal or `sqrt:V`). Defaults to 1 + 2^-t.
        #[arg(long, value_delimiter = ',', value_parser = parse_ratio)]
        r: Vec<f64>,
        /// Largest t of the default schedule 1 + 2^-t.
        #[arg(long, default_value_t = 8)]
        t_max: u32,
        #[arg(long, conflicts_with = "cutoff")]
        n_max: Option<u32>,
        #[arg(long)]
        cutoff: Option<f64>,
        #[arg(long, value_parser = parse_base)]
        base: IndexSet,
        #[arg(long, default_value = "all", value_parser = parse_parity)]
        parity: Parity,
    },
    /// Multiplicity-weighted number of f factors in the full quotient.
    CountFactors {
        #[arg(long, value_parser = parse_base)]
        base: IndexSet,
        #[arg(long)]
        n_max: u32,
        #[arg(long, default_value = "all", value_parser = parse_parity)]
        parity: Parity,
    },
    /// Forecast a sampled signal read from CSV (`t,value`).
    Forecast {
        #[arg(long)]
        input: PathBuf,
        /// divide-by-first, none, or affine:A,B (stored = A + B * raw)
        #[arg(long, default_value = "divide-by-first", value_parser = parse_normalize)]
        normalize: NormalizeMode,
        /// Horizon measured from the first sample.
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[command(flatten)]
        gmp: GmpArgs,
    },
}

#[derive(Debug, Args)]
struct GmpArgs {
    /// Ratio r > 1, as a decimal or `sqrt:V`.
    #[arg(long, value_parser = parse_ratio)]
    r: f64,
    #[arg(long, conflicts_with = "cutoff")]
    n_max: Option<u32>,
    /// Couple n_max to r via r^n_max ~ K (default 32 when --n-max is absent).
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long, value_parser = parse_base)]
    base: IndexSet,
    #[arg(long, default_value = "all", value_parser = parse_parity)]
    parity: Parity,
}

impl GmpArgs {
    fn coupling(&self) -> Coupling {
        match (self.n_max, self.cutoff) {
            (Some(n), _) => Coupling::FixedNMax(n),
            (None, Some(k)) => Coupling::FixedCutoff(k),
            (None, None) => Coupling::FixedCutoff(DEFAULT_CUTOFF),
        }
    }

    fn config(&self) -> Result<GmpConfig, CliError> {
        let n_max = self.coupling().n_max(self.r, &self.base)?;
        Ok(GmpConfig::new(
            self.r,
            n_max,
            self.base.clone(),
            self.parity,
        )?)
    }
}

/// A decimal, or `sqrt:V` for the exact square root of V.
pub fn parse_ratio(s: &str) -> Result<f64, String> {
    let v = match s.trim().strip_prefix("sqrt:") {
        Some(inner) => inner
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad ratio {s:?}: {e}"))?
            .sqrt(),
        None => s
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad ratio {s:?}: {e}"))?,
    };
    if v > 1.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("ratio must be > 1, got {s}"))
    }
}

fn parse_function(s: &str) -> Result<BuiltinFunction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_base(s: &str) -> Result<IndexSet, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_parity(s: &str) -> Result<Parity, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_normalize(s: &str) -> Result<NormalizeMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
struct CliError {
    code: i32,
    kind: String,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidIndexSet(_)
            | Error::InvalidConfig(_)
            | Error::RatioNotAboveOne(_)
            | Error::OrderNotInBase { .. }
            | Error::OracleScale(_)
            | Error::Unsupported(_) => EXIT_USAGE,
            Error::NonPositiveSample { .. }
            | Error::DomainCoverage { .. }
            | Error::NonFinite { .. }
            | Error::ValueOutOfRange(_)
            | Error::MultiplicityOverflow { .. }
            | Error::ZeroFirstValue
            | Error::NotUnitAtOrigin(_)
            | Error::NonPositiveAfterNormalization { .. } => EXIT_DOMAIN,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::DuplicateAbscissa(_)
            | Error::FewPoints(_) => EXIT_IO,
        };
        CliError {
            code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            kind: "usage".into(),
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            kind: "io".into(),
            message: message.into(),
        }
    }
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    command: &'static str,
    function: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    x: f64,
    value: f64,
    log_value: f64,
    factor_count: u128,
    config: &'a GmpConfig,
    coupling: Coupling,
}

fn estimate_output(
    command: &'static str,
    function: &BuiltinFunction,
    k: Option<u32>,
    e: &Estimate,
    coupling: Coupling,
    format: Format,
) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(&EstimateOutput {
            command,
            function: function.to_string(),
            k,
            x: e.x,
            value: e.value,
            log_value: e.log_value,
            factor_count: e.factor_count,
            config: &e.config,
            coupling,
        }),
        Format::Csv => Ok(format!(
            "x,value,log_value,r,n_max,base,parity,factor_count\n{},{},{},{},{},{},{},{}\n",
            fmt_float(e.x),
            fmt_float(e.value),
            fmt_float(e.log_value),
            fmt_float(e.config.r()),
            e.config.n_max(),
            base_field(e.config.base()),
            e.config.parity(),
            e.factor_count
        )),
    }
}

fn base_field(base: &IndexSet) -> String {
    base.elements()
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::io(format!("serializing output: {e}")))
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::usage(format!("{THREADS_ENV} must be a non-negative integer"))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("cannot build thread pool: {e}")))
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Estimate { function, x, gmp } => {
            let cfg = gmp.config()?;
            let e = estimate(function, *x, &cfg)?;
            estimate_output(
                "estimate",
                function,
                None,
                &e,
                gmp.coupling(),
                cli.format.unwrap_or(Format::Json),
            )
        }
        Command::Component {
            function,
            x,
            k,
            gmp,
        } => {
            let cfg = gmp.config()?;
            let e = component_estimate(function, *k, *x, cfg.r(), cfg.n_max(), cfg.base())?;
            estimate_output(
                "component",
                function,
                Some(*k),
                &e,
                gmp.coupling(),
                cli.format.unwrap_or(Format::Json),
            )
        }
        Command::Euler { x, n } => {
            if *n == 0 {
                return Err(CliError::usage("--n must be >= 1"));
            }
            let product = euler_partial_product(*x, *n);
            let reference = sinc(*x);
            let diff = (product - reference).abs();
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&json!({
                    "x": x, "n": n, "product": product, "sinc": reference, "abs_diff": diff,
                })),
                Format::Csv => Ok(format!(
                    "x,n,product,sinc,abs_diff\n{},{},{},{},{}\n",
                    fmt_float(*x),
                    n,
                    fmt_float(product),
                    fmt_float(reference),
                    fmt_float(diff)
                )),
            }
        }
        Command::Sweep {
            function,
            x_start,
            x_stop,
            x_step,
            r,
            t_max,
            n_max,
            cutoff,
            base,
            parity,
        } => {
            let coupling = match (n_max, cutoff) {
                (Some(n), _) => Coupling::FixedNMax(*n),
                (None, Some(k)) => Coupling::FixedCutoff(*k),
                (None, None) => Coupling::FixedCutoff(DEFAULT_CUTOFF),
            };
            let schedule = if r.is_empty() {
                halving_schedule(*t_max)
            } else {
                r.clone()
            };
            let spec = SweepSpec {
                function: *function,
                grid: XGrid {
                    start: *x_start,
                    stop: *x_stop,
                    step: *x_step,
                },
                schedule,
                coupling,
                base: base.clone(),
                parity: *parity,
            };
            spec.validate()?;
            let pool = thread_pool()?;
            let rows = pool.install(|| grid_eval(&spec))?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&json!({ "spec": spec, "rows": rows })),
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&rows, &mut buf).map_err(|e| CliError::io(e.to_string()))?;
                    String::from_utf8(buf).map_err(|e| CliError::io(e.to_string()))
                }
            }
        }
        Command::CountFactors {
            base,
            n_max,
            parity,
        } => {
            // validates n_max against |base| and the parity rule
            GmpConfig::new(2.0, *n_max, base.clone(), *parity)?;
            let count = factor_count(base, u64::from(*n_max))?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&json!({
                    "base": base, "n_max": n_max, "parity": parity, "factor_count": count,
                })),
                Format::Csv => Ok(format!("{count}\n")),
            }
        }
        Command::Forecast {
            input,
            normalize: mode,
            x,
            gmp,
        } => {
            let cfg = gmp.config()?;
            let raw = load_csv(input)?;
            let sig = normalize(&raw, *mode)?;
            let coverage = coverage_check(&sig, &cfg, *x)?;
            if !coverage.pass {
                return Err(CliError {
                    code: EXIT_DOMAIN,
                    kind: Error::DomainCoverage {
                        abscissa: coverage.required_max,
                        lower: 0.0,
                        upper: coverage.sampled_max,
                        subset: None,
                    }
                    .kind()
                    .into(),
                    message: format!(
                        "horizon x={} needs samples up to t={} but data ends at t={}; \
                         largest feasible horizon for this configuration is {}",
                        x, coverage.required_max, coverage.sampled_max, coverage.max_feasible_x
                    ),
                });
            }
            let fc = forecast(&sig, *x, &cfg)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&json!({
                    "command": "forecast",
                    "input": input.display().to_string(),
                    "normalize": mode.to_string(),
                    "time_origin": sig.time_origin(),
                    "x": x,
                    "value": fc.estimate.value,
                    "log_value": fc.estimate.log_value,
                    "raw_value": fc.raw_value,
                    "factor_count": fc.estimate.factor_count,
                    "config": fc.estimate.config,
                    "coupling": gmp.coupling(),
                    "normalization": fc.normalization,
                    "coverage": fc.coverage,
                })),
                Format::Csv => Ok(format!(
                    "x,value,raw_value,coverage_pass,required_max,sampled_max,max_feasible_x\n\
                     {},{},{},{},{},{},{}\n",
                    fmt_float(*x),
                    fmt_float(fc.estimate.value),
                    fmt_float(fc.raw_value),
                    fc.coverage.pass,
                    fmt_float(fc.coverage.required_max),
                    fmt_float(fc.coverage.sampled_max),
                    fmt_float(fc.coverage.max_feasible_x)
                )),
            }
        }
    }
}

fn wants_json(args: &[OsString]) -> bool {
    args.iter().enumerate().any(|(i, a)| {
        a == "--format=json"
            || (a == "--format" && args.get(i + 1).is_some_and(|next| next == "json"))
    })
}

fn report(err: &CliError, json: bool, stderr: &mut dyn Write) {
    let line = if json {
        json!({ "error": err.kind, "message": err.message, "exit_code": err.code }).to_string()
    } else {
        format!("error[{}]: {}", err.kind, err.message.replace('\n', " "))
    };
    let _ = writeln!(stderr, "{line}");
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let json = wants_json(&args);
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return EXIT_OK;
            }
            let rendered = e.render().to_string();
            let message = rendered
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let message = message.trim_start_matches("error: ");
            let message = if message.is_empty() {
                "invalid arguments"
            } else {
                message
            };
            report(&CliError::usage(message.to_string()), json, stderr);
            return EXIT_USAGE;
        }
    };
    let result = execute(&cli).and_then(|text| match &cli.output {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(format!("stdout: {e}"))),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            report(&err, json, stderr);
            err.code
        }
    }
}
