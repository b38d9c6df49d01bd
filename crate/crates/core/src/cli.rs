//! Command-line front end.
//!
//! Subcommands emit plot-ready CSV or canonical JSON. Exit codes: 0 on
//! success, 1 for configuration or validation errors, 2 for runtime errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::{fmt_float, to_canonical_json, write_atomic};
use crate::pipeline::{
    entropy_curve, fidelity_curve, run_experiment, EntropyPoint, ExperimentConfig, ExperimentReport, FidelityPoint,
};
use crate::traffic::{generate_rounds, write_csv, LoadKind, LoadProfile, TrafficModel};

#[derive(Debug, Parser)]
#[command(name = "qsc", version, about = "Quantum semantic communication simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (or directory for `simulate --format csv`); stdout if omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full experiment sweep.
    Simulate,
    /// Minimal output entropy of the depolarizing channel over (d, lambda).
    EntropyCurve {
        /// Dimensions, e.g. `2,3,4` or `2..16`.
        #[arg(long, default_value = "2..16")]
        dims: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda_max: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
    },
    /// Average teleportation fidelity over (d, p).
    FidelityCurve {
        #[arg(long, default_value = "2..16")]
        dims: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        p_min: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        p_max: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
    },
    /// Dump generated packet sizes.
    Traffic {
        #[arg(long, default_value_t = crate::traffic::DEFAULT_MEAN_BYTES, allow_negative_numbers = true)]
        mean: f64,
        #[arg(long, default_value_t = crate::traffic::DEFAULT_STD_BYTES, allow_negative_numbers = true)]
        std: f64,
        /// `bursty`, `bursty:BASE,AMPLITUDE,PERIOD` or `constant:N`.
        #[arg(long, default_value = "bursty")]
        profile: String,
        #[arg(long, default_value_t = 100)]
        rounds: usize,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Reads a strict TOML configuration; omitted fields take their defaults.
pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(config_err)?;
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

/// Parses `2,3,4`, `2..4` or a mix such as `2..4,10`.
pub fn parse_dims(spec: &str) -> CliResult<Vec<usize>> {
    let mut dims = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("dims: cannot parse `{s}`")))
        };
        match part.split_once("..") {
            Some((lo, hi)) => {
                let hi = hi.strip_prefix('=').unwrap_or(hi);
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                if lo > hi {
                    return Err(CliError::Config(format!("dims: empty range `{part}`")));
                }
                dims.extend(lo..=hi);
            }
            None => dims.push(parse(part)?),
        }
    }
    if dims.is_empty() {
        return Err(CliError::Config("dims: no dimensions given".into()));
    }
    if let Some(d) = dims.iter().find(|&&d| d < 2) {
        return Err(CliError::Config(format!("dims: d = {d} is below 2")));
    }
    dims.sort_unstable();
    dims.dedup();
    Ok(dims)
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize, name: &str) -> CliResult<Vec<f64>> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(CliError::Config(format!("{name}: invalid range [{lo}, {hi}]")));
    }
    match steps {
        0 => Err(CliError::Config(format!("{name}: steps must be >= 1"))),
        1 => Ok(vec![lo]),
        n => Ok((0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect()),
    }
}

/// `bursty`, `bursty:5,60,90` or `constant:5`.
pub fn parse_profile(spec: &str) -> CliResult<LoadKind> {
    let bad = || CliError::Config(format!("profile: cannot parse `{spec}`"));
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    match name {
        "constant" => Ok(LoadKind::Constant {
            packets: args.trim().parse().map_err(|_| bad())?,
        }),
        "bursty" if args.is_empty() => Ok(LoadKind::default()),
        "bursty" => {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            let [base, amplitude, period] = parts.as_slice() else {
                return Err(bad());
            };
            Ok(LoadKind::Bursty {
                base: base.parse().map_err(|_| bad())?,
                amplitude: amplitude.parse().map_err(|_| bad())?,
                period: period.parse().map_err(|_| bad())?,
            })
        }
        _ => Err(bad()),
    }
}

pub fn entropy_csv(points: &[EntropyPoint]) -> String {
    let mut s = String::from("d,lambda,entropy_bits\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.d, fmt_float(p.lambda), fmt_float(p.entropy_bits));
    }
    s
}

pub fn fidelity_csv(points: &[FidelityPoint]) -> String {
    let mut s = String::from("d,p,fidelity\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.d, fmt_float(p.p), fmt_float(p.fidelity));
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// The three plot tables of an experiment: resources, entropy and fidelity.
pub fn report_tables(report: &ExperimentReport) -> [(&'static str, String); 3] {
    let header = format!("# seed={}\n", report.meta.seed);
    let mut rows: Vec<_> = report.rounds.iter().collect();
    rows.sort_by_key(|r| (r.round_index, r.d));
    let mut resources = header.clone();
    resources.push_str(
        "round,d,x,k,c_qsc,c_baseline,savings,mean_intra_fidelity,link_fidelity,pairs_consumed,empty\n",
    );
    for r in rows {
        let _ = writeln!(
            resources,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.round_index,
            r.d,
            r.x,
            r.k,
            r.c_qsc,
            r.c_baseline,
            fmt_float(r.savings),
            opt(r.mean_intra_fidelity),
            opt(r.link_fidelity),
            r.pairs_consumed,
            r.empty
        );
    }
    let lambda = report.config.device_lambda;
    let mut entropy = header.clone();
    entropy.push_str("d,lambda,entropy_bits\n");
    let mut fidelity = header;
    fidelity.push_str("d,p,fidelity,mean_link_fidelity,mean_savings\n");
    for s in &report.summary {
        let _ = writeln!(entropy, "{},{},{}", s.d, fmt_float(lambda), fmt_float(s.s_min));
        let achieved = {
            let vals: Vec<f64> = report
                .rounds
                .iter()
                .filter(|r| r.d == s.d)
                .filter_map(|r| r.link_fidelity)
                .collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let _ = writeln!(
            fidelity,
            "{},{},{},{},{}",
            s.d,
            fmt_float(report.config.link_p),
            fmt_float(s.avg_link_fidelity),
            opt(achieved),
            opt(s.mean_savings)
        );
    }
    [("resources.csv", resources), ("entropy.csv", entropy), ("fidelity.csv", fidelity)]
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(|e| runtime_err(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(runtime_err),
    }
}

pub fn cmd_simulate(config: Option<&Path>, seed: Option<u64>, out: Option<&Path>, format: Format) -> CliResult<()> {
    let mut cfg = match config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let report = run_experiment(&cfg).map_err(|e| match e {
        crate::Error::InvalidConfig(_) => config_err(e),
        other => runtime_err(other),
    })?;
    match format {
        Format::Json => emit(out, &to_canonical_json(&report).map_err(runtime_err)?),
        Format::Csv => match out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| runtime_err(format!("{}: {e}", dir.display())))?;
                for (name, body) in report_tables(&report) {
                    emit(Some(&dir.join(name)), &body)?;
                }
                Ok(())
            }
            None => {
                let joined: Vec<String> = report_tables(&report).into_iter().map(|(_, b)| b).collect();
                emit(None, &joined.join("\n"))
            }
        },
    }
}

pub fn cmd_entropy_curve(dims: &str, lo: f64, hi: f64, steps: usize, out: Option<&Path>, format: Format) -> CliResult<()> {
    let dims = parse_dims(dims)?;
    let lambdas = linspace(lo, hi, steps, "lambda")?;
    let points = entropy_curve(&dims, &lambdas).map_err(config_err)?;
    match format {
        Format::Csv => emit(out, &entropy_csv(&points)),
        Format::Json => emit(out, &to_canonical_json(&points).map_err(runtime_err)?),
    }
}

pub fn cmd_fidelity_curve(dims: &str, lo: f64, hi: f64, steps: usize, out: Option<&Path>, format: Format) -> CliResult<()> {
    let dims = parse_dims(dims)?;
    let ps = linspace(lo, hi, steps, "p")?;
    let points = fidelity_curve(&dims, &ps).map_err(config_err)?;
    match format {
        Format::Csv => emit(out, &fidelity_csv(&points)),
        Format::Json => emit(out, &to_canonical_json(&points).map_err(runtime_err)?),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_traffic(
    mean: f64,
    std: f64,
    profile: &str,
    rounds: usize,
    seed: u64,
    out: Option<&Path>,
    format: Format,
) -> CliResult<()> {
    let model = TrafficModel::new(mean, std).map_err(config_err)?;
    let profile = LoadProfile::new(parse_profile(profile)?, rounds).map_err(config_err)?;
    let loads = generate_rounds(&model, &profile, seed).map_err(runtime_err)?;
    match format {
        Format::Csv => {
            let mut buf = format!("# seed={seed}\n").into_bytes();
            write_csv(&loads, &mut buf).map_err(runtime_err)?;
            emit(out, &String::from_utf8(buf).expect("ascii csv"))
        }
        Format::Json => {
            let doc = serde_json::json!({ "meta": { "seed": seed }, "rounds": loads });
            emit(out, &to_canonical_json(&doc).map_err(runtime_err)?)
        }
    }
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match cli.command {
        Command::Simulate => cmd_simulate(g.config.as_deref(), g.seed, out, g.format),
        Command::EntropyCurve {
            ref dims,
            lambda_min,
            lambda_max,
            steps,
        } => cmd_entropy_curve(dims, lambda_min, lambda_max, steps, out, g.format),
        Command::FidelityCurve {
            ref dims,
            p_min,
            p_max,
            steps,
        } => cmd_fidelity_curve(dims, p_min, p_max, steps, out, g.format),
        Command::Traffic {
            mean,
            std,
            ref profile,
            rounds,
        } => {
            let seed = match (g.seed, g.config.as_deref()) {
                (Some(s), _) => s,
                (None, Some(p)) => load_config(p)?.master_seed,
                (None, None) => 0,
            };
            cmd_traffic(mean, std, profile, rounds, seed, out, g.format)
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qsc: {e}");
            e.exit_code()
        }
    }
}
