mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use config::{validate_config, Validated, OUT_DIR_ENV};
use error::CliError;
use num_complex::Complex64 as C;
use output::{to_json, OutputDir};
use solwave::evolve::Scheme;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Used by `resolvent-verify` when no config is given: the stable wave
/// a(s) = 1 + s at C = 1.
const DEFAULT_RESOLVENT_CONFIG: &str = "coupling = { kind = \"polynomial\", coeffs = [1.0, 1.0] }\nC = 1.0\n\
                                        [grid]\nL = 30.0\nn = 3001\n";

#[derive(Parser)]
#[command(name = "solwave", version, about = "Solitary waves of the Schrödinger equation with a point oscillator")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Compare emitted metrics with the config's [check.<subcommand>] table; exit 2 on violation.
    #[arg(long, global = true)]
    check: bool,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides SOLWAVE_OUT_DIR and the config's output_dir.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normalized configuration.
    Validate,
    /// Solitary-wave parameters.
    Solitary,
    /// Discrete spectrum of the linearization.
    Spectrum,
    /// Finite-difference check of the resolvent kernel.
    ResolventVerify {
        /// Spectral parameter as `re,im`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: C,
        /// Source point (moved to the nearest grid node).
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
    },
    /// Decay of the linearized flow on the continuous spectral subspace.
    LinearDecay {
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Nonlinear evolution of the perturbed wave.
    Evolve {
        #[arg(long, value_enum, default_value = "volterra")]
        scheme: SchemeArg,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Comma-separated snapshot times.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
    },
    /// Full pipeline: evolution, modulation tracking, majorant and asymptotics.
    Stability,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Volterra,
    Cn,
}

fn parse_complex(s: &str) -> Result<C, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(C::new(num(re)?, 0.0)),
        [re, im] => Ok(C::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re,im`, got `{s}`")),
    }
}

fn positive(flag: &str, value: Option<f64>, default: f64) -> Result<f64, CliError> {
    match value {
        None => Ok(default),
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(CliError::Usage(format!("{flag} must be positive and finite, got {x}"))),
    }
}

fn load(path: Option<&Path>, command: &Command) -> Result<Validated, CliError> {
    let (path, text) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            (p.to_path_buf(), text)
        }
        None if matches!(command, Command::ResolventVerify { .. }) => {
            (PathBuf::from("<built-in>"), DEFAULT_RESOLVENT_CONFIG.to_string())
        }
        None => return Err(CliError::Usage("--config <file> is required".into())),
    };
    let v = validate_config(&text).map_err(|issues| CliError::Config { path, issues })?;
    for w in &v.warnings {
        log::warn!("{w}");
    }
    Ok(v)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::Solitary => "solitary",
        Command::Spectrum => "spectrum",
        Command::ResolventVerify { .. } => "resolvent-verify",
        Command::LinearDecay { .. } => "linear-decay",
        Command::Evolve { .. } => "evolve",
        Command::Stability => "stability",
    }
}

/// `Ok(true)` when every check passed (or none was requested).
fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let v = load(cli.config.as_deref(), &cli.command)?;
    let name = command_name(&cli.command);
    if let Command::Validate = cli.command {
        print!("{}", v.config.normalized());
        return Ok(true);
    }
    let dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| v.config.output_dir.clone());
    let mut out = OutputDir::create(&dir)?;
    out.write("config.toml", &v.config.normalized())?;
    let time = &v.config.time;
    let summary = match &cli.command {
        Command::Validate => unreachable!(),
        Command::Solitary => commands::solitary(&v, &mut out)?,
        Command::Spectrum => commands::spectrum(&v, &mut out)?,
        Command::ResolventVerify { lambda, y } => commands::resolvent_verify(&v, *lambda, *y, &mut out)?,
        Command::LinearDecay { t_end, dt } => {
            let t_end = positive("--t-end", *t_end, time.t_end)?;
            let dt = positive("--dt", *dt, time.dt)?;
            commands::linear_decay(&v, t_end, dt, &mut out)?
        }
        Command::Evolve {
            scheme,
            t_end,
            dt,
            snapshots,
        } => {
            let scheme = match scheme {
                SchemeArg::Volterra => Scheme::Volterra,
                SchemeArg::Cn => Scheme::CrankNicolson,
            };
            let t_end = positive("--t-end", *t_end, time.t_end)?;
            let dt = positive("--dt", *dt, time.dt)?;
            let snaps = snapshots.clone().unwrap_or_else(|| time.snapshots.clone());
            commands::evolve(&v, scheme, t_end, dt, &snaps, &mut out)?
        }
        Command::Stability => commands::stability(&v, &mut out)?,
    };
    print!("{}", to_json(&summary)?);
    if !cli.check {
        return Ok(true);
    }
    let empty = Default::default();
    let thresholds = v.config.check.get(name).unwrap_or(&empty);
    if thresholds.is_empty() {
        log::warn!("--check given but the config has no [check.{name}] thresholds");
    }
    let violations = commands::check(&summary, thresholds, name)?;
    for m in &violations {
        eprintln!("check failed: {m}");
    }
    Ok(violations.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
