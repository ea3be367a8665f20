use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use censreg::datagen::{DesignKind, DEFAULT_N};
use censreg::mc::{GridConfig, DEFAULT_CENSOR_FRACS, DEFAULT_REPS};
use censreg::ModelKind;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    #[value(name = "md")]
    Markdown,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate(GridConfig),
    Fit { input: PathBuf, model: ModelKind },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Standard output when absent.
    pub out: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "censreg", about = "Censored regression simulations and fits", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Run the Monte Carlo grid and print summary rows.
    Simulate(SimulateArgs),
    /// Fit one model to a dataset file.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// lod, weibull, lognormal or tobit-normal; repeatable or comma-separated.
    #[arg(long = "design", value_delimiter = ',', value_parser = parse_design)]
    designs: Vec<DesignKind>,
    /// Censoring fractions in (0, 1).
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction)]
    censor: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    models: Vec<ModelKind>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// semipar, tobit, weibull or cox.
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_design(s: &str) -> Result<DesignKind, String> {
    DesignKind::parse(s).ok_or_else(|| format!("unknown design '{s}'"))
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| format!("unknown model '{s}'"))
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(format!("censoring fraction {f} is outside (0, 1)"))
    }
}

/// Parses a full argument vector, program name included.
///
/// Help and version requests come back as `CliError::Help` with clap's
/// rendered text.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
        _ => CliError::Usage(first_line(&e.to_string())),
    })?;
    match cli.command {
        Sub::Simulate(a) => {
            let mut grid = GridConfig::default();
            if !a.designs.is_empty() {
                grid.designs = a.designs;
            }
            grid.censor_fracs = if a.censor.is_empty() {
                DEFAULT_CENSOR_FRACS.to_vec()
            } else {
                a.censor
            };
            grid.n = a.n;
            grid.reps = a.reps;
            if let Some(seed) = a.seed {
                grid.master_seed = seed;
            }
            if !a.models.is_empty() {
                grid.models = Some(a.models);
            }
            grid.threads = a.threads;
            grid.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(RunConfig {
                command: Command::Simulate(grid),
                out: a.output.out,
                format: a.output.format,
            })
        }
        Sub::Fit(a) => Ok(RunConfig {
            command: Command::Fit {
                input: a.input,
                model: a.model,
            },
            out: a.output.out,
            format: a.output.format,
        }),
    }
}

fn first_line(msg: &str) -> String {
    let line = msg
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments");
    line.trim_start_matches("error: ").to_string()
}
