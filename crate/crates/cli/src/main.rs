mod commands;
mod manifest;
mod settings;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use manifest::RunContext;
use settings::Settings;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Physics(String),
    #[error("{discarded} of {total} experiments discarded ({:.1}%, limit 10%)", 100.0 * *discarded as f64 / *total as f64)]
    Discards { discarded: usize, total: usize },
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Physics(_) => 3,
            Self::Discards { .. } => 4,
            Self::Runtime(_) | Self::Io { .. } => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "weakcurrent",
    version,
    about = "Weak-measurement experiments on a single electron in a two-terminal device"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat TOML configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    experiments: Option<usize>,
    #[arg(long, global = true, value_parser = ["full", "mean-field", "ideal-operator"])]
    mode: Option<String>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for the ensemble (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Weak-current histogram with its Gaussian fit.
    Histogram,
    /// Postselected weak values per detection tile and the trajectory bundle.
    VelocityMap,
    /// Pointer width against frequency, or wave-function disturbance against cable distance.
    Sweep {
        #[arg(long, value_enum)]
        parameter: SweepParameter,
    },
    /// Surface-role ratios, condition ratio and the classicality margin.
    Validate,
    /// Kraus-pipeline quadrature against the closed-form density and velocity.
    OracleCompare,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Frequency,
    Distance,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Histogram => "histogram",
            Self::VelocityMap => "velocity-map",
            Self::Sweep { parameter: SweepParameter::Frequency } => "sweep-frequency",
            Self::Sweep { parameter: SweepParameter::Distance } => "sweep-distance",
            Self::Validate => "validate",
            Self::OracleCompare => "oracle-compare",
        }
    }
}

fn load_settings(cli: &Cli) -> Result<(Settings, Vec<String>), CliError> {
    let mut settings = match &cli.config {
        Some(path) => Settings::read(path)?,
        None => Settings::default(),
    };
    if let Some(s) = cli.seed {
        settings.seed = Some(s);
    }
    if let Some(m) = cli.experiments {
        settings.experiments = Some(m);
    }
    if let Some(m) = &cli.mode {
        settings.mode = Some(m.clone());
    }
    let filled = settings.resolve()?;
    Ok((settings, filled))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let (settings, filled) = load_settings(cli)?;
    if !filled.is_empty() {
        eprintln!("defaults filled: {}", filled.join(", "));
    }
    let (config, warnings) = settings.experiment()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut ctx = RunContext::start(&cli.out_dir, cli.command.name(), settings, filled, config, warnings)?;
    let result = match cli.command {
        Command::Histogram => commands::histogram(&mut ctx),
        Command::VelocityMap => commands::velocity_map(&mut ctx),
        Command::Sweep { parameter } => commands::sweep(&mut ctx, parameter),
        Command::Validate => commands::validate(&mut ctx),
        Command::OracleCompare => commands::oracle_compare(&mut ctx),
    };
    ctx.finish(&result)?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
