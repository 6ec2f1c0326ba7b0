use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rbdecay::Error;

mod commands;

/// Ground-state relaxation simulator for ⁸⁷Rb vapor on the D1 line.
#[derive(Debug, Parser)]
#[command(name = "rbdecay", version, about)]
struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration (TOML). Bare names are also looked up in
    /// $RBDECAY_CONFIG_DIR.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Warn about unknown keys instead of rejecting them.
    #[arg(long)]
    pub lenient: bool,
    /// Overrides `[output] dir`.
    #[arg(short, long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    /// Chosen from the trace's protocol tag.
    Auto,
    Exponential,
    DoubleExponential,
    DecayingSinusoid,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one protocol instance and write its trace CSV(s).
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Density, cm⁻³ (default: first configured density).
        #[arg(long)]
        density: Option<f64>,
        /// Add Gaussian noise of this standard deviation (normalized units),
        /// seeded from `[output] seed`.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Run all three protocols over the configured densities and write the
    /// traces plus the derived-rates report.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Fit trace CSVs and write a JSON report.
    Fit {
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        model: ModelArg,
        /// Fit the raw absorption instead of the normalized trace.
        #[arg(long)]
        raw: bool,
        /// Report path (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write the data behind the figure analogues.
    Figures {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the invariant suite.
    Validate {
        /// Constants and seed from this config.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Skip the full protocol simulations.
        #[arg(long)]
        quick: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConfigParse { .. }
        | Error::UnknownKey { .. }
        | Error::UnitMismatch { .. }
        | Error::MalformedCsv { .. }
        | Error::MissingFile(_)
        | Error::Io(_)
        | Error::Json(_) => 4,
        Error::SteadyStateNotReached { .. } | Error::MeanFieldNotConverged { .. } | Error::Fit(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Simulate { cfg, density, noise } => commands::simulate(&cfg, density, noise),
        Command::Sweep { cfg } => commands::sweep(&cfg),
        Command::Fit { files, model, raw, out } => commands::fit(&files, model, raw, out.as_deref()),
        Command::Figures { cfg } => commands::figures(&cfg),
        Command::Validate { config, quick } => commands::validate(config.as_deref(), quick),
    };
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
