use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod files;

#[derive(Parser, Debug)]
#[command(name = "epirisk", version, about = "Epidemic risk maps and suspected-case detection from cell trajectories")]
struct Cli {
    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic labelled corpus.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute one risk map per day.
    Riskmap {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        /// Inclusive day range `A..B`, as day indices or YYYY-MM-DD dates.
        #[arg(long)]
        days: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score every user against a directory of risk maps.
    Score {
        #[arg(long)]
        maps: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Remove each confirmed user's own contribution before scoring them.
        #[arg(long, requires = "registry")]
        leave_one_out: bool,
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Flag suspected cases from a score file.
    Detect {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Stat)]
        method: MethodArg,
        /// Quantile level of the normal-score threshold.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also save the trained tree or forest.
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Convert a risk map file.
    Export {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Geojson)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy of every detector across infection rates.
    Eval {
        /// Comma-separated infection rates in percent.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Use this corpus instead of simulating one from the config.
        #[arg(long, requires = "registry")]
        traj: Option<PathBuf>,
        #[arg(long)]
        registry: Option<PathBuf>,
        /// Score confirmed users with their own contribution included.
        #[arg(long)]
        keep_own_contribution: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Stat,
    Tree,
    Forest,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Geojson,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
