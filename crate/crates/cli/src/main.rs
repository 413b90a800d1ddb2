use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ma_isac::experiment::{
    emit_correlation_map, run_convergence, run_mse_sweep, run_rate_vs_k, run_tradeoff, scheme_layout,
    write_correlation, write_rows, Experiment, Scheme,
};
use ma_isac::Error;

#[derive(Parser)]
#[command(name = "ma-isac", version, about = "Movable-antenna ISAC array design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
    profile: ProfileArg,
    /// Output CSV; defaults to the configured path, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record per-row wall time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    MaStatistical,
    UpaDense,
    UpaSparse,
}

#[derive(Subcommand)]
enum Command {
    /// Rate versus CRB threshold.
    Tradeoff(Common),
    /// MLE error and CRB versus probing power.
    Mse(Common),
    /// Rate versus number of users.
    RateVsK(Common),
    /// Steering-vector correlation map of one layout.
    Correlation {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = LayoutArg::MaStatistical)]
        layout: LayoutArg,
        /// Reference zone (0-based); defaults to the configured one.
        #[arg(long)]
        zone: Option<usize>,
    },
    /// Per-iteration objective of the optimizer.
    Convergence(Common),
}

fn load(c: &Common) -> Result<Experiment, Error> {
    let profile = match c.profile {
        ProfileArg::Desk => "desk",
        ProfileArg::Paper => "paper",
    };
    let mut exp = Experiment::from_path(&c.config, profile, c.seed)?;
    exp.timing = c.timing;
    if let Some(out) = &c.out {
        exp.output = Some(out.clone());
    }
    Ok(exp)
}

fn sink(exp: &Experiment) -> Result<Box<dyn Write>, Error> {
    Ok(match &exp.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Tradeoff(c) => {
            let exp = load(&c)?;
            write_rows(sink(&exp)?, &run_tradeoff(&exp)?)
        }
        Command::Mse(c) => {
            let exp = load(&c)?;
            write_rows(sink(&exp)?, &run_mse_sweep(&exp)?)
        }
        Command::RateVsK(c) => {
            let exp = load(&c)?;
            write_rows(sink(&exp)?, &run_rate_vs_k(&exp)?)
        }
        Command::Convergence(c) => {
            let exp = load(&c)?;
            write_rows(sink(&exp)?, &run_convergence(&exp)?)
        }
        Command::Correlation { common, layout, zone } => {
            let exp = load(&common)?;
            let scheme = match layout {
                LayoutArg::MaStatistical => Scheme::MaStatistical,
                LayoutArg::UpaDense => Scheme::UpaDense,
                LayoutArg::UpaSparse => Scheme::UpaSparse,
            };
            let layout = scheme_layout(&exp, scheme)?.ok_or_else(|| {
                Error::InfeasibleThreshold("the configured threshold cannot be met".into())
            })?;
            let cells = emit_correlation_map(&exp, &layout, zone.unwrap_or(exp.reference_zone))?;
            write_correlation(sink(&exp)?, &cells)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ma-isac: {e}");
            match e {
                Error::InvariantViolation(_) => ExitCode::from(3),
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
