//! Binary entry point: flag parsing and subcommand dispatch. All real work
//! lives in the library so integration tests can drive it directly.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nomalab_cli::config::{Config, Overrides};
use nomalab_cli::{runs, CliError};
use nomalab_core::DuplexMode;

#[derive(Parser)]
#[command(
    name = "nomalab",
    version,
    about = "Outage, throughput, and sum-rate laboratory for a wireless-powered \
             full-duplex relay NOMA overlay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo and closed-form outage sweep, written as CSV.
    Outage(CommonArgs),
    /// Delay-limited throughput sweep, written as CSV.
    Throughput(CommonArgs),
    /// Successive-convex-approximation power allocation over channel draws.
    Sumrate(SumrateArgs),
    /// Compare Monte Carlo against the closed forms; exit 1 on mismatch.
    Validate(ValidateArgs),
    /// Fast numeric health checks of the oracles and determinism.
    Selftest,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// JSON configuration file (embedded defaults when omitted).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Restrict the sweep to one duplex mode: fd, hd, or oma.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<DuplexMode>,
    /// Monte Carlo trials per grid point (channel draws for sumrate).
    #[arg(long)]
    trials: Option<u64>,
    /// Base RNG seed; trial i always uses stream i of this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Inclusive grid start:stop:step for the configured swept parameter.
    #[arg(long, value_name = "START:STOP:STEP", allow_hyphen_values = true)]
    grid: Option<String>,
}

#[derive(Args)]
struct SumrateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Exhaustive-search oracle grid step in (0, 1]; omits the oracle
    /// columns when absent.
    #[arg(long, value_name = "STEP")]
    es_grid: Option<f64>,
    /// Relative objective-gain threshold that counts as converged.
    #[arg(long, value_name = "TOL")]
    eps: Option<f64>,
    /// Iteration cap per channel draw.
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Multiply the closed-form coefficient tables by this factor; a
    /// negative control that must make validation fail.
    #[arg(long, value_name = "FACTOR", hide = true)]
    corrupt_tables: Option<f64>,
}

fn parse_mode(text: &str) -> Result<DuplexMode, String> {
    text.parse()
}

fn overrides_from(common: &CommonArgs) -> Overrides {
    Overrides {
        mode: common.mode,
        trials: common.trials,
        seed: common.seed,
        out: common.out.clone(),
        grid: common.grid.clone(),
        eps: None,
        max_iter: None,
        es_grid: None,
    }
}

fn configure(common: &CommonArgs, overrides: Overrides) -> Result<Config, CliError> {
    Config::load(common.config.as_deref())?.with_overrides(&overrides)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Outage(common) => {
            let config = configure(&common, overrides_from(&common))?;
            let path = runs::run_outage(&config)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Throughput(common) => {
            let config = configure(&common, overrides_from(&common))?;
            let path = runs::run_throughput(&config)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Sumrate(args) => {
            let mut overrides = overrides_from(&args.common);
            overrides.eps = args.eps;
            overrides.max_iter = args.max_iter;
            overrides.es_grid = args.es_grid;
            let config = configure(&args.common, overrides)?;
            let path = runs::run_sumrate(&config)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Validate(args) => {
            if args.common.seed.is_none() {
                return Err(CliError::Config(
                    "validate requires an explicit --seed so reports are reproducible".into(),
                ));
            }
            let config = configure(&args.common, overrides_from(&args.common))?;
            let (path, exceeded) = runs::run_validate(&config, args.corrupt_tables)?;
            println!("wrote {}", path.display());
            if exceeded > 0 {
                return Err(CliError::Validation(format!(
                    "{exceeded} table cells exceed tolerance; see {}",
                    path.display()
                )));
            }
            println!("all gaps within tolerance");
            Ok(())
        }
        Command::Selftest => runs::run_selftest(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
