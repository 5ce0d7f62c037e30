use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use isc_cli::{run, RunArgs};
use isc_core::sim::ScenarioKind;
use isc_core::DriverKind;

/// Simulate indirect driver-automation shared steering scenarios.
#[derive(Debug, Parser)]
#[command(name = "isc-sim", version)]
struct Cli {
    /// path_following, obstacle_avoidance or combined
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    /// Flat key-value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated automation weights to sweep
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sweep_lambda_a: Option<Vec<f64>>,
    /// adaptive or conventional
    #[arg(long)]
    driver: Option<DriverKind>,
    /// Also write two-column plot data files
    #[arg(long)]
    plot_data: bool,
    /// Runs are deterministic; accepted as an explicit guard
    #[arg(long)]
    seedless: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = cli.seedless;
    let args = RunArgs {
        scenario: cli.scenario,
        config: cli.config,
        out: cli.out,
        sweep_lambda_a: cli.sweep_lambda_a,
        driver: cli.driver,
        plot_data: cli.plot_data,
    };
    match run(&args) {
        Ok((_, summary)) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("isc-sim: {e}");
            ExitCode::FAILURE
        }
    }
}
