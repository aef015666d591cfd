use std::path::PathBuf;
use std::process::ExitCode;

use afdm_bench::{emit_results, run_scenario, summary, Format, RunOptions, Scenario};
use clap::{ArgGroup, Parser};

/// Monte Carlo range/velocity estimation benchmark.
#[derive(Debug, Parser)]
#[command(name = "afdm-bench", version)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "preset", "dump_preset"])))]
struct Cli {
    /// Scenario file (TOML).
    #[arg(short, long)]
    scenario: Option<PathBuf>,

    /// Built-in scenario: fig2, fig3 or fig4.
    #[arg(short, long)]
    preset: Option<String>,

    /// Print a preset as TOML and exit.
    #[arg(long, value_name = "PRESET")]
    dump_preset: Option<String>,

    /// Result table path; scatter and trace files are written next to it.
    #[arg(short, long, default_value = "results.csv")]
    output: PathBuf,

    #[arg(short, long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the trial count per cell.
    #[arg(short, long)]
    trials: Option<usize>,

    /// More progress output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Suppress the console summary.
    #[arg(short, long)]
    quiet: bool,

    /// Also write per-iteration estimator diagnostics.
    #[arg(long)]
    trace: bool,
}

fn run(cli: Cli) -> afdm_bench::Result<()> {
    if let Some(name) = &cli.dump_preset {
        print!("{}", Scenario::preset(name)?.to_toml());
        return Ok(());
    }
    let mut scenario = match (&cli.scenario, &cli.preset) {
        (Some(path), _) => Scenario::load(path)?,
        (None, Some(name)) => Scenario::preset(name)?,
        (None, None) => unreachable!("clap enforces a scenario source"),
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    if let Some(trials) = cli.trials {
        scenario.trials = trials;
    }
    let opts = RunOptions {
        trace: cli.trace,
        verbosity: cli.verbose,
    };
    let report = run_scenario(&scenario, &opts)?;
    let written = emit_results(&report, &cli.output, cli.format)?;
    if !cli.quiet {
        print!("{}", summary(&report.rows));
        for p in written {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
