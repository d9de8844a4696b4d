use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypimcf_cli::pipeline::{self, SUMMARY_FILE};
use hypimcf_cli::scenario::Scenario;
use hypimcf_cli::summary::Summary;
use hypimcf_cli::write_artifacts;

const EXIT_FAILED_CHECKS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "hypimcf", version, about = "Inverse mean curvature flow experiments in hyperbolic space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for the randomized suites.
    #[arg(long, global = true, default_value_t = 20240607)]
    seed: u64,
    /// Overrides the scenario's angular resolution.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Suppress progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        scenario: PathBuf,
        /// Output directory; overrides the scenario's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
    /// Print the checks recorded in `<dir>/summary.json`.
    Report { dir: PathBuf },
}

fn load(path: &Path, resolution: Option<usize>) -> Result<Scenario, ExitCode> {
    Scenario::load(path, resolution).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_USAGE)
    })
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_CHECKS)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Validate { scenario } => load(&scenario, cli.resolution).map(|s| {
            if !quiet {
                println!("ok: {} ({}, n={}, resolution={})", s.name, s.pipeline.as_str(), s.n, s.resolution);
            }
            ExitCode::SUCCESS
        }),
        Command::Run { scenario, out } => load(&scenario, cli.resolution).and_then(|s| {
            let base = scenario.parent().unwrap_or(Path::new("."));
            let dir = out.unwrap_or_else(|| s.output_dir(base));
            let mut progress = |stage: &str| {
                if !quiet {
                    eprintln!("[{}] {stage}", s.name);
                }
            };
            let artifacts = pipeline::run(&s, cli.seed, &mut progress).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_SOLVER)
            })?;
            write_artifacts(&dir, &artifacts).map_err(|e| {
                eprintln!("error: writing {}: {e}", dir.display());
                ExitCode::from(EXIT_SOLVER)
            })?;
            if !quiet {
                print!("{}", artifacts.summary.report());
            }
            Ok(verdict(artifacts.summary.passed))
        }),
        Command::Report { dir } => {
            let path = dir.join(SUMMARY_FILE);
            std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<Summary>(&t).map_err(|e| e.to_string()))
                .map(|summary| {
                    print!("{}", summary.report());
                    verdict(summary.passed)
                })
                .map_err(|e| {
                    eprintln!("error: {}: {e}", path.display());
                    ExitCode::from(EXIT_USAGE)
                })
        }
    };
    result.unwrap_or_else(|code| code)
}
