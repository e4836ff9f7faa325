use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use poe_core::diagnostics::FitOptions;
use poe_core::error::{PoeError, Result};
use poe_core::io::config::ExperimentConfig;
use poe_core::io::pipeline::{analyze_file, run_config, spectral_for, sweep, write_report_files};
use poe_core::io::{exit_code, EXIT_OK};

#[derive(Parser)]
#[command(name = "poe", version, about = "Periodic-drive unitarity diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and analyze one experiment config.
    Run { config: PathBuf },
    /// Analyze a measurement-record file.
    Analyze {
        record: PathBuf,
        /// Inclusive fit window, e.g. 3:30.
        #[arg(long, value_parser = parse_window)]
        fit_window: Option<[usize; 2]>,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        /// Write series.csv, report.json and plots here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the spectral report of a config's drive and initial state.
    Spectrum { config: PathBuf },
    /// Run every *.json config in a directory.
    Sweep { dir: PathBuf },
}

fn parse_window(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected a:b, got '{s}'"))?;
    let a = a.trim().parse().map_err(|_| format!("bad window start '{a}'"))?;
    let b = b.trim().parse().map_err(|_| format!("bad window end '{b}'"))?;
    Ok([a, b])
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run { config } => {
            let outcome = run_config(&config)?;
            for w in &outcome.warnings {
                eprintln!("{w}");
            }
            if outcome.files.is_empty() {
                print!("{}", outcome.report.to_json()?);
            }
            println!("{}", outcome.summary_line());
            Ok(outcome.exit_status())
        }
        Command::Analyze {
            record,
            fit_window,
            alpha,
            out,
        } => {
            let opts = FitOptions {
                window: fit_window,
                alpha,
                ..FitOptions::default()
            };
            let (_, report) = analyze_file(&record, &opts)?;
            match out {
                Some(dir) => {
                    for w in write_report_files(&dir, &report)? {
                        eprintln!("{w}");
                    }
                }
                None => print!("{}", report.to_json()?),
            }
            eprintln!("{}: {}", report.name, report.diagnostics.verdict.verdict.as_str());
            Ok(report.diagnostics.exit_status())
        }
        Command::Spectrum { config } => {
            let exp = ExperimentConfig::load(&config)?.resolve()?;
            let rep = spectral_for(&exp)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(EXIT_OK)
        }
        Command::Sweep { dir } => {
            let outcome = sweep(&dir)?;
            for run in &outcome.runs {
                match run {
                    Ok(o) => {
                        for w in &o.warnings {
                            eprintln!("{w}");
                        }
                        println!("{}", o.summary_line());
                    }
                    Err((name, e)) => eprintln!("{name}: error: {e}"),
                }
            }
            println!("summary: {}", outcome.summary_path.display());
            Ok(outcome.exit_status())
        }
    }
}

fn report_error(e: &PoeError) -> u8 {
    eprintln!("error: {e}");
    exit_code(e) as u8
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => ExitCode::from(report_error(&e)),
    }
}
