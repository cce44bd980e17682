use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdmean::error::{Error, Result};
use hdmean::hdtest::{one_sample_test, two_sample_test, VarianceMethod};
use hdmean::io::{load_csv, save_csv};
use hdmean::procsim::{sample_path, ProcessSpec};
use hdmean::study::{run_study, StudyConfig};

/// Tests for the mean of high-dimensional M-dependent time series.
#[derive(Parser)]
#[command(name = "hdmean", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-sample test of a zero mean.
    Test {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lag: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = VarianceMethod::Split)]
        method: VarianceMethod,
    },
    /// Two-sample test of equal means.
    Test2 {
        #[arg(long)]
        input1: PathBuf,
        #[arg(long)]
        input2: PathBuf,
        #[arg(long)]
        lag: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = VarianceMethod::Split)]
        method: VarianceMethod,
    },
    /// Draw a path from a process spec and write it as CSV.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte Carlo study and write its JSON report.
    Study {
        #[arg(long)]
        config: PathBuf,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Test {
            input,
            lag,
            alpha,
            method,
        } => {
            let x = load_csv(input)?;
            print_json(&one_sample_test(&x, lag, alpha, method)?)
        }
        Command::Test2 {
            input1,
            input2,
            lag,
            alpha,
            method,
        } => {
            let x1 = load_csv(input1)?;
            let x2 = load_csv(input2)?;
            print_json(&two_sample_test(&x1, &x2, lag, alpha, method)?)
        }
        Command::Simulate { spec, n, seed, out } => {
            let spec: ProcessSpec = serde_json::from_str(&std::fs::read_to_string(spec)?)?;
            let x = sample_path(&spec, n, seed)?;
            save_csv(out, x.data())
        }
        Command::Study { config } => {
            let cfg = StudyConfig::load(config)?;
            let report = run_study(&cfg)?;
            if let Some(path) = &cfg.csv_path {
                report.write_replicate_csv(path)?;
            }
            match &cfg.output_path {
                Some(path) => std::fs::write(path, report.to_json()? + "\n").map_err(Error::from),
                None => print_json(&report),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
