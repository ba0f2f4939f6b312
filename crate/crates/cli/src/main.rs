use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use qbattery::verify::Fault;
use qbattery::Error;

mod config;
mod experiments;

use config::{Experiment, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "qbattery", version, about = "Quantum battery speed experiments")]
struct Args {
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, hide = true, value_enum, default_value_t = FaultArg::None)]
    inject_fault: FaultArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    None,
    Hermiticity,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(String),
    Verification(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) if is_numerical(e) => 3,
            CliError::Core(_) => 2,
            CliError::Verification(_) => 4,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Config(m) => ("config".to_string(), m.clone()),
            CliError::Core(e) => (variant_name(e), e.to_string()),
            CliError::Io(m) => ("io".to_string(), m.clone()),
            CliError::Verification(n) => ("verification".to_string(), format!("{n} suite(s) failed")),
        };
        json!({ "error": kind, "message": message, "exit_code": self.exit_code() })
    }
}

fn is_numerical(e: &Error) -> bool {
    matches!(
        e,
        Error::NumericalFailure(_)
            | Error::NonFinite
            | Error::OptimizerNotConverged(_)
            | Error::BoundarySingularity { .. }
            | Error::MonotonicityViolation { .. }
            | Error::NegativeRadicand(_)
    )
}

fn variant_name(e: &Error) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|ch: char| !ch.is_alphanumeric())
        .next()
        .unwrap_or_default()
        .to_string()
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.output {
        config.output_path = out.clone();
    }
    Ok(config)
}

fn run(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let config = load(args)?;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let fault = match args.inject_fault {
        FaultArg::None => Fault::None,
        FaultArg::Hermiticity => Fault::Hermiticity,
    };
    match config.experiment {
        Experiment::Speed => experiments::speed(&config),
        Experiment::Bounds => experiments::bounds(&config),
        Experiment::IsingSweep => experiments::ising(&config),
        Experiment::Witness => experiments::witness(&config),
        Experiment::Examples => experiments::examples(&config),
        Experiment::Verify => experiments::verify(&config, fault),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(Error::InvalidAlpha(2.0)).exit_code(), 2);
        assert_eq!(CliError::Core(Error::NumericalFailure("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(Error::BoundarySingularity { energy: 0.0, rate: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::Verification(1).exit_code(), 4);
    }

    #[test]
    fn error_json_names_the_variant() {
        let e = CliError::Core(Error::SiteOutOfRange { site: 3, n_sites: 2 }).to_json();
        assert_eq!(e["error"], "SiteOutOfRange");
        assert_eq!(e["exit_code"], 2);
    }
}
