//! `swdtau`: synthesize, detect, evaluate, classify and benchmark.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{DetectPaths, EvaluatePaths};
use config::{KindChoice, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "swdtau",
    version,
    about = "Spike-and-wave discharge detection by Kendall tau template matching"
)]
struct Cli {
    /// Run configuration (JSON); unset fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, also the default location of inputs.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Overrides the synthesis seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the fraction of a segment that must lie inside an event.
    #[arg(long, global = true, value_name = "F")]
    overlap_frac: Option<f64>,
    /// Restricts templates to one patient.
    #[arg(long, global = true, value_name = "ID")]
    patient: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic recording, its templates and annotations.
    Synth,
    /// Scan a recording against a template directory.
    Detect {
        #[arg(long, value_name = "PATH")]
        recording: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        templates: Option<PathBuf>,
    },
    /// Score a scan report against annotations.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        scan_report: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        annotations: Option<PathBuf>,
    },
    /// Leave-one-out validation of the classifiers on a feature file.
    Classify {
        #[arg(long, value_name = "PATH")]
        features: Option<PathBuf>,
        /// lda, qda, svm or all.
        #[arg(long)]
        kind: Option<KindChoice>,
    },
    /// Print the effective run configuration as JSON.
    Config,
    /// Time the brute-force and fast tau kernels.
    Bench {
        /// Comma-separated sizes; pass the flag with no value for none.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        sizes: Option<Vec<usize>>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.synth.seed = seed;
    }
    if let Some(f) = cli.overlap_frac {
        cfg.detector.overlap_frac = f;
    }
    if let Some(p) = &cli.patient {
        cfg.detector.patient_filter = Some(p.clone());
        cfg.synth.patient_id = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String, CliError> {
    let cfg = load_config(&cli)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Synth => commands::synth(&cfg, out),
        Command::Detect {
            recording,
            templates,
        } => commands::detect(
            &cfg,
            out,
            DetectPaths {
                recording,
                templates,
            },
        ),
        Command::Evaluate {
            scan_report,
            annotations,
        } => commands::evaluate(
            &cfg,
            out,
            EvaluatePaths {
                scan_report,
                annotations,
            },
        ),
        Command::Classify { features, kind } => commands::classify(&cfg, out, features, kind),
        Command::Bench { sizes } => commands::bench(&cfg, out, sizes),
        Command::Config => Ok(serde_json::to_string_pretty(&cfg).expect("config serializes")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(summary) => {
            if !summary.is_empty() {
                // A closed pipe (e.g. `| head`) is not an error worth reporting.
                let _ = writeln!(std::io::stdout().lock(), "{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
