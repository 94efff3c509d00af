use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use uopc::nn_regression::SolverParams;
use uopc::pipeline::Method;
use uopc_cli::commands::{certify, cluster_once, generate, load_dataset, write_certificate, SyntheticKind};
use uopc_cli::table::write_dataset;
use uopc_cli::{run_experiment, write_csv, CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "uopc", version, about = "Clustering for unions of polyhedral cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum SourceArg {
    #[value(name = "synthetic-2d")]
    Synthetic2d,
    #[value(name = "synthetic-3d")]
    Synthetic3d,
}

#[derive(Copy, Clone, ValueEnum)]
enum MethodArg {
    KnnGaussian,
    KnnBinary,
    Ncl,
    Lsa,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a labeled synthetic dataset as CSV.
    Generate {
        #[arg(long, value_enum, default_value = "synthetic-2d")]
        source: SourceArg,
        /// Cone file replacing the built-in cones.
        #[arg(long)]
        cones: Option<PathBuf>,
        /// Points per cone.
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster a CSV dataset and print one label per line.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "knn-gaussian")]
        method: MethodArg,
        #[arg(long, default_value_t = 16)]
        k: usize,
        /// Gaussian bandwidth; the median K-th neighbour distance if absent.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        lambda: f64,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configured sweep and write per-trial CSV rows plus a summary.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock seconds per row (output is then not byte-stable).
        #[arg(long)]
        timing: bool,
    },
    /// Check the no-false-discovery certificate on a labeled CSV dataset.
    Certify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Writes to `out`, or stdout. Files are written in one go so a failed
/// command never leaves a partial file behind.
fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate { source, cones, count, seed, out } => {
            let kind = match source {
                SourceArg::Synthetic2d => SyntheticKind::Planar,
                SourceArg::Synthetic3d => SyntheticKind::Spatial,
            };
            let data = generate(kind, cones.as_deref(), count, seed)?;
            let mut buf = Vec::new();
            write_dataset(&data, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Cluster { input, method, k, tau, lambda, clusters, seed, out } => {
            let data = load_dataset(&input)?;
            let method = match method {
                MethodArg::KnnGaussian => Method::KnnGaussian { k, tau },
                MethodArg::KnnBinary => Method::KnnBinary { k },
                MethodArg::Ncl => Method::Ncl { lambda },
                MethodArg::Lsa => Method::Lsa,
            };
            let outcome = cluster_once(&data, &method, clusters, seed, &SolverParams::default())?;
            let mut buf = Vec::new();
            outcome.assignment.write_to(&mut buf)?;
            emit(out.as_deref(), &buf)?;
            if let Some(tau) = outcome.tau {
                eprintln!("tau: {tau}");
            }
            if let (Some(error), Some(d)) = (outcome.error, outcome.discoveries) {
                eprintln!("clustering error: {error}");
                eprintln!("discoveries: {} true, {} false", d.true_count, d.false_count);
            }
            Ok(())
        }
        Command::Experiment { config, seed, out, timing } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            cfg.timing |= timing;
            let report = run_experiment(&cfg)?;
            let mut buf = Vec::new();
            write_csv(&report, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Certify { input, k, out } => {
            let data = load_dataset(&input)?;
            let cert = certify(&data, k)?;
            let mut buf = Vec::new();
            write_certificate(&cert, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uopc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
