//! `lsagc` — directed-connectivity estimation and cohort classification.
//!
//! Three subcommands cover the workflow end to end: `synth` writes a
//! reproducible synthetic cohort, `connectivity` turns one time-series file
//! into a directed connectivity matrix, and `classify` runs the stratified
//! cross-validation comparison and writes the accuracy report. Every run
//! drops a manifest next to its outputs; identical flags and seed give
//! byte-identical artifacts.
//!
//! Exit codes: 0 success, 2 usage/config, 3 I/O, 4 validation, 5 leakage
//! check (a 5 means a bug, not bad input).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lsagc_cli::commands::{
    run_classify, run_connectivity, run_synth, ClassifyArgs, ConnectivityArgs, MethodArg,
    SynthArgs,
};
use lsagc_cli::config::SignName;

#[derive(Parser)]
#[command(name = "lsagc", version, about = "Directed connectivity and graph classification")]
struct Cli {
    /// Root RNG seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// RFC 3339 timestamp to record in the manifest. Omitted, the manifest
    /// carries null timestamps so reruns stay byte-identical.
    #[arg(long, global = true)]
    stamp: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic subjects (and ground truth) from a spec file.
    Synth {
        /// TOML spec describing the network and the subject set.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a directed connectivity matrix from one time-series CSV.
    Connectivity {
        /// Input time-series CSV.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "lsagc")]
        method: MethodArg,
        /// Number of principal components (required for lsagc).
        #[arg(long)]
        p: Option<usize>,
        /// Lag order (required for lsagc).
        #[arg(long)]
        m: Option<usize>,
        /// Sign convention of the index.
        #[arg(long, value_enum, default_value = "positive")]
        sign: SignName,
        /// Skip per-series standardization of the input.
        #[arg(long)]
        no_standardize: bool,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated cohort classification report.
    Classify {
        /// Directory holding subject CSVs plus labels.csv.
        #[arg(long)]
        cohort: PathBuf,
        /// Optional TOML file tuning grid, binarization, classifier,
        /// training, and engine settings.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Number of stratified folds.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Report path; the JSON twin lands at `<report>.json`.
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        lsagc_core::par::set_global_threads(threads);
    }

    let result = match cli.command {
        Command::Synth { spec, out } => run_synth(&SynthArgs {
            spec,
            out,
            seed: cli.seed,
            stamp: cli.stamp,
            argv,
        }),
        Command::Connectivity {
            input,
            method,
            p,
            m,
            sign,
            no_standardize,
            out,
        } => run_connectivity(&ConnectivityArgs {
            input,
            method,
            p,
            m,
            sign,
            no_standardize,
            out,
            seed: cli.seed,
            stamp: cli.stamp,
            argv,
        }),
        Command::Classify {
            cohort,
            grid,
            folds,
            report,
        } => run_classify(&ClassifyArgs {
            cohort,
            grid,
            folds,
            report,
            seed: cli.seed,
            stamp: cli.stamp,
            argv,
        }),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
