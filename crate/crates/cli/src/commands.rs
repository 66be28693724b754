//! The three subcommands: generate, estimate, classify.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use lsagc_core::granger::{
    cross_correlation_matrix, lsagc_connectivity, ArPredictorConfig, ConnectivityMatrix,
};
use lsagc_core::synth::{generate_two_class_cohort, generate_var_subjects, GroundTruth};
use lsagc_core::{run_cv, TimeSeriesEnsemble};

use crate::config::{ClassifyConfigFile, SignName, SynthSpec};
use crate::error::{io_err, CliError, Result};
use crate::formats::{
    read_labels, read_timeseries, write_atomic, write_labels, write_matrix, write_timeseries,
};
use crate::manifest::RunManifest;
use crate::report::{render_json, render_text};

fn truth_values(truth: &GroundTruth) -> ndarray::Array2<f64> {
    truth.adjacency.mapv(f64::from)
}

fn subject_file_name(index: usize, total: usize) -> String {
    let width = total.to_string().len().max(2);
    format!("subject_{index:0width$}")
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub struct SynthArgs {
    pub spec: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub stamp: Option<String>,
    pub argv: Vec<String>,
}

pub fn run_synth(args: &SynthArgs) -> Result<()> {
    // Parse and validate everything before touching the output directory so
    // a bad spec leaves no partial artifacts behind.
    let spec = SynthSpec::load(&args.spec)?;

    enum Generated {
        Subjects(Vec<TimeSeriesEnsemble>, GroundTruth),
        Cohort(lsagc_core::CohortData),
    }

    let generated = if let Some(cohort_spec) = spec.cohort_spec(args.seed) {
        Generated::Cohort(generate_two_class_cohort(&cohort_spec)?)
    } else {
        let count = spec.subjects.as_ref().expect("load() enforced a mode").count;
        let (subjects, truth) = generate_var_subjects(&spec.network_spec(args.seed), count)?;
        Generated::Subjects(subjects, truth)
    };

    fs::create_dir_all(&args.out).map_err(io_err("create directory", &args.out))?;

    let streams: &[&str] = match &generated {
        Generated::Subjects(..) => &["subject"],
        Generated::Cohort(_) => &["delta", "cohort-subject"],
    };
    match &generated {
        Generated::Subjects(subjects, truth) => {
            let names = subjects[0].names().to_vec();
            for (i, subject) in subjects.iter().enumerate() {
                let file = format!("{}.csv", subject_file_name(i, subjects.len()));
                write_timeseries(&args.out.join(file), subject)?;
            }
            write_matrix(&args.out.join("truth.csv"), &names, &truth_values(truth))?;
        }
        Generated::Cohort(cohort) => {
            let names = cohort.subjects[0].0.names().to_vec();
            let mut labels = Vec::with_capacity(cohort.subjects.len());
            for (i, (subject, label)) in cohort.subjects.iter().enumerate() {
                let stem = subject_file_name(i, cohort.subjects.len());
                write_timeseries(&args.out.join(format!("{stem}.csv")), subject)?;
                labels.push((stem, *label));
            }
            write_labels(&args.out.join("labels.csv"), &labels)?;
            write_matrix(
                &args.out.join("truth.csv"),
                &names,
                &truth_values(&cohort.truth_class0),
            )?;
            write_matrix(
                &args.out.join("truth_class1.csv"),
                &names,
                &truth_values(&cohort.truth_class1),
            )?;
        }
    }

    RunManifest::new(args.argv.clone(), &spec, args.seed, streams, args.stamp.as_deref())
        .write_into(&args.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// connectivity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Lsagc,
    Correlation,
}

pub struct ConnectivityArgs {
    pub input: PathBuf,
    pub method: MethodArg,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub sign: SignName,
    pub no_standardize: bool,
    pub out: PathBuf,
    pub seed: u64,
    pub stamp: Option<String>,
    pub argv: Vec<String>,
}

/// Resolved settings, recorded in the manifest hash.
#[derive(Serialize)]
struct ConnectivityResolved {
    input: String,
    method: &'static str,
    p: Option<usize>,
    m: Option<usize>,
    sign: SignName,
    standardize: bool,
    ridge_epsilon: f64,
}

pub fn run_connectivity(args: &ConnectivityArgs) -> Result<()> {
    let raw = read_timeseries(&args.input)?;
    let prepared = if args.no_standardize { raw } else { raw.standardize() };

    let resolved = ConnectivityResolved {
        input: args.input.display().to_string(),
        method: match args.method {
            MethodArg::Lsagc => "lsagc",
            MethodArg::Correlation => "correlation",
        },
        p: args.p,
        m: args.m,
        sign: args.sign,
        standardize: !args.no_standardize,
        ridge_epsilon: 1e-6,
    };

    let conn: ConnectivityMatrix = match args.method {
        MethodArg::Lsagc => {
            let (p, m) = match (args.p, args.m) {
                (Some(p), Some(m)) => (p, m),
                _ => {
                    return Err(CliError::Usage(
                        "--method lsagc requires both --p and --m".into(),
                    ))
                }
            };
            let config = ArPredictorConfig {
                p,
                m,
                ridge_epsilon: resolved.ridge_epsilon,
                sign_convention: args.sign.into(),
                reduced_model: Default::default(),
            };
            lsagc_connectivity(&prepared, &config)?
        }
        MethodArg::Correlation => cross_correlation_matrix(&prepared)?,
    };

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err("create directory", parent))?;
    }
    write_matrix(&args.out, conn.names(), conn.values())?;
    let manifest_dir = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    RunManifest::new(args.argv.clone(), &resolved, args.seed, &[], args.stamp.as_deref())
        .write_into(manifest_dir)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

pub struct ClassifyArgs {
    pub cohort: PathBuf,
    pub grid: Option<PathBuf>,
    pub folds: usize,
    pub report: PathBuf,
    pub seed: u64,
    pub stamp: Option<String>,
    pub argv: Vec<String>,
}

/// Resolved settings, recorded in the manifest hash.
#[derive(Serialize)]
struct ClassifyResolved {
    cohort: String,
    folds: usize,
    p_values: Vec<usize>,
    m_values: Vec<usize>,
    binarize: String,
    hidden: usize,
    heads: usize,
    layers: usize,
    leaky_slope: f64,
    epochs: usize,
    learning_rate: f64,
    ridge_epsilon: f64,
    standardize: bool,
}

pub fn run_classify(args: &ClassifyArgs) -> Result<()> {
    if args.folds < 2 {
        return Err(CliError::Usage(format!(
            "--folds must be at least 2, got {}",
            args.folds
        )));
    }
    let file = match &args.grid {
        Some(path) => ClassifyConfigFile::load(path)?,
        None => ClassifyConfigFile::default(),
    };
    let config = file.resolve(args.folds, args.seed)?;

    let labels = read_labels(&args.cohort.join("labels.csv"))?;
    let mut cohort = Vec::with_capacity(labels.len());
    for (stem, label) in &labels {
        let subject = read_timeseries(&args.cohort.join(format!("{stem}.csv")))?;
        cohort.push((subject, *label));
    }

    let n_series = cohort[0].0.n_series();
    let grid = config
        .grid
        .clone()
        .unwrap_or_else(|| lsagc_core::AugmentationGrid::default_for(n_series));
    let resolved = ClassifyResolved {
        cohort: args.cohort.display().to_string(),
        folds: args.folds,
        p_values: grid.p_values.clone(),
        m_values: grid.m_values.clone(),
        binarize: format!("{:?}", config.binarize),
        hidden: config.hidden_dim,
        heads: config.n_heads,
        layers: config.n_layers,
        leaky_slope: config.leaky_slope,
        epochs: config.train.epochs,
        learning_rate: config.train.learning_rate,
        ridge_epsilon: config.ridge_epsilon,
        standardize: config.standardize,
    };

    let report = run_cv(&cohort, &config)?;

    if let Some(parent) = args.report.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err("create directory", parent))?;
    }
    write_atomic(&args.report, &render_text(&report, args.seed, args.folds))?;
    let json_path = PathBuf::from(format!("{}.json", args.report.display()));
    write_atomic(&json_path, &render_json(&report, args.seed, args.folds))?;
    let manifest_dir = args
        .report
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    RunManifest::new(
        args.argv.clone(),
        &resolved,
        args.seed,
        &["folds", "model-lsagc", "model-corr", "coin"],
        args.stamp.as_deref(),
    )
    .write_into(manifest_dir)?;
    Ok(())
}
