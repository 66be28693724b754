//! Classification report rendering: a human-readable table (per-fold rows,
//! Mean/Std footer) plus a machine-readable JSON twin with full precision.

use serde::Serialize;

use lsagc_core::{CvReport, FoldOutcome, MethodStats};

#[derive(Serialize)]
struct JsonFold {
    fold: usize,
    lsagc: f64,
    correlation: f64,
    random: f64,
}

#[derive(Serialize)]
struct JsonStats {
    lsagc: f64,
    correlation: f64,
    random: f64,
}

#[derive(Serialize)]
struct JsonBlock {
    per_fold: Vec<JsonFold>,
    mean: JsonStats,
    std: JsonStats,
}

#[derive(Serialize)]
struct JsonReport {
    n_subjects: usize,
    n_samples_per_method: usize,
    augmentations_per_subject: usize,
    folds: usize,
    seed: u64,
    subject_level: JsonBlock,
    sample_level: JsonBlock,
}

fn block(rows: &[FoldOutcome], mean: &MethodStats, std: &MethodStats) -> JsonBlock {
    JsonBlock {
        per_fold: rows
            .iter()
            .map(|o| JsonFold {
                fold: o.fold,
                lsagc: o.lsagc,
                correlation: o.correlation,
                random: o.random,
            })
            .collect(),
        mean: JsonStats {
            lsagc: mean.lsagc,
            correlation: mean.correlation,
            random: mean.random,
        },
        std: JsonStats {
            lsagc: std.lsagc,
            correlation: std.correlation,
            random: std.random,
        },
    }
}

/// The JSON twin, pretty-printed with a trailing newline.
pub fn render_json(report: &CvReport, seed: u64, folds: usize) -> String {
    let doc = JsonReport {
        n_subjects: report.n_subjects,
        n_samples_per_method: report.n_samples_per_method,
        augmentations_per_subject: report.augmentations_per_subject,
        folds,
        seed,
        subject_level: block(
            &report.subject_level,
            &report.subject_mean,
            &report.subject_std,
        ),
        sample_level: block(&report.sample_level, &report.sample_mean, &report.sample_std),
    };
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}

const COLUMNS: [&str; 4] = [
    "Fold",
    "lsAGC Accuracy (%)",
    "Correlation Accuracy (%)",
    "Random Guess Accuracy (%)",
];

fn table(title: &str, rows: &[FoldOutcome], mean: &MethodStats, std: &MethodStats) -> String {
    let mut out = String::new();
    out.push_str(title);
    out.push('\n');
    out.push_str(&format!(
        "{:<6}{:>20}{:>26}{:>27}\n",
        COLUMNS[0], COLUMNS[1], COLUMNS[2], COLUMNS[3]
    ));
    let pct = |v: f64| format!("{:.2}", 100.0 * v);
    for o in rows {
        out.push_str(&format!(
            "{:<6}{:>20}{:>26}{:>27}\n",
            o.fold,
            pct(o.lsagc),
            pct(o.correlation),
            pct(o.random)
        ));
    }
    out.push_str(&format!(
        "{:<6}{:>20}{:>26}{:>27}\n",
        "Mean",
        pct(mean.lsagc),
        pct(mean.correlation),
        pct(mean.random)
    ));
    out.push_str(&format!(
        "{:<6}{:>20}{:>26}{:>27}\n",
        "Std",
        pct(std.lsagc),
        pct(std.correlation),
        pct(std.random)
    ));
    out
}

/// The text report: subject-level table, sample-level table, run shape.
pub fn render_text(report: &CvReport, seed: u64, folds: usize) -> String {
    let mut out = String::new();
    out.push_str(&table(
        "Subject-level accuracy (majority vote over augmentations)",
        &report.subject_level,
        &report.subject_mean,
        &report.subject_std,
    ));
    out.push('\n');
    out.push_str(&table(
        "Sample-level accuracy (individual augmentations)",
        &report.sample_level,
        &report.sample_mean,
        &report.sample_std,
    ));
    out.push('\n');
    out.push_str(&format!(
        "Subjects: {}   Samples per method: {}   Augmentations per subject: {}   Folds: {}   Seed: {}\n",
        report.n_subjects,
        report.n_samples_per_method,
        report.augmentations_per_subject,
        folds,
        seed
    ));
    out
}
