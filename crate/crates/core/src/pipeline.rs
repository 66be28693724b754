//! Subject classification from connectivity graphs.
//!
//! Each subject's time series is expanded into a stack of connectivity
//! matrices over a grid of engine settings (the augmentation grid), every
//! matrix becomes one graph sample — binarized adjacency plus the raw
//! matrix rows as node features — and a fresh attention classifier is
//! trained per cross-validation fold. Folds are stratified at the *subject*
//! level: all augmentations of a subject live in the same fold, so no
//! subject ever straddles the train/test boundary. Subject predictions are
//! majority votes over that subject's samples (ties go to the positive
//! class), and a seeded coin-flip baseline calibrates the scale.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::TimeSeriesEnsemble;
use crate::error::{Error, Result};
use crate::gat::{GatArchitecture, GatModel, GraphSample};
use crate::granger::{
    cross_correlation_matrix, lsagc_connectivity, ArPredictorConfig, ConnectivityMatrix,
    ReducedModelKind, SignConvention,
};
use crate::par;
use crate::seeding::derive_tagged;
use crate::train::{train, TrainConfig};

/// Connectivity backends the pipeline can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMethod {
    Lsagc,
    CrossCorrelation,
}

/// The engine-setting grid used to augment each subject.
///
/// Every (p, m) pair yields one connectivity matrix per subject, so the
/// number of samples per subject is `p_values.len() × m_values.len()`.
/// Entries may repeat (small ensembles can round different grid fractions
/// to the same p); repeats still count toward the grid size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentationGrid {
    pub p_values: Vec<usize>,
    pub m_values: Vec<usize>,
}

impl AugmentationGrid {
    pub fn new(p_values: Vec<usize>, m_values: Vec<usize>) -> Result<Self> {
        if p_values.is_empty() || m_values.is_empty() {
            return Err(Error::InvalidConfig {
                reason: "augmentation grid must have at least one p and one m".into(),
            });
        }
        if p_values.iter().any(|p| *p == 0) || m_values.iter().any(|m| *m == 0) {
            return Err(Error::InvalidConfig {
                reason: "augmentation grid entries must be at least 1".into(),
            });
        }
        Ok(Self { p_values, m_values })
    }

    /// Default grid for an ensemble of `n_series`: nine component counts
    /// spread across `1..n_series` (tenths of N, clamped) crossed with lag
    /// orders {1, 2, 3} — 27 augmentations.
    pub fn default_for(n_series: usize) -> Self {
        let p_values = (1..=9)
            .map(|r| {
                let p = ((n_series as f64) * (r as f64) / 10.0).round() as usize;
                p.clamp(1, n_series.saturating_sub(1).max(1))
            })
            .collect();
        Self {
            p_values,
            m_values: vec![1, 2, 3],
        }
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.p_values.len() * self.m_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_values.is_empty() || self.m_values.is_empty()
    }

    /// Grid points in canonical order: p outer, m inner.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.p_values
            .iter()
            .flat_map(move |p| self.m_values.iter().map(move |m| (*p, *m)))
    }
}

/// How a continuous connectivity matrix becomes a binary adjacency.
///
/// Both strategies force self-loops onto the diagonal afterwards (the
/// attention layers need every node to see itself).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinarizeStrategy {
    /// Keep each row's `k` largest off-diagonal entries (ties broken by
    /// column index, ascending).
    TopKPerNode(usize),
    /// Keep the `ceil((1−q)·N·(N−1))` largest off-diagonal entries overall
    /// (ties broken by row then column), i.e. everything above the q-th
    /// quantile of off-diagonal values by count.
    GlobalQuantile(f64),
}

/// Turn a connectivity estimate into a binary adjacency with self-loops.
pub fn binarize(conn: &ConnectivityMatrix, strategy: BinarizeStrategy) -> Result<Array2<u8>> {
    let n = conn.n_series();
    let values = conn.values();
    let mut adjacency = Array2::zeros((n, n));
    match strategy {
        BinarizeStrategy::TopKPerNode(k) => {
            if k == 0 || k > n - 1 {
                return Err(Error::InvalidConfig {
                    reason: format!("top-k per node needs 1 ≤ k ≤ {}, got {k}", n - 1),
                });
            }
            for i in 0..n {
                let mut entries: Vec<(f64, usize)> = (0..n)
                    .filter(|j| *j != i)
                    .map(|j| (values[[i, j]], j))
                    .collect();
                entries.sort_by(|a, b| {
                    b.0.partial_cmp(&a.0)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.1.cmp(&b.1))
                });
                for (_, j) in entries.into_iter().take(k) {
                    adjacency[[i, j]] = 1;
                }
            }
        }
        BinarizeStrategy::GlobalQuantile(q) => {
            if !(q.is_finite() && (0.0..1.0).contains(&q)) {
                return Err(Error::InvalidConfig {
                    reason: format!("quantile {q} must lie in [0, 1)"),
                });
            }
            let total = n * (n - 1);
            let keep = ((1.0 - q) * total as f64).ceil() as usize;
            let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        entries.push((values[[i, j]], i, j));
                    }
                }
            }
            entries.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
                    .then(a.2.cmp(&b.2))
            });
            for (_, i, j) in entries.into_iter().take(keep) {
                adjacency[[i, j]] = 1;
            }
        }
    }
    for i in 0..n {
        adjacency[[i, i]] = 1;
    }
    Ok(adjacency)
}

/// Full pipeline configuration. `grid` and `binarize` default (when `None`)
/// to [`AugmentationGrid::default_for`] and top-k with `k = round(0.2·N)`.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub grid: Option<AugmentationGrid>,
    pub binarize: Option<BinarizeStrategy>,
    /// Standardize each subject before the engine runs (default true).
    pub standardize: bool,
    pub ridge_epsilon: f64,
    pub sign_convention: SignConvention,
    pub reduced_model: ReducedModelKind,
    pub n_folds: usize,
    pub hidden_dim: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub leaky_slope: f64,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: None,
            binarize: None,
            standardize: true,
            ridge_epsilon: 1e-6,
            sign_convention: SignConvention::default(),
            reduced_model: ReducedModelKind::default(),
            n_folds: 5,
            hidden_dim: 16,
            n_heads: 4,
            n_layers: 2,
            leaky_slope: 0.2,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    fn resolved_grid(&self, n_series: usize) -> AugmentationGrid {
        self.grid
            .clone()
            .unwrap_or_else(|| AugmentationGrid::default_for(n_series))
    }

    fn resolved_binarize(&self, n_series: usize) -> BinarizeStrategy {
        self.binarize.unwrap_or_else(|| {
            let k = ((0.2 * n_series as f64).round() as usize).clamp(1, n_series - 1);
            BinarizeStrategy::TopKPerNode(k)
        })
    }
}

/// One subject's connectivity stack over the augmentation grid.
///
/// The cross-correlation baseline ignores (p, m), so its stack is the same
/// matrix repeated — kept that way deliberately so both methods hand the
/// classifier identical sample counts.
pub fn augment(
    subject: &TimeSeriesEnsemble,
    grid: &AugmentationGrid,
    method: FeatureMethod,
    config: &PipelineConfig,
) -> Result<Vec<ConnectivityMatrix>> {
    let prepared;
    let input = if config.standardize {
        prepared = subject.standardize();
        &prepared
    } else {
        subject
    };
    match method {
        FeatureMethod::Lsagc => grid
            .points()
            .map(|(p, m)| {
                let cfg = ArPredictorConfig {
                    p,
                    m,
                    ridge_epsilon: config.ridge_epsilon,
                    sign_convention: config.sign_convention,
                    reduced_model: config.reduced_model,
                };
                lsagc_connectivity(input, &cfg)
            })
            .collect(),
        FeatureMethod::CrossCorrelation => {
            let base = cross_correlation_matrix(input)?;
            Ok(std::iter::repeat_with(|| base.clone())
                .take(grid.len())
                .collect())
        }
    }
}

/// Graph samples for a whole cohort, tagged with subject provenance.
#[derive(Debug, Clone)]
pub struct LabeledGraphDataset {
    pub samples: Vec<GraphSample>,
    /// Subject index of each sample.
    pub subject_of_sample: Vec<usize>,
    /// Grid-point index of each sample (p-major, m-minor).
    pub augmentation_of_sample: Vec<usize>,
    pub subject_labels: Vec<u8>,
    /// Fold assignment per subject.
    pub fold_of_subject: Vec<usize>,
}

impl LabeledGraphDataset {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_subjects(&self) -> usize {
        self.subject_labels.len()
    }
}

/// Stratified fold assignment: within each class, subjects are shuffled by
/// the fold seed and dealt round-robin, so per-fold class counts differ by
/// at most one. Errors if any class has fewer subjects than folds.
pub fn make_folds(labels: &[u8], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::InvalidConfig {
            reason: format!("n_folds {n_folds} must be at least 2"),
        });
    }
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        by_class.entry(*label).or_default().push(i);
    }
    let mut folds = vec![0usize; labels.len()];
    for (label, mut members) in by_class {
        if members.len() < n_folds {
            return Err(Error::TooFewSubjects {
                label,
                count: members.len(),
                folds: n_folds,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_tagged(seed, "class", u64::from(label)));
        members.shuffle(&mut rng);
        for (pos, subject) in members.into_iter().enumerate() {
            folds[subject] = pos % n_folds;
        }
    }
    Ok(folds)
}

/// Build the graph dataset for one feature method.
pub fn build_dataset(
    cohort: &[(TimeSeriesEnsemble, u8)],
    method: FeatureMethod,
    config: &PipelineConfig,
    fold_of_subject: &[usize],
) -> Result<LabeledGraphDataset> {
    if cohort.is_empty() {
        return Err(Error::InvalidConfig {
            reason: "cohort is empty".into(),
        });
    }
    if fold_of_subject.len() != cohort.len() {
        return Err(Error::DimensionMismatch {
            what: "fold assignment length",
            expected: cohort.len(),
            actual: fold_of_subject.len(),
        });
    }
    let n_series = cohort[0].0.n_series();
    for (subject, _) in cohort {
        if subject.n_series() != n_series {
            return Err(Error::DimensionMismatch {
                what: "cohort series count",
                expected: n_series,
                actual: subject.n_series(),
            });
        }
    }
    let grid = config.resolved_grid(n_series);
    let strategy = config.resolved_binarize(n_series);

    let per_subject: Vec<Result<Vec<GraphSample>>> = par::map_indices(cohort.len(), |i| {
        let (subject, label) = &cohort[i];
        let stack = augment(subject, &grid, method, config)?;
        stack
            .iter()
            .map(|conn| {
                let adjacency = binarize(conn, strategy)?;
                GraphSample::new(adjacency, conn.values().clone(), *label)
            })
            .collect()
    });

    let mut samples = Vec::with_capacity(cohort.len() * grid.len());
    let mut subject_of_sample = Vec::with_capacity(samples.capacity());
    let mut augmentation_of_sample = Vec::with_capacity(samples.capacity());
    for (subject_idx, stack) in per_subject.into_iter().enumerate() {
        for (aug_idx, sample) in stack?.into_iter().enumerate() {
            samples.push(sample);
            subject_of_sample.push(subject_idx);
            augmentation_of_sample.push(aug_idx);
        }
    }
    Ok(LabeledGraphDataset {
        samples,
        subject_of_sample,
        augmentation_of_sample,
        subject_labels: cohort.iter().map(|(_, l)| *l).collect(),
        fold_of_subject: fold_of_subject.to_vec(),
    })
}

/// Subject-level and sample-level accuracies of one fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub lsagc: f64,
    pub correlation: f64,
    pub random: f64,
}

/// Per-method aggregate (mean or standard deviation across folds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodStats {
    pub lsagc: f64,
    pub correlation: f64,
    pub random: f64,
}

/// Cross-validation results at both granularities, plus dataset shape.
#[derive(Debug, Clone)]
pub struct CvReport {
    /// Majority-vote accuracy per fold, one subject one vote.
    pub subject_level: Vec<FoldOutcome>,
    pub subject_mean: MethodStats,
    pub subject_std: MethodStats,
    /// Accuracy over individual augmented samples.
    pub sample_level: Vec<FoldOutcome>,
    pub sample_mean: MethodStats,
    pub sample_std: MethodStats,
    pub n_subjects: usize,
    pub n_samples_per_method: usize,
    pub augmentations_per_subject: usize,
}

/// Mean and sample standard deviation (divisor `folds − 1`) across folds.
///
/// This is the single aggregation routine every report goes through;
/// re-deriving a report's summary from its per-fold rows must reproduce it
/// exactly.
pub fn aggregate_folds(outcomes: &[FoldOutcome]) -> Result<(MethodStats, MethodStats)> {
    if outcomes.len() < 2 {
        return Err(Error::InvalidConfig {
            reason: "aggregation needs at least two folds".into(),
        });
    }
    let n = outcomes.len() as f64;
    let mean = MethodStats {
        lsagc: outcomes.iter().map(|o| o.lsagc).sum::<f64>() / n,
        correlation: outcomes.iter().map(|o| o.correlation).sum::<f64>() / n,
        random: outcomes.iter().map(|o| o.random).sum::<f64>() / n,
    };
    let var = |pick: fn(&FoldOutcome) -> f64, center: f64| {
        outcomes
            .iter()
            .map(|o| (pick(o) - center) * (pick(o) - center))
            .sum::<f64>()
            / (n - 1.0)
    };
    let std = MethodStats {
        lsagc: var(|o| o.lsagc, mean.lsagc).sqrt(),
        correlation: var(|o| o.correlation, mean.correlation).sqrt(),
        random: var(|o| o.random, mean.random).sqrt(),
    };
    Ok((mean, std))
}

/// Majority vote over sample predictions; ties go to the positive class.
fn majority_vote(predictions: &[u8]) -> u8 {
    let positive = predictions.iter().filter(|p| **p == 1).count();
    u8::from(2 * positive >= predictions.len())
}

struct MethodEval {
    subject_acc: f64,
    sample_acc: f64,
}

fn eval_method(
    dataset: &LabeledGraphDataset,
    fold: usize,
    model_seed: u64,
    arch: &GatArchitecture,
    train_cfg: &TrainConfig,
) -> Result<MethodEval> {
    let mut train_samples = Vec::new();
    let mut test_indices = Vec::new();
    for (idx, sample) in dataset.samples.iter().enumerate() {
        let subject = dataset.subject_of_sample[idx];
        if dataset.fold_of_subject[subject] == fold {
            test_indices.push(idx);
        } else {
            train_samples.push(sample.clone());
        }
    }
    if train_samples.is_empty() || test_indices.is_empty() {
        return Err(Error::InvalidConfig {
            reason: format!("fold {fold} leaves an empty train or test split"),
        });
    }
    // Leakage guard: no subject may appear on both sides of the split.
    let train_subjects: std::collections::BTreeSet<usize> = dataset
        .samples
        .iter()
        .enumerate()
        .filter(|(idx, _)| dataset.fold_of_subject[dataset.subject_of_sample[*idx]] != fold)
        .map(|(idx, _)| dataset.subject_of_sample[idx])
        .collect();
    for idx in &test_indices {
        if train_subjects.contains(&dataset.subject_of_sample[*idx]) {
            return Err(Error::FoldLeakage {
                reason: format!(
                    "subject {} has samples in both splits of fold {fold}",
                    dataset.subject_of_sample[*idx]
                ),
            });
        }
    }

    let model = GatModel::init(arch, model_seed)?;
    let (trained, _) = train(model, &train_samples, None, train_cfg)?;

    let mut votes: BTreeMap<usize, Vec<u8>> = BTreeMap::new();
    let mut sample_correct = 0usize;
    for idx in &test_indices {
        let sample = &dataset.samples[*idx];
        let pass = trained.forward(sample)?;
        let pred = u8::from(pass.y_hat > 0.0);
        if pred == sample.label() {
            sample_correct += 1;
        }
        votes
            .entry(dataset.subject_of_sample[*idx])
            .or_default()
            .push(pred);
    }
    let mut subject_correct = 0usize;
    for (subject, preds) in &votes {
        if majority_vote(preds) == dataset.subject_labels[*subject] {
            subject_correct += 1;
        }
    }
    Ok(MethodEval {
        subject_acc: subject_correct as f64 / votes.len() as f64,
        sample_acc: sample_correct as f64 / test_indices.len() as f64,
    })
}

/// Run the full stratified cross-validation comparison.
///
/// For each fold and each connectivity method a fresh classifier is trained
/// from a fold-specific seed; the random baseline flips one seeded coin per
/// test subject. Everything derives from `config.seed`, so rerunning is
/// bit-reproducible.
pub fn run_cv(cohort: &[(TimeSeriesEnsemble, u8)], config: &PipelineConfig) -> Result<CvReport> {
    if cohort.is_empty() {
        return Err(Error::InvalidConfig {
            reason: "cohort is empty".into(),
        });
    }
    let labels: Vec<u8> = cohort.iter().map(|(_, l)| *l).collect();
    let folds = make_folds(&labels, config.n_folds, derive_tagged(config.seed, "folds", 0))?;

    let lsagc_data = build_dataset(cohort, FeatureMethod::Lsagc, config, &folds)?;
    let corr_data = build_dataset(cohort, FeatureMethod::CrossCorrelation, config, &folds)?;

    let n_series = cohort[0].0.n_series();
    let arch = GatArchitecture {
        input_dim: n_series,
        hidden_dim: config.hidden_dim,
        n_layers: config.n_layers,
        n_heads: config.n_heads,
        leaky_slope: config.leaky_slope,
    };

    let mut subject_level = Vec::with_capacity(config.n_folds);
    let mut sample_level = Vec::with_capacity(config.n_folds);
    for fold in 0..config.n_folds {
        let lsagc_eval = eval_method(
            &lsagc_data,
            fold,
            derive_tagged(config.seed, "model-lsagc", fold as u64),
            &arch,
            &config.train,
        )?;
        let corr_eval = eval_method(
            &corr_data,
            fold,
            derive_tagged(config.seed, "model-corr", fold as u64),
            &arch,
            &config.train,
        )?;

        // Coin-flip baseline: one draw per test subject, in subject order.
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_tagged(config.seed, "coin", fold as u64));
        let mut subj_correct = 0usize;
        let mut subj_total = 0usize;
        let mut samp_correct = 0usize;
        let mut samp_total = 0usize;
        let per_subject = lsagc_data.samples.len() / lsagc_data.n_subjects();
        for (subject, label) in labels.iter().enumerate() {
            if folds[subject] != fold {
                continue;
            }
            let guess = u8::from(rng.random::<bool>());
            subj_total += 1;
            if guess == *label {
                subj_correct += 1;
                samp_correct += per_subject;
            }
            samp_total += per_subject;
        }
        let random_subject = subj_correct as f64 / subj_total as f64;
        let random_sample = samp_correct as f64 / samp_total as f64;

        subject_level.push(FoldOutcome {
            fold,
            lsagc: lsagc_eval.subject_acc,
            correlation: corr_eval.subject_acc,
            random: random_subject,
        });
        sample_level.push(FoldOutcome {
            fold,
            lsagc: lsagc_eval.sample_acc,
            correlation: corr_eval.sample_acc,
            random: random_sample,
        });
    }

    let (subject_mean, subject_std) = aggregate_folds(&subject_level)?;
    let (sample_mean, sample_std) = aggregate_folds(&sample_level)?;
    let augmentations = config.resolved_grid(n_series).len();
    Ok(CvReport {
        subject_level,
        subject_mean,
        subject_std,
        sample_level,
        sample_mean,
        sample_std,
        n_subjects: cohort.len(),
        n_samples_per_method: lsagc_data.n_samples(),
        augmentations_per_subject: augmentations,
    })
}
