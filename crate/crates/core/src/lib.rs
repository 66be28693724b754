//! Directed connectivity from multivariate time series, and subject
//! classification on the resulting graphs.
//!
//! The estimator measures how much a source series improves the prediction
//! of every other series after the whole ensemble has been compressed to a
//! handful of principal components — an augmented, dimension-reduced take
//! on predictive-causality analysis that stays workable when the number of
//! series is large relative to the number of samples. On top of it sits a
//! small graph attention classifier (hand-rolled forward and backward
//! passes, Adam) that tells cohorts apart from their connectivity patterns,
//! plus a synthetic vector-autoregression benchmark with known ground truth
//! for validating both.
//!
//! Heavy loops (per-source model fits, per-subject simulation, per-sample
//! gradients) are data-parallel via rayon when the default `parallel`
//! feature is on and plain sequential otherwise; results are bit-identical
//! either way because every reduction happens in index order.

pub mod ensemble;
pub mod error;
pub mod gat;
pub mod granger;
pub mod par;
pub mod pca;
pub mod pipeline;
pub mod seeding;
pub mod synth;
pub mod train;

mod linalg;

pub use ensemble::TimeSeriesEnsemble;
pub use error::{Error, Result};
pub use gat::{GatArchitecture, GatModel, GraphSample};
pub use granger::{
    cross_correlation_matrix, lsagc_connectivity, ArPredictorConfig, ConnectivityMatrix,
    ConnectivityMethod, ReducedModelKind, SignConvention, LOG_RATIO_CLAMP,
};
pub use pca::PcaModel;
pub use pipeline::{
    aggregate_folds, binarize, run_cv, AugmentationGrid, BinarizeStrategy, CvReport,
    FeatureMethod, FoldOutcome, MethodStats, PipelineConfig,
};
pub use synth::{
    generate_two_class_cohort, generate_var, score_recovery, CohortData, CohortSpec, GroundTruth,
    RecoveryScore, Topology, VarNetworkSpec,
};
pub use train::{train, TrainConfig, TrainTrace};
