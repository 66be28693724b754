//! Directed connectivity via large-scale augmented Granger causality.
//!
//! For each candidate source series `s`, two lag-`m` affine predictors of
//! the ensemble's principal components are fitted: one on the components
//! augmented with the raw source series, one with the source withheld.
//! Predictions are mapped back to series space through the projection's
//! pseudoinverse, and the influence of `s` on target `t` is the log ratio
//! of the two resulting prediction-error variances. Working in a `p`-dim
//! component space instead of the full N-dim ensemble is what keeps the
//! per-source fits small when N is large.
//!
//! The engine expects standardized input (see
//! [`TimeSeriesEnsemble::standardize`]); it does not standardize on its own.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::ensemble::TimeSeriesEnsemble;
use crate::error::{Error, Result};
use crate::par;
use crate::pca::PcaModel;

/// Saturation bound for the log-ratio index: `ln(1e12)`.
pub const LOG_RATIO_CLAMP: f64 = 27.631021115928547;

/// Orientation of the log variance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    /// `ln(var_without / var_with)`: a source that improves prediction of a
    /// target gets a positive entry. The default.
    #[default]
    ReducedOverFull,
    /// `ln(var_with / var_without)`: the exact mirror of the above, matching
    /// the index as originally printed (useful for comparing against
    /// published values).
    FullOverReduced,
}

/// How the source-withheld model is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReducedModelKind {
    /// Drop the source series from the ensemble and its column from the
    /// projection, recompute the reduced pseudoinverse, and refit. The
    /// default.
    #[default]
    DropSourceColumn,
    /// Keep the full projection and simply fit on the components without
    /// the augmentation row. Cheaper (the reduced fit is shared by all
    /// sources) but less faithful to "the source was never observed".
    FullProjection,
}

/// Tuning for the per-source autoregressive fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArPredictorConfig {
    /// Number of principal components retained.
    pub p: usize,
    /// Autoregressive model order (number of lags).
    pub m: usize,
    /// Tikhonov damping, relative to the mean diagonal of the lag Gram
    /// matrix, applied in every fit.
    pub ridge_epsilon: f64,
    pub sign_convention: SignConvention,
    pub reduced_model: ReducedModelKind,
}

impl ArPredictorConfig {
    /// Config with the given dimensions and default ridge/sign/reduced-model
    /// choices.
    pub fn new(p: usize, m: usize) -> Self {
        Self {
            p,
            m,
            ridge_epsilon: 1e-6,
            sign_convention: SignConvention::default(),
            reduced_model: ReducedModelKind::default(),
        }
    }

    /// Check this config against an ensemble length.
    ///
    /// The augmented fit estimates `m·(p+1)` coefficients per component from
    /// `t_samples − m` lagged samples, so `t_samples − m > m·(p+1) + 1` must
    /// hold (which implies the weaker `m·(p+1) + 1 < t_samples`).
    pub fn validate(&self, t_samples: usize) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidConfig {
                reason: "p (component count) must be at least 1".into(),
            });
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig {
                reason: "m (lag order) must be at least 1".into(),
            });
        }
        if !(self.ridge_epsilon.is_finite() && self.ridge_epsilon >= 0.0) {
            return Err(Error::InvalidConfig {
                reason: format!("ridge_epsilon {} must be finite and >= 0", self.ridge_epsilon),
            });
        }
        let needed = self.m * (self.p + 1) + 1;
        if t_samples.saturating_sub(self.m) <= needed {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "t_samples − m must exceed m·(p+1) + 1: got {} − {} = {} ≤ {}",
                    t_samples,
                    self.m,
                    t_samples.saturating_sub(self.m),
                    needed
                ),
            });
        }
        Ok(())
    }
}

/// An affine multi-output predictor `ŷ = A·x + b`.
#[derive(Debug, Clone)]
pub struct AffineModel {
    a: Array2<f64>,
    b: Array1<f64>,
}

impl AffineModel {
    /// Coefficient matrix, one row per output.
    pub fn coefficients(&self) -> &Array2<f64> {
        &self.a
    }

    /// Intercept, one entry per output.
    pub fn intercept(&self) -> &Array1<f64> {
        &self.b
    }

    /// Apply the model to a d×S matrix of inputs, one column per sample.
    pub fn predict(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if inputs.nrows() != self.a.ncols() {
            return Err(Error::DimensionMismatch {
                what: "predictor input rows",
                expected: self.a.ncols(),
                actual: inputs.nrows(),
            });
        }
        let mut out = self.a.dot(&inputs);
        for mut col in out.axis_iter_mut(Axis(1)) {
            col += &self.b;
        }
        Ok(out)
    }
}

/// Prediction-error variances for one candidate source.
#[derive(Debug, Clone)]
pub struct PairwiseErrorVariances {
    /// The source series these variances refer to.
    pub source: usize,
    /// Error variance per target with the source included; entry `source`
    /// is unused and set to NaN.
    pub var_with: Array1<f64>,
    /// Error variance per target with the source withheld; entry `source`
    /// is unused and set to NaN.
    pub var_without: Array1<f64>,
}

/// How a [`ConnectivityMatrix`] was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ConnectivityMethod {
    Lsagc(ArPredictorConfig),
    CrossCorrelation,
}

/// An N×N directed connectivity estimate; entry `(s, t)` is the influence
/// of series `s` on series `t`. The diagonal is exactly zero.
#[derive(Debug, Clone)]
pub struct ConnectivityMatrix {
    values: Array2<f64>,
    method: ConnectivityMethod,
    names: Vec<String>,
    saturated: Vec<(usize, usize)>,
    constant_series: Vec<usize>,
}

impl ConnectivityMatrix {
    /// Assemble a matrix from raw parts (tests build estimates directly).
    #[cfg(test)]
    pub(crate) fn from_parts(
        values: Array2<f64>,
        method: ConnectivityMethod,
        names: Vec<String>,
        saturated: Vec<(usize, usize)>,
        constant_series: Vec<usize>,
    ) -> Self {
        Self {
            values,
            method,
            names,
            saturated,
            constant_series,
        }
    }

    /// The N×N value matrix.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Number of series.
    pub fn n_series(&self) -> usize {
        self.values.nrows()
    }

    /// How these values were computed.
    pub fn method(&self) -> &ConnectivityMethod {
        &self.method
    }

    /// Series names carried over from the input ensemble.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Entries whose log ratio hit the saturation clamp, in (source, target)
    /// row-major order.
    pub fn saturated(&self) -> &[(usize, usize)] {
        &self.saturated
    }

    /// Series that were constant in the input (their entries carry no
    /// information).
    pub fn constant_series(&self) -> &[usize] {
        &self.constant_series
    }
}

/// Stack the `m` most recent past values of every row of `y` at (1-based)
/// time `t` into one vector: `[y(t−1); y(t−2); …; y(t−m)]`.
///
/// Valid for `m + 1 ≤ t ≤ T`. With `y = [[1, 2, 3]]`, `m = 2`, `t = 3` the
/// result is `[2, 1]`.
pub fn build_lag_vector(y: ArrayView2<'_, f64>, t: usize, m: usize) -> Result<Array1<f64>> {
    let rows = y.nrows();
    let t_total = y.ncols();
    if m == 0 {
        return Err(Error::InvalidConfig {
            reason: "lag order m must be at least 1".into(),
        });
    }
    if t < m + 1 || t > t_total {
        return Err(Error::TimeIndex {
            t,
            min: m + 1,
            max: t_total,
        });
    }
    let mut out = Array1::zeros(m * rows);
    for lag in 1..=m {
        let col = y.column(t - 1 - lag); // t is 1-based; column t−lag
        for r in 0..rows {
            out[(lag - 1) * rows + r] = col[r];
        }
    }
    Ok(out)
}

/// All lag vectors for `t = m+1 ..= T` as columns of a `(m·rows) × (T−m)`
/// matrix, paired column-for-column with targets `y[:, m..]`.
fn build_lag_matrix(y: ArrayView2<'_, f64>, m: usize) -> Array2<f64> {
    let rows = y.nrows();
    let t_total = y.ncols();
    let samples = t_total - m;
    let mut out = Array2::zeros((m * rows, samples));
    for k in 0..samples {
        let current = m + k; // 0-based index of the sample being predicted
        for lag in 1..=m {
            for r in 0..rows {
                out[[(lag - 1) * rows + r, k]] = y[[r, current - lag]];
            }
        }
    }
    out
}

enum RidgeMode {
    Absolute(f64),
    RelativeToGramTrace(f64),
}

fn fit_affine_inner(
    targets: ArrayView2<'_, f64>,
    lags: ArrayView2<'_, f64>,
    ridge: RidgeMode,
) -> Result<AffineModel> {
    let d = lags.nrows();
    let samples = lags.ncols();
    if targets.ncols() != samples {
        return Err(Error::DimensionMismatch {
            what: "fit sample count",
            expected: samples,
            actual: targets.ncols(),
        });
    }
    if samples <= d + 1 {
        return Err(Error::Underdetermined {
            samples,
            regressors: d,
        });
    }

    // Center both sides so the intercept absorbs the means exactly and the
    // ridge term never penalizes the intercept.
    let mean_l = lags.mean_axis(Axis(1)).expect("non-empty lags");
    let mean_t = targets.mean_axis(Axis(1)).expect("non-empty targets");
    let mut lc = lags.to_owned();
    for mut col in lc.axis_iter_mut(Axis(1)) {
        col -= &mean_l;
    }
    let mut tc = targets.to_owned();
    for mut col in tc.axis_iter_mut(Axis(1)) {
        col -= &mean_t;
    }

    let gram = lc.dot(&lc.t());
    let lambda = match ridge {
        RidgeMode::Absolute(e) => e,
        RidgeMode::RelativeToGramTrace(e) => {
            e * gram.diag().sum() / d as f64
        }
    };
    let rhs = lc.dot(&tc.t()); // d × targets
    let a_t = crate::linalg::ridge_cholesky_solve(&gram, lambda, &rhs)?;
    let a = a_t.t().to_owned();
    let b = &mean_t - &a.dot(&mean_l);
    Ok(AffineModel { a, b })
}

/// Least-squares fit of `targets ≈ A·lags + b`, one column per sample, with
/// an absolute Tikhonov term `ridge_epsilon` added to the Gram diagonal.
///
/// Centering makes the intercept exact: the residual mean of every output
/// row is zero up to roundoff.
pub fn fit_affine(
    targets: ArrayView2<'_, f64>,
    lags: ArrayView2<'_, f64>,
    ridge_epsilon: f64,
) -> Result<AffineModel> {
    fit_affine_inner(targets, lags, RidgeMode::Absolute(ridge_epsilon))
}

/// Sample variance (divisor `len − 1`) of one residual row.
fn sample_variance(row: ndarray::ArrayView1<'_, f64>) -> f64 {
    let n = row.len();
    debug_assert!(n >= 2);
    let mean = row.sum() / n as f64;
    row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)
}

/// `ln(num/den)` clamped to ±[`LOG_RATIO_CLAMP`]; the flag reports whether
/// clamping (or a degenerate zero/zero) occurred.
fn clamped_log_ratio(num: f64, den: f64) -> (f64, bool) {
    if num == 0.0 && den == 0.0 {
        return (0.0, true);
    }
    if num == 0.0 {
        return (-LOG_RATIO_CLAMP, true);
    }
    if den == 0.0 {
        return (LOG_RATIO_CLAMP, true);
    }
    let f = (num / den).ln();
    if f > LOG_RATIO_CLAMP {
        (LOG_RATIO_CLAMP, true)
    } else if f < -LOG_RATIO_CLAMP {
        (-LOG_RATIO_CLAMP, true)
    } else {
        (f, false)
    }
}

/// Per-target error variances of the augmented (source-included) model.
fn variances_with_source(
    x: &TimeSeriesEnsemble,
    pca: &PcaModel,
    z_full: &Array2<f64>,
    source: usize,
    cfg: &ArPredictorConfig,
) -> Result<Array1<f64>> {
    let p = pca.n_components();
    let t_total = x.n_samples();
    let mut augmented = Array2::zeros((p + 1, t_total));
    augmented.slice_mut(s![..p, ..]).assign(z_full);
    augmented.row_mut(p).assign(&x.data().row(source));

    let lags = build_lag_matrix(augmented.view(), cfg.m);
    let targets = z_full.slice(s![.., cfg.m..]);
    let model = fit_affine_inner(
        targets,
        lags.view(),
        RidgeMode::RelativeToGramTrace(cfg.ridge_epsilon),
    )?;
    let z_hat = model.predict(lags.view())?;
    let x_hat = pca.reconstruct(z_hat.view())?;
    let actual = x.data().slice(s![.., cfg.m..]);
    let resid = &actual - &x_hat;
    Ok(Array1::from_iter(
        resid.axis_iter(Axis(0)).map(sample_variance),
    ))
}

/// Per-target error variances with the source withheld (the reduced model),
/// mapped back onto original series indices; entry `source` is NaN.
fn variances_without_source(
    x: &TimeSeriesEnsemble,
    pca: &PcaModel,
    source: usize,
    cfg: &ArPredictorConfig,
) -> Result<Array1<f64>> {
    let n = x.n_series();
    let keep: Vec<usize> = (0..n).filter(|r| *r != source).collect();
    let x_reduced = x.data().select(Axis(0), &keep);
    let reduced = pca.drop_source(source)?;
    let z = reduced.project(x_reduced.view())?;
    let lags = build_lag_matrix(z.view(), cfg.m);
    let targets = z.slice(s![.., cfg.m..]);
    let model = fit_affine_inner(
        targets,
        lags.view(),
        RidgeMode::RelativeToGramTrace(cfg.ridge_epsilon),
    )?;
    let z_hat = model.predict(lags.view())?;
    let x_hat = reduced.reconstruct(z_hat.view())?;
    let actual = x_reduced.slice(s![.., cfg.m..]);
    let resid = &actual - &x_hat;
    let mut out = Array1::from_elem(n, f64::NAN);
    for (i, orig) in keep.iter().enumerate() {
        out[*orig] = sample_variance(resid.row(i));
    }
    Ok(out)
}

/// Error variances of the un-augmented full-projection model, shared by all
/// sources under [`ReducedModelKind::FullProjection`].
fn variances_full_projection(
    x: &TimeSeriesEnsemble,
    pca: &PcaModel,
    z_full: &Array2<f64>,
    cfg: &ArPredictorConfig,
) -> Result<Array1<f64>> {
    let lags = build_lag_matrix(z_full.view(), cfg.m);
    let targets = z_full.slice(s![.., cfg.m..]);
    let model = fit_affine_inner(
        targets,
        lags.view(),
        RidgeMode::RelativeToGramTrace(cfg.ridge_epsilon),
    )?;
    let z_hat = model.predict(lags.view())?;
    let x_hat = pca.reconstruct(z_hat.view())?;
    let actual = x.data().slice(s![.., cfg.m..]);
    let resid = &actual - &x_hat;
    Ok(Array1::from_iter(
        resid.axis_iter(Axis(0)).map(sample_variance),
    ))
}

/// Error variances for one candidate source, with and without the source.
///
/// Fits its own projection; when sweeping every source prefer
/// [`lsagc_connectivity`], which shares one fit across sources.
pub fn lsagc_pairwise_errors(
    x: &TimeSeriesEnsemble,
    source: usize,
    cfg: &ArPredictorConfig,
) -> Result<PairwiseErrorVariances> {
    let n = x.n_series();
    if source >= n {
        return Err(Error::SeriesIndex { index: source, n });
    }
    cfg.validate(x.n_samples())?;
    let pca = PcaModel::fit(x, cfg.p)?;
    let z_full = pca.project(x.view())?;
    let mut var_with = variances_with_source(x, &pca, &z_full, source, cfg)?;
    let mut var_without = match cfg.reduced_model {
        ReducedModelKind::DropSourceColumn => variances_without_source(x, &pca, source, cfg)?,
        ReducedModelKind::FullProjection => variances_full_projection(x, &pca, &z_full, cfg)?,
    };
    var_with[source] = f64::NAN;
    var_without[source] = f64::NAN;
    Ok(PairwiseErrorVariances {
        source,
        var_with,
        var_without,
    })
}

/// Full N×N directed connectivity of an ensemble.
///
/// One projection is fitted and shared; each source's row is then computed
/// independently (in parallel when the `parallel` feature is on — results
/// are identical either way).
pub fn lsagc_connectivity(
    x: &TimeSeriesEnsemble,
    cfg: &ArPredictorConfig,
) -> Result<ConnectivityMatrix> {
    cfg.validate(x.n_samples())?;
    let n = x.n_series();
    let pca = PcaModel::fit(x, cfg.p)?;
    let z_full = pca.project(x.view())?;
    let shared_without = match cfg.reduced_model {
        ReducedModelKind::FullProjection => {
            Some(variances_full_projection(x, &pca, &z_full, cfg)?)
        }
        ReducedModelKind::DropSourceColumn => None,
    };

    let rows: Vec<Result<(Array1<f64>, Vec<(usize, usize)>)>> =
        par::map_indices(n, |source| {
            let var_with = variances_with_source(x, &pca, &z_full, source, cfg)?;
            let var_without = match &shared_without {
                Some(shared) => shared.clone(),
                None => variances_without_source(x, &pca, source, cfg)?,
            };
            let mut row = Array1::zeros(n);
            let mut saturated = Vec::new();
            for target in 0..n {
                if target == source {
                    continue;
                }
                // One ratio, negated for the mirror convention: computing
                // ln(a/b) and ln(b/a) separately would differ by an ulp or
                // two, and the two conventions must be exact negations.
                let (f, clipped) = clamped_log_ratio(var_without[target], var_with[target]);
                row[target] = match cfg.sign_convention {
                    SignConvention::ReducedOverFull => f,
                    SignConvention::FullOverReduced => -f,
                };
                if clipped {
                    saturated.push((source, target));
                }
            }
            Ok((row, saturated))
        });

    let mut values = Array2::zeros((n, n));
    let mut saturated = Vec::new();
    for (source, item) in rows.into_iter().enumerate() {
        let (row, mut sat) = item?;
        values.row_mut(source).assign(&row);
        saturated.append(&mut sat);
    }
    Ok(ConnectivityMatrix {
        values,
        method: ConnectivityMethod::Lsagc(*cfg),
        names: x.names().to_vec(),
        saturated,
        constant_series: x.constant_rows().to_vec(),
    })
}

/// Symmetric Pearson cross-correlation, the baseline connectivity measure.
///
/// Entry `(i, j)` is the correlation of series `i` and `j` over the full
/// record, clamped into [−1, 1]; the diagonal is zero. Constant series get
/// zero entries and are flagged.
pub fn cross_correlation_matrix(x: &TimeSeriesEnsemble) -> Result<ConnectivityMatrix> {
    let n = x.n_series();
    let t = x.n_samples();
    let data = x.data();

    let mut means = Vec::with_capacity(n);
    let mut sds = Vec::with_capacity(n);
    let mut constant_series = Vec::new();
    for i in 0..n {
        let row = data.row(i);
        let mean = row.sum() / t as f64;
        let ss: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (t as f64 - 1.0)).sqrt();
        if sd == 0.0 {
            constant_series.push(i);
        }
        means.push(mean);
        sds.push(sd);
    }

    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if sds[i] == 0.0 || sds[j] == 0.0 {
                continue;
            }
            let a = data.row(i);
            let b = data.row(j);
            let mut cov = 0.0;
            for k in 0..t {
                cov += (a[k] - means[i]) * (b[k] - means[j]);
            }
            let r = (cov / (t as f64 - 1.0) / (sds[i] * sds[j])).clamp(-1.0, 1.0);
            values[[i, j]] = r;
            values[[j, i]] = r;
        }
    }
    Ok(ConnectivityMatrix {
        values,
        method: ConnectivityMethod::CrossCorrelation,
        names: x.names().to_vec(),
        saturated: Vec::new(),
        constant_series,
    })
}
