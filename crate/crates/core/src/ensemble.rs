//! Multivariate time-series container.
//!
//! An ensemble holds N series of T samples as an N×T matrix (rows are
//! series, columns are time points) plus per-series names and an optional
//! sample period. Everything downstream — the connectivity engine, the
//! synthetic generator, the classification pipeline — consumes this type.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// N series × T samples, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesEnsemble {
    data: Array2<f64>,
    names: Vec<String>,
    sample_period: Option<f64>,
    constant_rows: Vec<usize>,
    standardized: bool,
}

impl TimeSeriesEnsemble {
    /// Build an ensemble from an N×T matrix.
    ///
    /// Requires at least two series and two samples, one name per row, all
    /// entries finite, and a finite positive sample period when given.
    pub fn new(data: Array2<f64>, names: Vec<String>, sample_period: Option<f64>) -> Result<Self> {
        let (n, t) = data.dim();
        if n < 2 {
            return Err(Error::TooFewSeries { n });
        }
        if t < 2 {
            return Err(Error::TooFewSamples {
                t,
                min: 2,
                context: "ensemble construction",
            });
        }
        if names.len() != n {
            return Err(Error::NameCountMismatch {
                names: names.len(),
                rows: n,
            });
        }
        if let Some(period) = sample_period {
            if !(period.is_finite() && period > 0.0) {
                return Err(Error::InvalidSamplePeriod { value: period });
            }
        }
        for ((row, col), v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    col,
                    context: "ensemble data",
                });
            }
        }
        Ok(Self {
            data,
            names,
            sample_period,
            constant_rows: Vec::new(),
            standardized: false,
        })
    }

    /// Build an ensemble with generated names `x00`, `x01`, …
    pub fn with_default_names(data: Array2<f64>, sample_period: Option<f64>) -> Result<Self> {
        let names = default_names(data.nrows());
        Self::new(data, names, sample_period)
    }

    /// Number of series (rows).
    pub fn n_series(&self) -> usize {
        self.data.nrows()
    }

    /// Number of time samples (columns).
    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// The N×T data matrix.
    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    /// A view of the data, convenient for slicing.
    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    /// Per-series names, one per row.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Sampling interval between columns, if known.
    pub fn sample_period(&self) -> Option<f64> {
        self.sample_period
    }

    /// Rows found constant during standardization (empty before it runs).
    pub fn constant_rows(&self) -> &[usize] {
        &self.constant_rows
    }

    /// Whether this ensemble is the output of [`standardize`](Self::standardize).
    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Return a copy with every row shifted to zero mean and scaled to unit
    /// sample standard deviation (divisor T−1).
    ///
    /// A row whose entries are all equal carries no signal and cannot be
    /// scaled; it is set to all zeros and recorded in
    /// [`constant_rows`](Self::constant_rows) instead of producing NaNs.
    /// Applying `standardize` twice gives the same result as applying it
    /// once (up to roundoff).
    pub fn standardize(&self) -> Self {
        let (n, t) = self.data.dim();
        let mut out = self.data.clone();
        let mut constant_rows = Vec::new();
        for i in 0..n {
            let mut row = out.row_mut(i);
            let first = row[0];
            if row.iter().all(|v| *v == first) {
                row.fill(0.0);
                constant_rows.push(i);
                continue;
            }
            let mean = row.sum() / t as f64;
            let ss: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (t as f64 - 1.0)).sqrt();
            row.mapv_inplace(|v| (v - mean) / sd);
        }
        Self {
            data: out,
            names: self.names.clone(),
            sample_period: self.sample_period,
            constant_rows,
            standardized: true,
        }
    }

    /// Copy of this ensemble with row `index` removed.
    ///
    /// Used by the reduced (source-withheld) model in the connectivity
    /// engine. Keeps names aligned; constant-row flags are re-derived on the
    /// next standardization rather than remapped.
    pub fn without_series(&self, index: usize) -> Result<Self> {
        let n = self.n_series();
        if index >= n {
            return Err(Error::SeriesIndex { index, n });
        }
        if n <= 2 {
            return Err(Error::TooFewSeries { n: n - 1 });
        }
        let rows: Vec<usize> = (0..n).filter(|r| *r != index).collect();
        let data = self.data.select(ndarray::Axis(0), &rows);
        let names = rows.iter().map(|r| self.names[*r].clone()).collect();
        Ok(Self {
            data,
            names,
            sample_period: self.sample_period,
            constant_rows: Vec::new(),
            standardized: self.standardized,
        })
    }
}

/// Generated series names `x00`, `x01`, … with enough digits for `n` rows.
pub fn default_names(n: usize) -> Vec<String> {
    let width = if n <= 1 {
        2
    } else {
        ((n - 1).to_string().len()).max(2)
    };
    (0..n).map(|i| format!("x{i:0width$}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn make(data: Array2<f64>) -> TimeSeriesEnsemble {
        TimeSeriesEnsemble::with_default_names(data, None).unwrap()
    }

    #[test]
    fn standardize_matches_hand_values() {
        let e = make(array![[1.0, 2.0, 3.0], [0.0, 4.0, 2.0]]);
        let s = e.standardize();
        let row0: Vec<f64> = s.data().row(0).to_vec();
        assert!((row0[0] - -1.0).abs() < 1e-12);
        assert!(row0[1].abs() < 1e-12);
        assert!((row0[2] - 1.0).abs() < 1e-12);
        assert!(s.is_standardized());
    }

    #[test]
    fn two_sample_row_standardizes_to_inv_sqrt_two() {
        let e = make(array![[0.0, 4.0], [1.0, 3.0]]);
        let s = e.standardize();
        let v = 1.0 / 2f64.sqrt();
        assert!((s.data()[[0, 0]] + v).abs() < 1e-12);
        assert!((s.data()[[0, 1]] - v).abs() < 1e-12);
    }

    #[test]
    fn constant_row_becomes_zero_and_is_flagged() {
        let e = make(array![[5.0, 5.0, 5.0], [1.0, 2.0, 4.0]]);
        let s = e.standardize();
        assert!(s.data().row(0).iter().all(|v| *v == 0.0));
        assert_eq!(s.constant_rows(), &[0]);
    }

    #[test]
    fn construction_rejects_bad_input() {
        let nan = array![[f64::NAN, 1.0], [0.0, 1.0]];
        assert!(matches!(
            TimeSeriesEnsemble::with_default_names(nan, None),
            Err(Error::NonFinite { row: 0, col: 0, .. })
        ));
        let one_row = Array2::zeros((1, 5));
        assert!(matches!(
            TimeSeriesEnsemble::with_default_names(one_row, None),
            Err(Error::TooFewSeries { n: 1 })
        ));
        let short = Array2::zeros((3, 1));
        assert!(matches!(
            TimeSeriesEnsemble::with_default_names(short, None),
            Err(Error::TooFewSamples { t: 1, .. })
        ));
        let named = TimeSeriesEnsemble::new(Array2::zeros((2, 4)), vec!["a".into()], None);
        assert!(matches!(named, Err(Error::NameCountMismatch { .. })));
        let period = TimeSeriesEnsemble::with_default_names(Array2::zeros((2, 4)), Some(-1.0));
        assert!(matches!(period, Err(Error::InvalidSamplePeriod { .. })));
    }

    #[test]
    fn without_series_drops_the_right_row() {
        let e = make(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let d = e.without_series(1).unwrap();
        assert_eq!(d.n_series(), 2);
        assert_eq!(d.data()[[1, 0]], 5.0);
        assert_eq!(d.names(), &["x00", "x02"]);
        assert!(e.without_series(3).is_err());
    }

    #[test]
    fn default_names_pad_to_width() {
        assert_eq!(default_names(3), vec!["x00", "x01", "x02"]);
        let many = default_names(120);
        assert_eq!(many[0], "x000");
        assert_eq!(many[119], "x119");
    }
}
