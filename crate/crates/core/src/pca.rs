//! Principal-component projection.
//!
//! The connectivity engine works in a compressed space: an ensemble of N
//! series is projected onto its top `p` principal directions, the
//! autoregressive model is fitted there, and predictions are mapped back to
//! series space through the Moore–Penrose pseudoinverse of the projection.
//!
//! Conventions, fixed so results are reproducible across platforms:
//! - the covariance is `X·Xᵀ/(T−1)` of the data *as given* (callers are
//!   expected to standardize first; no re-centering happens here);
//! - eigenvalues are sorted in non-increasing order, ties broken by the
//!   original eigenvector index;
//! - each component row is oriented so its largest-magnitude entry is
//!   positive (ties: lowest index wins), removing the sign ambiguity of
//!   eigenvectors.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::ensemble::TimeSeriesEnsemble;
use crate::error::{Error, Result};
use crate::linalg;

/// Fitted projection onto `p` principal directions.
#[derive(Debug, Clone)]
pub struct PcaModel {
    w: Array2<f64>,
    w_pinv: Array2<f64>,
    explained_variance: Array1<f64>,
    rank_deficient: bool,
}

/// A [`PcaModel`] with one input series removed.
///
/// Dropping series `s` removes column `s` from the coefficient matrix; the
/// pseudoinverse is recomputed from scratch (the reduced rows are generally
/// no longer orthonormal, so the transpose shortcut would be wrong).
#[derive(Debug, Clone)]
pub struct ReducedPcaView {
    w_reduced: Array2<f64>,
    w_reduced_pinv: Array2<f64>,
    dropped: usize,
}

impl PcaModel {
    /// Fit the top-`p` projection of an ensemble.
    ///
    /// `p` must lie in `1..=N`. The input should already be standardized;
    /// constant (all-zero) rows simply contribute nothing to the covariance.
    pub fn fit(ensemble: &TimeSeriesEnsemble, p: usize) -> Result<Self> {
        let n = ensemble.n_series();
        let t = ensemble.n_samples();
        if p == 0 || p > n {
            return Err(Error::ComponentCount { p, max: n });
        }
        let x = ensemble.data();
        let cov = x.dot(&x.t()) / (t as f64 - 1.0);
        let (eigvals, eigvecs) = linalg::symmetric_eigen_desc(&cov);

        let mut w = eigvecs.slice(ndarray::s![..p, ..]).to_owned();
        for mut row in w.axis_iter_mut(Axis(0)) {
            let mut pivot = 0;
            let mut best = f64::NEG_INFINITY;
            for (j, v) in row.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    pivot = j;
                }
            }
            if row[pivot] < 0.0 {
                row.mapv_inplace(|v| -v);
            }
        }

        let explained_variance = Array1::from_iter(eigvals.iter().take(p).map(|v| v.max(0.0)));
        let leading = explained_variance[0];
        let trailing = explained_variance[p - 1];
        let rank_deficient = leading <= 0.0 || trailing <= linalg::RANK_TOL * leading;

        let (w_pinv, _) = linalg::pseudoinverse(w.view())?;
        Ok(Self {
            w,
            w_pinv,
            explained_variance,
            rank_deficient,
        })
    }

    /// Number of retained components `p`.
    pub fn n_components(&self) -> usize {
        self.w.nrows()
    }

    /// Number of input series `N`.
    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    /// The p×N coefficient matrix; rows are orthonormal.
    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    /// The N×p Moore–Penrose pseudoinverse of the coefficients.
    pub fn w_pinv(&self) -> &Array2<f64> {
        &self.w_pinv
    }

    /// Variance captured by each retained component, non-increasing.
    pub fn explained_variance(&self) -> &Array1<f64> {
        &self.explained_variance
    }

    /// True when the retained spectrum bottoms out at (numerically) zero —
    /// a warning that `p` exceeds the effective rank of the data.
    pub fn is_rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    /// Project an N×T matrix into component space: `Z = W·X` (p×T).
    pub fn project(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "projection input rows",
                expected: self.input_dim(),
                actual: x.nrows(),
            });
        }
        Ok(self.w.dot(&x))
    }

    /// Map a p×T component matrix back to series space: `X̂ = W⁺·Z` (N×T).
    pub fn reconstruct(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z.nrows() != self.n_components() {
            return Err(Error::DimensionMismatch {
                what: "reconstruction input rows",
                expected: self.n_components(),
                actual: z.nrows(),
            });
        }
        Ok(self.w_pinv.dot(&z))
    }

    /// Remove input series `s`, yielding a reduced projection for the
    /// source-withheld model.
    pub fn drop_source(&self, s: usize) -> Result<ReducedPcaView> {
        let n = self.input_dim();
        if s >= n {
            return Err(Error::SeriesIndex { index: s, n });
        }
        let cols: Vec<usize> = (0..n).filter(|c| *c != s).collect();
        let w_reduced = self.w.select(Axis(1), &cols);
        let (w_reduced_pinv, _) = linalg::pseudoinverse(w_reduced.view())?;
        Ok(ReducedPcaView {
            w_reduced,
            w_reduced_pinv,
            dropped: s,
        })
    }
}

impl ReducedPcaView {
    /// Index of the series that was removed.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// The p×(N−1) reduced coefficient matrix.
    pub fn w_reduced(&self) -> &Array2<f64> {
        &self.w_reduced
    }

    /// The (N−1)×p pseudoinverse of the reduced coefficients.
    pub fn w_reduced_pinv(&self) -> &Array2<f64> {
        &self.w_reduced_pinv
    }

    /// Project an (N−1)×T matrix (the ensemble without the dropped series).
    pub fn project(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.w_reduced.ncols() {
            return Err(Error::DimensionMismatch {
                what: "reduced projection input rows",
                expected: self.w_reduced.ncols(),
                actual: x.nrows(),
            });
        }
        Ok(self.w_reduced.dot(&x))
    }

    /// Map component predictions back to the surviving N−1 series.
    pub fn reconstruct(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z.nrows() != self.w_reduced.nrows() {
            return Err(Error::DimensionMismatch {
                what: "reduced reconstruction input rows",
                expected: self.w_reduced.nrows(),
                actual: z.nrows(),
            });
        }
        Ok(self.w_reduced_pinv.dot(&z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::TimeSeriesEnsemble;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ensemble(n: usize, t: usize, seed: u64) -> TimeSeriesEnsemble {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Array2::from_shape_fn((n, t), |_| rng.random::<f64>() * 2.0 - 1.0);
        TimeSeriesEnsemble::with_default_names(data, None)
            .unwrap()
            .standardize()
    }

    #[test]
    fn rows_are_orthonormal() {
        let e = random_ensemble(8, 200, 1);
        let m = PcaModel::fit(&e, 5).unwrap();
        let gram = m.w().dot(&m.w().t());
        for ((i, j), v) in gram.indexed_iter() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-10, "gram[{i},{j}] = {v}");
        }
    }

    #[test]
    fn explained_variance_is_non_increasing_and_matches_trace() {
        let e = random_ensemble(6, 300, 2);
        let m = PcaModel::fit(&e, 6).unwrap();
        let ev = m.explained_variance();
        for k in 1..6 {
            assert!(ev[k] <= ev[k - 1] + 1e-12);
        }
        // Full decomposition captures the whole covariance trace; for
        // standardized data that trace is N.
        let total: f64 = ev.sum();
        assert!((total - 6.0).abs() < 1e-8, "trace {total}");
    }

    #[test]
    fn sign_convention_fixes_largest_entry_positive() {
        let e = random_ensemble(7, 150, 3);
        let m = PcaModel::fit(&e, 7).unwrap();
        for row in m.w().axis_iter(Axis(0)) {
            let mut pivot = 0;
            let mut best = f64::NEG_INFINITY;
            for (j, v) in row.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    pivot = j;
                }
            }
            assert!(row[pivot] > 0.0);
        }
    }

    #[test]
    fn penrose_identities_hold_for_full_and_reduced() {
        let e = random_ensemble(9, 120, 4);
        let m = PcaModel::fit(&e, 4).unwrap();
        check_penrose(m.w(), m.w_pinv());
        for s in 0..9 {
            let r = m.drop_source(s).unwrap();
            check_penrose(r.w_reduced(), r.w_reduced_pinv());
        }
    }

    fn check_penrose(a: &Array2<f64>, pinv: &Array2<f64>) {
        let apa = a.dot(pinv).dot(a);
        for (x, y) in apa.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-8);
        }
        let pap = pinv.dot(a).dot(pinv);
        for (x, y) in pap.iter().zip(pinv.iter()) {
            assert!((x - y).abs() < 1e-8);
        }
        let h1 = a.dot(pinv);
        for ((i, j), v) in h1.indexed_iter() {
            assert!((v - h1[[j, i]]).abs() < 1e-8);
        }
        let h2 = pinv.dot(a);
        for ((i, j), v) in h2.indexed_iter() {
            assert!((v - h2[[j, i]]).abs() < 1e-8);
        }
    }

    #[test]
    fn project_reconstruct_is_identity_at_full_rank() {
        let e = random_ensemble(5, 80, 5);
        let m = PcaModel::fit(&e, 5).unwrap();
        let z = m.project(e.view()).unwrap();
        let back = m.reconstruct(z.view()).unwrap();
        for (a, b) in back.iter().zip(e.data().iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn component_count_bounds_are_enforced() {
        let e = random_ensemble(4, 50, 6);
        assert!(matches!(
            PcaModel::fit(&e, 0),
            Err(Error::ComponentCount { p: 0, max: 4 })
        ));
        assert!(matches!(
            PcaModel::fit(&e, 5),
            Err(Error::ComponentCount { p: 5, max: 4 })
        ));
    }

    #[test]
    fn duplicated_rows_flag_rank_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let base: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let mut data = Array2::zeros((3, 100));
        for t in 0..100 {
            data[[0, t]] = base[t];
            data[[1, t]] = base[t];
            data[[2, t]] = rng.random::<f64>();
        }
        let e = TimeSeriesEnsemble::with_default_names(data, None)
            .unwrap()
            .standardize();
        let full = PcaModel::fit(&e, 3).unwrap();
        assert!(full.is_rank_deficient());
        let ok = PcaModel::fit(&e, 2).unwrap();
        assert!(!ok.is_rank_deficient());
    }

    /// Independent eigensolver used as an oracle: classic cyclic Jacobi
    /// rotations, no shared code with the nalgebra-backed path.
    fn jacobi_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
        let n = a.nrows();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[[i, j]] * a[[i, j]];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[[p, q]].abs() < 1e-18 {
                        continue;
                    }
                    let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[[k, p]];
                        let akq = a[[k, q]];
                        a[[k, p]] = c * akp - s * akq;
                        a[[k, q]] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[[p, k]];
                        let aqk = a[[q, k]];
                        a[[p, k]] = c * apk - s * aqk;
                        a[[q, k]] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
        vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
        vals
    }

    #[test]
    fn eigenvalues_agree_with_jacobi_oracle() {
        let e = random_ensemble(6, 250, 8);
        let x = e.data();
        let cov = x.dot(&x.t()) / (e.n_samples() as f64 - 1.0);
        let oracle = jacobi_eigenvalues(cov.clone());
        let m = PcaModel::fit(&e, 6).unwrap();
        for (a, b) in m.explained_variance().iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs oracle {b}");
        }
    }
}
