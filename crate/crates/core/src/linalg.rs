//! Internal dense linear algebra.
//!
//! Thin wrappers around nalgebra's SVD / symmetric eigendecomposition /
//! Cholesky, converting to and from ndarray at the boundary. Public code in
//! this crate speaks ndarray; nalgebra stays an implementation detail here.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Singular values below `RANK_TOL * sigma_max` count as zero when forming
/// a pseudoinverse.
pub(crate) const RANK_TOL: f64 = 1e-10;

pub(crate) fn to_nalgebra(a: ArrayView2<'_, f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Moore–Penrose pseudoinverse of `a` via SVD.
///
/// Returns the pseudoinverse together with the numerical rank (number of
/// singular values above the relative cutoff).
pub(crate) fn pseudoinverse(a: ArrayView2<'_, f64>) -> Result<(Array2<f64>, usize)> {
    let m = to_nalgebra(a);
    let svd = m.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = RANK_TOL * sigma_max;
    let rank = svd.singular_values.iter().filter(|s| **s > eps).count();
    let pinv = svd.pseudo_inverse(eps).map_err(|reason| Error::InvalidConfig {
        reason: format!("pseudoinverse failed: {reason}"),
    })?;
    Ok((from_nalgebra(&pinv), rank))
}

/// Eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues sorted in non-increasing order and the matching
/// eigenvectors as the *rows* of the returned matrix.
pub(crate) fn symmetric_eigen_desc(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let se = nalgebra::SymmetricEigen::new(to_nalgebra(a.view()));
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort with index tiebreak keeps the output deterministic when
    // eigenvalues repeat.
    order.sort_by(|&i, &j| {
        se.eigenvalues[j]
            .partial_cmp(&se.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = Array1::from_iter(order.iter().map(|&i| se.eigenvalues[i]));
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| se.eigenvectors[(c, order[r])]);
    (values, vectors)
}

/// Solve `(g + ridge·I) · x = rhs` for symmetric positive definite `g`
/// via Cholesky; `rhs` may have multiple columns.
pub(crate) fn ridge_cholesky_solve(
    g: &Array2<f64>,
    ridge: f64,
    rhs: &Array2<f64>,
) -> Result<Array2<f64>> {
    let d = g.nrows();
    debug_assert_eq!(d, g.ncols());
    debug_assert_eq!(d, rhs.nrows());
    let mut damped = to_nalgebra(g.view());
    for i in 0..d {
        damped[(i, i)] += ridge;
    }
    let chol = nalgebra::Cholesky::new(damped).ok_or(Error::SingularSystem { ridge })?;
    let solved = chol.solve(&to_nalgebra(rhs.view()));
    Ok(from_nalgebra(&solved))
}

/// Largest modulus among the eigenvalues of a (generally non-symmetric)
/// square matrix — the spectral radius.
///
/// Uses Gelfand's formula ρ(A) = lim ‖A^k‖^(1/k) evaluated at k = 2^40 by
/// normalized repeated squaring. QR eigenvalue iteration would be the usual
/// tool, but it can stall indefinitely on the exactly-nilpotent matrices
/// acyclic networks produce; this runs in a fixed 40 multiplications and the
/// k-th-root error (≤ dim·ln k / k) is far below any tolerance used here.
pub(crate) fn spectral_radius(a: &Array2<f64>) -> f64 {
    let mut c = a.clone();
    let mut log_radius = 0.0;
    let mut weight = 1.0; // 1 / 2^i for the i-th squaring
    for _ in 0..=40 {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        log_radius += weight * norm.ln();
        weight *= 0.5;
        let scaled = c.mapv(|v| v / norm);
        c = scaled.dot(&scaled);
    }
    log_radius.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pseudoinverse_satisfies_penrose_identities() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let (pinv, rank) = pseudoinverse(a.view()).unwrap();
        assert_eq!(rank, 2);
        let apa = a.dot(&pinv).dot(&a);
        let pap = pinv.dot(&a).dot(&pinv);
        for (x, y) in apa.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in pap.iter().zip(pinv.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
        // Symmetry of the two projectors.
        let proj1 = a.dot(&pinv);
        let proj2 = pinv.dot(&a);
        for ((i, j), v) in proj1.indexed_iter() {
            assert!((v - proj1[[j, i]]).abs() < 1e-10);
        }
        for ((i, j), v) in proj2.indexed_iter() {
            assert!((v - proj2[[j, i]]).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_deficient_matrix_is_detected() {
        let a = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let (_, rank) = pseudoinverse(a.view()).unwrap();
        assert_eq!(rank, 1);
    }

    #[test]
    fn symmetric_eigen_sorts_descending_and_reconstructs() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen_desc(&a);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        // A v = λ v for each eigenpair.
        for k in 0..3 {
            let v = vecs.row(k);
            let av = a.dot(&v);
            for i in 0..3 {
                assert!((av[i] - vals[k] * v[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ridge_solve_matches_direct_inverse() {
        let g = array![[4.0, 1.0], [1.0, 3.0]];
        let rhs = array![[1.0], [2.0]];
        let x = ridge_cholesky_solve(&g, 0.0, &rhs).unwrap();
        // Hand-solved: inverse of [[4,1],[1,3]] is 1/11 [[3,-1],[-1,4]].
        assert!((x[[0, 0]] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[[1, 0]] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_of_rotation_scaled() {
        // 0.5 × rotation has both eigenvalues at modulus 0.5.
        let a = array![[0.0, -0.5], [0.5, 0.0]];
        assert!((spectral_radius(&a) - 0.5).abs() < 1e-12);
    }
}
