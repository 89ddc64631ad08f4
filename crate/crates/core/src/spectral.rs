//! Dense symmetric eigendecomposition with the ordering used throughout the
//! crate: eigenvalues sorted by absolute value, largest first, and on an exact
//! tie in absolute value the positive eigenvalue first.

use std::cmp::Ordering;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, MatRef, Par};

use crate::error::{Error, Result};
use crate::model::AdjacencyMatrix;

/// Maximum absolute asymmetry accepted by [`eig_sym`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues `l_1, ..., l_n` with matching unit eigenvectors (column `i` of
/// `eigenvectors` belongs to `eigenvalues[i]`).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> MatRef<'_, f64> {
        self.eigenvectors.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn into_parts(self) -> (Vec<f64>, Mat<f64>) {
        (self.eigenvalues, self.eigenvectors)
    }
}

/// Total order on eigenvalues: `|l|` descending, positive before negative on
/// an exact tie.
pub fn spectral_order(a: f64, b: f64) -> Ordering {
    b.abs()
        .partial_cmp(&a.abs())
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.partial_cmp(&a).unwrap_or(Ordering::Equal))
}

fn validate_symmetric(m: MatRef<'_, f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "expected a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if i > j {
                worst = worst.max((v - m[(j, i)]).abs());
            }
        }
    }
    if worst > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

fn raw_evd(m: MatRef<'_, f64>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<f64>>)> {
    let n = m.nrows();
    let compute = if vectors {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    };
    let mut s = Diag::<f64>::zeros(n);
    let mut u = vectors.then(|| Mat::<f64>::zeros(n, n));
    let mut buf = MemBuffer::new(self_adjoint_evd_scratch::<f64>(
        n,
        compute,
        Par::Seq,
        Default::default(),
    ));
    self_adjoint_evd(
        m,
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::EigenNoConvergence)?;

    let values: Vec<f64> = (0..n).map(|i| s.column_vector()[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNoConvergence);
    }
    Ok((values, u))
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Each eigenvector is sign-normalised so that its entry of largest absolute
/// value (lowest index on ties) is non-negative, which makes the output a
/// pure function of the input.
pub fn eig_sym(m: MatRef<'_, f64>) -> Result<SpectralDecomposition> {
    validate_symmetric(m)?;
    let n = m.nrows();
    let (values, vectors) = raw_evd(m, true)?;
    let vectors = vectors.expect("eigenvectors requested");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| spectral_order(values[a], values[b]));

    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let mut eigenvectors = Mat::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = vectors.col(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[(i, dst)] = sign * col[i];
        }
    }
    if eigenvectors.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::EigenNoConvergence);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, in spectral order. Cheaper than [`eig_sym`] when the
/// vectors are not needed (community-count estimation, spectral norms).
pub fn eigenvalues_sym(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    validate_symmetric(m)?;
    let (mut values, _) = raw_evd(m, false)?;
    values.sort_by(|a, b| spectral_order(*a, *b));
    Ok(values)
}

/// Spectral norm (largest absolute eigenvalue) of a symmetric matrix.
pub fn spectral_norm_sym(m: MatRef<'_, f64>) -> Result<f64> {
    Ok(eigenvalues_sym(m)?.first().map_or(0.0, |v| v.abs()))
}

/// First `k` eigenvectors, order preserved.
pub fn leading_eigenspace(d: &SpectralDecomposition, k: usize) -> Result<Mat<f64>> {
    let n = d.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "leading eigenspace size {k} outside 1..={n}"
        )));
    }
    Ok(d.eigenvectors.subcols(0, k).to_owned())
}

/// `D^{-1/2} A D^{-1/2}` with `D` the diagonal matrix of row sums.
///
/// Rows with zero degree (only possible for adjacency matrices read with the
/// diagonal left as-is) map to zero rows.
pub fn normalized_laplacian(a: &AdjacencyMatrix) -> Mat<f64> {
    let m = a.as_mat();
    let n = m.nrows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = (0..n).map(|j| m[(i, j)]).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Mat::from_fn(n, n, |i, j| inv_sqrt[i] * m[(i, j)] * inv_sqrt[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: MatRef<'_, f64>, d: &SpectralDecomposition, i: usize) -> f64 {
        let v = d.eigenvectors().col(i);
        let n = m.nrows();
        (0..n)
            .map(|r| {
                let mv: f64 = (0..n).map(|c| m[(r, c)] * v[c]).sum();
                (mv - d.eigenvalues()[i] * v[r]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn identity_gives_standard_basis() {
        let d = eig_sym(Mat::<f64>::identity(2, 2).as_ref()).unwrap();
        assert_eq!(d.eigenvalues(), &[1.0, 1.0]);
        let v = d.eigenvectors();
        assert!((v[(0, 0)] - 1.0).abs() < 1e-15 && v[(1, 0)].abs() < 1e-15);
        assert!((v[(1, 1)] - 1.0).abs() < 1e-15 && v[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn swap_matrix_orders_positive_first() {
        let m = Mat::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 1.0 });
        let d = eig_sym(m.as_ref()).unwrap();
        assert!((d.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!((d.eigenvalues()[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = d.eigenvectors();
        assert!((v[(0, 0)] - h).abs() < 1e-14 && (v[(1, 0)] - h).abs() < 1e-14);
        assert!((v[(0, 1)] - h).abs() < 1e-14 && (v[(1, 1)] + h).abs() < 1e-14);

        let u = leading_eigenspace(&d, 1).unwrap();
        assert_eq!(u.ncols(), 1);
        assert!((u[(0, 0)] - h).abs() < 1e-14 && (u[(1, 0)] - h).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_nan() {
        let m = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { 1.0 } else { 0.0 });
        assert!(matches!(eig_sym(m.as_ref()), Err(Error::NotSymmetric(_))));
        let m = Mat::from_fn(2, 2, |i, j| if i == j { f64::NAN } else { 0.0 });
        assert!(matches!(eig_sym(m.as_ref()), Err(Error::NonFinite)));
    }

    #[test]
    fn leading_eigenspace_range() {
        let d = eig_sym(Mat::<f64>::identity(3, 3).as_ref()).unwrap();
        assert!(leading_eigenspace(&d, 0).is_err());
        assert!(leading_eigenspace(&d, 4).is_err());
        let full = leading_eigenspace(&d, 3).unwrap();
        assert_eq!(full, d.eigenvectors().to_owned());
    }

    #[test]
    fn residuals_and_unit_norms() {
        let n = 30;
        let m = Mat::from_fn(n, n, |i, j| ((i * 7 + j * 7 + i * j) % 11) as f64 - 5.0);
        let d = eig_sym(m.as_ref()).unwrap();
        for i in 0..n {
            let norm: f64 = d.eigenvectors().col(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-10);
            assert!(residual(m.as_ref(), &d, i) <= 1e-8 * d.eigenvalues()[i].abs().max(1.0));
        }
        for w in d.eigenvalues().windows(2) {
            assert!(w[0].abs() >= w[1].abs());
        }
        let vals = eigenvalues_sym(m.as_ref()).unwrap();
        for (a, b) in vals.iter().zip(d.eigenvalues()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn normalized_laplacian_small_cases() {
        let id = AdjacencyMatrix::new(Mat::<f64>::identity(2, 2)).unwrap();
        assert_eq!(normalized_laplacian(&id), Mat::<f64>::identity(2, 2));
        let ones = AdjacencyMatrix::new(Mat::from_fn(3, 3, |_, _| 1.0)).unwrap();
        let l = normalized_laplacian(&ones);
        for i in 0..3 {
            for j in 0..3 {
                assert!((l[(i, j)] - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }
}
