//! Thin bridge to nalgebra for the decompositions the crate needs.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::{ComplexMatrix, C64};

pub(crate) fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub(crate) fn from_na(m: &DMatrix<C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    // Symmetrize so round-off asymmetry cannot leak into the decomposition.
    let sym = (&to_na(m) + to_na(m).adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.rows();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigen(m).0[0]
}

/// f(M) for Hermitian M via its spectral decomposition.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.rows();
    let mut scaled = vectors.clone();
    for c in 0..n {
        let s = f(values[c]);
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    scaled.matmul(&vectors.dagger())
}

/// M^{-1/2} for a positive-definite Hermitian matrix. Fails when the smallest
/// eigenvalue falls below `floor` relative to the largest.
pub fn inverse_sqrt(m: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    let (values, _) = hermitian_eigen(m);
    let max = values.last().copied().unwrap_or(0.0);
    if values[0] <= floor * max.max(f64::MIN_POSITIVE) {
        return Err(Error::Numeric(format!(
            "matrix is (nearly) singular: eigenvalues in [{:.3e}, {:.3e}]",
            values[0], max
        )));
    }
    Ok(hermitian_function(m, |x| 1.0 / x.sqrt()))
}

/// Moore–Penrose pseudoinverse together with the numerical rank.
pub fn pseudo_inverse(m: &ComplexMatrix, rel_tol: f64) -> Result<(ComplexMatrix, usize)> {
    let svd = to_na(m).svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = rel_tol * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let pinv = svd
        .pseudo_inverse(eps)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    Ok((from_na(&pinv), rank))
}

/// Solves a dense real linear system A x = b.
pub fn solve_real(a: Vec<f64>, n: usize, b: Vec<f64>) -> Result<Vec<f64>> {
    let a = DMatrix::from_row_slice(n, n, &a);
    let b = nalgebra::DVector::from_vec(b);
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numeric("singular linear system".into()))?;
    Ok(x.iter().copied().collect())
}
