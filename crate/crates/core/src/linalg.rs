//! Small dense symmetric-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, invalid, Error, Result};

/// Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
pub const SYM_TOL: f64 = 1e-10;
/// Relative eigenvalue floor for PSD membership.
pub const PSD_TOL: f64 = 1e-10;
/// Relative cutoff separating the column space from the numerical kernel.
pub const RANK_TOL: f64 = 1e-12;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_norm_sym(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Validates squareness and symmetry, returning the symmetrized matrix.
pub fn ingest_symmetric(a: &Matrix, context: &'static str) -> Result<Matrix> {
    check_dim(context, a.nrows(), a.ncols())?;
    if a.iter().any(|v| !v.is_finite()) {
        return invalid(format!("{context}: non-finite entry"));
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let asym = (a - a.transpose()).amax();
    if asym > SYM_TOL * scale.max(1.0) {
        return invalid(format!("{context}: matrix is not symmetric (asymmetry {asym:e})"));
    }
    Ok(symmetrize(a))
}

/// Validates symmetric positive semidefiniteness, returning the symmetrized matrix.
pub fn ingest_psd(a: &Matrix, context: &'static str) -> Result<Matrix> {
    let s = ingest_symmetric(a, context)?;
    let min = min_eigenvalue(&s);
    let norm = spectral_norm_sym(&s);
    if min < -PSD_TOL * norm {
        return invalid(format!(
            "{context}: matrix is not positive semidefinite (min eigenvalue {min:e})"
        ));
    }
    Ok(s)
}

pub fn min_eigenvalue(a: &Matrix) -> f64 {
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `f(A)` for symmetric `A` applied through its eigendecomposition.
pub fn map_eigen(a: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let eig = SymmetricEigen::new(a.clone());
    let d = eig.eigenvalues.map(f);
    &eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Principal square root of a PSD matrix; negative rounding noise is clipped.
pub fn sqrt_psd(a: &Matrix) -> Matrix {
    map_eigen(a, |v| v.max(0.0).sqrt())
}

/// `ln det A` for symmetric `A`; `-inf` when `A` is numerically singular.
pub fn logdet_psd(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let ev = a.clone().symmetric_eigenvalues();
    let norm = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = RANK_TOL * norm;
    if norm == 0.0 || ev.iter().any(|&v| v <= cut) {
        return f64::NEG_INFINITY;
    }
    ev.iter().map(|v| v.ln()).sum()
}

/// Inverse of a positive definite matrix via Cholesky.
pub fn inv_pd(a: &Matrix, context: &str) -> Result<Matrix> {
    let c = nalgebra::Cholesky::new(symmetrize(a))
        .ok_or_else(|| Error::Singular(format!("{context}: not positive definite")))?;
    Ok(c.inverse())
}

/// Orthonormal basis of the column space of a PSD matrix, with its eigenvalues.
pub fn range_basis(a: &Matrix) -> (Matrix, Vector) {
    let eig = SymmetricEigen::new(symmetrize(a));
    let norm = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| norm > 0.0 && eig.eigenvalues[i] > RANK_TOL * norm)
        .collect();
    let mut basis = Matrix::zeros(a.nrows(), keep.len());
    let mut vals = Vector::zeros(keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(i));
        vals[c] = eig.eigenvalues[i];
    }
    (basis, vals)
}

/// `B <= A` in the Loewner order, within `tol` relative to `||A||`.
pub fn loewner_le(b: &Matrix, a: &Matrix, tol: f64) -> bool {
    let diff = symmetrize(&(a - b));
    min_eigenvalue(&diff) >= -tol * spectral_norm_sym(a).max(1.0)
}

/// Frobenius inner product `tr(A^T B)`.
pub fn frob_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            context: "matrix row length",
            expected: c,
            found: bad.len(),
        });
    }
    Ok(Matrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

pub fn to_rows(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| a.row(i).iter().copied().collect())
        .collect()
}
