//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues of symmetric matrices below this floor are clamped up to it
/// when a positive-definite matrix is required.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Returns the symmetric part `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = m.clone();
    s += m.transpose();
    s *= 0.5;
    s
}

/// Clamps the eigenvalues of a symmetric matrix to at least
/// [`EIGENVALUE_FLOOR`], returning a symmetric positive-definite matrix.
pub fn psd_clamp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(m);
    let eig = sym.clone().symmetric_eigen();
    let mut needs_clamp = false;
    for &v in eig.eigenvalues.iter() {
        if v < EIGENVALUE_FLOOR {
            needs_clamp = true;
        }
    }
    if !needs_clamp {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|v| v.max(EIGENVALUE_FLOOR));
    let mut out = DMatrix::zeros(sym.nrows(), sym.ncols());
    for (i, &lambda) in clamped.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        out += lambda * v * v.transpose();
    }
    symmetrize(&out)
}

/// Lower-triangular Cholesky factor of a symmetric matrix; retries on a
/// clamped copy when the matrix is only semidefinite.
pub fn lower_cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = symmetrize(m).cholesky() {
        return Ok(chol.l());
    }
    psd_clamp(m)
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::DegenerateCovariance {
            context: format!("{}x{} matrix is not positive definite", m.nrows(), m.ncols()),
        })
}

/// Square-root factor `F` with `F Fᵀ = m` for a symmetric positive
/// *semi*-definite matrix: plain Cholesky when the matrix is definite,
/// otherwise an eigenvalue square root with negative eigenvalues snapped to
/// zero. Unlike [`lower_cholesky`] this keeps exactly-singular matrices
/// exact (a zero matrix yields a zero factor) instead of flooring
/// eigenvalues, which matters when the factor columns become sample offsets.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    if let Some(chol) = sym.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |a, &l| a.max(l.abs()));
    let mut factor = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -1e-9 * scale {
            return Err(Error::DegenerateCovariance {
                context: format!("covariance has negative eigenvalue {lambda:.3e}"),
            });
        }
        let root = lambda.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(root);
    }
    Ok(factor)
}

/// Solves `m x = rhs` for symmetric positive-definite `m` (one column per
/// right-hand side).
pub fn solve_spd(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = symmetrize(m)
        .cholesky()
        .ok_or(Error::SingularInnovation)?;
    Ok(chol.solve(rhs))
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = symmetrize(m)
        .cholesky()
        .ok_or_else(|| Error::DegenerateCovariance {
            context: "matrix inversion requires a positive-definite input".to_string(),
        })?;
    Ok(chol.inverse())
}

/// Inverse of a general square matrix via LU, failing on singularity.
pub fn lu_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or_else(|| Error::AdaptationNotApplicable {
        context: format!("{what} is singular"),
    })
}

/// Weighted sum of outer products `Σ wᵢ xᵢ xᵢᵀ`.
pub fn weighted_outer_sum(vectors: &[DVector<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = vectors.first().map_or(0, |v| v.len());
    let mut out = DMatrix::zeros(d, d);
    for (x, &w) in vectors.iter().zip(weights) {
        out += w * x * x.transpose();
    }
    out
}
