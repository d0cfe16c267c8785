//! Closed-form geometry of the rotation groups SO(2) and SO(3).
//!
//! Points are orthogonal matrices with determinant `+1`; tangent vectors are
//! stored left-trivialised, i.e. as skew-symmetric matrices `X` in the Lie
//! algebra so(n), so that the geodesic through `p` is `t ↦ p·expm(tX)`.
//! With the bi-invariant metric `⟨X, Y⟩ = tr(XᵀY)` the torsion-free
//! Cartan–Schouten connection coincides with the Levi-Civita connection and
//! parallel transport along `t ↦ p·expm(tY)` is the algebra conjugation
//! `X ↦ expm(−Y/2)·X·expm(Y/2)`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};

use super::sphere::sinc;

/// Rotation angles closer to π than this make the matrix logarithm report an
/// out-of-domain error (the cut locus of SO(3), where the log is not unique).
pub const CUT_LOCUS_TOL: f64 = 1e-6;

/// `(1 − cos t)/t²` with a series fallback.
pub fn cos_coeff(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0
    } else {
        (1.0 - t.cos()) / (t * t)
    }
}

/// `(t − sin t)/t³` with a series fallback.
pub fn sin_coeff(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (t - t.sin()) / (t * t * t)
    }
}

/// Skew matrix of a 3-vector (the hat map).
pub fn hat3(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of the hat map.
pub fn vee3(a: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)])
}

/// Matrix exponential of a skew-symmetric `n×n` matrix, `n ∈ {2, 3}`.
pub fn expm_skew(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match a.nrows() {
        2 => {
            let t = a[(1, 0)];
            Ok(DMatrix::from_row_slice(
                2,
                2,
                &[t.cos(), -t.sin(), t.sin(), t.cos()],
            ))
        }
        3 => {
            let w = Vector3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)]);
            let theta = w.norm();
            let k = hat3(&w);
            let r = Matrix3::identity() + sinc(theta) * k + cos_coeff(theta) * k * k;
            Ok(DMatrix::from_iterator(3, 3, r.iter().copied()))
        }
        n => Err(Error::invalid_input(format!(
            "matrix exponential implemented for 2x2 and 3x3 skew matrices, got {n}x{n}"
        ))),
    }
}

/// Principal matrix logarithm of a rotation matrix, `n ∈ {2, 3}`.
///
/// Fails near the cut locus (rotation angle π) where the logarithm is not
/// unique.
pub fn logm_rotation(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match r.nrows() {
        2 => {
            let t = r[(1, 0)].atan2(r[(0, 0)]);
            if (std::f64::consts::PI - t.abs()) < CUT_LOCUS_TOL {
                return Err(Error::out_of_domain(
                    "rotation logarithm is not unique at angle pi",
                ));
            }
            Ok(DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]))
        }
        3 => {
            // Angle from both the symmetric (trace) and antisymmetric parts:
            // atan2 keeps full precision near zero.
            let anti = 0.5 * (r - r.transpose());
            let s = (anti[(2, 1)].powi(2) + anti[(0, 2)].powi(2) + anti[(1, 0)].powi(2)).sqrt();
            let c = 0.5 * (r.trace() - 1.0);
            let theta = s.atan2(c);
            if (std::f64::consts::PI - theta) < CUT_LOCUS_TOL {
                return Err(Error::out_of_domain(
                    "rotation logarithm is not unique near angle pi",
                ));
            }
            let factor = if theta < 1e-4 {
                let t2 = theta * theta;
                1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0
            } else {
                theta / theta.sin()
            };
            Ok(factor * anti)
        }
        n => Err(Error::invalid_input(format!(
            "matrix logarithm implemented for 2x2 and 3x3 rotations, got {n}x{n}"
        ))),
    }
}

/// How far `r` is from being a rotation matrix: `max(‖rᵀr − I‖∞, |det r − 1|)`.
pub fn orthogonality_defect(r: &DMatrix<f64>) -> f64 {
    let n = r.nrows();
    let gram = r.transpose() * r;
    let defect = (&gram - DMatrix::<f64>::identity(n, n)).abs().max();
    defect.max((r.determinant() - 1.0).abs())
}

/// Flattens a matrix column-major into a vector.
pub fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Rebuilds an `n×n` matrix from a column-major flat vector.
pub fn unflatten(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_log_roundtrip_so3() {
        let w = Vector3::new(0.3, -0.5, 0.81);
        let a = DMatrix::from_iterator(3, 3, hat3(&w).iter().copied());
        let r = expm_skew(&a).unwrap();
        assert!(orthogonality_defect(&r) < 1e-14);
        let back = logm_rotation(&r).unwrap();
        assert_relative_eq!((back - a).abs().max(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn expm_log_roundtrip_so2() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.2, 1.2, 0.0]);
        let r = expm_skew(&a).unwrap();
        let back = logm_rotation(&r).unwrap();
        assert_relative_eq!((back - a).abs().max(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn log_small_angle_is_accurate() {
        let w = Vector3::new(1e-7, -2e-7, 5e-8);
        let a = DMatrix::from_iterator(3, 3, hat3(&w).iter().copied());
        let r = expm_skew(&a).unwrap();
        let back = logm_rotation(&r).unwrap();
        assert!((back - a).abs().max() < 1e-18);
    }

    #[test]
    fn log_near_pi_fails() {
        let w = Vector3::new(std::f64::consts::PI - 1e-9, 0.0, 0.0);
        let a = DMatrix::from_iterator(3, 3, hat3(&w).iter().copied());
        let r = expm_skew(&a).unwrap();
        assert!(logm_rotation(&r).is_err());
    }
}
