//! Closed-form geometry of the special Euclidean groups SE(2) and SE(3).
//!
//! A pose is a pair `(t, R)` of a translation and a rotation, acting on
//! points as `x ↦ t + Rx` and composing as
//!
//! ```text
//! (t, R) ∘ (u, S) = (t + Ru, RS)
//! ```
//!
//! which matches the product of the homogeneous `(n+1)×(n+1)` matrices
//! `[[R, t], [0, 1]]`.  Tangent vectors are stored left-trivialised as
//! algebra elements `(v, A)` with `A` skew-symmetric.  Geodesics of the
//! torsion-free Cartan–Schouten connection are one-parameter subgroups
//! `t ↦ p ∘ Exp(t·(v, A))`; this connection is *not* the Levi-Civita
//! connection of the product metric `⟨(v,A),(w,B)⟩ = vᵀw + tr(AᵀB)`, so
//! parallel transport here is not an isometry of that metric.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::Result;

use super::rotations::{cos_coeff, expm_skew, hat3, logm_rotation, sin_coeff, vee3};
use super::sphere::sinc;

/// Splits a flat pose `[t, R]` (translation then column-major rotation).
pub fn split_point(p: &DVector<f64>, n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let t = DVector::from_column_slice(&p.as_slice()[..n]);
    let r = DMatrix::from_column_slice(n, n, &p.as_slice()[n..]);
    (t, r)
}

/// Joins a translation and rotation into the flat representation.
pub fn join_point(t: &DVector<f64>, r: &DMatrix<f64>) -> DVector<f64> {
    let n = t.len();
    let mut out = DVector::zeros(n + n * n);
    out.rows_mut(0, n).copy_from(t);
    out.rows_mut(n, n * n)
        .copy_from(&DVector::from_column_slice(r.as_slice()));
    out
}

/// Group exponential `Exp: se(n) → SE(n)` in closed form for `n ∈ {2, 3}`.
pub fn group_exp(v: &DVector<f64>, a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = v.len();
    let r = expm_skew(a)?;
    let t = match n {
        2 => {
            let omega = a[(1, 0)];
            let (sa, ca) = (sinc(omega), omega * cos_coeff(omega));
            // V = sinc(ω) I + ((1−cos ω)/ω) J with J the 2×2 skew generator.
            DVector::from_row_slice(&[sa * v[0] - ca * v[1], ca * v[0] + sa * v[1]])
        }
        3 => {
            let w = vee3(&Matrix3::from_iterator(a.iter().copied()));
            let theta = w.norm();
            let k = hat3(&w);
            let vmat = Matrix3::identity() + cos_coeff(theta) * k + sin_coeff(theta) * k * k;
            let t3 = vmat * Vector3::new(v[0], v[1], v[2]);
            DVector::from_row_slice(&[t3.x, t3.y, t3.z])
        }
        _ => {
            return Err(crate::error::Error::invalid_input(format!(
                "group exponential implemented for SE(2) and SE(3), got translation dim {n}"
            )))
        }
    };
    Ok((t, r))
}

/// Group logarithm `Log: SE(n) → se(n)` for `n ∈ {2, 3}`; fails at the cut
/// locus of the rotation part.
pub fn group_log(t: &DVector<f64>, r: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = t.len();
    let a = logm_rotation(r)?;
    let v = match n {
        2 => {
            let omega = a[(1, 0)];
            let (sa, ca) = (sinc(omega), omega * cos_coeff(omega));
            let det = sa * sa + ca * ca;
            // V⁻¹ = (sinc(ω) I − ((1−cos ω)/ω) J) / (sinc² + ((1−cos)/ω)²)
            DVector::from_row_slice(&[
                (sa * t[0] + ca * t[1]) / det,
                (-ca * t[0] + sa * t[1]) / det,
            ])
        }
        3 => {
            let w = vee3(&Matrix3::from_iterator(a.iter().copied()));
            let theta = w.norm();
            let k = hat3(&w);
            let c = if theta < 1e-4 {
                let t2 = theta * theta;
                1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
            } else {
                (1.0 - theta * theta.sin() / (2.0 * (1.0 - theta.cos()))) / (theta * theta)
            };
            let vinv = Matrix3::identity() - 0.5 * k + c * k * k;
            let v3 = vinv * Vector3::new(t[0], t[1], t[2]);
            DVector::from_row_slice(&[v3.x, v3.y, v3.z])
        }
        _ => {
            return Err(crate::error::Error::invalid_input(format!(
                "group logarithm implemented for SE(2) and SE(3), got translation dim {n}"
            )))
        }
    };
    Ok((v, a))
}

/// Group composition `(t, R) ∘ (u, S) = (t + Ru, RS)`.
pub fn compose(
    t: &DVector<f64>,
    r: &DMatrix<f64>,
    u: &DVector<f64>,
    s: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    (t + r * u, r * s)
}

/// Group inverse `(−Rᵀt, Rᵀ)`.
pub fn inverse(t: &DVector<f64>, r: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let rt = r.transpose();
    (-(&rt * t), rt)
}

/// Homogeneous `(n+1)×(n+1)` embedding of a pose.
pub fn homogeneous(t: &DVector<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.len();
    let mut h = DMatrix::zeros(n + 1, n + 1);
    h.view_mut((0, 0), (n, n)).copy_from(r);
    h.view_mut((0, n), (n, 1)).copy_from(t);
    h[(n, n)] = 1.0;
    h
}

/// Homogeneous embedding of an algebra element `(v, A)` as `[[A, v], [0, 0]]`.
pub fn homogeneous_algebra(v: &DVector<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = v.len();
    let mut h = DMatrix::zeros(n + 1, n + 1);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, 1)).copy_from(v);
    h
}

/// Reads an algebra element back out of its homogeneous embedding.
pub fn from_homogeneous_algebra(h: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = h.nrows() - 1;
    let a = h.view((0, 0), (n, n)).into_owned();
    let v = h.view((0, n), (n, 1)).into_owned();
    (DVector::from_column_slice(v.as_slice()), a)
}

/// Parallel transport of the torsion-free Cartan–Schouten connection along
/// the geodesic with initial algebra velocity `(vy, ay)`:
/// `X ↦ Exp(−Y/2) X Exp(Y/2)` computed in the homogeneous embedding.
pub fn parallel_transport(
    vx: &DVector<f64>,
    ax: &DMatrix<f64>,
    vy: &DVector<f64>,
    ay: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (ht, hr) = group_exp(&(-0.5 * vy), &(-0.5 * ay))?;
    let g = homogeneous(&ht, &hr);
    let (git, gir) = inverse(&ht, &hr);
    let ginv = homogeneous(&git, &gir);
    let xi = homogeneous_algebra(vx, ax);
    let out = &g * xi * ginv;
    Ok(from_homogeneous_algebra(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn skew2(w: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0])
    }

    #[test]
    fn exp_log_roundtrip_se2() {
        let v = DVector::from_row_slice(&[0.3, -1.1]);
        let a = skew2(0.7);
        let (t, r) = group_exp(&v, &a).unwrap();
        let (v2, a2) = group_log(&t, &r).unwrap();
        assert_relative_eq!((v2 - v).norm(), 0.0, epsilon = 1e-13);
        assert_relative_eq!((a2 - a).abs().max(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn exp_log_roundtrip_se3() {
        let v = DVector::from_row_slice(&[0.3, -1.1, 0.5]);
        let w = Vector3::new(0.2, 0.4, -0.6);
        let a = DMatrix::from_iterator(3, 3, hat3(&w).iter().copied());
        let (t, r) = group_exp(&v, &a).unwrap();
        let (v2, a2) = group_log(&t, &r).unwrap();
        assert_relative_eq!((v2 - v).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((a2 - a).abs().max(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn compose_matches_homogeneous_product() {
        // Embedding oracle: the pair composition must equal the product of
        // homogeneous matrices.
        let (v1, a1) = (DVector::from_row_slice(&[1.0, 2.0]), skew2(0.5));
        let (v2, a2) = (DVector::from_row_slice(&[-0.3, 0.8]), skew2(-1.2));
        let (t1, r1) = group_exp(&v1, &a1).unwrap();
        let (t2, r2) = group_exp(&v2, &a2).unwrap();
        let (tc, rc) = compose(&t1, &r1, &t2, &r2);
        let hp = homogeneous(&t1, &r1) * homogeneous(&t2, &r2);
        let hc = homogeneous(&tc, &rc);
        assert_relative_eq!((hp - hc).abs().max(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let (t, r) = group_exp(
            &DVector::from_row_slice(&[0.4, 0.9]),
            &skew2(1.3),
        )
        .unwrap();
        let (ti, ri) = inverse(&t, &r);
        let (tc, rc) = compose(&t, &r, &ti, &ri);
        assert!(tc.norm() < 1e-14);
        assert!((rc - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-14);
    }

    #[test]
    fn transport_stays_in_algebra() {
        let vx = DVector::from_row_slice(&[0.3, 0.1, -0.2]);
        let w = Vector3::new(0.5, -0.1, 0.2);
        let ax = DMatrix::from_iterator(3, 3, hat3(&w).iter().copied());
        let vy = DVector::from_row_slice(&[-0.6, 0.2, 0.9]);
        let wy = Vector3::new(-0.2, 0.3, 0.1);
        let ay = DMatrix::from_iterator(3, 3, hat3(&wy).iter().copied());
        let (_, at) = parallel_transport(&vx, &ax, &vy, &ay).unwrap();
        assert!((&at + at.transpose()).abs().max() < 1e-13);
    }
}
