//! Closed-form geometry of the group of unit quaternions.
//!
//! Quaternions are stored as `(w, x, y, z)` with the scalar part first.
//! The unit quaternions form a compact Lie group (diffeomorphic to S³)
//! whose Lie algebra is the space of pure quaternions `(0, x, y, z)`.
//! Tangent vectors are stored left-trivialised as pure quaternions, the
//! inner product is the dot product of the vector parts, and geodesics are
//! `t ↦ p ⊗ expq(tX)`.
//!
//! The group double-covers SO(3): `q` and `−q` act identically on 3-vectors
//! through `v ↦ q ⊗ (0, v) ⊗ q⁻¹`, while remaining distinct group elements.

use nalgebra::DVector;

use crate::error::{Error, Result};

use super::sphere::sinc;

/// Hamilton product of two quaternions.
pub fn mul(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (aw, ax, ay, az) = (a[0], a[1], a[2], a[3]);
    let (bw, bx, by, bz) = (b[0], b[1], b[2], b[3]);
    DVector::from_row_slice(&[
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])
}

/// Conjugate; equals the inverse for unit quaternions.
pub fn conjugate(q: &DVector<f64>) -> DVector<f64> {
    DVector::from_row_slice(&[q[0], -q[1], -q[2], -q[3]])
}

/// Quaternion exponential of a pure quaternion `(0, v)`.
pub fn exp_pure(x: &DVector<f64>) -> DVector<f64> {
    let theta = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
    let s = sinc(theta);
    DVector::from_row_slice(&[theta.cos(), s * x[1], s * x[2], s * x[3]])
}

/// Principal logarithm of a unit quaternion, a pure quaternion.
///
/// Fails near the antipode of the identity (`w ≈ −1`), the cut locus of the
/// group exponential.
pub fn log_unit(q: &DVector<f64>) -> Result<DVector<f64>> {
    let w = q[0];
    let vnorm = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let theta = vnorm.atan2(w);
    if vnorm >= 1e-12 {
        let f = theta / vnorm;
        Ok(DVector::from_row_slice(&[0.0, f * q[1], f * q[2], f * q[3]]))
    } else if w > 0.0 {
        Ok(DVector::from_row_slice(&[0.0, q[1], q[2], q[3]]))
    } else {
        Err(Error::out_of_domain(
            "quaternion logarithm is undefined at the antipode of the identity",
        ))
    }
}

/// Rotates a 3-vector by the unit quaternion `q` via `q ⊗ (0, v) ⊗ q⁻¹`.
pub fn rotate_vector(q: &DVector<f64>, v: &[f64; 3]) -> [f64; 3] {
    let pv = DVector::from_row_slice(&[0.0, v[0], v[1], v[2]]);
    let r = mul(&mul(q, &pv), &conjugate(q));
    [r[1], r[2], r[3]]
}
