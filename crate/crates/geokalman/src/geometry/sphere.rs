//! Closed-form geometry of the unit sphere `Sⁿ ⊂ ℝⁿ⁺¹`.
//!
//! Points are unit vectors, tangent vectors at `p` are ambient vectors
//! orthogonal to `p`, and the connection is the Levi-Civita connection of
//! the round metric.  Geodesics are great circles:
//!
//! ```text
//! exp_p(X) = cos(‖X‖) p + sin(‖X‖) X / ‖X‖
//! ```
//!
//! The logarithm inverts this for non-antipodal pairs, and parallel
//! transport along the geodesic with initial direction `d` rotates the
//! component of `X` along `d` within the plane spanned by `p` and `d/‖d‖`.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Denominators smaller than this indicate an antipodal pair (no unique
/// geodesic) and make the logarithm report an out-of-domain error.
pub const ANTIPODAL_TOL: f64 = 1e-12;

/// `sin(t)/t` with a series fallback for small `t`.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// `(t cos t − sin t)/t³`, the radial derivative of `sinc`, with a series
/// fallback for small `t`.
pub fn dsinc_over_t(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0
    } else {
        (t * t.cos() - t.sin()) / (t * t * t)
    }
}

pub fn exp(p: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let theta = x.norm();
    let mut q = theta.cos() * p + sinc(theta) * x;
    let n = q.norm();
    if n > 0.0 {
        q /= n;
    }
    q
}

pub fn log(p: &DVector<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    let c = p.dot(q);
    let rej = q - c * p;
    let s = rej.norm();
    let theta = s.atan2(c);
    if s >= ANTIPODAL_TOL {
        Ok((theta / s) * rej)
    } else if c > 0.0 {
        // q coincides with p up to rounding; the rejection is already the
        // first-order logarithm.
        Ok(rej)
    } else {
        Err(Error::out_of_domain(
            "sphere logarithm is undefined for antipodal points",
        ))
    }
}

/// Parallel transport of `x` along the geodesic from `p` with initial
/// velocity `d`, evaluated at `exp_p(d)`.
pub fn parallel_transport(p: &DVector<f64>, d: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let theta = d.norm();
    if theta < ANTIPODAL_TOL {
        return x.clone();
    }
    let u = d / theta;
    let a = u.dot(x);
    let mut out = x - a * &u + a * (theta.cos() * &u - theta.sin() * p);
    // Re-project onto the tangent space at the endpoint to remove rounding
    // drift before downstream tangency checks.
    let q = exp(p, d);
    let qn = q.dot(&out);
    out -= qn * q;
    out
}

/// Differential of `exp_p` at `v`, applied to a tangent `u` at `p`.
///
/// Writing `r = ‖v‖`, the geodesic `γ(v) = cos(r) p + sinc(r) v` has
///
/// ```text
/// D exp_p(v)[u] = −sin(r) (⟨v,u⟩/r) p + sinc(r) u + dsinc_over_t(r) ⟨v,u⟩ v
/// ```
pub fn dexp(p: &DVector<f64>, v: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    let r = v.norm();
    let vu = v.dot(u);
    let radial = if r < 1e-12 {
        // −sin(r)/r → −1·r → 0 scale; the whole term vanishes smoothly.
        0.0
    } else {
        -r.sin() * (vu / r)
    };
    radial * p + sinc(r) * u + dsinc_over_t(r) * vu * v
}

/// Geodesic distance.
pub fn distance(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    let c = p.dot(q).clamp(-1.0, 1.0);
    let rej = q - c * p;
    rej.norm().atan2(c)
}
