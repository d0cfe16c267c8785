//! Wrapped Gaussian distributions on manifolds.
//!
//! A belief is a mean point together with a covariance matrix expressed in
//! the orthonormal tangent basis at that mean.  Sampling pushes a flat
//! Gaussian through the exponential map ("exponential-wrapped" normal);
//! densities come in two flavours: the *concentrated* density ignores the
//! curvature of the exponential map, the *wrapped* density multiplies in the
//! volume density `ν` (the Jacobian determinant of the exponential map).
//! All densities are unnormalized — filters only ever use ratios and argmax,
//! and normalization constants on curved spaces are intractable.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{sphere, Manifold, NormalChart, Point};
use crate::linalg;

/// Central finite-difference step for the volume density and its gradient.
pub const FD_STEP_GRADIENT: f64 = 1e-4;
/// Central finite-difference step for Hessians of the log volume density.
pub const FD_STEP_HESSIAN: f64 = 1e-3;

/// A Gaussian distribution wrapped onto a manifold: mean point plus a
/// covariance matrix in the tangent basis at the mean.
#[derive(Debug, Clone)]
pub struct GaussianBelief {
    /// Mean point (ambient representation).
    pub mean: Point,
    /// `d×d` covariance in the orthonormal basis at [`Self::mean`].
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: Point, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    /// Dimension of the covariance (the manifold dimension).
    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }
}

fn check_belief(manifold: &Manifold, belief: &GaussianBelief) -> Result<()> {
    manifold.check_point(&belief.mean)?;
    let d = manifold.dim();
    if belief.cov.nrows() != d || belief.cov.ncols() != d {
        return Err(Error::DimensionMismatch {
            what: "covariance",
            expected: d,
            got: belief.cov.nrows(),
        });
    }
    Ok(())
}

/// Draws one sample: `exp_μ(B_μ · F z)` with `F Fᵀ = Σ` and `z` standard
/// normal.  Deterministic given the RNG state; a zero covariance returns the
/// mean exactly.
pub fn sample_wrapped<R: Rng + ?Sized>(
    manifold: &Manifold,
    belief: &GaussianBelief,
    rng: &mut R,
) -> Result<Point> {
    check_belief(manifold, belief)?;
    let factor = linalg::psd_sqrt(&belief.cov)?;
    let z = DVector::from_fn(factor.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let basis = manifold.basis_at(&belief.mean)?;
    manifold.exp(&belief.mean, &basis.from_coeffs(&(factor * z)))
}

/// Unnormalized concentrated density `exp(−½ cᵀ Σ⁻¹ c)` with
/// `c = c(log_μ p)`; equal to 1 at the mean.
pub fn pdf_concentrated(manifold: &Manifold, belief: &GaussianBelief, p: &Point) -> Result<f64> {
    check_belief(manifold, belief)?;
    let chart = NormalChart::new(manifold, &belief.mean)?;
    let c = chart.to_coords(p)?;
    let chol = linalg::psd_clamp(&belief.cov)
        .cholesky()
        .ok_or_else(|| Error::DegenerateCovariance {
            context: "density requires a positive-definite covariance".to_string(),
        })?;
    Ok((-0.5 * c.dot(&chol.solve(&c))).exp())
}

/// Unnormalized wrapped density: concentrated density times the volume
/// density of the exponential map at the mean.
pub fn pdf_wrapped(manifold: &Manifold, belief: &GaussianBelief, p: &Point) -> Result<f64> {
    let concentrated = pdf_concentrated(manifold, belief, p)?;
    let nu = volume_density(manifold, &belief.mean, p)?;
    Ok(concentrated * nu)
}

/// Volume density `ν_p(q) = |det D exp_p|` at `log_p q`, expressed in
/// orthonormal frames.  Identically 1 on Euclidean space; `(sin θ/θ)^{n−1}`
/// on `Sⁿ`; computed by central finite differences elsewhere.
pub fn volume_density(manifold: &Manifold, p: &Point, q: &Point) -> Result<f64> {
    match manifold {
        Manifold::Euclidean { .. } => {
            manifold.check_point(p)?;
            manifold.check_point(q)?;
            Ok(1.0)
        }
        Manifold::Sphere { n } => {
            let theta = manifold.distance(p, q)?;
            Ok(sphere::sinc(theta).powi(*n as i32 - 1))
        }
        _ => volume_density_fd(manifold, p, q, FD_STEP_GRADIENT),
    }
}

/// Finite-difference volume density: the Jacobian of `x ↦ exp_p(ĉx)` at
/// `x = log-coordinates of q`, column `j` obtained by differencing the
/// perturbed points through the logarithm at `q` (representation-uniform, so
/// it also works on tangent bundles, where the retraction pair stands in for
/// exp/log).  Exposed separately so closed forms can be cross-checked.
pub fn volume_density_fd(manifold: &Manifold, p: &Point, q: &Point, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::invalid_input("finite-difference step must be positive"));
    }
    let chart = NormalChart::new(manifold, p)?;
    let x = chart.to_coords(q)?;
    let d = x.len();
    let basis_q = manifold.basis_at(q)?;
    let mut jacobian = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut forward = x.clone();
        forward[j] += step;
        let mut backward = x.clone();
        backward[j] -= step;
        let plus = basis_q.to_coeffs(&manifold.inverse_retract(q, &chart.from_coords(&forward)?)?);
        let minus = basis_q.to_coeffs(&manifold.inverse_retract(q, &chart.from_coords(&backward)?)?);
        jacobian.set_column(j, &((plus - minus) / (2.0 * step)));
    }
    Ok(jacobian.determinant().abs())
}

/// Gradient and Hessian of `x ↦ log ν_{p_ref}(exp_{p_ref}(ĉx))` at `x = 0`,
/// by central finite differences (both exactly zero on Euclidean space).
pub fn log_volume_correction(
    manifold: &Manifold,
    p_ref: &Point,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = manifold.dim();
    if matches!(manifold, Manifold::Euclidean { .. }) {
        manifold.check_point(p_ref)?;
        return Ok((DVector::zeros(d), DMatrix::zeros(d, d)));
    }
    let chart = NormalChart::new(manifold, p_ref)?;
    let log_nu = |x: &DVector<f64>| -> Result<f64> {
        Ok(volume_density(manifold, p_ref, &chart.from_coords(x)?)?.ln())
    };

    let h = FD_STEP_GRADIENT;
    let mut gradient = DVector::zeros(d);
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = h;
        gradient[i] = (log_nu(&e)? - log_nu(&(-e.clone()))?) / (2.0 * h);
    }

    let h = FD_STEP_HESSIAN;
    let center = log_nu(&DVector::zeros(d))?;
    let mut hessian = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let mut offset = DVector::zeros(d);
            if i == j {
                offset[i] = h;
                let plus = log_nu(&offset)?;
                offset[i] = -h;
                let minus = log_nu(&offset)?;
                hessian[(i, i)] = (plus - 2.0 * center + minus) / (h * h);
            } else {
                offset[i] = h;
                offset[j] = h;
                let pp = log_nu(&offset)?;
                offset[j] = -h;
                let pm = log_nu(&offset)?;
                offset[i] = -h;
                let mm = log_nu(&offset)?;
                offset[j] = h;
                let mp = log_nu(&offset)?;
                let value = (pp - pm - mp + mm) / (4.0 * h * h);
                hessian[(i, j)] = value;
                hessian[(j, i)] = value;
            }
        }
    }
    Ok((gradient, hessian))
}

/// Weighted second moment `Σᵢ wᵢ c(Xᵢ) c(Xᵢ)ᵀ` of the log-coordinates of
/// `points` about `base`; output symmetrized.
pub fn empirical_covariance(
    manifold: &Manifold,
    base: &Point,
    points: &[Point],
    weights: &[f64],
) -> Result<DMatrix<f64>> {
    if points.len() != weights.len() {
        return Err(Error::invalid_input(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid_input("weights must be finite"));
    }
    let chart = NormalChart::new(manifold, base)?;
    let coords = points
        .iter()
        .map(|p| chart.to_coords(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(linalg::symmetrize(&linalg::weighted_outer_sum(&coords, weights)))
}
