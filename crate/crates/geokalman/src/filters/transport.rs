//! Parallel transport of covariance matrices between tangent bases.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::geometry::{Manifold, Point};
use crate::linalg;

/// Moves a covariance matrix expressed in the basis at `from` to the basis
/// at `to`: eigendecompose, parallel-transport each eigenvector along the
/// geodesic `log_from(to)`, and reassemble with unchanged eigenvalues.  For
/// an isometric transport this is exactly the coordinate expression of the
/// transported 2-tensor.
pub fn transport_covariance(
    manifold: &Manifold,
    from: &Point,
    to: &Point,
    cov: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let direction = manifold.inverse_retract(from, to)?;
    let basis_from = manifold.basis_at(from)?;
    let basis_to = manifold.basis_at(to)?;
    let eig = linalg::symmetrize(cov).symmetric_eigen();
    let d = cov.nrows();
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        let vector = basis_from.from_coeffs(&eig.eigenvectors.column(j).into_owned());
        let moved = manifold.parallel_transport(from, &direction, &vector)?;
        let coeffs = basis_to.to_coeffs(&moved);
        out += eig.eigenvalues[j] * &coeffs * coeffs.transpose();
    }
    Ok(linalg::symmetrize(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(d, d, |_, _| {
            rand::Rng::random_range(rng, -1.0..1.0)
        });
        &m * m.transpose() + DMatrix::identity(d, d) * 0.3
    }

    #[test]
    fn flat_transport_is_the_identity() {
        let m = Manifold::euclidean(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = m.random_point(&mut rng);
        let q = m.random_point(&mut rng);
        let cov = random_spd(&mut rng, 3);
        let moved = transport_covariance(&m, &p, &q, &cov).unwrap();
        assert_relative_eq!(moved, linalg::symmetrize(&cov), epsilon = 1e-12);
    }

    #[test]
    fn eigenvalues_are_preserved_on_curved_manifolds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in [Manifold::sphere(2), Manifold::rotations(3).unwrap()] {
            let d = m.dim();
            for _ in 0..5 {
                let p = m.random_point(&mut rng);
                let q = m.random_point(&mut rng);
                let cov = random_spd(&mut rng, d);
                let moved = transport_covariance(&m, &p, &q, &cov).unwrap();
                let mut before: Vec<f64> =
                    linalg::symmetrize(&cov).symmetric_eigen().eigenvalues.iter().copied().collect();
                let mut after: Vec<f64> = moved.symmetric_eigen().eigenvalues.iter().copied().collect();
                before.sort_by(f64::total_cmp);
                after.sort_by(f64::total_cmp);
                for (b, a) in before.iter().zip(&after) {
                    assert!((b - a).abs() < 1e-12, "{b} vs {a} on {m}");
                }
            }
        }
    }

    #[test]
    fn round_trip_restores_the_covariance() {
        let m = Manifold::sphere(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = m.random_point(&mut rng);
        let q = m.random_point(&mut rng);
        let cov = random_spd(&mut rng, 2);
        let there = transport_covariance(&m, &p, &q, &cov).unwrap();
        let back = transport_covariance(&m, &q, &p, &there).unwrap();
        assert_relative_eq!(back, linalg::symmetrize(&cov), epsilon = 1e-10);
    }
}
