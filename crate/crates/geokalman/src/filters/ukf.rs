//! Unscented Kalman filter on manifolds: sigma points, exponential
//! barycenters, prediction and update.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filters::jacobian::{noise_jacobian, NOISE_JACOBIAN_STEP};
use crate::filters::transport::transport_covariance;
use crate::filters::{DiscreteSystem, FilterState};
use crate::geometry::{Manifold, NormalChart, Point, Tangent};
use crate::linalg;
use crate::stats::GaussianBelief;

/// Default convergence tolerance for [`exponential_barycenter`].
pub const BARYCENTER_TOLERANCE: f64 = 1e-10;
/// Default iteration cap for [`exponential_barycenter`].
pub const BARYCENTER_MAX_ITERATIONS: usize = 100;

/// Scaled unscented-transform parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaConfig {
    /// Spread of the sigma points around the mean (`α > 0`).
    pub alpha: f64,
    /// Secondary scaling (`κ ≥ 0`).
    pub kappa: f64,
    /// Prior-knowledge parameter for the covariance weight (`β ≥ 0`;
    /// 2 is optimal for Gaussian priors).
    pub beta: f64,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            kappa: 0.0,
            beta: 2.0,
        }
    }
}

impl SigmaConfig {
    /// The composite scaling `λ = α²(d + κ) − d`.
    pub fn lambda(&self, d: usize) -> f64 {
        self.alpha * self.alpha * (d as f64 + self.kappa) - d as f64
    }

    fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.kappa >= 0.0 && self.beta >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig {
                context: format!(
                    "sigma-point parameters require α > 0, κ ≥ 0, β ≥ 0 (got α = {}, κ = {}, β = {})",
                    self.alpha, self.kappa, self.beta
                ),
            })
        }
    }
}

/// A sigma-point set: `2d + 1` points with mean and covariance weights.
#[derive(Debug, Clone)]
pub struct SigmaPoints {
    pub points: Vec<Point>,
    pub mean_weights: Vec<f64>,
    pub cov_weights: Vec<f64>,
}

/// Draws the `2d + 1` scaled sigma points of a belief: the mean, plus the
/// exponentials of `±` the columns of a square root of `(d + λ)Σ` through
/// the basis at the mean.  A singular covariance degrades gracefully (a zero
/// covariance collapses every point onto the mean); substantially negative
/// eigenvalues are a degenerate-covariance error.
pub fn sigma_points(
    manifold: &Manifold,
    belief: &GaussianBelief,
    cfg: &SigmaConfig,
) -> Result<SigmaPoints> {
    cfg.validate()?;
    manifold.check_point(&belief.mean)?;
    let d = manifold.dim();
    if belief.cov.nrows() != d || belief.cov.ncols() != d {
        return Err(Error::DimensionMismatch {
            what: "covariance",
            expected: d,
            got: belief.cov.nrows(),
        });
    }
    let lambda = cfg.lambda(d);
    let scale = d as f64 + lambda;
    let factor = linalg::psd_sqrt(&(scale * &belief.cov))?;
    let basis = manifold.basis_at(&belief.mean)?;
    let mut points = Vec::with_capacity(2 * d + 1);
    points.push(belief.mean.clone());
    for sign in [1.0, -1.0] {
        for j in 0..d {
            let offset = basis.from_coeffs(&(sign * factor.column(j)));
            points.push(manifold.retract(&belief.mean, &offset)?);
        }
    }
    let w_rest = 0.5 / scale;
    let mut mean_weights = vec![w_rest; 2 * d + 1];
    mean_weights[0] = lambda / scale;
    let mut cov_weights = mean_weights.clone();
    cov_weights[0] += 1.0 - cfg.alpha * cfg.alpha + cfg.beta;
    Ok(SigmaPoints {
        points,
        mean_weights,
        cov_weights,
    })
}

/// Weighted exponential barycenter: iterates `p ← exp_p(Σᵢ wᵢ log_p xᵢ)`
/// from `init` until the update step drops below `tol`, failing with a
/// divergence error after `max_iter` iterations.
pub fn exponential_barycenter(
    manifold: &Manifold,
    points: &[Point],
    weights: &[f64],
    init: &Point,
    tol: f64,
    max_iter: usize,
) -> Result<Point> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::invalid_input(format!(
            "barycenter needs matching non-empty inputs ({} points, {} weights)",
            points.len(),
            weights.len()
        )));
    }
    let mut p = init.clone();
    for _ in 0..max_iter {
        let mut mean_tangent = DVector::zeros(manifold.ambient_len());
        for (x, &w) in points.iter().zip(weights) {
            mean_tangent += w * manifold.inverse_retract(&p, x)?.coords;
        }
        let step = Tangent::new(mean_tangent);
        let size = step.norm();
        p = manifold.retract(&p, &step)?;
        if size < tol {
            return Ok(p);
        }
    }
    Err(Error::BarycenterDiverged {
        iterations: max_iter,
    })
}

/// Result of one UKF prediction, retaining the process-noise linearization
/// for later adaptation.
#[derive(Debug)]
pub struct UkfPrediction {
    pub state: FilterState,
    /// `L`: process-noise Jacobian, charted at the predicted mean.
    pub process_noise_jacobian: DMatrix<f64>,
}

/// Result of one UKF measurement update.
#[derive(Debug)]
pub struct UkfUpdate {
    pub state: FilterState,
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    pub obs_noise_jacobian: DMatrix<f64>,
}

/// UKF prediction with an explicit control value and time: propagates the
/// sigma points through the noise-free dynamics, takes their exponential
/// barycenter as the predicted mean, accumulates the weighted spread in the
/// chart at that mean, and adds the linearized process noise `LQLᵀ`.
pub fn ukf_predict_full(
    sys: &DiscreteSystem,
    state: &FilterState,
    cfg: &SigmaConfig,
    control: &DVector<f64>,
    t: f64,
) -> Result<UkfPrediction> {
    let sp = sigma_points(&sys.state_space, &state.belief, cfg)?;
    let w0 = DVector::zeros(sys.process_noise_dim());
    let propagated = sp
        .points
        .iter()
        .map(|q| (sys.dynamics)(q, control, &w0, t))
        .collect::<Result<Vec<_>>>()?;
    let mean = exponential_barycenter(
        &sys.state_space,
        &propagated,
        &sp.mean_weights,
        &propagated[0],
        BARYCENTER_TOLERANCE,
        BARYCENTER_MAX_ITERATIONS,
    )?;
    let chart = NormalChart::new(&sys.state_space, &mean)?;
    let coords = propagated
        .iter()
        .map(|q| chart.to_coords(q))
        .collect::<Result<Vec<_>>>()?;
    let spread = linalg::weighted_outer_sum(&coords, &sp.cov_weights);
    let noise = noise_jacobian(
        |w| (sys.dynamics)(&state.belief.mean, control, w, t),
        &chart,
        w0.len(),
        NOISE_JACOBIAN_STEP,
    )?;
    let cov = linalg::symmetrize(&(spread + &noise * &state.process_cov * noise.transpose()));
    Ok(UkfPrediction {
        state: FilterState {
            belief: GaussianBelief::new(mean, cov),
            process_cov: state.process_cov.clone(),
            obs_cov: state.obs_cov.clone(),
            step: state.step + 1,
        },
        process_noise_jacobian: noise,
    })
}

/// UKF prediction; the control is read from the system at the state's own
/// time `step·dt`.
pub fn ukf_predict(
    sys: &DiscreteSystem,
    state: &FilterState,
    cfg: &SigmaConfig,
) -> Result<FilterState> {
    let t = state.step as f64 * sys.dt;
    Ok(ukf_predict_full(sys, state, cfg, &(sys.control)(t), t)?.state)
}

/// UKF measurement update with an explicit control value and time.  Draws a
/// fresh sigma-point set from the predicted belief (so the predicted
/// covariance, including its process-noise part, is represented exactly),
/// maps it through the noise-free measurement, and performs the standard
/// gain/update/reset in the charts at the expected observation and the
/// predicted mean.
pub fn ukf_update_full(
    sys: &DiscreteSystem,
    state: &FilterState,
    z: &Point,
    cfg: &SigmaConfig,
    control: &DVector<f64>,
    t: f64,
) -> Result<UkfUpdate> {
    let sp = sigma_points(&sys.state_space, &state.belief, cfg)?;
    let v0 = DVector::zeros(sys.obs_noise_dim());
    let measured = sp
        .points
        .iter()
        .map(|q| (sys.measurement)(q, control, &v0, t))
        .collect::<Result<Vec<_>>>()?;
    let expected = exponential_barycenter(
        &sys.obs_space,
        &measured,
        &sp.mean_weights,
        &measured[0],
        BARYCENTER_TOLERANCE,
        BARYCENTER_MAX_ITERATIONS,
    )?;
    let obs_chart = NormalChart::new(&sys.obs_space, &expected)?;
    let obs_coords = measured
        .iter()
        .map(|q| obs_chart.to_coords(q))
        .collect::<Result<Vec<_>>>()?;
    let state_chart = NormalChart::new(&sys.state_space, &state.belief.mean)?;
    let state_coords = sp
        .points
        .iter()
        .map(|q| state_chart.to_coords(q))
        .collect::<Result<Vec<_>>>()?;

    let obs_noise_jacobian = noise_jacobian(
        |v| (sys.measurement)(&state.belief.mean, control, v, t),
        &obs_chart,
        v0.len(),
        NOISE_JACOBIAN_STEP,
    )?;
    let wrw = &obs_noise_jacobian * &state.obs_cov * obs_noise_jacobian.transpose();
    let innovation_cov = linalg::symmetrize(
        &(linalg::weighted_outer_sum(&obs_coords, &sp.cov_weights) + wrw),
    );
    let d = sys.state_space.dim();
    let d_obs = sys.obs_space.dim();
    let mut cross = DMatrix::zeros(d, d_obs);
    for ((x, y), &w) in state_coords.iter().zip(&obs_coords).zip(&sp.cov_weights) {
        cross += w * x * y.transpose();
    }
    let gain = linalg::solve_spd(&innovation_cov, &cross.transpose())?.transpose();
    let innovation = obs_chart.to_coords(z)?;

    let basis = sys.state_space.basis_at(&state.belief.mean)?;
    let new_mean = sys
        .state_space
        .retract(&state.belief.mean, &basis.from_coeffs(&(&gain * &innovation)))?;
    let posterior = linalg::symmetrize(
        &(&state.belief.cov - &gain * &innovation_cov * gain.transpose()),
    );
    let cov = transport_covariance(&sys.state_space, &state.belief.mean, &new_mean, &posterior)?;
    Ok(UkfUpdate {
        state: FilterState {
            belief: GaussianBelief::new(new_mean, cov),
            process_cov: state.process_cov.clone(),
            obs_cov: state.obs_cov.clone(),
            step: state.step,
        },
        innovation,
        innovation_cov,
        gain,
        obs_noise_jacobian,
    })
}

/// UKF measurement update; the control is read from the system at the
/// state's own time `step·dt`.
pub fn ukf_update(
    sys: &DiscreteSystem,
    state: &FilterState,
    z: &Point,
    cfg: &SigmaConfig,
) -> Result<FilterState> {
    let t = state.step as f64 * sys.dt;
    Ok(ukf_update_full(sys, state, z, cfg, &(sys.control)(t), t)?.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::tests::{flat_system, textbook_kf_step, FlatModel};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigma_point_example_has_the_documented_weights() {
        // d = 2, P = I, α = 1, κ = 1: λ = 1, offsets ±√3·eⱼ,
        // mean weights [1/3, 1/6, 1/6, 1/6, 1/6].
        let m = Manifold::euclidean(2);
        let belief = GaussianBelief::new(Point::from_slice(&[0.0, 0.0]), DMatrix::identity(2, 2));
        let cfg = SigmaConfig {
            alpha: 1.0,
            kappa: 1.0,
            beta: 2.0,
        };
        let sp = sigma_points(&m, &belief, &cfg).unwrap();
        assert_eq!(sp.points.len(), 5);
        let root3 = 3.0f64.sqrt();
        assert_relative_eq!(sp.points[1].coords[0], root3, epsilon = 1e-15);
        assert_relative_eq!(sp.points[2].coords[1], root3, epsilon = 1e-15);
        assert_relative_eq!(sp.points[3].coords[0], -root3, epsilon = 1e-15);
        assert_relative_eq!(sp.points[4].coords[1], -root3, epsilon = 1e-15);
        let third = 1.0 / 3.0;
        let sixth = 1.0 / 6.0;
        for (w, expected) in sp
            .mean_weights
            .iter()
            .zip([third, sixth, sixth, sixth, sixth])
        {
            assert_relative_eq!(*w, expected, epsilon = 1e-15);
        }
        assert_relative_eq!(sp.cov_weights[0], third + 2.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_covariance_collapses_all_sigma_points_onto_the_mean() {
        let m = Manifold::sphere(2);
        let mean = Point::from_slice(&[0.0, 1.0, 0.0]);
        let belief = GaussianBelief::new(mean.clone(), DMatrix::zeros(2, 2));
        let sp = sigma_points(&m, &belief, &SigmaConfig::default()).unwrap();
        for p in &sp.points {
            assert_eq!(p.coords, mean.coords);
        }
    }

    #[test]
    fn mean_weights_sum_to_one_and_reproduce_the_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = Manifold::euclidean(3);
        for _ in 0..20 {
            let cfg = SigmaConfig {
                alpha: rng.random_range(0.3..1.5),
                kappa: rng.random_range(0.0..2.0),
                beta: rng.random_range(0.0..3.0),
            };
            let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let cov = &a * a.transpose() + DMatrix::identity(3, 3) * 0.1;
            let mean = m.random_point(&mut rng);
            let belief = GaussianBelief::new(mean.clone(), cov.clone());
            let sp = sigma_points(&m, &belief, &cfg).unwrap();
            let total: f64 = sp.mean_weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            // On flat space the weighted spread reproduces the covariance.
            let chart = NormalChart::new(&m, &mean).unwrap();
            let coords: Vec<_> = sp.points.iter().map(|p| chart.to_coords(p).unwrap()).collect();
            let spread = linalg::weighted_outer_sum(&coords, &sp.cov_weights);
            assert_relative_eq!(spread, cov, epsilon = 1e-10);
        }
    }

    #[test]
    fn barycenter_of_sigma_points_recovers_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for m in [
            Manifold::euclidean(3),
            Manifold::sphere(2),
            Manifold::special_euclidean(2).unwrap(),
        ] {
            let d = m.dim();
            let mean = m.random_point(&mut rng);
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.2..0.2));
            let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.05;
            let belief = GaussianBelief::new(mean.clone(), cov);
            let sp = sigma_points(&m, &belief, &SigmaConfig::default()).unwrap();
            let recovered = exponential_barycenter(
                &m,
                &sp.points,
                &sp.mean_weights,
                &sp.points[1],
                BARYCENTER_TOLERANCE,
                BARYCENTER_MAX_ITERATIONS,
            )
            .unwrap();
            let err = m.distance(&mean, &recovered).unwrap();
            assert!(err < 1e-8, "barycenter error {err} on {m}");
        }
    }

    #[test]
    fn barycenter_matches_a_gradient_descent_frechet_mean() {
        // Independent oracle: damped gradient descent (step 0.5) on the
        // Fréchet objective.
        let m = Manifold::sphere(2);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let center = m.random_point(&mut rng);
        let points: Vec<Point> = (0..6)
            .map(|_| {
                let x = m.random_tangent(&mut rng, &center, 0.4);
                m.retract(&center, &x).unwrap()
            })
            .collect();
        let raw: Vec<f64> = (0..6).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();

        let mut oracle = points[0].clone();
        for _ in 0..400 {
            let mut grad = DVector::zeros(3);
            for (x, &w) in points.iter().zip(&weights) {
                grad += w * m.log(&oracle, x).unwrap().coords;
            }
            if grad.norm() < 1e-12 {
                break;
            }
            oracle = m.exp(&oracle, &Tangent::new(0.5 * grad)).unwrap();
        }

        let fast = exponential_barycenter(&m, &points, &weights, &points[0], 1e-12, 200).unwrap();
        assert!(m.distance(&oracle, &fast).unwrap() < 1e-8);
    }

    #[test]
    fn barycenter_reports_divergence_when_iterations_run_out() {
        let m = Manifold::sphere(2);
        let points = vec![
            Point::from_slice(&[1.0, 0.0, 0.0]),
            Point::from_slice(&[0.0, 1.0, 0.0]),
        ];
        let err = exponential_barycenter(&m, &points, &[0.5, 0.5], &points[0], 1e-14, 0)
            .unwrap_err();
        assert!(matches!(err, Error::BarycenterDiverged { .. }));
    }

    #[test]
    fn flat_ukf_matches_the_textbook_kalman_filter() {
        let model = FlatModel::example();
        let sys = flat_system(&model);
        let cfg = SigmaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let mut state = model.initial_state();
        let (mut kf_mean, mut kf_cov) = model.initial_flat();
        for _ in 0..50 {
            let z: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z = Point::from_slice(&z);
            let predicted = ukf_predict(&sys, &state, &cfg).unwrap();
            state = ukf_update(&sys, &predicted, &z, &cfg).unwrap();
            let (mn, cv) = textbook_kf_step(&model, &kf_mean, &kf_cov, &z.coords);
            kf_mean = mn;
            kf_cov = cv;
            assert!((&state.belief.mean.coords - &kf_mean).norm() < 1e-6);
            assert!((&state.belief.cov - &kf_cov).norm() < 1e-6);
        }
    }
}
