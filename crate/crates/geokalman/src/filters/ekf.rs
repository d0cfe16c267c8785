//! Extended Kalman filter on manifolds.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::filters::jacobian::{chart_jacobian, default_step, noise_jacobian, NOISE_JACOBIAN_STEP};
use crate::filters::transport::transport_covariance;
use crate::filters::{DiscreteSystem, FilterState, UpdateModel};
use crate::geometry::NormalChart;
use crate::linalg;
use crate::stats::{log_volume_correction, GaussianBelief};

/// Result of one EKF prediction, retaining the linearizations for later
/// noise adaptation.
#[derive(Debug)]
pub struct EkfPrediction {
    pub state: FilterState,
    /// `F`: state-transition Jacobian in normal coordinates.
    pub transition: DMatrix<f64>,
    /// `L`: process-noise Jacobian at zero noise.
    pub process_noise_jacobian: DMatrix<f64>,
}

/// Result of one EKF measurement update, retaining the innovation terms
/// needed by noise adaptation.
#[derive(Debug)]
pub struct EkfUpdate {
    pub state: FilterState,
    /// `y`: innovation, the measurement in the chart at the expected
    /// observation.
    pub innovation: DVector<f64>,
    /// `S`: innovation covariance.
    pub innovation_cov: DMatrix<f64>,
    /// `K`: Kalman gain.
    pub gain: DMatrix<f64>,
    /// `H`: observation Jacobian.
    pub observation: DMatrix<f64>,
    /// `W`: observation-noise Jacobian.
    pub obs_noise_jacobian: DMatrix<f64>,
}

/// EKF prediction with an explicit control value and time.
pub fn ekf_predict_full(
    sys: &DiscreteSystem,
    state: &FilterState,
    control: &DVector<f64>,
    t: f64,
) -> Result<EkfPrediction> {
    let p = &state.belief.mean;
    let w0 = DVector::zeros(sys.process_noise_dim());
    let predicted_mean = (sys.dynamics)(p, control, &w0, t)?;
    let transition = chart_jacobian(
        &sys.state_space,
        &sys.state_space,
        |x| (sys.dynamics)(x, control, &w0, t),
        p,
        default_step(p),
    )?;
    let chart = NormalChart::new(&sys.state_space, &predicted_mean)?;
    let process_noise_jacobian = noise_jacobian(
        |w| (sys.dynamics)(p, control, w, t),
        &chart,
        w0.len(),
        NOISE_JACOBIAN_STEP,
    )?;
    let cov = linalg::symmetrize(
        &(&transition * &state.belief.cov * transition.transpose()
            + &process_noise_jacobian * &state.process_cov * process_noise_jacobian.transpose()),
    );
    Ok(EkfPrediction {
        state: FilterState {
            belief: GaussianBelief::new(predicted_mean, cov),
            process_cov: state.process_cov.clone(),
            obs_cov: state.obs_cov.clone(),
            step: state.step + 1,
        },
        transition,
        process_noise_jacobian,
    })
}

/// EKF prediction; the control is read from the system at the state's own
/// time `step·dt`.
pub fn ekf_predict(sys: &DiscreteSystem, state: &FilterState) -> Result<FilterState> {
    let t = state.step as f64 * sys.dt;
    Ok(ekf_predict_full(sys, state, &(sys.control)(t), t)?.state)
}

/// EKF measurement update with an explicit control value and time.
///
/// The `Concentrated` model is the standard update in the chart at the
/// expected observation.  `WrappedQuadratic` augments the prior with the
/// quadratic approximation of the log volume density at the predicted mean
/// (gradient `g`, Hessian `Λ`): the prior covariance becomes
/// `P̃ = (P⁻¹ − Λ)⁻¹` and the correction gains an extra `(I − K̃H) P̃ g`
/// term.  On flat spaces `g` and `Λ` vanish and the two models coincide
/// exactly.
pub fn ekf_update_full(
    sys: &DiscreteSystem,
    state: &FilterState,
    z: &crate::geometry::Point,
    model: UpdateModel,
    control: &DVector<f64>,
    t: f64,
) -> Result<EkfUpdate> {
    let p = &state.belief.mean;
    let v0 = DVector::zeros(sys.obs_noise_dim());
    let expected = (sys.measurement)(p, control, &v0, t)?;
    let observation = chart_jacobian(
        &sys.state_space,
        &sys.obs_space,
        |x| (sys.measurement)(x, control, &v0, t),
        p,
        default_step(p),
    )?;
    let obs_chart = NormalChart::new(&sys.obs_space, &expected)?;
    let obs_noise_jacobian = noise_jacobian(
        |v| (sys.measurement)(p, control, v, t),
        &obs_chart,
        v0.len(),
        NOISE_JACOBIAN_STEP,
    )?;
    let innovation = obs_chart.to_coords(z)?;

    let (prior_cov, drift) = match model {
        UpdateModel::Concentrated => (state.belief.cov.clone(), None),
        UpdateModel::WrappedQuadratic => {
            let (gradient, hessian) = log_volume_correction(&sys.state_space, p)?;
            if gradient.iter().all(|v| *v == 0.0) && hessian.iter().all(|v| *v == 0.0) {
                (state.belief.cov.clone(), None)
            } else {
                let p_inv = linalg::spd_inverse(&linalg::psd_clamp(&state.belief.cov))?;
                let modified = linalg::spd_inverse(&linalg::psd_clamp(&(p_inv - &hessian)))?;
                (linalg::symmetrize(&modified), Some(gradient))
            }
        }
    };

    let wrw = &obs_noise_jacobian * &state.obs_cov * obs_noise_jacobian.transpose();
    let innovation_cov =
        linalg::symmetrize(&(&observation * &prior_cov * observation.transpose() + wrw));
    let gain = linalg::solve_spd(&innovation_cov, &(&observation * &prior_cov))?.transpose();

    let d = sys.state_space.dim();
    let correction = match &drift {
        None => &gain * &innovation,
        Some(g) => {
            &gain * &innovation
                + (DMatrix::identity(d, d) - &gain * &observation) * (&prior_cov * g)
        }
    };
    let basis = sys.state_space.basis_at(p)?;
    let new_mean = sys.state_space.retract(p, &basis.from_coeffs(&correction))?;
    let posterior = linalg::symmetrize(
        &(&prior_cov - &gain * &innovation_cov * gain.transpose()),
    );
    let cov = transport_covariance(&sys.state_space, p, &new_mean, &posterior)?;
    Ok(EkfUpdate {
        state: FilterState {
            belief: GaussianBelief::new(new_mean, cov),
            process_cov: state.process_cov.clone(),
            obs_cov: state.obs_cov.clone(),
            step: state.step,
        },
        innovation,
        innovation_cov,
        gain,
        observation,
        obs_noise_jacobian,
    })
}

/// EKF measurement update; the control is read from the system at the
/// state's own time `step·dt`.
pub fn ekf_update(
    sys: &DiscreteSystem,
    state: &FilterState,
    z: &crate::geometry::Point,
    model: UpdateModel,
) -> Result<FilterState> {
    let t = state.step as f64 * sys.dt;
    Ok(ekf_update_full(sys, state, z, model, &(sys.control)(t), t)?.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::tests::{flat_system, textbook_kf_step, FlatModel};
    use crate::geometry::{Manifold, Point, Tangent};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_ekf_matches_the_textbook_kalman_filter() {
        let model = FlatModel::example();
        let sys = flat_system(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut state = model.initial_state();
        let (mut kf_mean, mut kf_cov) = model.initial_flat();
        for _ in 0..50 {
            let z: Vec<f64> = (0..2)
                .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
                .collect();
            let z = Point::from_slice(&z);
            let predicted = ekf_predict(&sys, &state).unwrap();
            state = ekf_update(&sys, &predicted, &z, UpdateModel::Concentrated).unwrap();
            let (m, c) = textbook_kf_step(&model, &kf_mean, &kf_cov, &z.coords);
            kf_mean = m;
            kf_cov = c;
            assert!((&state.belief.mean.coords - &kf_mean).norm() < 1e-7);
            assert!((&state.belief.cov - &kf_cov).norm() < 1e-7);
        }
    }

    #[test]
    fn wrapped_update_equals_concentrated_on_flat_spaces() {
        let model = FlatModel::example();
        let sys = flat_system(&model);
        let state = ekf_predict(&sys, &model.initial_state()).unwrap();
        let z = Point::from_slice(&[0.4, -0.2]);
        let concentrated = ekf_update(&sys, &state, &z, UpdateModel::Concentrated).unwrap();
        let wrapped = ekf_update(&sys, &state, &z, UpdateModel::WrappedQuadratic).unwrap();
        assert_eq!(concentrated.belief.mean.coords, wrapped.belief.mean.coords);
        assert_eq!(concentrated.belief.cov, wrapped.belief.cov);
    }

    #[test]
    fn sphere_ekf_locks_onto_a_static_target() {
        // Static state on S², direct (noisy-exp) observations of the state.
        let sphere = Manifold::sphere(2);
        let truth = Point::from_slice(&[0.0, 0.0, 1.0]);
        let sys = DiscreteSystem {
            state_space: sphere.clone(),
            obs_space: sphere.clone(),
            dt: 1.0,
            dynamics: Box::new(|p, _q, w, _t| {
                let m = Manifold::sphere(2);
                let basis = m.basis_at(p)?;
                m.retract(p, &basis.from_coeffs(w))
            }),
            measurement: Box::new(|p, _q, v, _t| {
                let m = Manifold::sphere(2);
                let basis = m.basis_at(p)?;
                m.retract(p, &basis.from_coeffs(v))
            }),
            control: Box::new(|_t| nalgebra::DVector::zeros(0)),
        };
        let start = sphere
            .retract(&truth, &Tangent::from_slice(&[0.0, 0.5, -0.4]))
            .unwrap();
        let mut state = FilterState::new(
            GaussianBelief::new(start, DMatrix::identity(2, 2) * 0.5),
            DMatrix::identity(2, 2) * 1e-6,
            DMatrix::identity(2, 2) * 0.01,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let noisy = {
                let basis = sphere.basis_at(&truth).unwrap();
                let v = nalgebra::DVector::from_fn(2, |_, _| {
                    0.1 * rand::Rng::random_range(&mut rng, -1.0..1.0)
                });
                sphere.retract(&truth, &basis.from_coeffs(&v)).unwrap()
            };
            let predicted = ekf_predict(&sys, &state).unwrap();
            state = ekf_update(&sys, &predicted, &noisy, UpdateModel::Concentrated).unwrap();
        }
        let error = sphere.distance(&truth, &state.belief.mean).unwrap();
        assert!(error < 0.05, "final error {error}");
        assert_relative_eq!(state.belief.mean.coords.norm(), 1.0, epsilon = 1e-12);
    }
}
