//! Kalman filtering on manifolds: shared system/state types, the EKF and
//! UKF steps, covariance transport, and noise adaptation.
//!
//! A [`DiscreteSystem`] bundles a state manifold, an observation manifold,
//! and the discrete dynamics/measurement maps
//! `f̃(p, q, w, t)` / `h̃(p, q, v, t)` (state, control, noise, time).  Filters
//! carry a [`FilterState`]: the current belief plus the process and
//! observation noise covariances (which adaptation may evolve) and the time
//! index.  Covariances always live in the orthonormal tangent basis at the
//! belief mean; after every measurement update they are parallel-transported
//! to the basis at the new mean.

mod adapt;
mod ekf;
mod jacobian;
mod transport;
mod ukf;

pub use adapt::{adapt_noise, AdaptConfig, AdaptMode};
pub use ekf::{ekf_predict, ekf_predict_full, ekf_update, ekf_update_full, EkfPrediction, EkfUpdate};
pub use jacobian::{chart_jacobian, default_step, JacobianSet, NOISE_JACOBIAN_STEP};
pub use transport::transport_covariance;
pub use ukf::{
    exponential_barycenter, sigma_points, ukf_predict, ukf_predict_full, ukf_update,
    ukf_update_full, SigmaConfig, SigmaPoints, UkfPrediction, UkfUpdate,
    BARYCENTER_MAX_ITERATIONS, BARYCENTER_TOLERANCE,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point};
use crate::stats::GaussianBelief;

/// A discrete transition or measurement map `(p, control, noise, t) → point`.
pub type SystemFn =
    Box<dyn Fn(&Point, &DVector<f64>, &DVector<f64>, f64) -> Result<Point> + Send + Sync>;
/// A control signal `t → control vector`.
pub type ControlFn = Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// A discrete-time system on manifolds.
pub struct DiscreteSystem {
    pub state_space: Manifold,
    pub obs_space: Manifold,
    /// Time step between consecutive measurements.
    pub dt: f64,
    /// Transition map `f̃(p, q, w, t)`; the process noise `w` has the state
    /// dimension and enters with `w = 0` for the noise-free propagation.
    pub dynamics: SystemFn,
    /// Measurement map `h̃(p, q, v, t)` with observation noise `v` of the
    /// observation dimension.
    pub measurement: SystemFn,
    /// Control signal evaluated at multiples of `dt`.
    pub control: ControlFn,
}

impl DiscreteSystem {
    /// Dimension of the process-noise vector (the state dimension).
    pub fn process_noise_dim(&self) -> usize {
        self.state_space.dim()
    }

    /// Dimension of the observation-noise vector (the observation
    /// dimension).
    pub fn obs_noise_dim(&self) -> usize {
        self.obs_space.dim()
    }
}

impl std::fmt::Debug for DiscreteSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteSystem")
            .field("state_space", &self.state_space)
            .field("obs_space", &self.obs_space)
            .field("dt", &self.dt)
            .finish_non_exhaustive()
    }
}

/// Belief plus noise models at one time index.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub belief: GaussianBelief,
    /// Process-noise covariance `Q` currently assumed by the filter.
    pub process_cov: DMatrix<f64>,
    /// Observation-noise covariance `R` currently assumed by the filter.
    pub obs_cov: DMatrix<f64>,
    /// Time index `n`: the state estimates the system at `t = n·dt`.
    pub step: usize,
}

impl FilterState {
    /// A filter state at time index 0.
    pub fn new(belief: GaussianBelief, process_cov: DMatrix<f64>, obs_cov: DMatrix<f64>) -> Self {
        Self {
            belief,
            process_cov,
            obs_cov,
            step: 0,
        }
    }
}

/// Which measurement-update model the EKF uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateModel {
    /// Standard update in the chart at the expected observation.
    #[default]
    Concentrated,
    /// Update with the quadratic volume-density correction of the wrapped
    /// prior (coincides with `Concentrated` on flat spaces).
    WrappedQuadratic,
}

/// Filter selection for [`run_filter`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterAlgorithm {
    Ekf {
        model: UpdateModel,
        /// Noise adaptation applied after each update, if any.
        adapt: Option<AdaptConfig>,
    },
    Ukf {
        sigma: SigmaConfig,
    },
}

impl FilterAlgorithm {
    /// Plain EKF with the concentrated update.
    pub fn ekf() -> Self {
        FilterAlgorithm::Ekf {
            model: UpdateModel::Concentrated,
            adapt: None,
        }
    }

    /// EKF with innovation-based noise adaptation.
    pub fn adaptive_ekf(adapt: AdaptConfig) -> Self {
        FilterAlgorithm::Ekf {
            model: UpdateModel::Concentrated,
            adapt: Some(adapt),
        }
    }

    /// UKF with the given sigma-point parameters.
    pub fn ukf(sigma: SigmaConfig) -> Self {
        FilterAlgorithm::Ukf { sigma }
    }
}

/// One recorded filter step: the prediction `p_{n|n−1}` (absent for the
/// initial entry) and the updated state `p_{n|n}`.
#[derive(Debug, Clone)]
pub struct FilterStep {
    pub predicted: Option<GaussianBelief>,
    pub state: FilterState,
}

/// Runs a filter over a measurement sequence.
///
/// `measurements[n−1]` is the observation at time `n·dt` (`n = 1..K`);
/// `controls` holds the realized control values `[q(0), …, q(K·dt)]`
/// (length `K + 1`): the `n`-th prediction consumes `controls[n−1]` at time
/// `(n−1)·dt`, the `n`-th update `controls[n]` at `n·dt`.  Returns the
/// initial state followed by one [`FilterStep`] per measurement; an empty
/// measurement list returns just the initial state.  Any step error aborts
/// the run with the failing step index; a non-applicable adaptation keeps
/// the previous noise covariances and continues.
pub fn run_filter(
    sys: &DiscreteSystem,
    algorithm: &FilterAlgorithm,
    init: &FilterState,
    measurements: &[Point],
    controls: &[DVector<f64>],
) -> Result<Vec<FilterStep>> {
    let count = measurements.len();
    if controls.len() != count + 1 {
        return Err(Error::invalid_input(format!(
            "{} measurements require {} control values, got {}",
            count,
            count + 1,
            controls.len()
        )));
    }
    let mut steps = Vec::with_capacity(count + 1);
    steps.push(FilterStep {
        predicted: None,
        state: init.clone(),
    });
    let mut current = init.clone();
    for n in 1..=count {
        let t_predict = (n - 1) as f64 * sys.dt;
        let t_update = n as f64 * sys.dt;
        let advanced: Result<(GaussianBelief, FilterState)> = (|| match algorithm {
            FilterAlgorithm::Ekf { model, adapt } => {
                let prediction =
                    ekf_predict_full(sys, &current, &controls[n - 1], t_predict)?;
                let update = ekf_update_full(
                    sys,
                    &prediction.state,
                    &measurements[n - 1],
                    *model,
                    &controls[n],
                    t_update,
                )?;
                let mut next = update.state;
                if let Some(cfg) = adapt {
                    match adapt_noise(
                        &next,
                        &update.innovation,
                        &update.innovation_cov,
                        &update.gain,
                        &prediction.process_noise_jacobian,
                        &update.obs_noise_jacobian,
                        cfg.alpha,
                        cfg.mode,
                    ) {
                        Ok((r_new, q_new)) => {
                            if cfg.adapt_obs {
                                next.obs_cov = r_new;
                            }
                            if cfg.adapt_process {
                                next.process_cov = q_new;
                            }
                        }
                        Err(Error::AdaptationNotApplicable { .. }) => {}
                        Err(other) => return Err(other),
                    }
                }
                Ok((prediction.state.belief, next))
            }
            FilterAlgorithm::Ukf { sigma } => {
                let prediction = ukf_predict_full(sys, &current, sigma, &controls[n - 1], t_predict)?;
                let update = ukf_update_full(
                    sys,
                    &prediction.state,
                    &measurements[n - 1],
                    sigma,
                    &controls[n],
                    t_update,
                )?;
                Ok((prediction.state.belief, update.state))
            }
        })();
        match advanced {
            Ok((predicted, next)) => {
                current = next.clone();
                steps.push(FilterStep {
                    predicted: Some(predicted),
                    state: next,
                });
            }
            Err(source) => {
                return Err(Error::FilterAborted {
                    step: n,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(steps)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// A fixed stable linear-Gaussian model used to cross-check the
    /// manifold filters against the textbook Kalman filter.
    pub(crate) struct FlatModel {
        pub a: DMatrix<f64>,
        pub b: DVector<f64>,
        pub h: DMatrix<f64>,
        pub q: DMatrix<f64>,
        pub r: DMatrix<f64>,
        pub init_mean: DVector<f64>,
        pub init_cov: DMatrix<f64>,
    }

    impl FlatModel {
        pub fn example() -> Self {
            FlatModel {
                a: DMatrix::from_row_slice(
                    3,
                    3,
                    &[0.80, -0.20, 0.10, 0.15, 0.75, -0.10, 0.05, 0.10, 0.70],
                ),
                b: DVector::from_vec(vec![0.10, -0.05, 0.02]),
                h: DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0]),
                q: DMatrix::from_diagonal(&DVector::from_vec(vec![0.02, 0.03, 0.01])),
                r: DMatrix::from_diagonal(&DVector::from_vec(vec![0.04, 0.05])),
                init_mean: DVector::from_vec(vec![0.3, -0.2, 0.5]),
                init_cov: DMatrix::identity(3, 3) * 0.2,
            }
        }

        pub fn initial_state(&self) -> FilterState {
            FilterState::new(
                GaussianBelief::new(Point::new(self.init_mean.clone()), self.init_cov.clone()),
                self.q.clone(),
                self.r.clone(),
            )
        }

        pub fn initial_flat(&self) -> (DVector<f64>, DMatrix<f64>) {
            (self.init_mean.clone(), self.init_cov.clone())
        }
    }

    /// Builds the manifold-flavoured system for a [`FlatModel`].
    pub(crate) fn flat_system(model: &FlatModel) -> DiscreteSystem {
        let (a, b) = (model.a.clone(), model.b.clone());
        let h = model.h.clone();
        DiscreteSystem {
            state_space: Manifold::euclidean(3),
            obs_space: Manifold::euclidean(2),
            dt: 0.1,
            dynamics: Box::new(move |p, _q, w, _t| Ok(Point::new(&a * &p.coords + &b + w))),
            measurement: Box::new(move |p, _q, v, _t| Ok(Point::new(&h * &p.coords + v))),
            control: Box::new(|_t| DVector::zeros(0)),
        }
    }

    /// One predict+update of the textbook (vector-space) Kalman filter.
    pub(crate) fn textbook_kf_step(
        model: &FlatModel,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        z: &DVector<f64>,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let mean_pred = &model.a * mean + &model.b;
        let cov_pred = &model.a * cov * model.a.transpose() + &model.q;
        let s = &model.h * &cov_pred * model.h.transpose() + &model.r;
        let s_inv = s.clone().try_inverse().expect("innovation covariance invertible");
        let k = &cov_pred * model.h.transpose() * s_inv;
        let mean_new = &mean_pred + &k * (z - &model.h * &mean_pred);
        let cov_new = &cov_pred - &k * &s * k.transpose();
        (mean_new, cov_new)
    }

    #[test]
    fn zero_measurements_return_only_the_initial_state() {
        let model = FlatModel::example();
        let sys = flat_system(&model);
        let init = model.initial_state();
        let controls = vec![DVector::zeros(0)];
        let steps = run_filter(&sys, &FilterAlgorithm::ekf(), &init, &[], &controls).unwrap();
        assert_eq!(steps.len(), 1);
        assert!(steps[0].predicted.is_none());
        assert_eq!(steps[0].state.belief.mean.coords, init.belief.mean.coords);
    }

    #[test]
    fn run_filter_records_predictions_and_updates() {
        let model = FlatModel::example();
        let sys = flat_system(&model);
        let init = model.initial_state();
        let measurements: Vec<Point> = (0..5)
            .map(|i| Point::from_slice(&[0.1 * i as f64, -0.2]))
            .collect();
        let controls = vec![DVector::zeros(0); 6];
        let steps =
            run_filter(&sys, &FilterAlgorithm::ekf(), &init, &measurements, &controls).unwrap();
        assert_eq!(steps.len(), 6);
        for (n, step) in steps.iter().enumerate() {
            assert_eq!(step.state.step, n);
            assert_eq!(step.predicted.is_some(), n > 0);
        }
        // The prediction differs from the update whenever the innovation is
        // non-zero.
        let last = &steps[5];
        let predicted = last.predicted.as_ref().unwrap();
        assert!(predicted.mean.coords != last.state.belief.mean.coords);
    }

    #[test]
    fn ekf_and_ukf_agree_with_each_other_on_flat_systems() {
        let model = FlatModel::example();
        let sys = flat_system(&model);
        let init = model.initial_state();
        let measurements: Vec<Point> = (0..10)
            .map(|i| Point::from_slice(&[(0.3 * i as f64).sin(), 0.2]))
            .collect();
        let controls = vec![DVector::zeros(0); 11];
        let ekf_steps =
            run_filter(&sys, &FilterAlgorithm::ekf(), &init, &measurements, &controls).unwrap();
        let ukf_steps = run_filter(
            &sys,
            &FilterAlgorithm::ukf(SigmaConfig::default()),
            &init,
            &measurements,
            &controls,
        )
        .unwrap();
        for (e, u) in ekf_steps.iter().zip(&ukf_steps) {
            assert_relative_eq!(
                e.state.belief.mean.coords,
                u.state.belief.mean.coords,
                epsilon = 1e-7
            );
            assert_relative_eq!(e.state.belief.cov, u.state.belief.cov, epsilon = 1e-7);
        }
    }

    #[test]
    fn adaptive_runs_modify_the_noise_estimates() {
        let model = FlatModel::example();
        let sys = flat_system(&model);
        let init = model.initial_state();
        let measurements: Vec<Point> = (0..20)
            .map(|i| Point::from_slice(&[2.0 * (0.7 * i as f64).sin(), -1.5]))
            .collect();
        let controls = vec![DVector::zeros(0); 21];
        let adapt = AdaptConfig {
            alpha: 0.9,
            adapt_obs: true,
            adapt_process: true,
            mode: AdaptMode::AsPrinted,
        };
        let steps = run_filter(
            &sys,
            &FilterAlgorithm::adaptive_ekf(adapt),
            &init,
            &measurements,
            &controls,
        )
        .unwrap();
        let last = &steps.last().unwrap().state;
        assert!(last.obs_cov != model.r);
        assert!(last.process_cov != model.q);
        assert_eq!(last.obs_cov.transpose(), last.obs_cov);
        assert_eq!(last.process_cov.transpose(), last.process_cov);
    }

    #[test]
    fn failures_are_wrapped_with_the_failing_step() {
        let model = FlatModel::example();
        let mut sys = flat_system(&model);
        sys.dynamics = Box::new(|p, _q, w, t| {
            if t > 0.25 {
                Err(Error::OutOfDomain {
                    context: "test dynamics blow-up".to_string(),
                })
            } else {
                Ok(Point::new(&p.coords + w))
            }
        });
        let init = model.initial_state();
        let measurements: Vec<Point> = (0..6).map(|_| Point::from_slice(&[0.0, 0.0])).collect();
        let controls = vec![DVector::zeros(0); 7];
        let err = run_filter(&sys, &FilterAlgorithm::ekf(), &init, &measurements, &controls)
            .unwrap_err();
        match err {
            Error::FilterAborted { step, .. } => assert_eq!(step, 4),
            other => panic!("expected FilterAborted, got {other}"),
        }
    }

    #[test]
    fn control_length_is_validated() {
        let model = FlatModel::example();
        let sys = flat_system(&model);
        let init = model.initial_state();
        let measurements = vec![Point::from_slice(&[0.0, 0.0])];
        let err =
            run_filter(&sys, &FilterAlgorithm::ekf(), &init, &measurements, &[]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { .. }));
    }
}
