//! Benchmark experiments: ground-truth simulation, filter runs, and error
//! accounting for the SE(2) car and the TS² sphere systems.

pub mod car;
pub mod sphere;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::filters::{
    run_filter, AdaptConfig, DiscreteSystem, FilterAlgorithm, FilterState, SigmaConfig,
};
use crate::geometry::{special_euclidean, Point};
use crate::linalg;
use crate::stats::GaussianBelief;

pub use car::{car2d_initial, car2d_system, control_signal, SPEED};
pub use sphere::{sphere_initial, sphere_system};

/// Which benchmark system an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// The SE(2) car with position observations.
    Car2d,
    /// The TS² trajectory with spherical observations.
    Sphere,
}

impl ExperimentKind {
    /// The canonical name used on the command line and in output files.
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Car2d => "car2d",
            ExperimentKind::Sphere => "sphere",
        }
    }

    /// Parses a canonical experiment name.
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "car2d" => Some(ExperimentKind::Car2d),
            "sphere" => Some(ExperimentKind::Sphere),
            _ => None,
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The filters an experiment can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterName {
    Ekf,
    Ukf,
    AdaptiveEkf,
}

impl FilterName {
    /// Every filter, in the order experiments run and report them.
    pub const ALL: [FilterName; 3] = [FilterName::Ekf, FilterName::Ukf, FilterName::AdaptiveEkf];

    /// The canonical name used on the command line.
    pub fn label(&self) -> &'static str {
        match self {
            FilterName::Ekf => "ekf",
            FilterName::Ukf => "ukf",
            FilterName::AdaptiveEkf => "adaptive-ekf",
        }
    }

    /// Parses a canonical filter name.
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "ekf" => Some(FilterName::Ekf),
            "ukf" => Some(FilterName::Ukf),
            "adaptive-ekf" => Some(FilterName::AdaptiveEkf),
            _ => None,
        }
    }
}

impl std::fmt::Display for FilterName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Full description of one experiment: the system, the horizon, the noise
/// levels used to generate data, and the (possibly mismatched) noise levels
/// handed to the filters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Which benchmark system to run.
    pub name: ExperimentKind,
    /// Simulation time step Δt.
    pub dt: f64,
    /// Number of transitions (and measurements) K.
    pub steps: usize,
    /// Seed for the simulation noise stream.
    pub seed: u64,
    /// Continuous-time process noise covariance used to generate data;
    /// per-step draws use `true_process_cov · Δt`.
    pub true_process_cov: DMatrix<f64>,
    /// Observation noise covariance used to generate data.
    pub true_obs_cov: DMatrix<f64>,
    /// Initial covariance of the filters' belief.
    pub filter_init_cov: DMatrix<f64>,
    /// Process noise covariance the filters assume.
    pub filter_process_cov: DMatrix<f64>,
    /// Observation noise covariance the filters assume.
    pub filter_obs_cov: DMatrix<f64>,
    /// Forgetting factor of the adaptive EKF.
    pub adapt_alpha: f64,
    /// Sigma-point parameters of the UKF.
    pub sigma: SigmaConfig,
}

impl ExperimentConfig {
    /// The car experiment with its standard parameters.
    pub fn car2d() -> Self {
        ExperimentConfig {
            name: ExperimentKind::Car2d,
            dt: 0.01,
            steps: 200,
            seed: 42,
            true_process_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![
                10.0, 100.0, 100.0,
            ])),
            true_obs_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.01])),
            filter_init_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.1, 0.1])),
            filter_process_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 2.0])),
            filter_obs_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.01])),
            adapt_alpha: 0.99,
            sigma: SigmaConfig::default(),
        }
    }

    /// The sphere experiment with its standard parameters.
    pub fn sphere() -> Self {
        ExperimentConfig {
            name: ExperimentKind::Sphere,
            dt: 0.01,
            steps: 200,
            seed: 42,
            true_process_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![
                10.0, 10.0, 1.0, 1.0,
            ])),
            true_obs_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.01])),
            filter_init_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.1, 0.1, 0.1])),
            filter_process_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![
                0.1, 0.1, 0.01, 0.01,
            ])),
            filter_obs_cov: DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.01])),
            adapt_alpha: 0.99,
            sigma: SigmaConfig::default(),
        }
    }

    /// The standard configuration for `kind`.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Car2d => ExperimentConfig::car2d(),
            ExperimentKind::Sphere => ExperimentConfig::sphere(),
        }
    }

    /// Builds the discrete system this experiment runs on.
    pub fn system(&self) -> DiscreteSystem {
        match self.name {
            ExperimentKind::Car2d => car2d_system(self.dt),
            ExperimentKind::Sphere => sphere_system(self.dt),
        }
    }

    /// The ground-truth initial state.
    pub fn initial_point(&self) -> Point {
        match self.name {
            ExperimentKind::Car2d => car2d_initial(),
            ExperimentKind::Sphere => sphere_initial(),
        }
    }

    /// The filters' initial state: belief centred on the true initial point.
    pub fn initial_filter_state(&self) -> FilterState {
        FilterState::new(
            GaussianBelief::new(self.initial_point(), self.filter_init_cov.clone()),
            self.filter_process_cov.clone(),
            self.filter_obs_cov.clone(),
        )
    }

    /// Noise-adaptation settings: the car adapts both covariances, the
    /// sphere only the observation covariance.
    pub fn adapt_config(&self) -> AdaptConfig {
        AdaptConfig {
            alpha: self.adapt_alpha,
            adapt_obs: true,
            adapt_process: self.name == ExperimentKind::Car2d,
            ..AdaptConfig::default()
        }
    }

    /// The algorithm instance for one of the benchmark filters.
    pub fn algorithm(&self, filter: FilterName) -> FilterAlgorithm {
        match filter {
            FilterName::Ekf => FilterAlgorithm::ekf(),
            FilterName::Ukf => FilterAlgorithm::ukf(self.sigma),
            FilterName::AdaptiveEkf => FilterAlgorithm::adaptive_ekf(self.adapt_config()),
        }
    }

    /// Checks the numeric parameters (positive time step, forgetting factor
    /// in `[0, 1]`) before a run.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig {
                context: format!("time step must be positive, got {}", self.dt),
            });
        }
        if !(0.0..=1.0).contains(&self.adapt_alpha) {
            return Err(Error::InvalidConfig {
                context: format!("forgetting factor must lie in [0, 1], got {}", self.adapt_alpha),
            });
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha12Rng, factor: &DMatrix<f64>) -> DVector<f64> {
    let z = DVector::from_fn(factor.ncols(), |_, _| rng.sample(StandardNormal));
    factor * z
}

/// Simulates the ground truth and its measurements.
///
/// Process noise `w_n ~ N(0, true_process_cov·Δt)` is drawn immediately
/// before transition `n`, observation noise `v_n ~ N(0, true_obs_cov)`
/// immediately before measurement `n`, both from a single stream seeded with
/// `cfg.seed`, so reruns are bit-identical and adding a filter never changes
/// the data. Returns the states `[p₀ … p_K]` and measurements `[z₁ … z_K]`.
pub fn simulate(sys: &DiscreteSystem, cfg: &ExperimentConfig) -> Result<(Vec<Point>, Vec<Point>)> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let process_factor = linalg::psd_sqrt(&(&cfg.true_process_cov * cfg.dt))?;
    let obs_factor = linalg::psd_sqrt(&cfg.true_obs_cov)?;
    let mut states = Vec::with_capacity(cfg.steps + 1);
    states.push(cfg.initial_point());
    let mut measurements = Vec::with_capacity(cfg.steps);
    for n in 1..=cfg.steps {
        let wrap = |source: Error| Error::SimulationAborted {
            step: n,
            source: Box::new(source),
        };
        let t_prev = (n - 1) as f64 * cfg.dt;
        let w = draw(&mut rng, &process_factor);
        let next = (sys.dynamics)(&states[n - 1], &(sys.control)(t_prev), &w, t_prev)
            .map_err(wrap)?;
        let t = n as f64 * cfg.dt;
        let v = draw(&mut rng, &obs_factor);
        let z = (sys.measurement)(&next, &(sys.control)(t), &v, t).map_err(wrap)?;
        states.push(next);
        measurements.push(z);
    }
    Ok((states, measurements))
}

/// Position error between the true state and an estimate or measurement.
///
/// For the car this is the Euclidean distance between translations; for the
/// sphere, the great-circle distance between base points. `other` may be a
/// full state or a bare observation.
pub fn position_error(name: ExperimentKind, truth: &Point, other: &Point) -> Result<f64> {
    match name {
        ExperimentKind::Car2d => {
            let (t_true, _) = special_euclidean::split_point(&truth.coords, 2);
            let t_other = if other.coords.len() == 2 {
                other.coords.clone()
            } else {
                special_euclidean::split_point(&other.coords, 2).0
            };
            Ok((t_true - t_other).norm())
        }
        ExperimentKind::Sphere => {
            let base = |p: &Point| {
                if p.coords.len() == 3 {
                    p.coords.clone()
                } else {
                    p.coords.rows(0, 3).into_owned()
                }
            };
            // The great-circle distance is well defined even for antipodal
            // points, where the logarithm map is not.
            Ok(crate::geometry::sphere::distance(&base(truth), &base(other)))
        }
    }
}

/// Running root-mean-square error: entry `n` aggregates `errors[..=n]`.
pub fn running_rmse(errors: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    errors
        .iter()
        .enumerate()
        .map(|(i, e)| {
            sum += e * e;
            (sum / (i + 1) as f64).sqrt()
        })
        .collect()
}

/// One filter's result inside an experiment record.
#[derive(Debug, Clone)]
pub struct FilterRun {
    /// Which filter produced this run.
    pub name: FilterName,
    /// Updated means `[p₀, p_{1|1}, …, p_{K|K}]`; empty if the filter failed.
    pub estimates: Vec<Point>,
    /// Running RMSE of the position error, one entry per measurement.
    pub errors: Vec<f64>,
    /// The step at which the filter aborted, if it did.
    pub failed_at: Option<usize>,
}

/// Everything produced by one experiment: the simulated truth, the
/// measurements, and each filter's estimates and running errors.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    /// Which benchmark ran.
    pub name: ExperimentKind,
    /// Forgetting factor used by the adaptive filter (echoed into headers).
    pub adapt_alpha: f64,
    /// Times `[0, Δt, …, KΔt]`.
    pub times: Vec<f64>,
    /// True states `[p₀ … p_K]`.
    pub true_states: Vec<Point>,
    /// Measurements `[z₁ … z_K]`.
    pub measurements: Vec<Point>,
    /// Running RMSE of the raw measurements against the truth.
    pub measurement_errors: Vec<f64>,
    /// One entry per requested filter, in request order.
    pub filters: Vec<FilterRun>,
}

impl ExperimentRecord {
    /// The filter run with the given name, if it was requested.
    pub fn filter(&self, name: FilterName) -> Option<&FilterRun> {
        self.filters.iter().find(|f| f.name == name)
    }
}

/// Runs the standard trio of filters (EKF, UKF, adaptive EKF) on one
/// simulated data set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    run_experiment_with(cfg, &FilterName::ALL)
}

/// Runs a chosen subset of filters on one simulated data set.
///
/// All filters see the same measurements. A filter that aborts is recorded
/// with its failing step; the others still report. Only simulation errors
/// abort the whole experiment.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    selection: &[FilterName],
) -> Result<ExperimentRecord> {
    let sys = cfg.system();
    let (true_states, measurements) = simulate(&sys, cfg)?;
    let times = (0..=cfg.steps).map(|n| n as f64 * cfg.dt).collect();
    let raw_meas: Vec<f64> = measurements
        .iter()
        .zip(&true_states[1..])
        .map(|(z, p)| position_error(cfg.name, p, z))
        .collect::<Result<_>>()?;
    let controls: Vec<DVector<f64>> = (0..=cfg.steps)
        .map(|n| (sys.control)(n as f64 * cfg.dt))
        .collect();
    let init = cfg.initial_filter_state();

    let mut filters = Vec::with_capacity(selection.len());
    for &name in selection {
        let algorithm = cfg.algorithm(name);
        match run_filter(&sys, &algorithm, &init, &measurements, &controls) {
            Ok(steps) => {
                let estimates: Vec<Point> =
                    steps.into_iter().map(|s| s.state.belief.mean).collect();
                let raw: Vec<f64> = estimates[1..]
                    .iter()
                    .zip(&true_states[1..])
                    .map(|(e, p)| position_error(cfg.name, p, e))
                    .collect::<Result<_>>()?;
                filters.push(FilterRun {
                    name,
                    estimates,
                    errors: running_rmse(&raw),
                    failed_at: None,
                });
            }
            Err(Error::FilterAborted { step, .. }) => filters.push(FilterRun {
                name,
                estimates: Vec::new(),
                errors: Vec::new(),
                failed_at: Some(step),
            }),
            Err(other) => return Err(other),
        }
    }

    Ok(ExperimentRecord {
        name: cfg.name,
        adapt_alpha: cfg.adapt_alpha,
        times,
        true_states,
        measurements,
        measurement_errors: running_rmse(&raw_meas),
        filters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simulation_is_reproducible_for_a_fixed_seed() {
        for cfg in [ExperimentConfig::car2d(), ExperimentConfig::sphere()] {
            let sys = cfg.system();
            let (states_a, meas_a) = simulate(&sys, &cfg).unwrap();
            let (states_b, meas_b) = simulate(&sys, &cfg).unwrap();
            assert_eq!(states_a.len(), cfg.steps + 1);
            assert_eq!(meas_a.len(), cfg.steps);
            for (a, b) in states_a.iter().zip(&states_b) {
                assert_eq!(a.coords, b.coords);
            }
            for (a, b) in meas_a.iter().zip(&meas_b) {
                assert_eq!(a.coords, b.coords);
            }
        }
    }

    #[test]
    fn simulated_states_stay_on_their_manifolds() {
        for cfg in [ExperimentConfig::car2d(), ExperimentConfig::sphere()] {
            let sys = cfg.system();
            let (states, measurements) = simulate(&sys, &cfg).unwrap();
            for p in &states {
                sys.state_space.check_point(p).unwrap();
            }
            for z in &measurements {
                sys.obs_space.check_point(z).unwrap();
            }
        }
    }

    #[test]
    fn position_error_examples() {
        let car = ExperimentKind::Car2d;
        let identity = car2d_initial();
        assert_eq!(position_error(car, &identity, &identity).unwrap(), 0.0);
        let off = Point::new(DVector::from_vec(vec![3.0, 4.0]));
        assert_relative_eq!(position_error(car, &identity, &off).unwrap(), 5.0);

        let sphere = ExperimentKind::Sphere;
        let state = sphere_initial();
        assert_eq!(position_error(sphere, &state, &state).unwrap(), 0.0);
        let antipode = Point::new(DVector::from_vec(vec![-1.0, 0.0, 0.0]));
        assert_relative_eq!(
            position_error(sphere, &state, &antipode).unwrap(),
            std::f64::consts::PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn running_rmse_matches_a_direct_computation() {
        let rmse = running_rmse(&[3.0, 4.0]);
        assert_relative_eq!(rmse[0], 3.0);
        assert_relative_eq!(rmse[1], (12.5_f64).sqrt(), epsilon = 1e-15);
        assert!(running_rmse(&[]).is_empty());
    }

    #[test]
    fn zero_noise_keeps_every_filter_on_the_truth() {
        for kind in [ExperimentKind::Car2d, ExperimentKind::Sphere] {
            let mut cfg = ExperimentConfig::for_kind(kind);
            cfg.steps = 50;
            cfg.true_process_cov.fill(0.0);
            cfg.true_obs_cov.fill(0.0);
            cfg.filter_init_cov.fill(0.0);
            cfg.filter_process_cov.fill(0.0);
            let record = run_experiment(&cfg).unwrap();
            assert_relative_eq!(record.measurement_errors[cfg.steps - 1], 0.0);
            for run in &record.filters {
                assert!(run.failed_at.is_none(), "{} failed", run.name);
                let last = run.errors[cfg.steps - 1];
                assert!(last < 1e-6, "{} drifted to {last}", run.name);
            }
        }
    }

    #[test]
    fn every_filter_beats_the_raw_measurements() {
        for kind in [ExperimentKind::Car2d, ExperimentKind::Sphere] {
            for seed in [1, 2] {
                let mut cfg = ExperimentConfig::for_kind(kind);
                cfg.seed = seed;
                let record = run_experiment(&cfg).unwrap();
                let meas = *record.measurement_errors.last().unwrap();
                for run in &record.filters {
                    assert!(run.failed_at.is_none(), "{} failed on {kind}", run.name);
                    let last = *run.errors.last().unwrap();
                    assert!(
                        last < meas,
                        "{} on {kind} seed {seed}: rmse {last} vs measurement {meas}",
                        run.name
                    );
                }
            }
        }
    }

    #[test]
    fn record_shape_matches_the_horizon() {
        let mut cfg = ExperimentConfig::car2d();
        cfg.steps = 20;
        let record = run_experiment(&cfg).unwrap();
        assert_eq!(record.times.len(), 21);
        assert_eq!(record.true_states.len(), 21);
        assert_eq!(record.measurements.len(), 20);
        assert_eq!(record.measurement_errors.len(), 20);
        assert_eq!(record.filters.len(), 3);
        for run in &record.filters {
            assert_eq!(run.estimates.len(), 21);
            assert_eq!(run.errors.len(), 20);
        }
        assert_relative_eq!(record.times[20], 0.2, epsilon = 1e-15);
        assert!(record.filter(FilterName::Ukf).is_some());
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let mut cfg = ExperimentConfig::car2d();
        cfg.dt = 0.0;
        assert!(matches!(
            run_experiment(&cfg),
            Err(Error::InvalidConfig { .. })
        ));
        let mut cfg = ExperimentConfig::car2d();
        cfg.adapt_alpha = 1.5;
        assert!(matches!(
            run_experiment(&cfg),
            Err(Error::InvalidConfig { .. })
        ));
    }
}
