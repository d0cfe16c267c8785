//! Finite-difference Jacobians of manifold maps in normal coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filters::DiscreteSystem;
use crate::geometry::{Manifold, NormalChart, Point};

/// Step used for Jacobians with respect to noise arguments (taken at the
/// origin of the noise space, where the coordinate scale is 1).
pub const NOISE_JACOBIAN_STEP: f64 = 1e-6;

/// Default finite-difference step for [`chart_jacobian`]: `1e-6` scaled by
/// the magnitude of the base point's ambient coordinates.
pub fn default_step(p: &Point) -> f64 {
    1e-6 * p.coords.amax().max(1.0)
}

/// Jacobian of `map : input → output` at `p`, expressed in normal
/// coordinates: the chart on the input side is centred at `p`, the chart on
/// the output side at `map(p)`.  Columns are central differences
/// `[c(log_{f(p)} f(exp_p(±step·eⱼ)))] / (2·step)`, accurate to `O(step²)`.
pub fn chart_jacobian<F>(
    input: &Manifold,
    output: &Manifold,
    map: F,
    p: &Point,
    step: f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(&Point) -> Result<Point>,
{
    if !(step > 0.0) {
        return Err(Error::invalid_input("finite-difference step must be positive"));
    }
    let chart_in = NormalChart::new(input, p)?;
    let chart_out = NormalChart::new(output, &map(p)?)?;
    let d_in = input.dim();
    let mut jacobian = DMatrix::zeros(output.dim(), d_in);
    let mut x = DVector::zeros(d_in);
    for j in 0..d_in {
        x[j] = step;
        let plus = chart_out.to_coords(&map(&chart_in.from_coords(&x)?)?)?;
        x[j] = -step;
        let minus = chart_out.to_coords(&map(&chart_in.from_coords(&x)?)?)?;
        x[j] = 0.0;
        jacobian.set_column(j, &((plus - minus) / (2.0 * step)));
    }
    Ok(jacobian)
}

/// Jacobian of a map from a flat noise space into a manifold, evaluated at
/// zero noise with a *caller-chosen* output chart (the filter's predicted
/// mean or expected observation, which need not coincide with `map(0)` for
/// sigma-point means).
pub(crate) fn noise_jacobian<F>(
    map: F,
    out_chart: &NormalChart,
    noise_dim: usize,
    step: f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<Point>,
{
    let mut jacobian = DMatrix::zeros(out_chart.dim(), noise_dim);
    let mut w = DVector::zeros(noise_dim);
    for j in 0..noise_dim {
        w[j] = step;
        let plus = out_chart.to_coords(&map(&w)?)?;
        w[j] = -step;
        let minus = out_chart.to_coords(&map(&w)?)?;
        w[j] = 0.0;
        jacobian.set_column(j, &((plus - minus) / (2.0 * step)));
    }
    Ok(jacobian)
}

/// The four linearizations of one filter step.
#[derive(Debug, Clone)]
pub struct JacobianSet {
    /// `F`: differential of the dynamics with respect to the state.
    pub transition: DMatrix<f64>,
    /// `L`: differential of the dynamics with respect to the process noise.
    pub process_noise: DMatrix<f64>,
    /// `H`: differential of the measurement with respect to the state.
    pub observation: DMatrix<f64>,
    /// `W`: differential of the measurement with respect to the
    /// observation noise (some texts call this matrix `V`).
    pub obs_noise: DMatrix<f64>,
}

impl JacobianSet {
    /// Computes all four Jacobians for the transition leaving `p` at time
    /// `t` and the measurement taken at the image point at time `t_obs`.
    pub fn for_step(sys: &DiscreteSystem, p: &Point, t: f64, t_obs: f64) -> Result<Self> {
        let control = (sys.control)(t);
        let w0 = DVector::zeros(sys.process_noise_dim());
        let predicted = (sys.dynamics)(p, &control, &w0, t)?;
        let transition = chart_jacobian(
            &sys.state_space,
            &sys.state_space,
            |x| (sys.dynamics)(x, &control, &w0, t),
            p,
            default_step(p),
        )?;
        let state_chart = NormalChart::new(&sys.state_space, &predicted)?;
        let process_noise = noise_jacobian(
            |w| (sys.dynamics)(p, &control, w, t),
            &state_chart,
            w0.len(),
            NOISE_JACOBIAN_STEP,
        )?;

        let obs_control = (sys.control)(t_obs);
        let v0 = DVector::zeros(sys.obs_noise_dim());
        let expected = (sys.measurement)(&predicted, &obs_control, &v0, t_obs)?;
        let observation = chart_jacobian(
            &sys.state_space,
            &sys.obs_space,
            |x| (sys.measurement)(x, &obs_control, &v0, t_obs),
            &predicted,
            default_step(&predicted),
        )?;
        let obs_chart = NormalChart::new(&sys.obs_space, &expected)?;
        let obs_noise = noise_jacobian(
            |v| (sys.measurement)(&predicted, &obs_control, v, t_obs),
            &obs_chart,
            v0.len(),
            NOISE_JACOBIAN_STEP,
        )?;
        Ok(Self {
            transition,
            process_noise,
            observation,
            obs_noise,
        })
    }
}
