//! Spherical pendulum-style benchmark on the tangent bundle of S²: the base
//! point advances along the stored velocity, the velocity is steered by a
//! control torque, and the observation is a noisy point on the sphere.

use nalgebra::DVector;

use crate::filters::DiscreteSystem;
use crate::geometry::{join_bundle, split_bundle, Manifold, Point, Tangent};

use super::car::{control_signal, SPEED};

fn cross3(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Decomposes a bundle state into its base point on S² and its velocity.
pub fn split_state(p: &Point) -> (Point, DVector<f64>) {
    let (base, fiber) = split_bundle(&p.coords);
    (Point::new(base), fiber)
}

/// The TS² system with time step `dt`.
///
/// Transition (process noise `w ∈ R⁴`): one step of the bundle retraction
/// with base displacement `Δt·v·X + √Δt·ĉ([w₃, w₄])` and velocity increment
/// `Δt·(p × [0, q·v + w₁, w₂])`, where `ĉ` injects chart coefficients at the
/// current base point. Measurement (observation noise `v ∈ R²`):
/// `exp_p(ĉ(v))`, a noisy copy of the base point on S².
pub fn sphere_system(dt: f64) -> DiscreteSystem {
    let sphere = Manifold::sphere(2);
    DiscreteSystem {
        state_space: Manifold::tangent_bundle(sphere.clone()),
        obs_space: sphere,
        dt,
        dynamics: Box::new(move |p, q, w, _t| {
            let bundle = Manifold::tangent_bundle(Manifold::sphere(2));
            let sphere = Manifold::sphere(2);
            let (base, fiber) = split_bundle(&p.coords);
            let basis = sphere.basis_at(&Point::new(base.clone()))?;
            let noise = basis.from_coeffs(&DVector::from_vec(vec![w[2], w[3]])).coords;
            let base_step = dt * SPEED * &fiber + dt.sqrt() * noise;
            let force = DVector::from_vec(vec![0.0, q[0] * SPEED + w[0], w[1]]);
            let fiber_step = dt * cross3(&base, &force);
            bundle.retract(p, &Tangent::new(join_bundle(&base_step, &fiber_step)))
        }),
        measurement: Box::new(|p, _q, v, _t| {
            let sphere = Manifold::sphere(2);
            let (base, _) = split_bundle(&p.coords);
            let base = Point::new(base);
            let noise = sphere.basis_at(&base)?.from_coeffs(v);
            sphere.retract(&base, &noise)
        }),
        control: Box::new(control_signal),
    }
}

/// The bundle trajectory starts at `p₀ = [1, 0, 0]` with velocity `[0, 1, 0]`.
pub fn sphere_initial() -> Point {
    Point::new(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]))
}
