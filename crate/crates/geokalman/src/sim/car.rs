//! Planar unicycle ("car") on SE(2): the heading integrates the steering
//! control, the car drives forward at unit speed, and Brownian noise enters
//! the heading rate and the translation.

use nalgebra::{DMatrix, DVector};

use crate::filters::DiscreteSystem;
use crate::geometry::{special_euclidean, Manifold, Point};

/// Fixed forward speed of the car.
pub const SPEED: f64 = 1.0;

/// Steering/forcing control shared by both benchmark systems.
pub fn control_signal(t: f64) -> DVector<f64> {
    DVector::from_vec(vec![(0.5 * t).sin()])
}

/// The SE(2) car system with time step `dt`.
///
/// Transition (process noise `w ∈ R³`):
/// `R′ = R·exp(Δt(q + w₁)J)` with `J` the 2×2 skew generator, and
/// `t′ = t + Δt·R·[v, 0]ᵀ + √Δt·[w₂, w₃]ᵀ`.
/// Measurement (observation noise `v ∈ R²`): the translation plus noise.
pub fn car2d_system(dt: f64) -> DiscreteSystem {
    DiscreteSystem {
        state_space: Manifold::special_euclidean(2).expect("SE(2) is supported"),
        obs_space: Manifold::euclidean(2),
        dt,
        dynamics: Box::new(move |p, q, w, _t| {
            let (trans, rot) = special_euclidean::split_point(&p.coords, 2);
            let theta = dt * (q[0] + w[0]);
            let (sin, cos) = theta.sin_cos();
            let turn = DMatrix::from_row_slice(2, 2, &[cos, -sin, sin, cos]);
            let new_rot = &rot * turn;
            let sqrt_dt = dt.sqrt();
            let new_trans = DVector::from_vec(vec![
                trans[0] + dt * SPEED * rot[(0, 0)] + sqrt_dt * w[1],
                trans[1] + dt * SPEED * rot[(1, 0)] + sqrt_dt * w[2],
            ]);
            Ok(Point::new(special_euclidean::join_point(
                &new_trans, &new_rot,
            )))
        }),
        measurement: Box::new(|p, _q, v, _t| {
            Ok(Point::new(p.coords.rows(0, 2).into_owned() + v))
        }),
        control: Box::new(control_signal),
    }
}

/// The car starts at the group identity.
pub fn car2d_initial() -> Point {
    Manifold::special_euclidean(2)
        .expect("SE(2) is supported")
        .identity()
        .expect("SE(2) has an identity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noise_free_step_from_identity_drives_straight() {
        let dt = 0.01;
        let sys = car2d_system(dt);
        let start = car2d_initial();
        let q = DVector::from_vec(vec![0.0]);
        let w = DVector::zeros(3);
        let next = (sys.dynamics)(&start, &q, &w, 0.0).unwrap();
        let (trans, rot) = special_euclidean::split_point(&next.coords, 2);
        assert_relative_eq!(trans[0], dt, epsilon = 1e-15);
        assert_relative_eq!(trans[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(rot, DMatrix::identity(2, 2), epsilon = 1e-15);
    }

    #[test]
    fn measurement_at_identity_is_the_origin() {
        let sys = car2d_system(0.01);
        let z = (sys.measurement)(&car2d_initial(), &DVector::zeros(1), &DVector::zeros(2), 0.0)
            .unwrap();
        assert_eq!(z.coords, DVector::zeros(2));
    }

    #[test]
    fn translation_noise_is_scaled_by_sqrt_dt() {
        let dt = 0.04;
        let sys = car2d_system(dt);
        let w = DVector::from_vec(vec![0.0, 1.0, -2.0]);
        let next = (sys.dynamics)(&car2d_initial(), &DVector::zeros(1), &w, 0.0).unwrap();
        let (trans, _) = special_euclidean::split_point(&next.coords, 2);
        assert_relative_eq!(trans[0], dt + 0.2, epsilon = 1e-15);
        assert_relative_eq!(trans[1], -0.4, epsilon = 1e-15);
    }
}
