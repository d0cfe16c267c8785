//! Kalman filtering on manifolds with affine connections.
//!
//! This crate implements extended and unscented Kalman filters whose state
//! (and, if desired, observation) spaces are smooth manifolds rather than
//! vector spaces.  The filters are written against a small geometric core:
//! exponential/logarithmic maps, parallel transport, and deterministic
//! orthonormal tangent bases.  Uncertainty is represented by wrapped Gaussian
//! distributions: a covariance matrix expressed in the tangent basis at the
//! mean, pushed onto the manifold through the exponential map.
//!
//! The crate is organised in five layers:
//!
//! * [`geometry`] — manifold handles (Euclidean space, spheres, rotation
//!   groups, unit quaternions, special Euclidean groups, tangent bundles)
//!   with exponential/log maps, retractions, parallel transport in closed
//!   form and by integrating the transport ODE in normal coordinates.
//! * [`stats`] — wrapped Gaussian sampling, densities, volume corrections,
//!   and empirical covariances in tangent coordinates.
//! * [`filters`] — EKF/UKF predict and update steps, covariance transport,
//!   sigma points, exponential barycenters, and innovation-based noise
//!   adaptation.
//! * [`sim`] — two benchmark systems (a planar unicycle on SE(2) and a
//!   second-order particle on the tangent bundle of the sphere), a seeded
//!   simulator, and an experiment harness.
//! * [`cli`] — argument parsing and CSV emission for the `geokalman` binary.

// `!(x > 0.0)` deliberately rejects NaN alongside non-positive values; the
// lint's suggested `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod filters;
pub mod geometry;
pub mod linalg;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Basis, Manifold, Point, Tangent};
