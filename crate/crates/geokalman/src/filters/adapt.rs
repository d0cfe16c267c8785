//! Innovation-based adaptation of the filter noise covariances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filters::FilterState;
use crate::linalg;

/// Which exponential-moving-average form the observation-noise update uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdaptMode {
    /// `R' = αR + (1−α)(W⁻¹(yyᵀ+S)W⁻ᵀ − R)`: the update with the innovation
    /// target entering as a *difference* from the current estimate.
    #[default]
    AsPrinted,
    /// `R' = αR + (1−α)W⁻¹(yyᵀ+S)W⁻ᵀ`: the standard exponential moving
    /// average toward the innovation target.
    EmaStandard,
}

/// Noise-adaptation settings carried by an adaptive filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    /// Forgetting factor `α ∈ [0, 1]`; `α = 1` disables adaptation exactly.
    pub alpha: f64,
    /// Apply the adapted observation noise `R'`.
    pub adapt_obs: bool,
    /// Apply the adapted process noise `Q'`.
    pub adapt_process: bool,
    pub mode: AdaptMode,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            alpha: 0.99,
            adapt_obs: true,
            adapt_process: false,
            mode: AdaptMode::AsPrinted,
        }
    }
}

/// One adaptation step: returns `(R', Q')` from the innovation `y`, its
/// covariance `S`, the gain `K`, and the noise Jacobians `L` and `W` of the
/// step that produced them.
///
/// `R'` follows the selected [`AdaptMode`]; `Q'` is always the moving
/// average `αQ + (1−α)(L⁻¹Ky)(L⁻¹Ky)ᵀ`.  Both outputs are symmetrized and
/// PSD-clamped.  With `α = 1` the inputs are returned bit-for-bit unchanged;
/// a singular `W` or `L` yields an adaptation-not-applicable error so the
/// caller can keep the previous covariances.
#[allow(clippy::too_many_arguments)]
pub fn adapt_noise(
    state: &FilterState,
    y: &DVector<f64>,
    s: &DMatrix<f64>,
    k: &DMatrix<f64>,
    l: &DMatrix<f64>,
    w: &DMatrix<f64>,
    alpha: f64,
    mode: AdaptMode,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig {
            context: format!("forgetting factor must lie in [0, 1], got {alpha}"),
        });
    }
    if alpha == 1.0 {
        return Ok((state.obs_cov.clone(), state.process_cov.clone()));
    }
    let w_inv = linalg::lu_inverse(w, "observation-noise Jacobian W")?;
    let l_inv = linalg::lu_inverse(l, "process-noise Jacobian L")?;

    let target = &w_inv * (y * y.transpose() + s) * w_inv.transpose();
    let r_new = match mode {
        AdaptMode::AsPrinted => alpha * &state.obs_cov + (1.0 - alpha) * (target - &state.obs_cov),
        AdaptMode::EmaStandard => alpha * &state.obs_cov + (1.0 - alpha) * target,
    };
    let residual = l_inv * (k * y);
    let q_new =
        alpha * &state.process_cov + (1.0 - alpha) * &residual * residual.transpose();
    Ok((linalg::psd_clamp(&r_new), linalg::psd_clamp(&q_new)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::stats::GaussianBelief;
    use approx::assert_relative_eq;

    fn dummy_state(r: DMatrix<f64>, q: DMatrix<f64>) -> FilterState {
        FilterState::new(
            GaussianBelief::new(Point::from_slice(&[0.0, 0.0]), DMatrix::identity(2, 2)),
            q,
            r,
        )
    }

    #[test]
    fn alpha_one_returns_the_inputs_bit_for_bit() {
        let r = DMatrix::from_row_slice(2, 2, &[0.01, 0.003, 0.003, 0.02]);
        let q = DMatrix::from_row_slice(2, 2, &[2.0, -0.1, -0.1, 3.0]);
        let state = dummy_state(r.clone(), q.clone());
        let y = DVector::from_vec(vec![0.4, -0.1]);
        let s = DMatrix::identity(2, 2);
        let k = DMatrix::identity(2, 2) * 0.5;
        let (r_new, q_new) = adapt_noise(
            &state,
            &y,
            &s,
            &k,
            &DMatrix::identity(2, 2),
            &DMatrix::identity(2, 2),
            1.0,
            AdaptMode::AsPrinted,
        )
        .unwrap();
        assert_eq!(r_new, r);
        assert_eq!(q_new, q);
    }

    #[test]
    fn fixed_points_distinguish_the_two_modes() {
        // With y = 0, W = I and constant S, the printed form contracts
        // toward S/2 while the standard EMA contracts toward S.
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![0.4, 0.9]));
        let y = DVector::zeros(2);
        let k = DMatrix::zeros(2, 2);
        let eye = DMatrix::identity(2, 2);
        let run = |mode: AdaptMode| {
            let mut state = dummy_state(eye.clone() * 0.05, eye.clone() * 1.0);
            for _ in 0..4000 {
                let (r, q) =
                    adapt_noise(&state, &y, &s, &k, &eye, &eye, 0.98, mode).unwrap();
                state.obs_cov = r;
                state.process_cov = q;
            }
            state.obs_cov.clone()
        };
        assert_relative_eq!(run(AdaptMode::AsPrinted), &s / 2.0, epsilon = 1e-6);
        assert_relative_eq!(run(AdaptMode::EmaStandard), s.clone(), epsilon = 1e-6);
    }

    #[test]
    fn outputs_are_symmetric_and_psd() {
        let state = dummy_state(
            DMatrix::from_row_slice(2, 2, &[0.02, 0.0, 0.0, 0.05]),
            DMatrix::identity(2, 2) * 0.3,
        );
        let y = DVector::from_vec(vec![1.2, -0.7]);
        let s = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.8]);
        let k = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.4]);
        let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 0.9]);
        let w = DMatrix::from_row_slice(2, 2, &[1.1, 0.0, -0.1, 1.0]);
        let (r, q) = adapt_noise(&state, &y, &s, &k, &l, &w, 0.9, AdaptMode::AsPrinted).unwrap();
        for m in [&r, &q] {
            assert_eq!(m.transpose(), *m);
            let min = m
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            assert!(min >= -1e-12, "minimum eigenvalue {min}");
        }
    }

    #[test]
    fn singular_jacobians_are_not_applicable() {
        let state = dummy_state(DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        let y = DVector::zeros(2);
        let s = DMatrix::identity(2, 2);
        let k = DMatrix::zeros(2, 2);
        let singular = DMatrix::zeros(2, 2);
        let eye = DMatrix::identity(2, 2);
        let err = adapt_noise(&state, &y, &s, &k, &eye, &singular, 0.9, AdaptMode::AsPrinted)
            .unwrap_err();
        assert!(matches!(err, Error::AdaptationNotApplicable { .. }));
        let err = adapt_noise(&state, &y, &s, &k, &singular, &eye, 0.9, AdaptMode::AsPrinted)
            .unwrap_err();
        assert!(matches!(err, Error::AdaptationNotApplicable { .. }));
    }

    #[test]
    fn rejects_out_of_range_alpha() {
        let state = dummy_state(DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        let y = DVector::zeros(2);
        let eye = DMatrix::identity(2, 2);
        assert!(adapt_noise(&state, &y, &eye, &eye, &eye, &eye, 1.5, AdaptMode::AsPrinted).is_err());
    }
}
