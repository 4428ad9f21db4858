use nalgebra::{SMatrix, SVector};

use super::ut::unscented_transform;
use super::{StateSpaceModel, Transition, UtParams};
use crate::error::{Error, Result};
use crate::linalg::{condition_covariance, spd_inverse, Matrix, Vector};

/// Gaussian belief `N(mean, cov)` at step `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UkfState<const D: usize> {
    pub mean: Vector<D>,
    pub cov: Matrix<D>,
    pub t: usize,
}

impl<const D: usize> UkfState<D> {
    pub fn new(mean: Vector<D>, cov: Matrix<D>) -> Self {
        UkfState { mean, cov, t: 0 }
    }

    fn check(self, what: &str) -> Result<Self> {
        if self.mean.iter().chain(self.cov.iter()).all(|v| v.is_finite()) {
            Ok(self)
        } else {
            Err(Error::FilterDiverged {
                step: self.t,
                reason: format!("non-finite {what}"),
            })
        }
    }
}

fn diverged(step: usize, reason: &str) -> Error {
    Error::FilterDiverged {
        step,
        reason: reason.to_owned(),
    }
}

/// Time update: unscented transform through the transition plus the
/// process-noise moments.
pub fn ukf_predict<const D: usize, T: Transition<D>>(
    state: &UkfState<D>,
    model: &StateSpaceModel<T>,
    ut: &UtParams,
) -> Result<UkfState<D>> {
    let out = unscented_transform(&state.mean, &state.cov, |z| model.transition.apply(z), ut)
        .map_err(|_| diverged(state.t + 1, "prediction"))?;
    let q = model.process_noise.variance();
    let mean = out.mean + Vector::<D>::repeat(model.process_noise.mean());
    let cov = out.cov + Matrix::<D>::identity() * q;
    UkfState {
        mean,
        cov,
        t: state.t + 1,
    }
    .check("predicted moments")
}

/// Measurement update for the identity observation map with the model's
/// observation noise moment-matched to a Gaussian.
pub fn ukf_update_identity<const D: usize, T>(
    pred: &UkfState<D>,
    observation: &Vector<D>,
    model: &StateSpaceModel<T>,
    ut: &UtParams,
) -> Result<UkfState<D>> {
    let predicted_obs = pred.mean + Vector::<D>::repeat(model.obs_noise.mean());
    let s = pred.cov + Matrix::<D>::identity() * model.obs_noise.variance();
    apply_gain(pred, observation, &predicted_obs, &s, &pred.cov, ut)
}

/// Measurement update through an arbitrary observation function `h`, with
/// additive noise of mean `noise_mean` and covariance `noise_cov`.
pub fn ukf_update<const D: usize, const E: usize, H>(
    pred: &UkfState<D>,
    observation: &SVector<f64, E>,
    h: H,
    noise_mean: &SVector<f64, E>,
    noise_cov: &SMatrix<f64, E, E>,
    ut: &UtParams,
) -> Result<UkfState<D>>
where
    H: Fn(&Vector<D>) -> SVector<f64, E>,
{
    let out = unscented_transform(&pred.mean, &pred.cov, h, ut).map_err(|_| diverged(pred.t, "measurement transform"))?;
    let predicted_obs = out.mean + noise_mean;
    let s = out.cov + noise_cov;
    apply_gain(pred, observation, &predicted_obs, &s, &out.cross, ut)
}

fn apply_gain<const D: usize, const E: usize>(
    pred: &UkfState<D>,
    observation: &SVector<f64, E>,
    predicted_obs: &SVector<f64, E>,
    s: &SMatrix<f64, E, E>,
    cross: &SMatrix<f64, D, E>,
    ut: &UtParams,
) -> Result<UkfState<D>> {
    let s = (s + s.transpose()) * 0.5;
    let s_inv = spd_inverse(&s).ok_or_else(|| diverged(pred.t, "innovation covariance is not positive definite"))?;
    let gain = cross * s_inv;
    let mean = pred.mean + gain * (observation - predicted_obs);
    let cov = pred.cov - gain * s * gain.transpose();
    UkfState {
        mean,
        cov: condition_covariance(&cov, ut.floor),
        t: pred.t,
    }
    .check("posterior moments")
}

/// One predict/update cycle of the unscented Kalman filter.
pub fn ukf_step<const D: usize, T: Transition<D>>(
    state: &UkfState<D>,
    observation: &Vector<D>,
    model: &StateSpaceModel<T>,
    ut: &UtParams,
) -> Result<UkfState<D>> {
    let pred = ukf_predict(state, model, ut)?;
    ukf_update_identity(&pred, observation, model, ut)
}
