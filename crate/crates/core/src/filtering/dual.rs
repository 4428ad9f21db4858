use super::pf::{pf_reweight, pf_step, ParticleEnsemble, PfSettings};
use super::ukf::{ukf_step, ukf_update, ukf_update_identity, UkfState};
use super::{temper, LorenzMap, StateSpaceModel, UtParams};
use crate::dynamics::{rk4_raw, LorenzParams};
use crate::error::Result;
use crate::linalg::{condition_covariance, Matrix, Vector};
use crate::noise::NoiseSpec;
use crate::rng::Rng;

/// The filter tracking the Lorenz state.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFilter {
    Ukf(UkfState<3>),
    Pf(ParticleEnsemble<3>),
}

impl StateFilter {
    pub fn mean(&self) -> Vector<3> {
        match self {
            StateFilter::Ukf(s) => s.mean,
            StateFilter::Pf(e) => e.mean(),
        }
    }

    pub fn ess(&self) -> Option<f64> {
        match self {
            StateFilter::Ukf(_) => None,
            StateFilter::Pf(e) => Some(e.last_ess),
        }
    }

    /// Measurement update only, for the first observation of a window.
    pub fn update_only(&self, obs: &Vector<3>, model: &StateSpaceModel<LorenzMap>, s: &DualSettings, rng: &mut Rng) -> Result<Self> {
        Ok(match self {
            StateFilter::Ukf(st) => StateFilter::Ukf(ukf_update_identity(st, obs, model, &s.ut)?),
            StateFilter::Pf(e) => StateFilter::Pf(pf_reweight(e, obs, model, &s.pf, rng)?),
        })
    }

    pub fn step(&self, obs: &Vector<3>, model: &StateSpaceModel<LorenzMap>, s: &DualSettings, rng: &mut Rng) -> Result<Self> {
        Ok(match self {
            StateFilter::Ukf(st) => StateFilter::Ukf(ukf_step(st, obs, model, &s.ut)?),
            StateFilter::Pf(e) => StateFilter::Pf(pf_step(e, obs, model, &s.pf, rng)?),
        })
    }
}

/// Fixed ingredients of a dual (or state-only) Lorenz filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSettings {
    pub dt: f64,
    pub process_noise: NoiseSpec,
    pub obs_noise: NoiseSpec,
    pub ut: UtParams,
    pub pf: PfSettings,
    pub gamma: f64,
}

impl DualSettings {
    pub fn state_model(&self, params: LorenzParams) -> StateSpaceModel<LorenzMap> {
        StateSpaceModel {
            transition: LorenzMap { params, dt: self.dt },
            process_noise: self.process_noise.clone(),
            obs_noise: self.obs_noise.clone(),
        }
    }
}

/// A state filter and a UKF over `(sigma, b, r)` run side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFilterState {
    pub state: StateFilter,
    pub params: UkfState<3>,
    /// Current variance of the parameter random walk.
    pub nu_variance: f64,
    pub t: usize,
}

impl DualFilterState {
    pub fn param_estimate(&self) -> LorenzParams {
        LorenzParams::new(self.params.mean[0], self.params.mean[1], self.params.mean[2])
    }
}

pub fn dual_init(state: StateFilter, param_mean: LorenzParams, param_cov: Matrix<3>, nu0: f64) -> DualFilterState {
    let p = param_mean.to_array();
    DualFilterState {
        state,
        params: UkfState::new(Vector::<3>::new(p[0], p[1], p[2]), param_cov),
        nu_variance: nu0,
        t: 0,
    }
}

/// One dual-estimation step.
///
/// The parameter filter first does a random-walk prediction with variance
/// `nu_variance` and is updated through `θ ↦ f(ẑ | θ)` where `ẑ` is the
/// current state estimate; the state filter then steps with the updated
/// parameter mean. Finally `nu_variance` is tempered.
pub fn dual_step(dual: &DualFilterState, observation: &Vector<3>, settings: &DualSettings, rng: &mut Rng) -> Result<DualFilterState> {
    let z_hat = dual.state.mean();
    let z = [z_hat[0], z_hat[1], z_hat[2]];
    let dt = settings.dt;

    let pred = UkfState {
        mean: dual.params.mean,
        cov: condition_covariance(
            &(dual.params.cov + Matrix::<3>::identity() * dual.nu_variance),
            settings.ut.floor,
        ),
        t: dual.t + 1,
    };
    let noise_mean = Vector::<3>::repeat(settings.process_noise.mean() + settings.obs_noise.mean());
    let noise_cov =
        Matrix::<3>::identity() * (settings.process_noise.variance() + settings.obs_noise.variance());
    let params = ukf_update(
        &pred,
        observation,
        |theta: &Vector<3>| {
            let next = rk4_raw(z, &[theta[0], theta[1], theta[2]], dt);
            Vector::<3>::new(next[0], next[1], next[2])
        },
        &noise_mean,
        &noise_cov,
        &settings.ut,
    )?;

    let theta = LorenzParams::new(params.mean[0], params.mean[1], params.mean[2]);
    let state = dual.state.step(observation, &settings.state_model(theta), settings, rng)?;
    Ok(DualFilterState {
        state,
        params,
        nu_variance: temper(dual.nu_variance, settings.gamma),
        t: dual.t + 1,
    })
}
