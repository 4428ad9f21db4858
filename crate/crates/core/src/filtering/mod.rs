//! Knowledge-based forecasting: Gaussian (UKF) and particle filtering of
//! the Lorenz state, dual estimation of its parameters, and forecasting by
//! propagating the final estimate through the noiseless model.
//!
//! Filters are generic over the state dimension `D` so the same code runs
//! on the 3-d Lorenz system and on small linear test systems. The
//! observation map is always the identity.

mod dual;
mod pf;
mod runner;
mod ukf;
mod ut;

use serde::{Deserialize, Serialize};

use crate::dynamics::{rk4_raw, LorenzParams, StateVec};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::noise::NoiseSpec;

pub use dual::{dual_init, dual_step, DualFilterState, DualSettings, StateFilter};
pub use pf::{
    effective_sample_size, pf_init, pf_reweight, pf_step, resample, systematic_indices, ukf_proposal,
    GaussianProposal, ParticleEnsemble, PfSettings, ProposalKind,
};
pub use runner::{run_filter, FilterEstimate, FilterMethod, FilterSession, FilterSetup, FilterTrace, TraceRow};
pub use ukf::{ukf_predict, ukf_step, ukf_update, ukf_update_identity, UkfState};
pub use ut::{unscented_transform, UtOutput};

/// Sigma-point constants of the scaled unscented transform, plus the
/// eigenvalue floor applied to covariances before taking square roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub floor: f64,
}

impl Default for UtParams {
    fn default() -> Self {
        UtParams {
            alpha: 1e-3,
            beta: 2.0,
            kappa: 0.0,
            floor: 1e-10,
        }
    }
}

/// Discrete-time state transition `z ↦ f(z)`.
pub trait Transition<const D: usize>: Sync {
    fn apply(&self, z: &Vector<D>) -> Vector<D>;
}

/// The dt-sampled RK4 Lorenz map for fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzMap {
    pub params: LorenzParams,
    pub dt: f64,
}

impl Transition<3> for LorenzMap {
    fn apply(&self, z: &Vector<3>) -> Vector<3> {
        let next = rk4_raw([z[0], z[1], z[2]], &self.params.to_array(), self.dt);
        Vector::<3>::new(next[0], next[1], next[2])
    }
}

/// `z ↦ A z + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMap<const D: usize> {
    pub a: Matrix<D>,
    pub b: Vector<D>,
}

impl<const D: usize> Transition<D> for LinearMap<D> {
    fn apply(&self, z: &Vector<D>) -> Vector<D> {
        self.a * z + self.b
    }
}

/// Transition plus per-coordinate iid process and observation noise; the
/// observation map is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel<T> {
    pub transition: T,
    pub process_noise: NoiseSpec,
    pub obs_noise: NoiseSpec,
}

impl<T> StateSpaceModel<T> {
    pub fn new(transition: T, process_noise: NoiseSpec, obs_noise: NoiseSpec) -> Result<Self> {
        process_noise.validate()?;
        obs_noise.validate()?;
        Ok(StateSpaceModel {
            transition,
            process_noise,
            obs_noise,
        })
    }
}

/// One tempering step of the parameter-noise variance.
pub fn temper(nu_variance: f64, gamma: f64) -> f64 {
    nu_variance * gamma
}

/// Integrates the noiseless model `steps` times from `z`.
pub fn forecast_propagate(z: StateVec, theta: LorenzParams, steps: usize, dt: f64) -> Result<StateVec> {
    let p = theta.to_array();
    let mut cur = z.to_array();
    for step in 1..=steps {
        cur = rk4_raw(cur, &p, dt);
        if !cur.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp { step });
        }
    }
    Ok(StateVec::from_array(cur))
}

/// Everything the filter arms can be tuned with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub ut: UtParams,
    pub particles: usize,
    /// Resample when ESS drops below this fraction of the particle count.
    pub resample_threshold: f64,
    pub proposal: ProposalKind,
    /// Standard deviation of the Gaussian process noise the filters assume.
    pub process_noise_sd: f64,
    /// Diagonal of the initial state covariance.
    pub state_prior_var: f64,
    pub param_prior_mean: LorenzParams,
    /// Diagonal of the initial parameter covariance, `(sigma, b, r)`.
    pub param_prior_var: [f64; 3],
    /// Initial variance of the parameter random walk.
    pub nu0: f64,
    /// Per-step multiplicative shrinkage of the random-walk variance.
    pub gamma: f64,
    /// Observation sd assumed by the Gaussian (UKF) arm.
    pub gaussian_obs_sd: f64,
    /// Observation scale assumed by the Laplace (particle) arm.
    pub laplace_scale: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            ut: UtParams::default(),
            particles: 1000,
            resample_threshold: 0.5,
            proposal: ProposalKind::Ukf,
            process_noise_sd: 0.1,
            state_prior_var: 2.0,
            param_prior_mean: LorenzParams::CLASSIC,
            param_prior_var: [4.0, 1.0, 9.0],
            nu0: 0.01,
            gamma: 0.995,
            gaussian_obs_sd: 0.8,
            laplace_scale: 0.8 / std::f64::consts::SQRT_2,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if !(self.ut.alpha > 0.0) {
            return bad("ut.alpha must be > 0");
        }
        if self.particles == 0 {
            return bad("particles must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.resample_threshold) {
            return bad("resample_threshold must lie in [0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.nu0 >= 0.0) || !(self.state_prior_var >= 0.0) {
            return bad("variances must be >= 0");
        }
        if self.param_prior_var.iter().any(|v| !(*v >= 0.0)) {
            return bad("param_prior_var entries must be >= 0");
        }
        if !(self.process_noise_sd >= 0.0) || !(self.gaussian_obs_sd > 0.0) || !(self.laplace_scale > 0.0) {
            return bad("noise scales must be positive");
        }
        self.param_prior_mean.validate()
    }

    pub fn process_noise(&self) -> NoiseSpec {
        if self.process_noise_sd > 0.0 {
            NoiseSpec::gaussian(0.0, self.process_noise_sd)
        } else {
            NoiseSpec::zero()
        }
    }
}

pub(crate) fn to_vector(s: StateVec) -> Vector<3> {
    Vector::<3>::new(s.x, s.y, s.z)
}

pub(crate) fn to_state(v: &Vector<3>) -> StateVec {
    StateVec::new(v[0], v[1], v[2])
}
