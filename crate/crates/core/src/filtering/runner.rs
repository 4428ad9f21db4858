use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dual::{dual_init, dual_step, DualFilterState, DualSettings, StateFilter};
use super::pf::{pf_init, PfSettings};
use super::ukf::UkfState;
use super::{forecast_propagate, to_state, to_vector, FilterConfig};
use crate::dynamics::{fmt_f64, LorenzParams, StateVec};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::noise::NoiseSpec;
use crate::rng::Rng;

/// The two knowledge-based arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMethod {
    /// UKF with Gaussian observation noise.
    UkfGaussian,
    /// Particle filter with Laplace observation noise.
    PfLaplace,
}

impl FilterMethod {
    pub fn name(self) -> &'static str {
        match self {
            FilterMethod::UkfGaussian => "ukf_gaussian",
            FilterMethod::PfLaplace => "pf_laplace",
        }
    }
}

/// How to filter one window of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSetup {
    pub method: FilterMethod,
    /// `Some(θ)` runs a state-only filter with the parameters fixed at θ;
    /// `None` runs dual estimation from the configured parameter prior.
    pub known_params: Option<LorenzParams>,
    /// Observation noise assumed by the filter.
    pub obs_noise: NoiseSpec,
    /// Process noise assumed by the filter.
    pub process_noise: NoiseSpec,
    pub dt: f64,
    pub config: FilterConfig,
}

impl FilterSetup {
    /// The standard arm for `method`: Gaussian(0, sd) for the UKF and
    /// Laplace(0, scale) for the particle filter, from `config`.
    pub fn standard(method: FilterMethod, known_params: Option<LorenzParams>, dt: f64, config: &FilterConfig) -> Self {
        let obs_noise = match method {
            FilterMethod::UkfGaussian => NoiseSpec::gaussian(0.0, config.gaussian_obs_sd),
            FilterMethod::PfLaplace => NoiseSpec::laplace(0.0, config.laplace_scale),
        };
        FilterSetup {
            method,
            known_params,
            obs_noise,
            process_noise: config.process_noise(),
            dt,
            config: config.clone(),
        }
    }

    pub fn settings(&self) -> DualSettings {
        DualSettings {
            dt: self.dt,
            process_noise: self.process_noise.clone(),
            obs_noise: self.obs_noise.clone(),
            ut: self.config.ut,
            pf: PfSettings {
                proposal: self.config.proposal,
                ut: self.config.ut,
                resample_threshold: self.config.resample_threshold,
            },
            gamma: self.config.gamma,
        }
    }
}

/// Filtered state and parameters at the end of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterEstimate {
    pub state: StateVec,
    pub params: LorenzParams,
}

impl FilterEstimate {
    pub fn forecast(&self, steps: usize, dt: f64) -> Result<StateVec> {
        forecast_propagate(self.state, self.params, steps, dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub mean: StateVec,
    /// Absent for state-only runs.
    pub params: Option<LorenzParams>,
    /// Absent for the UKF.
    pub ess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterTrace {
    pub rows: Vec<TraceRow>,
}

impl FilterTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mean_x,mean_y,mean_z,param_sigma,param_b,param_r,ess\n");
        for r in &self.rows {
            let (ps, pb, pr) = match r.params {
                Some(p) => (fmt_f64(p.sigma), fmt_f64(p.b), fmt_f64(p.r)),
                None => (String::new(), String::new(), String::new()),
            };
            let ess = r.ess.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{ps},{pb},{pr},{ess}",
                r.t,
                fmt_f64(r.mean.x),
                fmt_f64(r.mean.y),
                fmt_f64(r.mean.z)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// A filter fed one observation at a time.
///
/// The prior is centered on the first observation with covariance
/// `state_prior_var · I`; that observation is assimilated by an update only.
#[derive(Debug, Clone)]
pub struct FilterSession {
    setup: FilterSetup,
    settings: DualSettings,
    dual: Option<DualFilterState>,
    rng: Rng,
}

impl FilterSession {
    pub fn new(setup: FilterSetup, rng: Rng) -> Result<Self> {
        setup.config.validate()?;
        setup.obs_noise.validate()?;
        setup.process_noise.validate()?;
        let settings = setup.settings();
        Ok(FilterSession {
            setup,
            settings,
            dual: None,
            rng,
        })
    }

    pub fn setup(&self) -> &FilterSetup {
        &self.setup
    }

    /// Number of observations assimilated so far.
    pub fn steps(&self) -> usize {
        self.dual.as_ref().map_or(0, |d| d.t + 1)
    }

    pub fn assimilate(&mut self, observation: StateVec) -> Result<()> {
        let y = to_vector(observation);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("observation is not finite".into()));
        }
        let setup = &self.setup;
        let settings = &self.settings;
        let rng = &mut self.rng;
        let next = match &self.dual {
            None => {
                let cfg = &setup.config;
                let prior_cov = Matrix::<3>::identity() * cfg.state_prior_var;
                let state = match setup.method {
                    FilterMethod::UkfGaussian => StateFilter::Ukf(UkfState::new(y, prior_cov)),
                    FilterMethod::PfLaplace => StateFilter::Pf(pf_init(&y, &prior_cov, cfg.particles, rng)?),
                };
                let start = setup.known_params.unwrap_or(cfg.param_prior_mean);
                let param_cov = Matrix::<3>::from_diagonal(&Vector::<3>::from(cfg.param_prior_var));
                let mut dual = dual_init(state, start, param_cov, cfg.nu0);
                dual.state = dual.state.update_only(&y, &settings.state_model(start), settings, rng)?;
                dual
            }
            Some(dual) => match setup.known_params {
                Some(theta) => DualFilterState {
                    state: dual.state.step(&y, &settings.state_model(theta), settings, rng)?,
                    t: dual.t + 1,
                    ..dual.clone()
                },
                None => dual_step(dual, &y, settings, rng)?,
            },
        };
        self.dual = Some(next);
        Ok(())
    }

    /// Current filtered state and parameters; `None` before the first observation.
    pub fn estimate(&self) -> Option<FilterEstimate> {
        self.dual.as_ref().map(|d| FilterEstimate {
            state: to_state(&d.state.mean()),
            params: self.setup.known_params.unwrap_or_else(|| d.param_estimate()),
        })
    }

    pub fn trace_row(&self) -> Option<TraceRow> {
        self.dual.as_ref().map(|d| TraceRow {
            t: d.t,
            mean: to_state(&d.state.mean()),
            params: self.setup.known_params.is_none().then(|| d.param_estimate()),
            ess: d.state.ess(),
        })
    }
}

/// Filters `window` from its first observation and returns the final
/// estimate; `trace`, when given, receives one row per observation.
pub fn run_filter(
    window: &[StateVec],
    setup: &FilterSetup,
    rng: &mut Rng,
    mut trace: Option<&mut FilterTrace>,
) -> Result<FilterEstimate> {
    if window.is_empty() {
        return Err(Error::InvalidArgument("filter window is empty".into()));
    }
    let mut session = FilterSession::new(setup.clone(), rng.clone())?;
    for obs in window {
        session.assimilate(*obs)?;
        if let (Some(tr), Some(row)) = (trace.as_deref_mut(), session.trace_row()) {
            tr.rows.push(row);
        }
    }
    let est = session.estimate().expect("window is non-empty");
    *rng = session.rng;
    if !est.state.is_finite() || est.params.validate().is_err() {
        return Err(Error::FilterDiverged {
            step: window.len() - 1,
            reason: "non-finite final estimate".into(),
        });
    }
    Ok(est)
}
