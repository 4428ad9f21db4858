use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arms::simulate;
use super::plan::ExperimentConfig;
use crate::dynamics::LorenzParams;
use crate::error::{Error, Result};
use crate::filtering::{run_filter, FilterSetup, FilterTrace};
use crate::rng::{label_tag, stream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamConvergenceRecord {
    pub level: usize,
    pub repetition: usize,
    pub t: usize,
    /// Mean over `(sigma, b, r)` of the squared estimation error.
    pub mse: f64,
}

pub fn param_mse(est: LorenzParams, truth: LorenzParams) -> f64 {
    let (a, b) = (est.to_array(), truth.to_array());
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / 3.0
}

/// `truth + level * (±p₀, ±p₁, ±p₂)` with independent fair signs.
pub fn perturbed_prior(truth: LorenzParams, offsets: [f64; 3], level: usize, rng: &mut Rng) -> LorenzParams {
    let t = truth.to_array();
    let mut out = [0.0; 3];
    for c in 0..3 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        out[c] = t[c] + sign * level as f64 * offsets[c];
    }
    LorenzParams::from_array(out)
}

/// Dual estimation on the configured system from perturbed parameter
/// priors, recording the parameter MSE after every observation.
///
/// The filter knows the true noise laws: observation noise is the system's
/// own, process noise follows the filter config.
pub fn param_convergence_experiment(cfg: &ExperimentConfig) -> Result<Vec<ParamConvergenceRecord>> {
    let pc = &cfg.param_convergence;
    pc.validate()?;
    let system = cfg.system(&pc.system)?;
    let method = pc
        .method
        .filter()
        .ok_or_else(|| Error::Config("param_convergence method must be a filter".into()))?;
    let jobs: Vec<(usize, usize)> = pc
        .levels
        .iter()
        .flat_map(|&l| (0..pc.repetitions).map(move |r| (l, r)))
        .collect();
    let per_job: Vec<Vec<ParamConvergenceRecord>> = jobs
        .par_iter()
        .map(|&(level, rep)| {
            let tags = [label_tag("param"), level as u64, rep as u64];
            let mut rng = stream(cfg.seed, &tags);
            let prior = perturbed_prior(system.params, pc.perturbation, level, &mut rng);
            let (_, obs) = simulate(&system, &cfg.plan, pc.steps, &mut rng)?;
            let mut filter_cfg = cfg.filter.clone();
            filter_cfg.param_prior_mean = prior;
            let mut setup = FilterSetup::standard(method, None, cfg.plan.dt, &filter_cfg);
            setup.obs_noise = system.obs_noise.clone();
            let mut trace = FilterTrace::default();
            match run_filter(&obs.observations, &setup, &mut rng, Some(&mut trace)) {
                Ok(_) | Err(Error::FilterDiverged { .. }) => {}
                Err(e) => return Err(e),
            }
            Ok(trace
                .rows
                .iter()
                .map(|row| ParamConvergenceRecord {
                    level,
                    repetition: rep,
                    t: row.t,
                    mse: param_mse(row.params.expect("dual run records parameters"), system.params),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}
