use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ukf::{ukf_predict, ukf_update_identity, UkfState};
use super::{StateSpaceModel, Transition, UtParams};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, gaussian_log_density, psd_sqrt, Matrix, Vector};
use crate::rng::Rng;

/// Importance distribution used to move particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalKind {
    /// The transition density; weights reduce to the likelihood.
    Prior,
    /// A per-particle UKF posterior (unscented particle filter).
    Ukf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfSettings {
    pub proposal: ProposalKind,
    pub ut: UtParams,
    /// Resample when ESS < `resample_threshold * N`.
    pub resample_threshold: f64,
}

impl Default for PfSettings {
    fn default() -> Self {
        PfSettings {
            proposal: ProposalKind::Ukf,
            ut: UtParams::default(),
            resample_threshold: 0.5,
        }
    }
}

/// Weighted particles; `covs[i]` is particle `i`'s own Gaussian spread,
/// used and refreshed by the UKF proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<const D: usize> {
    pub particles: Vec<Vector<D>>,
    pub weights: Vec<f64>,
    pub covs: Vec<Matrix<D>>,
    pub t: usize,
    /// ESS right after the last reweighting (before any resampling).
    pub last_ess: f64,
    pub last_resampled: bool,
}

impl<const D: usize> ParticleEnsemble<D> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn mean(&self) -> Vector<D> {
        self.particles
            .iter()
            .zip(&self.weights)
            .fold(Vector::<D>::zeros(), |acc, (p, w)| acc + p * *w)
    }

    pub fn covariance(&self) -> Matrix<D> {
        let m = self.mean();
        self.particles
            .iter()
            .zip(&self.weights)
            .fold(Matrix::<D>::zeros(), |acc, (p, w)| {
                let d = p - m;
                acc + d * d.transpose() * *w
            })
    }
}

pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

fn standard_normal<const D: usize>(rng: &mut Rng) -> Vector<D> {
    Vector::<D>::from_fn(|_, _| StandardNormal.sample(rng))
}

/// `n` draws from `N(mean, sigma0)` with uniform weights.
pub fn pf_init<const D: usize>(mean: &Vector<D>, sigma0: &Matrix<D>, n: usize, rng: &mut Rng) -> Result<ParticleEnsemble<D>> {
    if n == 0 {
        return Err(Error::InvalidArgument("particle count must be >= 1".into()));
    }
    let root = psd_sqrt(sigma0, 0.0)
        .ok_or_else(|| Error::InvalidArgument("prior covariance has non-finite entries".into()))?;
    let particles = (0..n).map(|_| mean + root * standard_normal::<D>(rng)).collect();
    Ok(ParticleEnsemble {
        particles,
        weights: vec![1.0 / n as f64; n],
        covs: vec![*sigma0; n],
        t: 0,
        last_ess: n as f64,
        last_resampled: false,
    })
}

/// Gaussian proposal for one particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProposal<const D: usize> {
    pub mean: Vector<D>,
    pub cov: Matrix<D>,
    /// Lower factor of `cov`.
    pub chol: Matrix<D>,
}

impl<const D: usize> GaussianProposal<D> {
    pub fn log_density(&self, x: &Vector<D>) -> f64 {
        gaussian_log_density(x, &self.mean, &self.chol)
    }

    pub fn sample(&self, rng: &mut Rng) -> Vector<D> {
        self.mean + self.chol * standard_normal::<D>(rng)
    }
}

/// One UKF predict/update around `particle` (with its own covariance),
/// returned as the particle's proposal distribution.
pub fn ukf_proposal<const D: usize, T: Transition<D>>(
    particle: &Vector<D>,
    cov: &Matrix<D>,
    observation: &Vector<D>,
    model: &StateSpaceModel<T>,
    ut: &UtParams,
) -> Result<GaussianProposal<D>> {
    let start = UkfState {
        mean: *particle,
        cov: *cov,
        t: 0,
    };
    let pred = ukf_predict(&start, model, ut)?;
    let post = ukf_update_identity(&pred, observation, model, ut)?;
    let chol = match cholesky(&post.cov, 0.0) {
        Some(l) => l,
        None => psd_sqrt(&post.cov, ut.floor.max(1e-300)).ok_or_else(|| Error::FilterDiverged {
            step: 0,
            reason: "proposal covariance".into(),
        })?,
    };
    Ok(GaussianProposal {
        mean: post.mean,
        cov: post.cov,
        chol,
    })
}

fn obs_log_likelihood<const D: usize, T>(model: &StateSpaceModel<T>, observation: &Vector<D>, z: &Vector<D>) -> f64 {
    (0..D).map(|c| model.obs_noise.log_density(observation[c] - z[c])).sum()
}

/// Normalizes log-weights in place into `weights`.
fn normalize(log_w: &[f64], weights: &mut [f64], step: usize) -> Result<()> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::WeightUnderflow { step });
    }
    let mut total = 0.0;
    for (w, lw) in weights.iter_mut().zip(log_w) {
        *w = (lw - max).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// Systematic resampling: ancestor index for each of `n` offspring.
pub fn systematic_indices(weights: &[f64], rng: &mut Rng) -> Vec<usize> {
    let n = weights.len();
    let u0: f64 = rng.random::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut i = 0;
    for k in 0..n {
        let u = u0 + k as f64 / n as f64;
        while (u > cum || weights[i] == 0.0) && i + 1 < n {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
    out
}

/// Systematic resampling to uniform weights.
pub fn resample<const D: usize>(ens: &ParticleEnsemble<D>, rng: &mut Rng) -> ParticleEnsemble<D> {
    let idx = systematic_indices(&ens.weights, rng);
    let n = ens.len();
    ParticleEnsemble {
        particles: idx.iter().map(|&i| ens.particles[i]).collect(),
        covs: idx.iter().map(|&i| ens.covs[i]).collect(),
        weights: vec![1.0 / n as f64; n],
        t: ens.t,
        last_ess: ens.last_ess,
        last_resampled: true,
    }
}

fn finish<const D: usize>(
    mut ens: ParticleEnsemble<D>,
    log_w: &[f64],
    settings: &PfSettings,
    rng: &mut Rng,
) -> Result<ParticleEnsemble<D>> {
    normalize(log_w, &mut ens.weights, ens.t)?;
    ens.last_ess = effective_sample_size(&ens.weights);
    ens.last_resampled = false;
    if ens.last_ess < settings.resample_threshold * ens.len() as f64 {
        ens = resample(&ens, rng);
    }
    Ok(ens)
}

/// Reweights by the likelihood of `observation` without moving particles.
pub fn pf_reweight<const D: usize, T>(
    ens: &ParticleEnsemble<D>,
    observation: &Vector<D>,
    model: &StateSpaceModel<T>,
    settings: &PfSettings,
    rng: &mut Rng,
) -> Result<ParticleEnsemble<D>> {
    let log_w: Vec<f64> = ens
        .particles
        .iter()
        .zip(&ens.weights)
        .map(|(p, w)| w.ln() + obs_log_likelihood(model, observation, p))
        .collect();
    finish(ens.clone(), &log_w, settings, rng)
}

/// Moves every particle with the proposal and applies the weight recursion
/// `w ← w · p(x | z') p(z' | z) / q(z')`, then resamples if the ESS is low.
pub fn pf_step<const D: usize, T: Transition<D>>(
    ens: &ParticleEnsemble<D>,
    observation: &Vector<D>,
    model: &StateSpaceModel<T>,
    settings: &PfSettings,
    rng: &mut Rng,
) -> Result<ParticleEnsemble<D>> {
    let step = ens.t + 1;
    let n = ens.len();
    let mut next = ParticleEnsemble {
        particles: Vec::with_capacity(n),
        weights: vec![0.0; n],
        covs: Vec::with_capacity(n),
        t: step,
        last_ess: 0.0,
        last_resampled: false,
    };
    let mut log_w = Vec::with_capacity(n);
    match settings.proposal {
        ProposalKind::Prior => {
            for (p, w) in ens.particles.iter().zip(&ens.weights) {
                let mut z = model.transition.apply(p);
                for c in 0..D {
                    z[c] += model.process_noise.sample(rng);
                }
                log_w.push(w.ln() + obs_log_likelihood(model, observation, &z));
                next.particles.push(z);
            }
            next.covs = ens.covs.clone();
        }
        ProposalKind::Ukf => {
            if model.process_noise.is_point_mass() {
                return Err(Error::InvalidArgument(
                    "the UKF proposal needs a process noise with a density".into(),
                ));
            }
            for ((p, w), cov) in ens.particles.iter().zip(&ens.weights).zip(&ens.covs) {
                let prop = ukf_proposal(p, cov, observation, model, &settings.ut).map_err(|e| match e {
                    Error::FilterDiverged { reason, .. } => Error::FilterDiverged { step, reason },
                    other => other,
                })?;
                let z = prop.sample(rng);
                let fz = model.transition.apply(p);
                let log_trans: f64 = (0..D).map(|c| model.process_noise.log_density(z[c] - fz[c])).sum();
                log_w.push(w.ln() + obs_log_likelihood(model, observation, &z) + log_trans - prop.log_density(&z));
                next.particles.push(z);
                next.covs.push(prop.cov);
            }
        }
    }
    finish(next, &log_w, settings, rng)
}
