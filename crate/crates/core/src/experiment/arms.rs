use std::collections::HashMap;

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{ExperimentConfig, ExperimentPlan, Method};
use super::systems::{FilterKnowledge, SystemConfig};
use crate::dynamics::{generate_settled, observe, ObservationSeries, StateVec, Trajectory, DEFAULT_INIT};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::filtering::{forecast_propagate, run_filter, FilterMethod, FilterSetup};
use crate::rng::{derive_seed, from_seed, label_tag, stream, Rng};
use crate::svm::{select_embedding_multi, train_final, Hyperparams, TrainedLsSvm};

/// RMSE of one method over the test indices of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRecord {
    pub system: String,
    pub method: Method,
    /// Only the SVM arm has a historical data set.
    pub historical_size: Option<usize>,
    pub t_p: usize,
    pub t_f: usize,
    pub repetition: usize,
    /// `None` when every test index failed.
    pub rmse: Option<f64>,
    pub n_failures: usize,
}

/// `sqrt` of the mean squared error over all indices and coordinates.
pub fn compute_rmse(predictions: &[StateVec], truths: &[StateVec]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("rmse of zero predictions".into()));
    }
    let sse: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (*p - *t).norm_squared())
        .sum();
    Ok((sse / (3 * predictions.len()) as f64).sqrt())
}

/// Draws `n_test` distinct indices `i` with `i >= max_t_p - 1` and
/// `i + max_t_f < length`, uniformly, returned in ascending order.
pub fn sample_test_indices(
    length: usize,
    n_test: usize,
    max_t_p: usize,
    max_t_f: usize,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    let lo = max_t_p.saturating_sub(1);
    let admissible = length.saturating_sub(max_t_f).saturating_sub(lo);
    if admissible < n_test {
        return Err(Error::Infeasible(format!(
            "{n_test} test indices requested but only {admissible} positions of a length-{length} \
             trajectory admit {max_t_p} past and {max_t_f} future states"
        )));
    }
    let mut out: Vec<usize> = index::sample(rng, admissible, n_test)
        .into_iter()
        .map(|i| i + lo)
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Simulates `n_states` states of `system` (after burn-in from a jittered
/// initial state) and observes them.
pub fn simulate(system: &SystemConfig, plan: &ExperimentPlan, n_states: usize, rng: &mut Rng) -> Result<(Trajectory, ObservationSeries)> {
    if n_states == 0 {
        return Err(Error::InvalidArgument("cannot simulate zero states".into()));
    }
    let mut jitter = || -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        plan.init_jitter * z
    };
    let init = DEFAULT_INIT + StateVec::new(jitter(), jitter(), jitter());
    let traj = generate_settled(
        init,
        system.params,
        plan.dt,
        plan.burn_in,
        n_states - 1,
        system.stoch_noise.as_ref(),
        rng,
    )?;
    let obs = observe(&traj, &system.obs_noise, rng);
    Ok((traj, obs))
}

/// The test trajectory and test indices shared by every arm in one repetition.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub repetition: usize,
    pub truth: Trajectory,
    pub obs: ObservationSeries,
    pub indices: Vec<usize>,
}

impl TestSet {
    pub fn window(&self, index: usize, t_p: usize) -> &[StateVec] {
        &self.obs.observations[index + 1 - t_p..=index]
    }
}

pub(crate) fn system_tag(system: &SystemConfig) -> u64 {
    label_tag(&system.id)
}

pub fn build_test_set(cfg: &ExperimentConfig, system: &SystemConfig, repetition: usize) -> Result<TestSet> {
    let plan = &cfg.plan;
    let sys = system_tag(system);
    let mut rng = stream(cfg.seed, &[sys, label_tag("test"), repetition as u64]);
    let (truth, obs) = simulate(system, plan, plan.test_length, &mut rng)?;
    let mut irng = stream(cfg.seed, &[sys, label_tag("indices"), repetition as u64]);
    let indices = sample_test_indices(
        truth.len(),
        plan.effective_n_test(),
        plan.max_t_p(),
        plan.max_t_f(),
        &mut irng,
    )?;
    Ok(TestSet {
        repetition,
        truth,
        obs,
        indices,
    })
}

pub fn build_test_sets(cfg: &ExperimentConfig, system: &SystemConfig) -> Result<Vec<TestSet>> {
    (0..cfg.plan.test_repetitions())
        .into_par_iter()
        .map(|r| build_test_set(cfg, system, r))
        .collect()
}

/// Seed of the historical series for one `(size, repetition)` cell.
pub fn historical_seed(cfg: &ExperimentConfig, system: &SystemConfig, size: usize, repetition: usize) -> u64 {
    derive_seed(
        cfg.seed,
        &[system_tag(system), label_tag("hist"), size as u64, repetition as u64],
    )
}

/// Models selected for every `(T_p, T_f)` pair from one historical series.
/// `models[p][f]` indexes `plan.t_p[p]` and `plan.t_f[f]`.
pub struct SvmFits {
    pub models: Vec<Vec<std::sync::Arc<TrainedLsSvm>>>,
}

/// Runs the hyperparameter protocol once for all horizons and picks, for
/// every `T_p`, the best embedding no longer than `min(T_p, max_embedding)`.
pub fn fit_svm_models(cfg: &ExperimentConfig, hist: &ObservationSeries) -> Result<SvmFits> {
    let plan = &cfg.plan;
    let cap = |t_p: usize| t_p.min(cfg.svm.max_embedding);
    let traces = select_embedding_multi(hist, &plan.t_f, cap(plan.max_t_p()), &cfg.svm)?;
    let mut cache: HashMap<(usize, usize, u64, u64), std::sync::Arc<TrainedLsSvm>> = HashMap::new();
    let mut models = Vec::with_capacity(plan.t_p.len());
    for &t_p in &plan.t_p {
        let mut row = Vec::with_capacity(plan.t_f.len());
        for (f, &t_f) in plan.t_f.iter().enumerate() {
            let best = traces[f]
                .best_within(cap(t_p))
                .ok_or_else(|| Error::Solver("empty embedding trace".into()))?;
            let key = (f, best.m, best.lambda.to_bits(), best.sigma.to_bits());
            let model = match cache.get(&key) {
                Some(m) => m.clone(),
                None => {
                    let hyper = Hyperparams {
                        lambda: best.lambda,
                        sigma: best.sigma,
                        m: best.m,
                    };
                    let m = std::sync::Arc::new(train_final(hist, hyper, t_f, cfg.svm.retrain_lambda_factor)?);
                    cache.insert(key, m.clone());
                    m
                }
            };
            row.push(model);
        }
        models.push(row);
    }
    Ok(SvmFits { models })
}

/// Predictions of the fitted models at every test index, `[p][f][k]`.
pub fn svm_predictions(cfg: &ExperimentConfig, fits: &SvmFits, tests: &TestSet) -> Result<Vec<Vec<Vec<StateVec>>>> {
    let plan = &cfg.plan;
    plan.t_p
        .iter()
        .zip(&fits.models)
        .map(|(&t_p, row)| {
            row.iter()
                .map(|model| {
                    tests
                        .indices
                        .iter()
                        .map(|&i| model.predict(tests.window(i, t_p)))
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn truths(tests: &TestSet, t_f: usize) -> Vec<StateVec> {
    tests.indices.iter().map(|&i| tests.truth.states[i + t_f]).collect()
}

/// The data-driven arm.
pub fn run_svm_arm(cfg: &ExperimentConfig, system: &SystemConfig, tests: &[TestSet]) -> Result<Vec<RmseRecord>> {
    let plan = &cfg.plan;
    let jobs: Vec<(usize, usize)> = plan
        .historical_sizes()
        .iter()
        .flat_map(|h| (0..h.repetitions).map(move |r| (h.size, r)))
        .collect();
    let per_job: Vec<Vec<RmseRecord>> = jobs
        .par_iter()
        .map(|&(size, rep)| {
            let test = tests
                .get(rep)
                .ok_or_else(|| Error::InvalidArgument(format!("no test set for repetition {rep}")))?;
            let mut rng = from_seed(historical_seed(cfg, system, size, rep));
            let (_, hist) = simulate(system, plan, size, &mut rng)?;
            let fits = fit_svm_models(cfg, &hist)?;
            let preds = svm_predictions(cfg, &fits, test)?;
            let mut out = Vec::new();
            for (p, &t_p) in plan.t_p.iter().enumerate() {
                for (f, &t_f) in plan.t_f.iter().enumerate() {
                    out.push(RmseRecord {
                        system: system.id.clone(),
                        method: Method::Svm,
                        historical_size: Some(size),
                        t_p,
                        t_f,
                        repetition: rep,
                        rmse: Some(compute_rmse(&preds[p][f], &truths(test, t_f))?),
                        n_failures: 0,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// The filter setup an arm uses on `system`.
pub fn filter_setup(cfg: &ExperimentConfig, system: &SystemConfig, method: FilterMethod) -> FilterSetup {
    let known = system.filter_knowledge == FilterKnowledge::AllKnown;
    let mut setup = FilterSetup::standard(method, known.then_some(system.params), cfg.plan.dt, &cfg.filter);
    if known && method == FilterMethod::UkfGaussian {
        setup.obs_noise = system.obs_noise.clone();
        setup.process_noise = system.stoch_noise.clone().unwrap_or_else(NoiseSpec::zero);
    }
    setup
}

fn is_divergence(e: &Error) -> bool {
    matches!(
        e,
        Error::FilterDiverged { .. } | Error::WeightUnderflow { .. } | Error::BlowUp { .. } | Error::Solver(_)
    )
}

/// Filter, then forecast every horizon in `t_f` (ascending); `None` marks
/// a diverged run or forecast.
pub fn filter_forecasts(window: &[StateVec], setup: &FilterSetup, t_f: &[usize], rng: &mut Rng) -> Result<Vec<Option<StateVec>>> {
    let est = match run_filter(window, setup, rng, None) {
        Ok(est) => est,
        Err(e) if is_divergence(&e) => return Ok(vec![None; t_f.len()]),
        Err(e) => return Err(e),
    };
    let mut out = Vec::with_capacity(t_f.len());
    let mut cur = Some(est.state);
    let mut done = 0;
    for &h in t_f {
        cur = cur.and_then(|z| forecast_propagate(z, est.params, h - done, setup.dt).ok());
        done = h;
        out.push(cur);
    }
    Ok(out)
}

/// A knowledge-based arm. Diverged runs are excluded from the RMSE and
/// counted in `n_failures`.
pub fn run_filter_arm(cfg: &ExperimentConfig, system: &SystemConfig, method: Method, tests: &[TestSet]) -> Result<Vec<RmseRecord>> {
    let fm = method
        .filter()
        .ok_or_else(|| Error::InvalidArgument("run_filter_arm needs a filter method".into()))?;
    let plan = &cfg.plan;
    let setup = filter_setup(cfg, system, fm);
    let sys = system_tag(system);
    let mut out = Vec::new();
    for test in tests {
        for &t_p in &plan.t_p {
            let forecasts: Vec<Vec<Option<StateVec>>> = test
                .indices
                .par_iter()
                .enumerate()
                .map(|(k, &i)| {
                    let mut rng = stream(
                        cfg.seed,
                        &[sys, label_tag(method.name()), test.repetition as u64, t_p as u64, k as u64],
                    );
                    filter_forecasts(test.window(i, t_p), &setup, &plan.t_f, &mut rng)
                })
                .collect::<Result<_>>()?;
            for (f, &t_f) in plan.t_f.iter().enumerate() {
                let mut preds = Vec::new();
                let mut truth = Vec::new();
                for (k, &i) in test.indices.iter().enumerate() {
                    if let Some(p) = forecasts[k][f] {
                        preds.push(p);
                        truth.push(test.truth.states[i + t_f]);
                    }
                }
                let n_failures = test.indices.len() - preds.len();
                out.push(RmseRecord {
                    system: system.id.clone(),
                    method,
                    historical_size: None,
                    t_p,
                    t_f,
                    repetition: test.repetition,
                    rmse: if preds.is_empty() {
                        None
                    } else {
                        Some(compute_rmse(&preds, &truth)?)
                    },
                    n_failures,
                });
            }
        }
    }
    Ok(out)
}

/// Every planned record for one system.
pub fn run_system(cfg: &ExperimentConfig, system: &SystemConfig) -> Result<Vec<RmseRecord>> {
    let tests = build_test_sets(cfg, system)?;
    let mut out = Vec::new();
    for &method in &cfg.plan.methods {
        let recs = match method {
            Method::Svm => run_svm_arm(cfg, system, &tests)?,
            _ => run_filter_arm(cfg, system, method, &tests)?,
        };
        out.extend(recs);
    }
    Ok(out)
}
