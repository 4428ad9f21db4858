use std::path::Path;

use serde::{Deserialize, Serialize};

use super::systems::{build_system, SystemConfig, SYSTEM_IDS};
use crate::dynamics::{BURN_IN_STEPS, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::filtering::{FilterConfig, FilterMethod};
use crate::svm::SvmConfig;

/// A forecasting arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Svm,
    UkfGaussian,
    PfLaplace,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Svm, Method::UkfGaussian, Method::PfLaplace];

    pub fn name(self) -> &'static str {
        match self {
            Method::Svm => "svm",
            Method::UkfGaussian => "ukf_gaussian",
            Method::PfLaplace => "pf_laplace",
        }
    }

    /// Accepts the record names and the short forms `ukf` and `pf`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(Method::Svm),
            "ukf" | "ukf_gaussian" => Ok(Method::UkfGaussian),
            "pf" | "pf_laplace" => Ok(Method::PfLaplace),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }

    pub fn filter(self) -> Option<FilterMethod> {
        match self {
            Method::Svm => None,
            Method::UkfGaussian => Some(FilterMethod::UkfGaussian),
            Method::PfLaplace => Some(FilterMethod::PfLaplace),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoricalSize {
    pub size: usize,
    pub repetitions: usize,
}

/// Which cells to run and how large they are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub systems: Vec<String>,
    pub methods: Vec<Method>,
    pub historical: Vec<HistoricalSize>,
    pub t_p: Vec<usize>,
    pub t_f: Vec<usize>,
    pub n_test: usize,
    pub dt: f64,
    pub burn_in: usize,
    /// Length of the trajectory test indices are drawn from.
    pub test_length: usize,
    /// Standard deviation of the per-coordinate jitter added to the initial
    /// state before burn-in.
    pub init_jitter: f64,
    /// Desk-scale caps; `None` lifts a cap.
    pub max_historical_size: Option<usize>,
    pub max_n_test: Option<usize>,
    pub max_repetitions: Option<usize>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        let table = [(500, 100), (1000, 100), (2000, 10), (4000, 10), (8000, 5), (16000, 5)];
        ExperimentPlan {
            systems: SYSTEM_IDS.iter().map(|s| s.to_string()).collect(),
            methods: Method::ALL.to_vec(),
            historical: table
                .iter()
                .map(|&(size, repetitions)| HistoricalSize { size, repetitions })
                .collect(),
            t_p: vec![5, 10, 20, 50, 100, 1000],
            t_f: vec![1, 5, 10, 20, 30, 40, 50],
            n_test: 1000,
            dt: DEFAULT_DT,
            burn_in: BURN_IN_STEPS,
            test_length: 5000,
            init_jitter: 1.0,
            max_historical_size: Some(2000),
            max_n_test: Some(100),
            max_repetitions: Some(1),
        }
    }
}

fn ascending_positive(name: &str, v: &[usize]) -> Result<()> {
    if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "{name} must be non-empty, positive and strictly ascending"
        )));
    }
    Ok(())
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        ascending_positive("t_p", &self.t_p)?;
        ascending_positive("t_f", &self.t_f)?;
        let sizes: Vec<usize> = self.historical.iter().map(|h| h.size).collect();
        ascending_positive("historical sizes", &sizes)?;
        if self.historical.iter().any(|h| h.repetitions == 0) {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.systems.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("systems and methods must be non-empty".into()));
        }
        if self.n_test == 0 || self.max_n_test == Some(0) || self.max_repetitions == Some(0) {
            return Err(Error::Config("n_test and caps must be >= 1".into()));
        }
        if self.historical_sizes().is_empty() {
            return Err(Error::Config("max_historical_size excludes every historical size".into()));
        }
        if !(self.dt > 0.0) || !(self.init_jitter >= 0.0) {
            return Err(Error::Config("dt must be > 0 and init_jitter >= 0".into()));
        }
        Ok(())
    }

    /// Historical sizes with repetition counts after the desk caps.
    pub fn historical_sizes(&self) -> Vec<HistoricalSize> {
        self.historical
            .iter()
            .filter(|h| self.max_historical_size.map_or(true, |cap| h.size <= cap))
            .map(|h| HistoricalSize {
                size: h.size,
                repetitions: self.max_repetitions.map_or(h.repetitions, |cap| h.repetitions.min(cap)),
            })
            .collect()
    }

    pub fn effective_n_test(&self) -> usize {
        self.max_n_test.map_or(self.n_test, |cap| self.n_test.min(cap))
    }

    /// Repetitions of the filter arms and number of test trajectories: the
    /// largest capped repetition count.
    pub fn test_repetitions(&self) -> usize {
        self.historical_sizes()
            .iter()
            .map(|h| h.repetitions)
            .max()
            .unwrap_or(1)
    }

    pub fn max_t_p(&self) -> usize {
        *self.t_p.last().expect("validated")
    }

    pub fn max_t_f(&self) -> usize {
        *self.t_f.last().expect("validated")
    }
}

/// Everything an experiment run reads from its config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub plan: ExperimentPlan,
    pub svm: SvmConfig,
    pub filter: FilterConfig,
    /// Replacements for built-in systems, matched by `id`; new ids add systems.
    pub systems: Vec<SystemConfig>,
    pub param_convergence: ParamConvergenceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            plan: ExperimentPlan::default(),
            svm: SvmConfig::default(),
            filter: FilterConfig::default(),
            systems: Vec::new(),
            param_convergence: ParamConvergenceConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        self.filter.validate()?;
        self.param_convergence.validate()?;
        if self.svm.folds < 2 || self.svm.grid_points == 0 || self.svm.max_embedding == 0 {
            return Err(Error::Config("svm needs folds >= 2, grid_points >= 1, max_embedding >= 1".into()));
        }
        for s in &self.systems {
            s.validate()?;
        }
        for id in &self.plan.systems {
            self.system(id)?;
        }
        Ok(())
    }

    /// The system `id`, with any override from the config applied.
    pub fn system(&self, id: &str) -> Result<SystemConfig> {
        match self.systems.iter().find(|s| s.id.eq_ignore_ascii_case(id)) {
            Some(s) => Ok(s.clone()),
            None => build_system(id),
        }
    }
}

/// The parameter-convergence sub-experiment on the all-known system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamConvergenceConfig {
    pub system: String,
    pub levels: Vec<usize>,
    pub repetitions: usize,
    pub steps: usize,
    /// Per-level offsets of `(sigma, b, r)` before random signs.
    pub perturbation: [f64; 3],
    pub method: Method,
}

impl Default for ParamConvergenceConfig {
    fn default() -> Self {
        ParamConvergenceConfig {
            system: "DS1".into(),
            levels: vec![1, 2, 3, 4, 5],
            repetitions: 20,
            steps: 1000,
            perturbation: [2.0, 1.0, 3.0],
            method: Method::UkfGaussian,
        }
    }
}

impl ParamConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.repetitions == 0 || self.steps == 0 {
            return Err(Error::Config("param_convergence needs levels, repetitions and steps".into()));
        }
        if self.method == Method::Svm {
            return Err(Error::Config("param_convergence runs a filter, not svm".into()));
        }
        Ok(())
    }
}
