//! The benchmark: six Lorenz systems, an LS-SVM arm and two filter arms
//! scored by forecast RMSE on shared test points, plus the parameter
//! convergence study.

mod arms;
mod convergence;
mod output;
mod plan;
mod systems;

pub use arms::{
    build_test_set, build_test_sets, compute_rmse, filter_forecasts, filter_setup, fit_svm_models, historical_seed,
    run_filter_arm, run_svm_arm, run_system, sample_test_indices, simulate, svm_predictions, RmseRecord, SvmFits,
    TestSet,
};
pub use convergence::{param_convergence_experiment, param_mse, perturbed_prior, ParamConvergenceRecord};
pub use output::{
    aggregate, aggregate_csv, emit_param_convergence, emit_results, manifest_json, param_csv, parse_results_csv,
    report, results_csv, sort_records, AggregateRow, AGGREGATE_HEADER, PARAM_HEADER, RESULTS_HEADER,
};
pub use plan::{ExperimentConfig, ExperimentPlan, HistoricalSize, Method, ParamConvergenceConfig};
pub use systems::{build_system, FilterKnowledge, SystemConfig, SYSTEM_IDS};

use crate::error::Result;

/// Runs every planned system and method; records come back in canonical order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RmseRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for id in &cfg.plan.systems {
        out.extend(run_system(cfg, &cfg.system(id)?)?);
    }
    sort_records(&mut out);
    Ok(out)
}
