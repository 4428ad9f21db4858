use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chaoscast::dynamics::ObservationSeries;
use chaoscast::experiment::{
    aggregate, aggregate_csv, build_test_set, compute_rmse, emit_param_convergence, emit_results, filter_setup,
    param_convergence_experiment, parse_results_csv, report, run_experiment, simulate, ExperimentConfig, Method,
    SystemConfig,
};
use chaoscast::filtering::{run_filter, FilterTrace};
use chaoscast::rng::{label_tag, stream};
use chaoscast::svm::{select_embedding, train_final};
use chaoscast::{Error, Result};

#[derive(Parser)]
#[command(name = "chaoscast", version, about = "Forecasting noisy Lorenz-63 systems with LS-SVMs and filters")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Restrict to one system, DS1..DS6.
    #[arg(long, global = true)]
    system: Option<String>,
    /// Restrict to one method: svm, ukf or pf.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory and its observations.
    Generate {
        #[arg(long, default_value_t = 2000)]
        steps: usize,
    },
    /// Select, train and test one LS-SVM forecaster.
    Svm {
        /// Historical observations CSV; simulated when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        t_f: usize,
        #[arg(long, default_value_t = 20)]
        t_p: usize,
    },
    /// Run one filter over an observation series and write its trace.
    Filter {
        /// Observations CSV; simulated when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// The full RMSE grid.
    Experiment,
    /// Parameter convergence from perturbed priors.
    ParamConvergence,
    /// Aggregate a results CSV.
    Report {
        /// Defaults to `<out>/results.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(id) = &common.system {
        cfg.plan.systems = vec![cfg.system(id)?.id];
    }
    if let Some(m) = &common.method {
        cfg.plan.methods = vec![Method::parse(m)?];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn selected_system(cfg: &ExperimentConfig) -> Result<SystemConfig> {
    cfg.system(&cfg.plan.systems[0])
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    if let Some(n) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let cfg = load_config(common)?;
    let out = &common.out;
    match cli.command {
        Command::Generate { steps } => {
            let system = selected_system(&cfg)?;
            let mut rng = stream(cfg.seed, &[label_tag(&system.id), label_tag("generate")]);
            let (traj, obs) = simulate(&system, &cfg.plan, steps, &mut rng)?;
            mkdir(out)?;
            let path = out.join("trajectory.csv");
            obs.write_csv(&traj, &path)?;
            println!("wrote {} states of {} to {}", traj.len(), system.id, path.display());
        }
        Command::Svm { input, size, t_f, t_p } => {
            let system = selected_system(&cfg)?;
            let hist = match input {
                Some(p) => ObservationSeries::read_csv(&p)?,
                None => {
                    let mut rng = stream(cfg.seed, &[label_tag(&system.id), label_tag("svm"), size as u64]);
                    simulate(&system, &cfg.plan, size, &mut rng)?.1
                }
            };
            let max_m = t_p.min(cfg.svm.max_embedding);
            let trace = select_embedding(&hist, t_f, max_m, &cfg.svm)?;
            for o in &trace.outcomes {
                println!("M={:<3} lambda={:.4e} sigma={:.4e} cv_error={:.6}", o.m, o.lambda, o.sigma, o.error);
            }
            let model = train_final(&hist, trace.selected(), t_f, cfg.svm.retrain_lambda_factor)?;
            mkdir(out)?;
            let path = out.join("model.txt");
            model.save(&path)?;
            println!(
                "selected M={} lambda={:.4e} sigma={:.4e}; model written to {}",
                model.hyper.m,
                model.hyper.lambda,
                model.hyper.sigma,
                path.display()
            );
            let mut plan_cfg = cfg.clone();
            plan_cfg.plan.t_p = vec![t_p];
            plan_cfg.plan.t_f = vec![t_f];
            let test = build_test_set(&plan_cfg, &system, 0)?;
            let preds = test
                .indices
                .iter()
                .map(|&i| model.predict(test.window(i, t_p)))
                .collect::<Result<Vec<_>>>()?;
            let truths: Vec<_> = test.indices.iter().map(|&i| test.truth.states[i + t_f]).collect();
            println!("test rmse over {} indices: {:.6}", preds.len(), compute_rmse(&preds, &truths)?);
        }
        Command::Filter { input, steps } => {
            let system = selected_system(&cfg)?;
            let method = match cfg.plan.methods.as_slice() {
                [m] => *m,
                _ => Method::UkfGaussian,
            };
            let fm = method
                .filter()
                .ok_or_else(|| Error::Config("filter needs --method ukf or pf".into()))?;
            let mut rng = stream(cfg.seed, &[label_tag(&system.id), label_tag("filter")]);
            let obs = match input {
                Some(p) => ObservationSeries::read_csv(&p)?,
                None => simulate(&system, &cfg.plan, steps, &mut rng)?.1,
            };
            let setup = filter_setup(&cfg, &system, fm);
            let mut trace = FilterTrace::default();
            let est = run_filter(&obs.observations, &setup, &mut rng, Some(&mut trace))?;
            mkdir(out)?;
            let path = out.join("filter_trace.csv");
            trace.write_csv(&path)?;
            println!(
                "final state ({:.4}, {:.4}, {:.4}), params (sigma={:.4}, b={:.4}, r={:.4}); trace in {}",
                est.state.x,
                est.state.y,
                est.state.z,
                est.params.sigma,
                est.params.b,
                est.params.r,
                path.display()
            );
        }
        Command::Experiment => {
            let records = run_experiment(&cfg)?;
            emit_results(&records, &cfg, out)?;
            print!("{}", report(&aggregate(&records)));
            println!("{} records written to {}", records.len(), out.display());
        }
        Command::ParamConvergence => {
            let recs = param_convergence_experiment(&cfg)?;
            emit_param_convergence(&recs, out)?;
            println!("{} rows written to {}", recs.len(), out.join("param_convergence.csv").display());
        }
        Command::Report { input } => {
            let path = input.unwrap_or_else(|| out.join("results.csv"));
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let rows = aggregate(&parse_results_csv(&text)?);
            mkdir(out)?;
            let agg = out.join("aggregated.csv");
            std::fs::write(&agg, aggregate_csv(&rows)).map_err(|e| Error::Io { path: agg, source: e })?;
            print!("{}", report(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
