use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::arms::{historical_seed, RmseRecord};
use super::convergence::ParamConvergenceRecord;
use super::plan::{ExperimentConfig, Method};
use crate::dynamics::fmt_f64;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, label_tag};

pub const RESULTS_HEADER: &str = "system,method,historical_size,T_p,T_f,repetition,rmse,n_failures";
pub const AGGREGATE_HEADER: &str = "system,method,historical_size,T_p,T_f,n_repetitions,mean_rmse,sd_rmse,n_failures";
pub const PARAM_HEADER: &str = "level,repetition,t,mse";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Canonical order: system, method, size, T_p, T_f, repetition.
pub fn sort_records(records: &mut [RmseRecord]) {
    records.sort_by(|a, b| {
        (&a.system, a.method, a.historical_size, a.t_p, a.t_f, a.repetition).cmp(&(
            &b.system,
            b.method,
            b.historical_size,
            b.t_p,
            b.t_f,
            b.repetition,
        ))
    });
}

pub fn results_csv(records: &[RmseRecord]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.system,
            r.method.name(),
            opt(r.historical_size),
            r.t_p,
            r.t_f,
            r.repetition,
            r.rmse.map(fmt_f64).unwrap_or_default(),
            r.n_failures
        );
    }
    out
}

pub fn parse_results_csv(text: &str) -> Result<Vec<RmseRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RESULTS_HEADER) {
        return Err(Error::ModelFormat(format!("results CSV must start with {RESULTS_HEADER:?}")));
    }
    let bad = |n: usize, what: &str| Error::ModelFormat(format!("results CSV line {}: {what}", n + 2));
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 8 {
                return Err(bad(n, "expected 8 fields"));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(n, "bad integer"));
            Ok(RmseRecord {
                system: f[0].to_owned(),
                method: Method::parse(f[1]).map_err(|_| bad(n, "bad method"))?,
                historical_size: if f[2].is_empty() { None } else { Some(int(f[2])?) },
                t_p: int(f[3])?,
                t_f: int(f[4])?,
                repetition: int(f[5])?,
                rmse: if f[6].is_empty() {
                    None
                } else {
                    Some(f[6].parse().map_err(|_| bad(n, "bad rmse"))?)
                },
                n_failures: int(f[7])?,
            })
        })
        .collect()
}

/// Mean RMSE over repetitions for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub system: String,
    pub method: Method,
    pub historical_size: Option<usize>,
    pub t_p: usize,
    pub t_f: usize,
    /// Repetitions with an RMSE value.
    pub n_repetitions: usize,
    pub mean_rmse: Option<f64>,
    /// Sample standard deviation across repetitions; `None` below two.
    pub sd_rmse: Option<f64>,
    pub n_failures: usize,
}

pub fn aggregate(records: &[RmseRecord]) -> Vec<AggregateRow> {
    type Key = (String, Method, Option<usize>, usize, usize);
    let mut cells: BTreeMap<Key, (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let e = cells
            .entry((r.system.clone(), r.method, r.historical_size, r.t_p, r.t_f))
            .or_default();
        e.0.extend(r.rmse);
        e.1 += r.n_failures;
    }
    cells
        .into_iter()
        .map(|((system, method, historical_size, t_p, t_f), (vals, n_failures))| {
            let n = vals.len();
            let mean = (n > 0).then(|| vals.iter().sum::<f64>() / n as f64);
            let sd = mean.filter(|_| n > 1).map(|m| {
                (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
            });
            AggregateRow {
                system,
                method,
                historical_size,
                t_p,
                t_f,
                n_repetitions: n,
                mean_rmse: mean,
                sd_rmse: sd,
                n_failures,
            }
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.system,
            r.method.name(),
            opt(r.historical_size),
            r.t_p,
            r.t_f,
            r.n_repetitions,
            r.mean_rmse.map(fmt_f64).unwrap_or_default(),
            r.sd_rmse.map(fmt_f64).unwrap_or_default(),
            r.n_failures
        );
    }
    out
}

pub fn param_csv(records: &[ParamConvergenceRecord]) -> String {
    let mut out = format!("{PARAM_HEADER}\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", r.level, r.repetition, r.t, fmt_f64(r.mse));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct CellSeed {
    system: String,
    kind: &'static str,
    historical_size: Option<usize>,
    repetition: usize,
    seed: u64,
}

/// Run manifest: config echo and hash, master seed, version and the seed
/// of every data-generating cell.
pub fn manifest_json(cfg: &ExperimentConfig) -> Result<String> {
    let config = serde_json::to_value(cfg)?;
    let hash = Sha256::digest(serde_json::to_vec(&config)?);
    let mut cells = Vec::new();
    for id in &cfg.plan.systems {
        let system = cfg.system(id)?;
        let sys = label_tag(&system.id);
        for r in 0..cfg.plan.test_repetitions() {
            cells.push(CellSeed {
                system: system.id.clone(),
                kind: "test",
                historical_size: None,
                repetition: r,
                seed: derive_seed(cfg.seed, &[sys, label_tag("test"), r as u64]),
            });
        }
        if cfg.plan.methods.contains(&Method::Svm) {
            for h in cfg.plan.historical_sizes() {
                for r in 0..h.repetitions {
                    cells.push(CellSeed {
                        system: system.id.clone(),
                        kind: "historical",
                        historical_size: Some(h.size),
                        repetition: r,
                        seed: historical_seed(cfg, &system, h.size, r),
                    });
                }
            }
        }
    }
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let manifest = serde_json::json!({
        "tool": "chaoscast",
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": cfg.seed,
        "config_sha256": hex,
        "config": config,
        "cell_seeds": cells,
    });
    Ok(serde_json::to_string_pretty(&manifest)? + "\n")
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `results.csv`, `aggregated.csv` and `manifest.json` into `dir`.
pub fn emit_results(records: &[RmseRecord], cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to emit".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    write(&dir.join("results.csv"), &results_csv(&sorted))?;
    write(&dir.join("aggregated.csv"), &aggregate_csv(&aggregate(&sorted)))?;
    write(&dir.join("manifest.json"), &manifest_json(cfg)?)
}

pub fn emit_param_convergence(records: &[ParamConvergenceRecord], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("param_convergence.csv"), &param_csv(records))
}

/// Plain-text table of the aggregated cells, one line per cell.
pub fn report(rows: &[AggregateRow]) -> String {
    let mut out = format!(
        "{:<6} {:<13} {:>6} {:>5} {:>4} {:>4} {:>12} {:>10} {:>5}\n",
        "system", "method", "size", "T_p", "T_f", "reps", "mean_rmse", "sd", "fail"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<6} {:<13} {:>6} {:>5} {:>4} {:>4} {:>12} {:>10} {:>5}",
            r.system,
            r.method.name(),
            opt(r.historical_size),
            r.t_p,
            r.t_f,
            r.n_repetitions,
            r.mean_rmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            r.sd_rmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            r.n_failures
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: Method, size: Option<usize>, rep: usize, rmse: Option<f64>) -> RmseRecord {
        RmseRecord {
            system: "DS1".into(),
            method,
            historical_size: size,
            t_p: 10,
            t_f: 1,
            repetition: rep,
            rmse,
            n_failures: usize::from(rmse.is_none()),
        }
    }

    #[test]
    fn one_record_is_two_lines() {
        let csv = results_csv(&[rec(Method::Svm, Some(500), 0, Some(0.5))]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap(), RESULTS_HEADER);
        assert_eq!(csv.lines().nth(1).unwrap(), "DS1,svm,500,10,1,0,5.0000000000000000e-1,0");
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![
            rec(Method::Svm, Some(500), 0, Some(0.25)),
            rec(Method::PfLaplace, None, 1, None),
            rec(Method::UkfGaussian, None, 0, Some(1.0 / 3.0)),
        ];
        assert_eq!(parse_results_csv(&results_csv(&recs)).unwrap(), recs);
        assert!(parse_results_csv("nope\n").is_err());
    }

    #[test]
    fn aggregation() {
        let recs = vec![
            rec(Method::Svm, Some(500), 0, Some(1.0)),
            rec(Method::Svm, Some(500), 1, Some(3.0)),
            rec(Method::UkfGaussian, None, 0, None),
        ];
        let rows = aggregate(&recs);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].mean_rmse, Some(2.0));
        assert!((rows[0].sd_rmse.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(rows[1].mean_rmse, None);
        assert_eq!(rows[1].n_failures, 1);
    }

    #[test]
    fn manifest_is_deterministic() {
        let cfg = ExperimentConfig::default();
        let a = manifest_json(&cfg).unwrap();
        assert_eq!(a, manifest_json(&cfg).unwrap());
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["master_seed"], 0);
        assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    }
}
