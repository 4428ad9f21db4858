use faer::Mat;
use serde::{Deserialize, Serialize};

use super::embed::{delay_embed, EmbeddedDataset};
use super::kernel::squared_distance;
use super::scaling::ScalingTransform;
use super::solve::solve_regularized;
use super::{Hyperparams, SvmConfig};
use crate::dynamics::ObservationSeries;
use crate::error::{Error, Result};

/// Candidate values for λ and σ, each geometrically spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub lambdas: Vec<f64>,
    pub sigmas: Vec<f64>,
}

/// Best grid cell found by cross validation for one embedding length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub m: usize,
    pub lambda: f64,
    pub sigma: f64,
    /// Mean over folds of the per-sample squared error summed over the
    /// three output coordinates.
    pub error: f64,
}

fn geometric(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|i| (a + step * i as f64).exp()).collect();
    g[0] = lo;
    g[points - 1] = hi;
    g
}

/// The 10×10 search grid for a training set of `n_train` samples and
/// embedding length `m`.
///
/// λ runs from `10 (3n/4)^-2` to 1 and σ from 0.1 to `2 (3n/4)^(1/(3m))`;
/// the `3/4` accounts for each CV fit seeing three of the four folds.
pub fn cv_grid(n_train: usize, m: usize) -> Result<CvGrid> {
    cv_grid_with(n_train, m, 10)
}

pub fn cv_grid_with(n_train: usize, m: usize, points: usize) -> Result<CvGrid> {
    if n_train < 8 {
        return Err(Error::InvalidArgument(format!(
            "cross validation needs at least 8 samples, got {n_train}"
        )));
    }
    if m == 0 || points == 0 {
        return Err(Error::InvalidArgument("grid needs m >= 1 and at least one point".into()));
    }
    let eff = 0.75 * n_train as f64;
    let lambda_min = 10.0 * eff.powi(-2);
    let sigma_max = 2.0 * eff.powf(1.0 / (3.0 * m as f64));
    Ok(CvGrid {
        lambdas: geometric(lambda_min, 1.0, points),
        sigmas: geometric(0.1, sigma_max, points),
    })
}

/// Validation error of every grid cell, indexed `[lambda][sigma]`, using
/// `folds` contiguous blocks.
pub fn cv_error_table(dataset: &EmbeddedDataset, grid: &CvGrid, folds: usize) -> Result<Vec<Vec<f64>>> {
    let mut tables = cv_error_tables(&dataset.inputs, dataset.dim(), &[&dataset.targets], grid, folds)?;
    Ok(tables.remove(0))
}

/// [`cv_error_table`] for several target sets sharing the same inputs; each
/// kernel factorization is reused across all of them.
pub fn cv_error_tables(
    inputs: &[f64],
    dim: usize,
    targets: &[&[[f64; 3]]],
    grid: &CvGrid,
    folds: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = if dim == 0 { 0 } else { inputs.len() / dim };
    if targets.is_empty() || targets.iter().any(|t| t.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.first().map_or(0, |t| t.len()),
        });
    }
    if folds < 2 || n < 2 * folds {
        return Err(Error::InvalidArgument(format!(
            "{folds}-fold cross validation needs at least {} samples, got {n}",
            2 * folds
        )));
    }
    let row = |i: usize| &inputs[i * dim..(i + 1) * dim];
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = squared_distance(row(i), row(j));
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let h = targets.len();
    let bounds: Vec<usize> = (0..=folds).map(|k| k * n / folds).collect();
    let mut tables = vec![vec![vec![0.0; grid.sigmas.len()]; grid.lambdas.len()]; h];
    let mut kfull = vec![0.0; n * n];
    for (si, &sigma) in grid.sigmas.iter().enumerate() {
        let s2 = sigma * sigma;
        for (k, d) in kfull.iter_mut().zip(&dist) {
            *k = (-s2 * d).exp();
        }
        for f in 0..folds {
            let (v0, v1) = (bounds[f], bounds[f + 1]);
            let train: Vec<usize> = (0..v0).chain(v1..n).collect();
            let nt = train.len();
            let nv = v1 - v0;
            let ktt = Mat::<f64>::from_fn(nt, nt, |i, j| kfull[train[i] * n + train[j]]);
            let kvt = Mat::<f64>::from_fn(nv, nt, |i, j| kfull[(v0 + i) * n + train[j]]);
            let y = Mat::<f64>::from_fn(nt, 3 * h, |i, c| targets[c / 3][train[i]][c % 3]);
            for (li, &lambda) in grid.lambdas.iter().enumerate() {
                let alpha = solve_regularized(ktt.as_ref(), y.as_ref(), nt as f64 * lambda)?;
                let pred = &kvt * &alpha;
                for (hi, tgt) in targets.iter().enumerate() {
                    let mut sse = 0.0;
                    for i in 0..nv {
                        let t = tgt[v0 + i];
                        for c in 0..3 {
                            let e = t[c] - pred[(i, 3 * hi + c)];
                            sse += e * e;
                        }
                    }
                    tables[hi][li][si] += sse / nv as f64 / folds as f64;
                }
            }
        }
    }
    Ok(tables)
}

fn argmin_cell(table: &[Vec<f64>], grid: &CvGrid, m: usize) -> Result<CvOutcome> {
    let mut best: Option<CvOutcome> = None;
    for (li, &lambda) in grid.lambdas.iter().enumerate() {
        for (si, &sigma) in grid.sigmas.iter().enumerate() {
            let cand = CvOutcome {
                m,
                lambda,
                sigma,
                error: table[li][si],
            };
            if !cand.error.is_finite() {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => (cand.error, cand.lambda, cand.sigma) < (b.error, b.lambda, b.sigma),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best.ok_or_else(|| Error::Solver("every grid cell produced a non-finite CV error".into()))
}

/// Grid search by 4-fold cross validation. Ties go to the smaller λ, then
/// the smaller σ.
pub fn cross_validate(dataset: &EmbeddedDataset, grid: &CvGrid) -> Result<CvOutcome> {
    cross_validate_folds(dataset, grid, 4)
}

pub fn cross_validate_folds(dataset: &EmbeddedDataset, grid: &CvGrid, folds: usize) -> Result<CvOutcome> {
    let table = cv_error_table(dataset, grid, folds)?;
    argmin_cell(&table, grid, dataset.m)
}

/// CV results for each evaluated embedding length, `outcomes[m - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTrace {
    pub outcomes: Vec<CvOutcome>,
    pub stopped_early: bool,
}

impl EmbeddingTrace {
    /// Best outcome among embedding lengths `<= cap`; ties go to the smaller `m`.
    pub fn best_within(&self, cap: usize) -> Option<&CvOutcome> {
        self.outcomes
            .iter()
            .take(cap)
            .fold(None, |best: Option<&CvOutcome>, o| match best {
                Some(b) if b.error <= o.error => Some(b),
                _ => Some(o),
            })
    }

    pub fn best(&self) -> &CvOutcome {
        self.best_within(usize::MAX).expect("trace holds at least one outcome")
    }

    pub fn selected(&self) -> Hyperparams {
        let b = self.best();
        Hyperparams {
            lambda: b.lambda,
            sigma: b.sigma,
            m: b.m,
        }
    }
}

/// Evaluates embedding lengths `1, 2, …, max_m` with `eval`, stopping after
/// any `m > stop_after` whose error exceeds `stop_ratio` times the best
/// error of all shorter embeddings.
pub fn select_embedding_with<F>(max_m: usize, cfg: &SvmConfig, mut eval: F) -> Result<EmbeddingTrace>
where
    F: FnMut(usize) -> Result<CvOutcome>,
{
    if max_m == 0 {
        return Err(Error::InvalidArgument("max embedding length must be >= 1".into()));
    }
    let mut outcomes: Vec<CvOutcome> = Vec::new();
    let mut best_so_far = f64::INFINITY;
    for m in 1..=max_m {
        let o = eval(m)?;
        let err = o.error;
        outcomes.push(o);
        if m > cfg.stop_after && err > cfg.stop_ratio * best_so_far {
            return Ok(EmbeddingTrace {
                outcomes,
                stopped_early: m < max_m,
            });
        }
        best_so_far = best_so_far.min(err);
    }
    Ok(EmbeddingTrace {
        outcomes,
        stopped_early: false,
    })
}

/// Cross-validates one embedding length on `obs`: embed, scale inputs to
/// `[-1, 1]`, grid search.
pub fn evaluate_embedding(obs: &ObservationSeries, m: usize, horizon: usize, cfg: &SvmConfig) -> Result<CvOutcome> {
    let raw = delay_embed(obs, m, horizon)?;
    let scaling = ScalingTransform::fit(&raw.inputs, raw.dim());
    let scaled = EmbeddedDataset {
        inputs: scaling.apply_rows(&raw.inputs),
        ..raw
    };
    let grid = cv_grid_with(scaled.len(), m, cfg.grid_points)?;
    cross_validate_folds(&scaled, &grid, cfg.folds)
}

/// The full embedding-length search on a historical observation series.
pub fn select_embedding(
    obs: &ObservationSeries,
    horizon: usize,
    max_m: usize,
    cfg: &SvmConfig,
) -> Result<EmbeddingTrace> {
    select_embedding_with(max_m, cfg, |m| evaluate_embedding(obs, m, horizon, cfg))
}

/// Embedding-length search for several horizons at once.
///
/// Every horizon is trained on the same inputs: the windows that have a
/// target for the longest horizon. Each horizon keeps its own stop rule and
/// the search ends once all of them have stopped. Returns one trace per
/// entry of `horizons`.
pub fn select_embedding_multi(
    obs: &ObservationSeries,
    horizons: &[usize],
    max_m: usize,
    cfg: &SvmConfig,
) -> Result<Vec<EmbeddingTrace>> {
    if max_m == 0 || horizons.is_empty() {
        return Err(Error::InvalidArgument("need max_m >= 1 and at least one horizon".into()));
    }
    let hmax = *horizons.iter().max().expect("non-empty");
    let mut traces: Vec<EmbeddingTrace> = horizons
        .iter()
        .map(|_| EmbeddingTrace {
            outcomes: Vec::new(),
            stopped_early: false,
        })
        .collect();
    let mut best = vec![f64::INFINITY; horizons.len()];
    let mut active = vec![true; horizons.len()];
    for m in 1..=max_m {
        if !active.iter().any(|a| *a) {
            break;
        }
        let raw = delay_embed(obs, m, hmax)?;
        let n = raw.len();
        let series = &obs.observations;
        let live: Vec<usize> = (0..horizons.len()).filter(|&i| active[i]).collect();
        let targets: Vec<Vec<[f64; 3]>> = live
            .iter()
            .map(|&i| (0..n).map(|k| series[k + m - 1 + horizons[i]].to_array()).collect())
            .collect();
        let scaling = ScalingTransform::fit(&raw.inputs, raw.dim());
        let inputs = scaling.apply_rows(&raw.inputs);
        let grid = cv_grid_with(n, m, cfg.grid_points)?;
        let refs: Vec<&[[f64; 3]]> = targets.iter().map(|t| t.as_slice()).collect();
        let tables = cv_error_tables(&inputs, raw.dim(), &refs, &grid, cfg.folds)?;
        for (table, &i) in tables.iter().zip(&live) {
            let o = argmin_cell(table, &grid, m)?;
            traces[i].outcomes.push(o);
            if m > cfg.stop_after && o.error > cfg.stop_ratio * best[i] {
                active[i] = false;
                traces[i].stopped_early = m < max_m;
            }
            best[i] = best[i].min(o.error);
        }
    }
    Ok(traces)
}
