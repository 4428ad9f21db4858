use std::fmt::Write as _;
use std::path::Path;

use faer::Mat;

use super::embed::{delay_embed, embed_window};
use super::kernel::squared_distance;
use super::scaling::ScalingTransform;
use super::solve::solve_regularized;
use super::Hyperparams;
use crate::dynamics::{fmt_f64, ObservationSeries, StateVec};
use crate::error::{Error, Result};

const MAGIC: &str = "chaoscast-lssvm 1";

/// A fitted direct `horizon`-step forecaster: one kernel expansion per
/// output coordinate over the same stored (scaled) inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLsSvm {
    /// Effective hyperparameters used in the final solve.
    pub hyper: Hyperparams,
    pub horizon: usize,
    pub scaling: ScalingTransform,
    /// Scaled training inputs, row-major with width `3 * hyper.m`.
    pub inputs: Vec<f64>,
    /// `alpha[i][c]` is the weight of input `i` for output coordinate `c`.
    pub alpha: Vec<[f64; 3]>,
}

impl TrainedLsSvm {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn dim(&self) -> usize {
        3 * self.hyper.m
    }

    pub fn input(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.inputs[i * d..(i + 1) * d]
    }

    /// Evaluates the expansion at an already scaled embedding vector.
    pub fn predict_scaled(&self, query: &[f64]) -> StateVec {
        let s2 = self.hyper.sigma * self.hyper.sigma;
        let mut out = [0.0; 3];
        for (i, a) in self.alpha.iter().enumerate() {
            let k = (-s2 * squared_distance(self.input(i), query)).exp();
            for c in 0..3 {
                out[c] += a[c] * k;
            }
        }
        StateVec::from_array(out)
    }

    /// Forecasts the state `horizon` steps after the last element of
    /// `recent`, using its last `m` observations.
    pub fn predict(&self, recent: &[StateVec]) -> Result<StateVec> {
        let raw = embed_window(recent, self.hyper.m)?;
        Ok(self.predict_scaled(&self.scaling.apply(&raw)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Line-oriented text form; see the README for the layout.
    pub fn to_text(&self) -> String {
        let join = |vals: &[f64]| vals.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "embedding {}", self.hyper.m);
        let _ = writeln!(out, "horizon {}", self.horizon);
        let _ = writeln!(out, "lambda {}", fmt_f64(self.hyper.lambda));
        let _ = writeln!(out, "sigma {}", fmt_f64(self.hyper.sigma));
        let _ = writeln!(out, "samples {}", self.len());
        let _ = writeln!(out, "center {}", join(&self.scaling.center));
        let _ = writeln!(out, "gain {}", join(&self.scaling.gain));
        for i in 0..self.len() {
            let _ = writeln!(out, "input {}", join(self.input(i)));
        }
        for a in &self.alpha {
            let _ = writeln!(out, "alpha {}", join(a));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::ModelFormat(msg);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(bad(format!("missing `{MAGIC}` header")));
        }
        let mut field = |key: &str| -> Result<Vec<String>> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(bad(format!("expected `{key}`, got `{line}`")));
            }
            Ok(parts.map(str::to_owned).collect())
        };
        let scalar = |v: Vec<String>, key: &str| -> Result<String> {
            match v.as_slice() {
                [s] => Ok(s.clone()),
                _ => Err(Error::ModelFormat(format!("`{key}` takes one value"))),
            }
        };
        let floats = |v: Vec<String>, want: usize, key: &str| -> Result<Vec<f64>> {
            if v.len() != want {
                return Err(Error::ModelFormat(format!("`{key}` needs {want} values, got {}", v.len())));
            }
            v.iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::ModelFormat(format!("`{key}`: {e}"))))
                .collect()
        };
        let int = |s: String, key: &str| -> Result<usize> {
            s.parse().map_err(|e| Error::ModelFormat(format!("`{key}`: {e}")))
        };
        let m = int(scalar(field("embedding")?, "embedding")?, "embedding")?;
        let horizon = int(scalar(field("horizon")?, "horizon")?, "horizon")?;
        let lambda = floats(field("lambda")?, 1, "lambda")?[0];
        let sigma = floats(field("sigma")?, 1, "sigma")?[0];
        let n = int(scalar(field("samples")?, "samples")?, "samples")?;
        if m == 0 {
            return Err(bad("embedding must be >= 1".into()));
        }
        let dim = 3 * m;
        let center = floats(field("center")?, dim, "center")?;
        let gain = floats(field("gain")?, dim, "gain")?;
        let mut inputs = Vec::with_capacity(n * dim);
        for _ in 0..n {
            inputs.extend(floats(field("input")?, dim, "input")?);
        }
        let mut alpha = Vec::with_capacity(n);
        for _ in 0..n {
            let a = floats(field("alpha")?, 3, "alpha")?;
            alpha.push([a[0], a[1], a[2]]);
        }
        Ok(TrainedLsSvm {
            hyper: Hyperparams { lambda, sigma, m },
            horizon,
            scaling: ScalingTransform { center, gain },
            inputs,
            alpha,
        })
    }
}

/// Retrains on the whole historical set with the selected `(m, λ*, σ*)`,
/// using `lambda_factor · λ*` as the effective regularization.
pub fn train_final(
    obs: &ObservationSeries,
    selected: Hyperparams,
    horizon: usize,
    lambda_factor: f64,
) -> Result<TrainedLsSvm> {
    if !(selected.lambda > 0.0) || !(selected.sigma > 0.0) || !(lambda_factor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid hyperparameters {selected:?} (factor {lambda_factor})"
        )));
    }
    let raw = delay_embed(obs, selected.m, horizon)?;
    let dim = raw.dim();
    let scaling = ScalingTransform::fit(&raw.inputs, dim);
    let inputs = scaling.apply_rows(&raw.inputs);
    let n = raw.len();
    let s2 = selected.sigma * selected.sigma;
    let row = |i: usize| &inputs[i * dim..(i + 1) * dim];
    let mut k = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = (-s2 * squared_distance(row(i), row(j))).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    let y = Mat::<f64>::from_fn(n, 3, |i, c| raw.targets[i][c]);
    let lambda = lambda_factor * selected.lambda;
    let a = solve_regularized(k.as_ref(), y.as_ref(), n as f64 * lambda)?;
    let alpha = (0..n).map(|i| [a[(i, 0)], a[(i, 1)], a[(i, 2)]]).collect();
    Ok(TrainedLsSvm {
        hyper: Hyperparams {
            lambda,
            sigma: selected.sigma,
            m: selected.m,
        },
        horizon,
        scaling,
        inputs,
        alpha,
    })
}
