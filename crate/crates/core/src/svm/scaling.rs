use serde::{Deserialize, Serialize};

/// Per-dimension affine map sending the fitted range onto `[-1, 1]`.
///
/// Dimension `k` maps `v` to `(v - center[k]) * gain[k]`. Constant
/// dimensions get gain 0, so every value maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTransform {
    pub center: Vec<f64>,
    pub gain: Vec<f64>,
}

impl ScalingTransform {
    /// Fits on row-major `inputs` of width `dim`.
    pub fn fit(inputs: &[f64], dim: usize) -> Self {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for row in inputs.chunks_exact(dim) {
            for k in 0..dim {
                lo[k] = lo[k].min(row[k]);
                hi[k] = hi[k].max(row[k]);
            }
        }
        let mut center = Vec::with_capacity(dim);
        let mut gain = Vec::with_capacity(dim);
        for k in 0..dim {
            let half = 0.5 * (hi[k] - lo[k]);
            if half > 0.0 && half.is_finite() {
                center.push(0.5 * (hi[k] + lo[k]));
                gain.push(1.0 / half);
            } else {
                center.push(if lo[k].is_finite() { lo[k] } else { 0.0 });
                gain.push(0.0);
            }
        }
        ScalingTransform { center, gain }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn apply(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(self.center.iter().zip(&self.gain))
            .map(|(v, (c, g))| (v - c) * g)
            .collect()
    }

    pub fn apply_rows(&self, inputs: &[f64]) -> Vec<f64> {
        inputs
            .chunks_exact(self.dim())
            .flat_map(|row| self.apply(row))
            .collect()
    }

    /// Inverse on non-degenerate dimensions; degenerate ones return the
    /// stored constant.
    pub fn invert(&self, scaled: &[f64]) -> Vec<f64> {
        scaled
            .iter()
            .zip(self.center.iter().zip(&self.gain))
            .map(|(v, (c, g))| if *g == 0.0 { *c } else { v / g + c })
            .collect()
    }
}
