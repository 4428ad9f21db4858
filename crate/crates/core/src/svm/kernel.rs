use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Gaussian RBF kernel `exp(-sigma² ‖u - v‖²)`.
pub fn rbf_kernel(u: &[f64], v: &[f64], sigma: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel width must be > 0, got {sigma}")));
    }
    Ok((-sigma * sigma * squared_distance(u, v)).exp())
}

/// Kernel matrix of `inputs`, each a point of the same dimension.
pub fn kernel_matrix<P: AsRef<[f64]>>(inputs: &[P], sigma: f64) -> Result<DMatrix<f64>> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("kernel matrix of an empty input set".into()));
    }
    let dim = inputs[0].as_ref().len();
    if let Some(bad) = inputs.iter().find(|p| p.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.as_ref().len(),
        });
    }
    let n = inputs.len();
    let s2 = sigma * sigma;
    let mut k = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = (-s2 * squared_distance(inputs[i].as_ref(), inputs[j].as_ref())).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}
