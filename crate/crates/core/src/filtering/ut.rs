use nalgebra::{SMatrix, SVector};

use super::UtParams;
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, Matrix, Vector};

/// Moments of `func(X)` for `X ~ N(mean, cov)` as captured by `2D + 1`
/// sigma points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtOutput<const D: usize, const E: usize> {
    pub mean: SVector<f64, E>,
    pub cov: SMatrix<f64, E, E>,
    /// `Cov(X, func(X))`.
    pub cross: SMatrix<f64, D, E>,
}

/// Scaled unscented transform of `N(mean, cov)` through `func`.
pub fn unscented_transform<const D: usize, const E: usize, F>(
    mean: &Vector<D>,
    cov: &Matrix<D>,
    func: F,
    ut: &UtParams,
) -> Result<UtOutput<D, E>>
where
    F: Fn(&Vector<D>) -> SVector<f64, E>,
{
    let root = psd_sqrt(cov, ut.floor).ok_or_else(|| Error::FilterDiverged {
        step: 0,
        reason: "covariance has non-finite entries".into(),
    })?;
    let n = D as f64;
    let lambda = ut.alpha * ut.alpha * (n + ut.kappa) - n;
    let spread = (n + lambda).sqrt();
    let wi = 0.5 / (n + lambda);
    let wc0 = lambda / (n + lambda) + 1.0 - ut.alpha * ut.alpha + ut.beta;

    let y0 = func(mean);
    let mut offsets = [Vector::<D>::zeros(); D];
    let mut plus = [SVector::<f64, E>::zeros(); D];
    let mut minus = [SVector::<f64, E>::zeros(); D];
    for i in 0..D {
        offsets[i] = root.column(i) * spread;
        plus[i] = func(&(mean + offsets[i]));
        minus[i] = func(&(mean - offsets[i]));
    }

    // The mean weights sum to one, so accumulate deviations from the
    // central point instead of multiplying it by the large negative W0.
    let mut shift = SVector::<f64, E>::zeros();
    for i in 0..D {
        shift += (plus[i] - y0) + (minus[i] - y0);
    }
    let y_mean = y0 + shift * wi;

    let d0 = y0 - y_mean;
    let mut y_cov = d0 * d0.transpose() * wc0;
    let mut cross = SMatrix::<f64, D, E>::zeros();
    for i in 0..D {
        let dp = plus[i] - y_mean;
        let dm = minus[i] - y_mean;
        y_cov += (dp * dp.transpose() + dm * dm.transpose()) * wi;
        cross += (offsets[i] * (dp - dm).transpose()) * wi;
    }
    if !y_mean.iter().chain(y_cov.iter()).all(|v| v.is_finite()) {
        return Err(Error::FilterDiverged {
            step: 0,
            reason: "non-finite unscented transform output".into(),
        });
    }
    Ok(UtOutput {
        mean: y_mean,
        cov: (y_cov + y_cov.transpose()) * 0.5,
        cross,
    })
}
