//! Scalar noise laws used for process noise, observation noise and filter
//! likelihoods. Every law is applied independently to each coordinate.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A univariate noise distribution.
///
/// In config files each variant is a record tagged by `type`, e.g.
/// `{"type": "gaussian", "mean": 0.0, "sd": 0.8}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// Uniform on `[a, b]`.
    Uniform {
        a: f64,
        b: f64,
    },
    /// Draw a component with probability `weights[i]`, then sample it.
    Mixture {
        weights: Vec<f64>,
        components: Vec<NoiseSpec>,
    },
    /// `sign * scale * E` with `E ~ Exp(rate)`.
    SignedExponential {
        rate: f64,
        scale: f64,
        sign: i8,
    },
    Laplace {
        loc: f64,
        scale: f64,
    },
    PointMass {
        value: f64,
    },
}

impl NoiseSpec {
    pub fn gaussian(mean: f64, sd: f64) -> Self {
        NoiseSpec::Gaussian { mean, sd }
    }

    pub fn uniform(a: f64, b: f64) -> Self {
        NoiseSpec::Uniform { a, b }
    }

    pub fn laplace(loc: f64, scale: f64) -> Self {
        NoiseSpec::Laplace { loc, scale }
    }

    pub fn zero() -> Self {
        NoiseSpec::PointMass { value: 0.0 }
    }

    pub fn mixture(parts: Vec<(f64, NoiseSpec)>) -> Self {
        let (weights, components) = parts.into_iter().unzip();
        NoiseSpec::Mixture {
            weights,
            components,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNoise(msg));
        match self {
            NoiseSpec::Gaussian { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() || *sd <= 0.0 {
                    return bad(format!("gaussian needs finite mean and sd > 0, got ({mean}, {sd})"));
                }
            }
            NoiseSpec::Uniform { a, b } => {
                if !a.is_finite() || !b.is_finite() || a >= b {
                    return bad(format!("uniform needs finite a < b, got [{a}, {b}]"));
                }
            }
            NoiseSpec::Mixture {
                weights,
                components,
            } => {
                if weights.is_empty() || weights.len() != components.len() {
                    return bad(format!(
                        "mixture needs matching non-empty weights/components, got {} and {}",
                        weights.len(),
                        components.len()
                    ));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return bad("mixture weights must be nonnegative".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("mixture weights sum to {total}, not 1"));
                }
                for c in components {
                    c.validate()?;
                }
            }
            NoiseSpec::SignedExponential { rate, scale, sign } => {
                if !rate.is_finite() || *rate <= 0.0 || !scale.is_finite() || *scale <= 0.0 {
                    return bad(format!(
                        "signed exponential needs rate > 0 and scale > 0, got ({rate}, {scale})"
                    ));
                }
                if *sign != 1 && *sign != -1 {
                    return bad(format!("signed exponential sign must be +1 or -1, got {sign}"));
                }
            }
            NoiseSpec::Laplace { loc, scale } => {
                if !loc.is_finite() || !scale.is_finite() || *scale <= 0.0 {
                    return bad(format!("laplace needs finite loc and scale > 0, got ({loc}, {scale})"));
                }
            }
            NoiseSpec::PointMass { value } => {
                if !value.is_finite() {
                    return bad("point mass value must be finite".into());
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            NoiseSpec::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            NoiseSpec::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            NoiseSpec::Mixture {
                weights,
                components,
            } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = components.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                components[pick].sample(rng)
            }
            NoiseSpec::SignedExponential { rate, scale, sign } => {
                let e: f64 = Exp1.sample(rng);
                f64::from(*sign) * scale * e / rate
            }
            NoiseSpec::Laplace { loc, scale } => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    loc + scale * e
                } else {
                    loc - scale * e
                }
            }
            NoiseSpec::PointMass { value } => *value,
        }
    }

    /// Natural log of the density at `v`; `-inf` outside the support.
    ///
    /// A point mass has log-density 0 at its atom (density with respect to
    /// counting measure).
    pub fn log_density(&self, v: f64) -> f64 {
        match self {
            NoiseSpec::Gaussian { mean, sd } => {
                let u = (v - mean) / sd;
                -sd.ln() - LN_SQRT_2PI - 0.5 * u * u
            }
            NoiseSpec::Uniform { a, b } => {
                if v >= *a && v <= *b {
                    -(b - a).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            NoiseSpec::Mixture {
                weights,
                components,
            } => log_sum_exp(
                weights
                    .iter()
                    .zip(components)
                    .filter(|(w, _)| **w > 0.0)
                    .map(|(w, c)| w.ln() + c.log_density(v)),
            ),
            NoiseSpec::SignedExponential { rate, scale, sign } => {
                let u = f64::from(*sign) * v / scale;
                let base = (rate / scale).ln() - rate * u;
                if u > 0.0 {
                    base
                } else if u == 0.0 {
                    // Half the one-sided limit at the boundary, so a symmetric
                    // pair of these is exactly a Laplace density everywhere.
                    base - std::f64::consts::LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
            NoiseSpec::Laplace { loc, scale } => {
                -(2.0 * scale).ln() - (v - loc).abs() / scale
            }
            NoiseSpec::PointMass { value } => {
                if v == *value {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            NoiseSpec::Gaussian { mean, .. } => *mean,
            NoiseSpec::Uniform { a, b } => 0.5 * (a + b),
            NoiseSpec::Mixture {
                weights,
                components,
            } => weights.iter().zip(components).map(|(w, c)| w * c.mean()).sum(),
            NoiseSpec::SignedExponential { rate, scale, sign } => f64::from(*sign) * scale / rate,
            NoiseSpec::Laplace { loc, .. } => *loc,
            NoiseSpec::PointMass { value } => *value,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            NoiseSpec::Gaussian { sd, .. } => sd * sd,
            NoiseSpec::Uniform { a, b } => (b - a).powi(2) / 12.0,
            NoiseSpec::Mixture {
                weights,
                components,
            } => {
                let m = self.mean();
                let second: f64 = weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| w * (c.variance() + c.mean().powi(2)))
                    .sum();
                second - m * m
            }
            NoiseSpec::SignedExponential { rate, scale, .. } => (scale / rate).powi(2),
            NoiseSpec::Laplace { scale, .. } => 2.0 * scale * scale,
            NoiseSpec::PointMass { .. } => 0.0,
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, NoiseSpec::PointMass { .. })
    }

    /// An interval holding all but a negligible amount of probability mass.
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            NoiseSpec::Gaussian { mean, sd } => (mean - 12.0 * sd, mean + 12.0 * sd),
            NoiseSpec::Uniform { a, b } => (*a, *b),
            NoiseSpec::Mixture { components, .. } => components
                .iter()
                .map(NoiseSpec::effective_support)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (l, h)| {
                    (lo.min(l), hi.max(h))
                }),
            NoiseSpec::SignedExponential { rate, scale, sign } => {
                let reach = 40.0 * scale / rate;
                if *sign > 0 {
                    (0.0, reach)
                } else {
                    (-reach, 0.0)
                }
            }
            NoiseSpec::Laplace { loc, scale } => (loc - 40.0 * scale, loc + 40.0 * scale),
            NoiseSpec::PointMass { value } => (*value, *value),
        }
    }
}

pub fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}
