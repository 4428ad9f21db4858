#![allow(dead_code)]

use chaoscast::filtering::{LinearMap, StateSpaceModel};
use chaoscast::linalg::{Matrix, Vector};
use chaoscast::noise::NoiseSpec;
use chaoscast::rng::Rng;
use nalgebra::{Matrix2, Vector2};
use rand_distr::{Distribution, StandardNormal};

/// A stable, rotating 2-d linear-Gaussian system.
pub struct LinearGaussian {
    pub a: Matrix<2>,
    pub q_sd: f64,
    pub r_sd: f64,
    pub prior_mean: Vector<2>,
    pub prior_cov: Matrix<2>,
}

impl Default for LinearGaussian {
    fn default() -> Self {
        LinearGaussian {
            a: Matrix2::new(0.9, 0.2, -0.15, 0.85),
            q_sd: 0.5,
            r_sd: 0.7,
            prior_mean: Vector2::new(1.0, -1.0),
            prior_cov: Matrix2::new(1.0, 0.2, 0.2, 0.5),
        }
    }
}

impl LinearGaussian {
    pub fn model(&self) -> StateSpaceModel<LinearMap<2>> {
        StateSpaceModel::new(
            LinearMap {
                a: self.a,
                b: Vector2::zeros(),
            },
            NoiseSpec::gaussian(0.0, self.q_sd),
            NoiseSpec::gaussian(0.0, self.r_sd),
        )
        .unwrap()
    }

    /// Observations `x_1..x_steps` of a path started from the prior.
    pub fn simulate(&self, steps: usize, rng: &mut Rng) -> Vec<Vector<2>> {
        let root = self.prior_cov.cholesky().unwrap().l();
        let mut z = self.prior_mean + root * normal2(rng);
        (0..steps)
            .map(|_| {
                z = self.a * z + normal2(rng) * self.q_sd;
                z + normal2(rng) * self.r_sd
            })
            .collect()
    }

    /// Textbook Kalman filter; returns the filtered `(mean, cov)` after each observation.
    pub fn kalman(&self, obs: &[Vector<2>]) -> Vec<(Vector<2>, Matrix<2>)> {
        let q = Matrix::<2>::identity() * self.q_sd.powi(2);
        let r = Matrix::<2>::identity() * self.r_sd.powi(2);
        let (mut m, mut p) = (self.prior_mean, self.prior_cov);
        obs.iter()
            .map(|y| {
                let mp = self.a * m;
                let pp = self.a * p * self.a.transpose() + q;
                let k = pp * (pp + r).try_inverse().unwrap();
                m = mp + k * (y - mp);
                p = (Matrix::<2>::identity() - k) * pp;
                (m, p)
            })
            .collect()
    }
}

pub fn normal2(rng: &mut Rng) -> Vector<2> {
    Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Composite Simpson rule on `[lo, hi]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}
