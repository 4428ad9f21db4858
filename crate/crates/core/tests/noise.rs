use chaoscast::noise::log_sum_exp;
use chaoscast::rng::from_seed;
use chaoscast::NoiseSpec;
use statrs::distribution::{Continuous, ContinuousCDF, Laplace, Normal, Uniform};

fn samples(spec: &NoiseSpec, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = from_seed(seed);
    (0..n).map(|_| spec.sample(&mut rng)).collect()
}

fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (cdf(x) - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf(x)).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn densities_match_statrs() {
    let n = Normal::new(0.3, 1.7).unwrap();
    let l = Laplace::new(-0.2, 0.6).unwrap();
    let u = Uniform::new(-0.5, 1.5).unwrap();
    for k in -40..=40 {
        let x = k as f64 * 0.1;
        let g = NoiseSpec::gaussian(0.3, 1.7).log_density(x);
        assert!((g - n.ln_pdf(x)).abs() < 1e-12, "gaussian at {x}");
        let lp = NoiseSpec::laplace(-0.2, 0.6).log_density(x);
        assert!((lp - l.ln_pdf(x)).abs() < 1e-12, "laplace at {x}");
        if x > -0.5 && x < 1.5 {
            assert!((NoiseSpec::uniform(-0.5, 1.5).log_density(x) - u.ln_pdf(x)).abs() < 1e-12);
        }
    }
    assert_eq!(NoiseSpec::uniform(-0.5, 1.5).log_density(2.0), f64::NEG_INFINITY);
}

#[test]
fn mixture_density_is_the_weighted_sum() {
    let a = NoiseSpec::gaussian(0.1, 0.25);
    let b = NoiseSpec::uniform(-0.1, 0.5);
    let mix = NoiseSpec::mixture(vec![(0.8, a.clone()), (0.2, b.clone())]);
    for k in -30..=30 {
        let x = k as f64 * 0.05 + 0.01;
        let want = 0.8 * a.log_density(x).exp() + 0.2 * b.log_density(x).exp();
        assert!((mix.log_density(x).exp() - want).abs() < 1e-12);
    }
    assert!((mix.mean() - (0.8 * 0.1 + 0.2 * 0.2)).abs() < 1e-15);
    // Law of total variance.
    let var = 0.8 * (0.0625 + 0.01) + 0.2 * (0.36 / 12.0 + 0.04) - mix.mean().powi(2);
    assert!((mix.variance() - var).abs() < 1e-14);
}

#[test]
fn samplers_follow_their_laws() {
    // 1% critical value of the KS statistic at n = 20000.
    let crit = 1.6276 / (20_000f64).sqrt();
    let normal = Normal::new(-1.0, 2.0).unwrap();
    assert!(ks(samples(&NoiseSpec::gaussian(-1.0, 2.0), 20_000, 1), |x| normal.cdf(x)) < crit);
    let lap = Laplace::new(0.5, 0.3).unwrap();
    assert!(ks(samples(&NoiseSpec::laplace(0.5, 0.3), 20_000, 2), |x| lap.cdf(x)) < crit);
    let uni = Uniform::new(-0.5, 0.5).unwrap();
    assert!(ks(samples(&NoiseSpec::uniform(-0.5, 0.5), 20_000, 3), |x| uni.cdf(x)) < crit);
    let expo = NoiseSpec::SignedExponential {
        rate: 2.0,
        scale: 0.5,
        sign: -1,
    };
    let xs = samples(&expo, 20_000, 4);
    assert!(xs.iter().all(|x| *x <= 0.0));
    // -X/0.5 ~ Exp(2)
    assert!(ks(xs, |x| (4.0 * x).exp()) < crit);
    assert!((expo.mean() + 0.25).abs() < 1e-15);
    assert!((expo.variance() - 0.0625).abs() < 1e-15);
}

#[test]
fn point_mass_and_zero() {
    let z = NoiseSpec::zero();
    assert!(z.is_point_mass());
    assert!(samples(&z, 100, 0).iter().all(|v| *v == 0.0));
    assert_eq!((z.mean(), z.variance()), (0.0, 0.0));
}

#[test]
fn validation() {
    assert!(NoiseSpec::gaussian(0.0, -1.0).validate().is_err());
    assert!(NoiseSpec::gaussian(0.0, 0.0).validate().is_err());
    assert!(NoiseSpec::uniform(1.0, 1.0).validate().is_err());
    assert!(NoiseSpec::laplace(0.0, 0.0).validate().is_err());
    let unnormalized = NoiseSpec::Mixture {
        weights: vec![0.5, 0.6],
        components: vec![NoiseSpec::zero(), NoiseSpec::zero()],
    };
    assert!(unnormalized.validate().is_err());
    assert!(NoiseSpec::mixture(vec![(1.0, NoiseSpec::gaussian(0.0, 1.0))]).validate().is_ok());
}

#[test]
fn json_layout() {
    let spec: NoiseSpec =
        serde_json::from_str(r#"{"type": "mixture", "weights": [0.5, 0.5], "components": [
            {"type": "gaussian", "mean": 0.1, "sd": 0.25},
            {"type": "signed_exponential", "rate": 1.0, "scale": 0.25, "sign": -1}]}"#)
            .unwrap();
    assert!(spec.variance() > 0.0);
    let back: NoiseSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
    assert!(serde_json::from_str::<NoiseSpec>(r#"{"type": "cauchy"}"#).is_err());
}

#[test]
fn log_sum_exp_is_stable() {
    let v = log_sum_exp([1000.0, 1000.0].into_iter());
    assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    assert_eq!(log_sum_exp([f64::NEG_INFINITY; 3].into_iter()), f64::NEG_INFINITY);
}
