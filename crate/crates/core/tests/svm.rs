use chaoscast::dynamics::{generate_settled, DEFAULT_DT, DEFAULT_INIT};
use chaoscast::rng::from_seed;
use chaoscast::svm::{
    cross_validate_folds, cv_grid_with, delay_embed, embed_window, kernel_matrix, select_embedding,
    select_embedding_multi, solve_ls_svm, train_final, CvGrid, EmbeddedDataset, Hyperparams, ScalingTransform,
    SvmConfig, TrainedLsSvm,
};
use chaoscast::{LorenzParams, ObservationSeries, StateVec};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

fn lorenz_series(n: usize, seed: u64) -> ObservationSeries {
    let t = generate_settled(DEFAULT_INIT, LorenzParams::CLASSIC, DEFAULT_DT, 500, n - 1, None, &mut from_seed(seed))
        .unwrap();
    ObservationSeries::from_observations(t.states)
}

fn points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = from_seed(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

#[test]
fn kernel_matrix_is_symmetric_psd_with_unit_diagonal() {
    for (n, dim, sigma) in [(40, 3, 0.5), (60, 9, 2.0), (30, 1, 8.0)] {
        let k = kernel_matrix(&points(n, dim, n as u64), sigma).unwrap();
        for i in 0..n {
            assert_eq!(k[(i, i)], 1.0);
            for j in 0..n {
                assert_eq!(k[(i, j)], k[(j, i)]);
                assert!(k[(i, j)] > 0.0 && k[(i, j)] <= 1.0);
            }
        }
        let min_eig = k.symmetric_eigen().eigenvalues.min();
        assert!(min_eig > -1e-10, "min eigenvalue {min_eig}");
    }
    assert!(kernel_matrix(&[vec![0.0, 1.0], vec![1.0]], 1.0).is_err());
}

#[test]
fn solve_matches_an_lu_oracle() {
    let mut rng = from_seed(9);
    for n in [1usize, 7, 50] {
        let k = kernel_matrix(&points(n, 4, 3), 1.3).unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let lambda = 0.01;
        let alpha = solve_ls_svm(&k, &y, lambda, n).unwrap();
        let oracle = (&k + DMatrix::<f64>::identity(n, n) * (n as f64 * lambda))
            .lu()
            .solve(&DVector::from_column_slice(&y))
            .unwrap();
        for (a, o) in alpha.iter().zip(oracle.iter()) {
            assert!((a - o).abs() < 1e-9 * o.abs().max(1.0));
        }
    }
    let k = DMatrix::<f64>::identity(2, 2);
    assert!(solve_ls_svm(&k, &[1.0, 2.0], 0.0, 2).is_err());
    assert!(solve_ls_svm(&k, &[1.0], 0.1, 1).is_err());
}

#[test]
fn embedding_layout() {
    let obs = ObservationSeries::from_observations((0..10).map(|i| StateVec::new(i as f64, 10.0 + i as f64, -(i as f64))).collect());
    let d = delay_embed(&obs, 3, 2).unwrap();
    assert_eq!(d.len(), 10 - 3 - 2 + 1);
    assert_eq!(d.dim(), 9);
    assert_eq!(d.input(0), &[0.0, 10.0, 0.0, 1.0, 11.0, -1.0, 2.0, 12.0, -2.0]);
    assert_eq!(d.targets[0], [4.0, 14.0, -4.0]);
    assert_eq!(d.targets.last().unwrap(), &[9.0, 19.0, -9.0]);
    assert_eq!(embed_window(&obs.observations[..5], 2).unwrap(), vec![3.0, 13.0, -3.0, 4.0, 14.0, -4.0]);
    assert!(delay_embed(&obs, 8, 3).is_err());
    assert!(delay_embed(&obs, 0, 1).is_err());
}

/// Brute-force contiguous-fold CV with an LU solve for every cell.
fn cv_oracle(d: &EmbeddedDataset, grid: &CvGrid, folds: usize) -> (f64, f64, f64) {
    let n = d.len();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &lambda in &grid.lambdas {
        for &sigma in &grid.sigmas {
            let mut err = 0.0;
            for f in 0..folds {
                let (v0, v1) = (f * n / folds, (f + 1) * n / folds);
                let train: Vec<usize> = (0..n).filter(|i| *i < v0 || *i >= v1).collect();
                let rows: Vec<Vec<f64>> = train.iter().map(|&i| d.input(i).to_vec()).collect();
                let k = kernel_matrix(&rows, sigma).unwrap();
                let nt = train.len();
                let lu = (k + DMatrix::<f64>::identity(nt, nt) * (nt as f64 * lambda)).lu();
                let mut sse = 0.0;
                for c in 0..3 {
                    let y = DVector::from_iterator(nt, train.iter().map(|&i| d.targets[i][c]));
                    let alpha = lu.solve(&y).unwrap();
                    for v in v0..v1 {
                        let q = d.input(v);
                        let pred: f64 = rows
                            .iter()
                            .zip(alpha.iter())
                            .map(|(r, a)| {
                                let dist: f64 = r.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum();
                                a * (-sigma * sigma * dist).exp()
                            })
                            .sum();
                        sse += (d.targets[v][c] - pred).powi(2);
                    }
                }
                err += sse / (v1 - v0) as f64 / folds as f64;
            }
            if err < best.0 {
                best = (err, lambda, sigma);
            }
        }
    }
    best
}

#[test]
fn cross_validation_matches_brute_force() {
    let obs = lorenz_series(90, 4);
    let raw = delay_embed(&obs, 2, 3).unwrap();
    let scaling = ScalingTransform::fit(&raw.inputs, raw.dim());
    let d = EmbeddedDataset {
        inputs: scaling.apply_rows(&raw.inputs),
        ..raw
    };
    let grid = cv_grid_with(d.len(), 2, 5).unwrap();
    let got = cross_validate_folds(&d, &grid, 4).unwrap();
    let (err, lambda, sigma) = cv_oracle(&d, &grid, 4);
    assert!((got.error - err).abs() < 1e-8 * err);
    assert_eq!((got.lambda, got.sigma, got.m), (lambda, sigma, 2));
}

#[test]
fn final_model_solves_the_retrained_system() {
    let obs = lorenz_series(150, 5);
    let hyper = Hyperparams {
        lambda: 1e-3,
        sigma: 1.5,
        m: 2,
    };
    let model = train_final(&obs, hyper, 4, 4.0 / 3.0).unwrap();
    assert!((model.hyper.lambda - 1e-3 * 4.0 / 3.0).abs() < 1e-18);
    let raw = delay_embed(&obs, 2, 4).unwrap();
    let rows: Vec<Vec<f64>> = (0..model.len()).map(|i| model.input(i).to_vec()).collect();
    assert!(rows.iter().flatten().all(|v| (-1.0 - 1e-12..=1.0 + 1e-12).contains(v)));
    let k = kernel_matrix(&rows, 1.5).unwrap();
    let n = rows.len();
    let lu = (k.clone() + DMatrix::<f64>::identity(n, n) * (n as f64 * model.hyper.lambda)).lu();
    for c in 0..3 {
        let y = DVector::from_iterator(n, raw.targets.iter().map(|t| t[c]));
        let alpha = lu.solve(&y).unwrap();
        for (a, b) in model.alpha.iter().zip(alpha.iter()) {
            assert!((a[c] - b).abs() < 1e-7 * b.abs().max(1.0));
        }
    }
    // Predicting from raw windows goes through the same scaling.
    let window = &obs.observations[10..12];
    let direct = model.predict_scaled(model.input(10));
    let p = model.predict(window).unwrap();
    assert!((p - direct).norm() < 1e-12);
    assert!(model.predict(&obs.observations[..1]).is_err());
}

#[test]
fn noiseless_lorenz_is_learned() {
    let obs = lorenz_series(1200, 6);
    let (train, test) = obs.observations.split_at(1000);
    let hist = ObservationSeries::from_observations(train.to_vec());
    let cfg = SvmConfig::default();
    let trace = select_embedding(&hist, 5, 3, &cfg).unwrap();
    let model = train_final(&hist, trace.selected(), 5, cfg.retrain_lambda_factor).unwrap();
    let (mut sq, mut naive) = (0.0, 0.0);
    for i in 10..test.len() - 5 {
        let p = model.predict(&test[..=i]).unwrap();
        sq += (p - test[i + 5]).norm_squared();
        naive += (test[i] - test[i + 5]).norm_squared();
    }
    // Persistence is the baseline to beat.
    let ratio = (sq / naive).sqrt();
    assert!(ratio < 0.2, "rmse ratio to persistence {ratio}");
}

#[test]
fn multi_horizon_search_tracks_single_horizon_search() {
    let obs = lorenz_series(240, 7);
    let mut cfg = SvmConfig::default();
    cfg.grid_points = 4;
    let multi = select_embedding_multi(&obs, &[3], 6, &cfg).unwrap();
    let single = select_embedding(&obs, 3, 6, &cfg).unwrap();
    // With one horizon both searches see identical data.
    assert_eq!(multi[0], single);
    let two = select_embedding_multi(&obs, &[1, 5], 6, &cfg).unwrap();
    assert_eq!(two.len(), 2);
    assert!(two.iter().all(|t| !t.outcomes.is_empty() && t.outcomes.len() <= 6));
    assert!(two[0].outcomes.iter().enumerate().all(|(i, o)| o.m == i + 1));
}

#[test]
fn model_text_round_trip() {
    let obs = lorenz_series(80, 8);
    let model = train_final(
        &obs,
        Hyperparams {
            lambda: 0.01,
            sigma: 0.7,
            m: 3,
        },
        2,
        1.0,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    model.save(&path).unwrap();
    let back = TrainedLsSvm::load(&path).unwrap();
    assert_eq!(back, model);
    let text = model.to_text();
    assert!(text.starts_with(text.lines().next().unwrap()));
    assert!(TrainedLsSvm::from_text(&text.replace("sigma", "sigm")).is_err());
    assert!(TrainedLsSvm::from_text("").is_err());
    let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
    assert!(TrainedLsSvm::from_text(&truncated).is_err());
}
