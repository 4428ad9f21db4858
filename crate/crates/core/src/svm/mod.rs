//! Least-squares SVM forecaster over delay embeddings.
//!
//! The pipeline for one horizon `T_f` is
//! [`delay_embed`] → [`ScalingTransform::fit`] → [`select_embedding`]
//! (grid-searched 4-fold cross validation per embedding length) →
//! [`train_final`] → [`TrainedLsSvm::predict`].
//!
//! Three single-output models (one per Lorenz coordinate) share the
//! selected `(M, λ, σ)`; they are stored together as one coefficient
//! matrix.

mod embed;
mod kernel;
mod model;
mod scaling;
mod select;
mod solve;

use serde::{Deserialize, Serialize};

pub use embed::{delay_embed, embed_window, EmbeddedDataset};
pub use kernel::{kernel_matrix, rbf_kernel, squared_distance};
pub use model::{train_final, TrainedLsSvm};
pub use scaling::ScalingTransform;
pub use select::{
    cross_validate, cross_validate_folds, cv_error_table, cv_error_tables, cv_grid, cv_grid_with,
    evaluate_embedding, select_embedding, select_embedding_multi, select_embedding_with, CvGrid,
    CvOutcome, EmbeddingTrace,
};
pub use solve::{ls_svm_objective, solve_ls_svm};

/// Selected or effective LS-SVM hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Regularization weight on the RKHS norm.
    pub lambda: f64,
    /// Kernel width; the kernel is `exp(-sigma² ‖u - v‖²)`.
    pub sigma: f64,
    /// Embedding length (number of lagged observations).
    pub m: usize,
}

/// Tunables of the hyperparameter protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Hard cap on the embedding length.
    pub max_embedding: usize,
    pub folds: usize,
    pub grid_points: usize,
    /// Embedding lengths up to this value are always evaluated.
    pub stop_after: usize,
    /// Stop once an embedding's CV error exceeds this multiple of the best so far.
    pub stop_ratio: f64,
    /// Multiplier applied to the selected λ when retraining on all data.
    pub retrain_lambda_factor: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            max_embedding: 20,
            folds: 4,
            grid_points: 10,
            stop_after: 5,
            stop_ratio: 1.02,
            retrain_lambda_factor: 4.0 / 3.0,
        }
    }
}
