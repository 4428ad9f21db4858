//! Forecasting noisy Lorenz-63 trajectories from data or from process knowledge.
//!
//! Two families of forecasters are compared on the same test points:
//!
//! * [`svm`] — a least-squares SVM over delay embeddings of the noisy
//!   observations, tuned by grid-searched 4-fold cross validation.
//! * [`filtering`] — an unscented Kalman filter and a particle filter that
//!   assimilate the recent observations (optionally learning the Lorenz
//!   parameters by dual estimation) and then integrate the model forward.
//!
//! [`experiment`] wires both arms to the six benchmark systems and produces
//! RMSE grids, while [`dynamics`] and [`noise`] generate the data.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod filtering;
pub mod linalg;
pub mod noise;
pub mod rng;
pub mod svm;

pub use dynamics::{LorenzParams, ObservationSeries, StateVec, Trajectory};
pub use error::{Error, Result};
pub use noise::NoiseSpec;
