//! C ABI over `chaoscast`.
//!
//! Objects are opaque handles created by `*_new`/`*_generate`/`*_train`/
//! `*_load` and released with the matching `*_free`. Every fallible call
//! returns a [`ChaoscastStatus`]; on failure [`chaoscast_last_error`] holds a
//! message for the calling thread. States and observations cross the
//! boundary as row-major `double[3]` records `(x, y, z)`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use chaoscast::dynamics::{ObservationSeries, StateVec, Trajectory};
use chaoscast::experiment::{simulate, ExperimentPlan};
use chaoscast::filtering::{FilterConfig, FilterMethod, FilterSession, FilterSetup};
use chaoscast::rng::from_seed;
use chaoscast::svm::{select_embedding, train_final, SvmConfig, TrainedLsSvm};
use chaoscast::{Error, LorenzParams};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChaoscastStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Blow-up, filter divergence or a failed linear solve.
    Numerical = 3,
    Io = 4,
    Format = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChaoscastFilterMethod {
    /// Unscented Kalman filter, Gaussian observation noise.
    Ukf = 0,
    /// Particle filter, Laplace observation noise.
    Pf = 1,
}

/// A simulated trajectory with its noisy observations.
pub struct ChaoscastTrajectory {
    truth: Trajectory,
    obs: ObservationSeries,
}

/// A trained LS-SVM forecaster.
pub struct ChaoscastSvmModel {
    model: TrainedLsSvm,
}

/// A running filter.
pub struct ChaoscastFilter {
    session: FilterSession,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(ChaoscastStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::BlowUp { .. } | Error::FilterDiverged { .. } | Error::WeightUnderflow { .. } | Error::Solver(_) => {
                ChaoscastStatus::Numerical
            }
            Error::Io { .. } => ChaoscastStatus::Io,
            Error::ModelFormat(_) | Error::Json(_) => ChaoscastStatus::Format,
            _ => ChaoscastStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ChaoscastStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: &str) -> Fail {
    Fail(ChaoscastStatus::InvalidArgument, msg.to_owned())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ChaoscastStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChaoscastStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside chaoscast".into());
            ChaoscastStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn states_arg(p: *const f64, n: usize, what: &str) -> Result<Vec<StateVec>, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let flat = std::slice::from_raw_parts(p, n * 3);
    Ok(flat.chunks_exact(3).map(|c| StateVec::new(c[0], c[1], c[2])).collect())
}

unsafe fn write3(out: *mut f64, v: [f64; 3], what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&v);
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn handle<'a, T>(h: *const T) -> Result<&'a T, Fail> {
    h.as_ref().ok_or_else(|| null("handle"))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn chaoscast_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn chaoscast_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Simulates `n_states` states of a built-in system (`"DS1"` … `"DS6"`)
/// after burn-in and observes them with the system's noise.
///
/// # Safety
/// `system` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_trajectory_generate(
    system: *const c_char,
    n_states: usize,
    seed: u64,
    out: *mut *mut ChaoscastTrajectory,
) -> ChaoscastStatus {
    guard(|| {
        let id = str_arg(system, "system")?;
        let sys = chaoscast::experiment::build_system(id)?;
        let mut rng = from_seed(seed);
        let (truth, obs) = simulate(&sys, &ExperimentPlan::default(), n_states, &mut rng)?;
        put(out, ChaoscastTrajectory { truth, obs })
    })
}

/// Number of states; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_trajectory_len(traj: *const ChaoscastTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.truth.len())
}

unsafe fn copy_states(states: &[StateVec], out: *mut f64, capacity: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if capacity < states.len() * 3 {
        return Err(invalid(&format!("buffer holds {capacity} doubles, {} needed", states.len() * 3)));
    }
    let dst = std::slice::from_raw_parts_mut(out, states.len() * 3);
    for (d, s) in dst.chunks_exact_mut(3).zip(states) {
        d.copy_from_slice(&s.to_array());
    }
    Ok(())
}

/// Copies the noiseless states into `out` (`capacity` doubles).
///
/// # Safety
/// `traj` must be a live handle and `out` writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_trajectory_states(
    traj: *const ChaoscastTrajectory,
    out: *mut f64,
    capacity: usize,
) -> ChaoscastStatus {
    guard(|| copy_states(&handle(traj)?.truth.states, out, capacity))
}

/// Copies the noisy observations into `out` (`capacity` doubles).
///
/// # Safety
/// `traj` must be a live handle and `out` writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_trajectory_observations(
    traj: *const ChaoscastTrajectory,
    out: *mut f64,
    capacity: usize,
) -> ChaoscastStatus {
    guard(|| copy_states(&handle(traj)?.obs.observations, out, capacity))
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_trajectory_free(traj: *mut ChaoscastTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Selects `(M, λ, σ)` by cross validation on `n` observations and trains
/// a direct `horizon`-step forecaster. `max_embedding` 0 means the default.
///
/// # Safety
/// `observations` must hold `3 * n` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_svm_train(
    observations: *const f64,
    n: usize,
    horizon: usize,
    max_embedding: usize,
    out: *mut *mut ChaoscastSvmModel,
) -> ChaoscastStatus {
    guard(|| {
        let obs = ObservationSeries::from_observations(states_arg(observations, n, "observations")?);
        let cfg = SvmConfig::default();
        let max_m = if max_embedding == 0 { cfg.max_embedding } else { max_embedding };
        let trace = select_embedding(&obs, horizon, max_m, &cfg)?;
        let model = train_final(&obs, trace.selected(), horizon, cfg.retrain_lambda_factor)?;
        put(out, ChaoscastSvmModel { model })
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_svm_load(path: *const c_char, out: *mut *mut ChaoscastSvmModel) -> ChaoscastStatus {
    guard(|| {
        let p = PathBuf::from(str_arg(path, "path")?);
        put(out, ChaoscastSvmModel { model: TrainedLsSvm::load(&p)? })
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_svm_save(model: *const ChaoscastSvmModel, path: *const c_char) -> ChaoscastStatus {
    guard(|| {
        let m = handle(model)?;
        m.model.save(&PathBuf::from(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Embedding length of the model; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_svm_embedding(model: *const ChaoscastSvmModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.hyper.m)
}

/// Forecast from the last `M` of `n` recent observations into `out[3]`.
///
/// # Safety
/// `model` must be a live handle, `window` hold `3 * n` doubles and `out`
/// be writable for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_svm_predict(
    model: *const ChaoscastSvmModel,
    window: *const f64,
    n: usize,
    out: *mut f64,
) -> ChaoscastStatus {
    guard(|| {
        let m = handle(model)?;
        let w = states_arg(window, n, "window")?;
        let p = m.model.predict(&w)?;
        write3(out, p.to_array(), "output")
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_svm_free(model: *mut ChaoscastSvmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Creates a filter with the default configuration. With `known_params`
/// (`sigma, b, r`) non-null the filter is state-only; otherwise it learns
/// the parameters by dual estimation. `particles` 0 means the default.
///
/// # Safety
/// `known_params` must be null or hold 3 doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_filter_new(
    method: ChaoscastFilterMethod,
    known_params: *const f64,
    dt: f64,
    particles: usize,
    seed: u64,
    out: *mut *mut ChaoscastFilter,
) -> ChaoscastStatus {
    guard(|| {
        if !(dt > 0.0) {
            return Err(invalid("dt must be > 0"));
        }
        let known = if known_params.is_null() {
            None
        } else {
            let p = std::slice::from_raw_parts(known_params, 3);
            let theta = LorenzParams::new(p[0], p[1], p[2]);
            theta.validate()?;
            Some(theta)
        };
        let mut config = FilterConfig::default();
        if particles > 0 {
            config.particles = particles;
        }
        let fm = match method {
            ChaoscastFilterMethod::Ukf => FilterMethod::UkfGaussian,
            ChaoscastFilterMethod::Pf => FilterMethod::PfLaplace,
        };
        let setup = FilterSetup::standard(fm, known, dt, &config);
        let session = FilterSession::new(setup, from_seed(seed))?;
        put(out, ChaoscastFilter { session })
    })
}

/// Assimilates one observation `obs[3]`.
///
/// # Safety
/// `filter` must be a live handle and `obs` hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_filter_assimilate(filter: *mut ChaoscastFilter, obs: *const f64) -> ChaoscastStatus {
    guard(|| {
        let f = filter.as_mut().ok_or_else(|| null("handle"))?;
        let y = states_arg(obs, 1, "observation")?;
        f.session.assimilate(y[0])?;
        Ok(())
    })
}

/// Number of observations assimilated; 0 for a null handle.
///
/// # Safety
/// `filter` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_filter_steps(filter: *const ChaoscastFilter) -> usize {
    filter.as_ref().map_or(0, |f| f.session.steps())
}

/// Writes the filtered state and parameter estimates; either output may
/// be null.
///
/// # Safety
/// `filter` must be a live handle; non-null outputs must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_filter_estimate(
    filter: *const ChaoscastFilter,
    state_out: *mut f64,
    params_out: *mut f64,
) -> ChaoscastStatus {
    guard(|| {
        let est = handle(filter)?
            .session
            .estimate()
            .ok_or_else(|| invalid("no observation assimilated yet"))?;
        if !state_out.is_null() {
            write3(state_out, est.state.to_array(), "state")?;
        }
        if !params_out.is_null() {
            write3(params_out, est.params.to_array(), "params")?;
        }
        Ok(())
    })
}

/// Propagates the current estimate `steps` steps through the noiseless model.
///
/// # Safety
/// `filter` must be a live handle and `out` hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_filter_forecast(
    filter: *const ChaoscastFilter,
    steps: usize,
    out: *mut f64,
) -> ChaoscastStatus {
    guard(|| {
        let f = handle(filter)?;
        let est = f
            .session
            .estimate()
            .ok_or_else(|| invalid("no observation assimilated yet"))?;
        let z = est.forecast(steps, f.session.setup().dt)?;
        write3(out, z.to_array(), "output")
    })
}

/// # Safety
/// `filter` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chaoscast_filter_free(filter: *mut ChaoscastFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}
