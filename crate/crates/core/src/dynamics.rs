//! Lorenz-63 trajectories and noisy observations of them.

use std::fmt::Write as _;
use std::ops::{Add, Index, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::rng::Rng;

/// Integration step and sampling interval.
pub const DEFAULT_DT: f64 = 0.01;
/// Steps discarded before any data is recorded so it lies on the attractor.
pub const BURN_IN_STEPS: usize = 1000;
pub const DEFAULT_INIT: StateVec = StateVec::new(10.0, 10.0, 25.0);

/// Coefficients `(sigma, b, r)` of the Lorenz vector field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub b: f64,
    pub r: f64,
}

impl LorenzParams {
    pub const CLASSIC: LorenzParams = LorenzParams {
        sigma: 10.0,
        b: 8.0 / 3.0,
        r: 28.0,
    };

    pub const fn new(sigma: f64, b: f64, r: f64) -> Self {
        LorenzParams { sigma, b, r }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.sigma, self.b, self.r].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "lorenz parameters must be finite, got {self:?}"
            )))
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.sigma, self.b, self.r]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        LorenzParams::new(a[0], a[1], a[2])
    }
}

/// A point `(x, y, z)` of Lorenz phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl StateVec {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        StateVec { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        StateVec::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }
}

impl Add for StateVec {
    type Output = StateVec;
    fn add(self, o: StateVec) -> StateVec {
        StateVec::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for StateVec {
    type Output = StateVec;
    fn sub(self, o: StateVec) -> StateVec {
        StateVec::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for StateVec {
    type Output = StateVec;
    fn mul(self, k: f64) -> StateVec {
        StateVec::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Index<usize> for StateVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("state index {i} out of range"),
        }
    }
}

/// Lorenz vector field on raw coordinates.
#[inline]
pub(crate) fn deriv_raw(s: [f64; 3], p: &[f64; 3]) -> [f64; 3] {
    let [x, y, z] = s;
    let [sigma, b, r] = *p;
    [sigma * (y - x), x * (r - z) - y, x * y - b * z]
}

/// One classical RK4 step on raw coordinates; `p` is `[sigma, b, r]`.
#[inline]
pub(crate) fn rk4_raw(s: [f64; 3], p: &[f64; 3], dt: f64) -> [f64; 3] {
    let shift = |s: [f64; 3], k: [f64; 3], h: f64| [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]];
    let k1 = deriv_raw(s, p);
    let k2 = deriv_raw(shift(s, k1, 0.5 * dt), p);
    let k3 = deriv_raw(shift(s, k2, 0.5 * dt), p);
    let k4 = deriv_raw(shift(s, k3, dt), p);
    let h = dt / 6.0;
    [
        s[0] + h * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + h * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

pub fn lorenz_deriv(state: StateVec, params: LorenzParams) -> StateVec {
    StateVec::from_array(deriv_raw(state.to_array(), &params.to_array()))
}

/// One classical fourth-order Runge-Kutta step of size `dt`.
///
/// A non-finite result is reported as [`Error::BlowUp`] at step 0.
pub fn rk4_step(state: StateVec, params: LorenzParams, dt: f64) -> Result<StateVec> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be >= 0, got {dt}")));
    }
    let next = StateVec::from_array(rk4_raw(state.to_array(), &params.to_array(), dt));
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::BlowUp { step: 0 })
    }
}

/// A sampled Lorenz trajectory, `states[t]` at time `t * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<StateVec>,
    pub params: LorenzParams,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("t,x,y,z\n");
        for (t, s) in self.states.iter().enumerate() {
            let _ = writeln!(out, "{t},{},{},{}", fmt_f64(s.x), fmt_f64(s.y), fmt_f64(s.z));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Integrates `n_steps` RK4 steps from `init`, adding an independent draw of
/// `stoch_noise` to every coordinate after each step.
pub fn generate_trajectory(
    init: StateVec,
    params: LorenzParams,
    dt: f64,
    n_steps: usize,
    stoch_noise: Option<&NoiseSpec>,
    rng: &mut Rng,
) -> Result<Trajectory> {
    if n_steps < 1 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    params.validate()?;
    if !init.is_finite() {
        return Err(Error::BlowUp { step: 0 });
    }
    let p = params.to_array();
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(init);
    let mut cur = init.to_array();
    for step in 1..=n_steps {
        cur = rk4_raw(cur, &p, dt);
        if let Some(noise) = stoch_noise {
            for c in cur.iter_mut() {
                *c += noise.sample(rng);
            }
        }
        let s = StateVec::from_array(cur);
        if !s.is_finite() {
            return Err(Error::BlowUp { step });
        }
        states.push(s);
    }
    Ok(Trajectory { dt, states, params })
}

/// Like [`generate_trajectory`] but first runs `burn_in` steps and drops
/// them; the returned trajectory has `n_steps + 1` states.
pub fn generate_settled(
    init: StateVec,
    params: LorenzParams,
    dt: f64,
    burn_in: usize,
    n_steps: usize,
    stoch_noise: Option<&NoiseSpec>,
    rng: &mut Rng,
) -> Result<Trajectory> {
    let start = if burn_in == 0 {
        init
    } else {
        *generate_trajectory(init, params, dt, burn_in, stoch_noise, rng)?
            .states
            .last()
            .expect("non-empty")
    };
    generate_trajectory(start, params, dt, n_steps, stoch_noise, rng).map_err(|e| match e {
        Error::BlowUp { step } => Error::BlowUp {
            step: step + burn_in,
        },
        other => other,
    })
}

/// Noisy observations of a trajectory segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub observations: Vec<StateVec>,
    /// Index into the generating trajectory for each observation.
    pub source_indices: Vec<usize>,
}

impl ObservationSeries {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn from_observations(observations: Vec<StateVec>) -> Self {
        let source_indices = (0..observations.len()).collect();
        ObservationSeries {
            observations,
            source_indices,
        }
    }

    /// Writes `t,x,y,z,obs_x,obs_y,obs_z` rows, pairing each observation
    /// with its source state.
    pub fn write_csv(&self, traj: &Trajectory, path: &Path) -> Result<()> {
        let mut out = String::from("t,x,y,z,obs_x,obs_y,obs_z\n");
        for (o, &t) in self.observations.iter().zip(&self.source_indices) {
            let s = traj.states[t];
            let _ = writeln!(
                out,
                "{t},{},{},{},{},{},{}",
                fmt_f64(s.x),
                fmt_f64(s.y),
                fmt_f64(s.z),
                fmt_f64(o.x),
                fmt_f64(o.y),
                fmt_f64(o.z)
            );
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads observations from a CSV with `obs_x,obs_y,obs_z` columns, or
    /// failing that `x,y,z` columns.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Config(format!("{}: empty file", path.display())))?
            .split(',')
            .map(str::trim)
            .collect();
        let col = |name: &str| header.iter().position(|h| *h == name);
        let cols = match (col("obs_x"), col("obs_y"), col("obs_z")) {
            (Some(a), Some(b), Some(c)) => [a, b, c],
            _ => match (col("x"), col("y"), col("z")) {
                (Some(a), Some(b), Some(c)) => [a, b, c],
                _ => {
                    return Err(Error::Config(format!(
                        "{}: expected obs_x,obs_y,obs_z or x,y,z columns",
                        path.display()
                    )))
                }
            },
        };
        let mut observations = Vec::new();
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let mut v = [0.0; 3];
            for (k, &c) in cols.iter().enumerate() {
                v[k] = fields
                    .get(c)
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| {
                        Error::Config(format!("{}: bad value on line {}", path.display(), lineno + 2))
                    })?;
            }
            observations.push(StateVec::from_array(v));
        }
        Ok(ObservationSeries::from_observations(observations))
    }
}

/// Adds iid `obs_noise` to every coordinate of every state; the observation
/// map is the identity.
pub fn observe(traj: &Trajectory, obs_noise: &NoiseSpec, rng: &mut Rng) -> ObservationSeries {
    let observations = traj
        .states
        .iter()
        .map(|s| {
            let ex = obs_noise.sample(rng);
            let ey = obs_noise.sample(rng);
            let ez = obs_noise.sample(rng);
            *s + StateVec::new(ex, ey, ez)
        })
        .collect();
    ObservationSeries {
        observations,
        source_indices: (0..traj.len()).collect(),
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
