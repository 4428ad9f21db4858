use crate::dynamics::{ObservationSeries, StateVec};
use crate::error::{Error, Result};

/// Delay-embedded regression pairs for one horizon.
///
/// Input `i` concatenates `M` consecutive observations (oldest first, three
/// coordinates each); its target is the observation `T_f` steps after the
/// newest one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    /// Row-major, `len() * dim()` values.
    pub inputs: Vec<f64>,
    pub targets: Vec<[f64; 3]>,
    pub m: usize,
    pub horizon: usize,
}

impl EmbeddedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        3 * self.m
    }

    pub fn input(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.inputs[i * d..(i + 1) * d]
    }
}

/// Flattens the last `m` states of `window` into one embedding vector.
pub fn embed_window(window: &[StateVec], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("embedding length must be >= 1".into()));
    }
    if window.len() < m {
        return Err(Error::SeriesTooShort {
            needed: m,
            got: window.len(),
        });
    }
    Ok(window[window.len() - m..]
        .iter()
        .flat_map(|s| s.to_array())
        .collect())
}

pub fn delay_embed(obs: &ObservationSeries, m: usize, horizon: usize) -> Result<EmbeddedDataset> {
    if m == 0 {
        return Err(Error::InvalidArgument("embedding length must be >= 1".into()));
    }
    let series = &obs.observations;
    if series.len() < m + horizon {
        return Err(Error::SeriesTooShort {
            needed: m + horizon,
            got: series.len(),
        });
    }
    let count = series.len() - m - horizon + 1;
    let mut inputs = Vec::with_capacity(count * 3 * m);
    let mut targets = Vec::with_capacity(count);
    for t in m - 1..m - 1 + count {
        for s in &series[t + 1 - m..=t] {
            inputs.extend_from_slice(&s.to_array());
        }
        targets.push(series[t + horizon].to_array());
    }
    Ok(EmbeddedDataset {
        inputs,
        targets,
        m,
        horizon,
    })
}
