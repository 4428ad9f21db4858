use serde::{Deserialize, Serialize};

use crate::dynamics::LorenzParams;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

/// What the filter arms are told about a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKnowledge {
    /// Parameters and noise are given; filters run state-only.
    AllKnown,
    /// Parameters are learned by dual estimation.
    AllUnknown,
}

/// One benchmark dynamic system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub id: String,
    pub params: LorenzParams,
    /// Additive noise after each integration step; `None` for a noiseless flow.
    #[serde(default)]
    pub stoch_noise: Option<NoiseSpec>,
    pub obs_noise: NoiseSpec,
    pub filter_knowledge: FilterKnowledge,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.obs_noise.validate()?;
        if let Some(n) = &self.stoch_noise {
            n.validate()?;
        }
        Ok(())
    }
}

pub const SYSTEM_IDS: [&str; 6] = ["DS1", "DS2", "DS3", "DS4", "DS5", "DS6"];

fn exp_quarter(sign: i8) -> NoiseSpec {
    NoiseSpec::SignedExponential {
        rate: 1.0,
        scale: 0.25,
        sign,
    }
}

/// The built-in system `id` (`DS1` … `DS6`, case-insensitive).
pub fn build_system(id: &str) -> Result<SystemConfig> {
    use FilterKnowledge::*;
    let (params, stoch_noise, obs_noise, knowledge) = match id.to_ascii_uppercase().as_str() {
        "DS1" => (
            LorenzParams::new(10.0, 8.0 / 3.0, 28.0),
            None,
            NoiseSpec::gaussian(0.0, 0.80),
            AllKnown,
        ),
        "DS2" => (
            LorenzParams::new(8.13, 0.53, 35.23),
            None,
            NoiseSpec::gaussian(0.0, 1.13),
            AllUnknown,
        ),
        "DS3" => (
            LorenzParams::new(12.18, 0.52, 13.14),
            None,
            NoiseSpec::uniform(-0.5, 0.5),
            AllUnknown,
        ),
        "DS4" => (
            LorenzParams::new(4.82, 0.63, 20.09),
            None,
            NoiseSpec::mixture(vec![
                (0.5, NoiseSpec::gaussian(0.1, 0.25)),
                (0.5, NoiseSpec::gaussian(-0.1, 0.5)),
            ]),
            AllUnknown,
        ),
        "DS5" => (
            LorenzParams::new(3.34, 0.54, 23.49),
            None,
            NoiseSpec::mixture(vec![
                (0.8, NoiseSpec::gaussian(0.1, 0.25)),
                (0.2, NoiseSpec::uniform(-0.1, 0.5)),
            ]),
            AllUnknown,
        ),
        "DS6" => (
            LorenzParams::new(9.57, 3.04, 27.32),
            Some(NoiseSpec::gaussian(0.0, 0.1)),
            NoiseSpec::mixture(vec![(0.5, exp_quarter(1)), (0.5, exp_quarter(-1))]),
            AllUnknown,
        ),
        _ => return Err(Error::UnknownSystem(id.to_owned())),
    };
    Ok(SystemConfig {
        id: id.to_ascii_uppercase(),
        params,
        stoch_noise,
        obs_noise,
        filter_knowledge: knowledge,
    })
}
