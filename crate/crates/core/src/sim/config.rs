use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scenario::{DEFAULT_BITRATES, DEFAULT_RESOLUTIONS};
use super::SimError;
use crate::elastic::ElasticConfig;
use crate::utility::TrainConfig;

/// Weight set 2 of the evaluation, one weight per camera.
pub const WEIGHT_SET_2: [f64; 5] = [0.84, 0.38, 1.92, 0.74, 0.45];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheduler {
    #[serde(rename = "dp")]
    Dp,
    #[serde(rename = "dp+elastic")]
    DpElastic,
    #[serde(rename = "fair")]
    Fair,
    #[serde(rename = "agnostic")]
    Agnostic,
}

impl Scheduler {
    pub const ALL: [Scheduler; 4] = [
        Scheduler::Dp,
        Scheduler::DpElastic,
        Scheduler::Fair,
        Scheduler::Agnostic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheduler::Dp => "dp",
            Scheduler::DpElastic => "dp+elastic",
            Scheduler::Fair => "fair",
            Scheduler::Agnostic => "agnostic",
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheduler {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        Scheduler::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                SimError::InvalidConfig(format!(
                    "unknown scheduler {s:?} (expected dp, dp+elastic, fair or agnostic)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightPreset {
    Ones,
    Set2,
}

/// Either a named preset or an explicit per-camera list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Preset(WeightPreset),
    Explicit(Vec<f64>),
}

impl WeightSpec {
    pub fn resolve(&self, cameras: usize) -> Result<Vec<f64>, SimError> {
        let w = match self {
            WeightSpec::Preset(WeightPreset::Ones) => vec![1.0; cameras],
            WeightSpec::Preset(WeightPreset::Set2) => WEIGHT_SET_2.to_vec(),
            WeightSpec::Explicit(v) => v.clone(),
        };
        if w.len() != cameras {
            return Err(SimError::WeightCount {
                expected: cameras,
                got: w.len(),
            });
        }
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(SimError::InvalidConfig("weights must be finite and >= 0".into()));
        }
        Ok(w)
    }
}

/// Where per-slot predicted utility tables come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityMode {
    /// Models trained on the scenario's profiling CSV.
    Learned,
    /// The ground-truth tables themselves, isolating allocator behaviour.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Slot length T, seconds.
    pub slot_length: f64,
    /// Frames per segment N; informational for the simulator.
    pub frames_per_slot: u32,
    pub bitrates: Vec<u32>,
    pub resolutions: Vec<u32>,
    pub weights: WeightSpec,
    pub scheduler: Scheduler,
    pub seed: u64,
    pub horizon: usize,
    /// Camera count for generated scenarios.
    pub cameras: usize,
    pub utility: UtilityMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            slot_length: 1.0,
            frames_per_slot: 10,
            bitrates: DEFAULT_BITRATES.to_vec(),
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
            weights: WeightSpec::Preset(WeightPreset::Ones),
            scheduler: Scheduler::DpElastic,
            seed: 42,
            horizon: 200,
            cameras: 5,
            utility: UtilityMode::Learned,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.slot_length > 0.0 && self.slot_length.is_finite()) {
            return bad("slot_length must be positive");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.cameras == 0 {
            return bad("cameras must be at least 1");
        }
        if self.frames_per_slot == 0 {
            return bad("frames_per_slot must be at least 1");
        }
        if self.bitrates.is_empty() || self.bitrates[0] == 0 || self.bitrates.windows(2).any(|w| w[0] >= w[1]) {
            return bad("bitrates must be positive and strictly increasing");
        }
        if self.resolutions.is_empty() {
            return bad("resolutions must not be empty");
        }
        Ok(())
    }
}

/// Everything a simulate/compare run reads from its JSON config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub sim: SimConfig,
    pub elastic: ElasticConfig,
    pub train: TrainConfig,
}
