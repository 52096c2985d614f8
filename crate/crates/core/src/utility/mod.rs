//! Per-camera accuracy function: a 4 -> hidden (ReLU) -> 1 (sigmoid)
//! regression network mapping `(a, c, bitrate, resolution)` to F1.

pub mod io;
mod model;
mod train;

pub use model::{ClampCounter, FeatureRange, UtilityModel, MODEL_FORMAT_VERSION};
pub use train::{
    analytic_gradient, gradient_check, mse_loss, numeric_gradient, train_per_camera,
    train_utility, TrainConfig, TrainOutcome, MIN_TRAINING_SAMPLES,
};

use std::collections::BTreeMap;

use thiserror::Error;

/// Predicted F1 indexed `[bitrate][resolution]`.
pub type UtilityTable = Vec<Vec<f64>>;

/// Trained models keyed by camera id.
pub type UtilityModels = BTreeMap<String, UtilityModel>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilingSample {
    /// ROI-area ratio in `[0, 1]`.
    pub a: f64,
    /// Mean on-camera detection confidence in `[0, 1]`.
    pub c: f64,
    pub bitrate_kbps: f64,
    /// Ordinal index into the configured resolution list.
    pub resolution: u32,
    /// Measured F1 in `[0, 1]`.
    pub accuracy: f64,
}

impl ProfilingSample {
    pub fn features(&self) -> [f64; 4] {
        [self.a, self.c, self.bitrate_kbps, f64::from(self.resolution)]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UtilityError {
    #[error("need at least {needed} profiling samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    NonFiniteLoss { epoch: usize, loss: f64 },
    #[error("invalid profiling sample {index}: {reason}")]
    InvalidSample { index: usize, reason: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed model: {0}")]
    MalformedModel(String),
}

/// Clamped network output for one configuration.
pub fn predict_accuracy(model: &UtilityModel, a: f64, c: f64, b: f64, r: u32) -> f64 {
    model.predict([a, c, b, f64::from(r)])
}

/// Predictions for every `(bitrate, resolution)` pair with `a`, `c` held
/// fixed.
pub fn tabulate_utility(
    model: &UtilityModel,
    a: f64,
    c: f64,
    bitrates: &[u32],
    resolutions: &[u32],
) -> UtilityTable {
    bitrates
        .iter()
        .map(|&b| {
            resolutions
                .iter()
                .map(|&r| predict_accuracy(model, a, c, f64::from(b), r))
                .collect()
        })
        .collect()
}

/// Mean of `tabulate_utility` over the `(a, c)` pairs seen in profiling.
pub fn profile_average_table(
    model: &UtilityModel,
    samples: &[ProfilingSample],
    bitrates: &[u32],
    resolutions: &[u32],
) -> UtilityTable {
    let mut contexts: Vec<(u64, u64)> = samples
        .iter()
        .map(|s| (s.a.to_bits(), s.c.to_bits()))
        .collect();
    contexts.sort_unstable();
    contexts.dedup();
    let mut out = vec![vec![0.0; resolutions.len()]; bitrates.len()];
    if contexts.is_empty() {
        return out;
    }
    for &(a, c) in &contexts {
        let t = tabulate_utility(model, f64::from_bits(a), f64::from_bits(c), bitrates, resolutions);
        for (row, trow) in out.iter_mut().zip(&t) {
            for (v, tv) in row.iter_mut().zip(trow) {
                *v += tv;
            }
        }
    }
    let n = contexts.len() as f64;
    out.iter_mut().flatten().for_each(|v| *v /= n);
    out
}
