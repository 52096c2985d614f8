use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::UtilityError;

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub(crate) const INPUTS: usize = 4;

/// Observed `[min, max]` of one input feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    /// Min-max scaling with clamping; a degenerate range passes the value
    /// through unchanged. The flag reports whether clamping happened.
    #[inline]
    pub fn scale(&self, x: f64) -> (f64, bool) {
        if self.max > self.min {
            let clamped = x.clamp(self.min, self.max);
            ((clamped - self.min) / (self.max - self.min), clamped != x)
        } else {
            (x, false)
        }
    }
}

/// Number of out-of-range inputs seen at inference time.
#[derive(Debug, Default)]
pub struct ClampCounter(AtomicU64);

impl ClampCounter {
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

impl Clone for ClampCounter {
    fn clone(&self) -> Self {
        Self(AtomicU64::new(self.get()))
    }
}

/// Two-layer perceptron. `w1` is `hidden_size x 4` row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityModel {
    pub format_version: u32,
    pub hidden_size: usize,
    pub input_norm: [FeatureRange; INPUTS],
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    #[serde(skip)]
    pub clamped_inputs: ClampCounter,
}

impl PartialEq for UtilityModel {
    fn eq(&self, other: &Self) -> bool {
        self.format_version == other.format_version
            && self.hidden_size == other.hidden_size
            && self.input_norm == other.input_norm
            && self.w1 == other.w1
            && self.b1 == other.b1
            && self.w2 == other.w2
            && self.b2 == other.b2
    }
}

pub(crate) struct Activations {
    pub x: [f64; INPUTS],
    pub z: Vec<f64>,
    pub h: Vec<f64>,
    pub out: f64,
}

#[inline]
pub(crate) fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl UtilityModel {
    pub fn zeros(hidden_size: usize, input_norm: [FeatureRange; INPUTS]) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            hidden_size,
            input_norm,
            w1: vec![0.0; hidden_size * INPUTS],
            b1: vec![0.0; hidden_size],
            w2: vec![0.0; hidden_size],
            b2: 0.0,
            clamped_inputs: ClampCounter::default(),
        }
    }

    /// He-uniform hidden weights, Xavier-uniform output weights.
    pub fn random(hidden_size: usize, input_norm: [FeatureRange; INPUTS], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(hidden_size, input_norm);
        let l1 = (6.0 / INPUTS as f64).sqrt();
        let l2 = (6.0 / (hidden_size as f64 + 1.0)).sqrt();
        m.w1.iter_mut().for_each(|w| *w = rng.random_range(-l1..l1));
        m.b1.iter_mut().for_each(|b| *b = 0.1);
        m.w2.iter_mut().for_each(|w| *w = rng.random_range(-l2..l2));
        m
    }

    pub fn validate(&self) -> Result<(), UtilityError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(UtilityError::UnsupportedVersion(self.format_version));
        }
        let h = self.hidden_size;
        if h == 0 {
            return Err(UtilityError::MalformedModel("hidden_size must be >= 1".into()));
        }
        if self.w1.len() != h * INPUTS || self.b1.len() != h || self.w2.len() != h {
            return Err(UtilityError::MalformedModel(format!(
                "weight shapes do not match hidden_size {h}"
            )));
        }
        let finite = self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(std::iter::once(&self.b2))
            .all(|v| v.is_finite());
        if !finite {
            return Err(UtilityError::MalformedModel("non-finite weight".into()));
        }
        Ok(())
    }

    pub(crate) fn normalize(&self, raw: [f64; INPUTS]) -> ([f64; INPUTS], bool) {
        let mut x = [0.0; INPUTS];
        let mut clamped = false;
        for k in 0..INPUTS {
            let (v, c) = self.input_norm[k].scale(raw[k]);
            x[k] = v;
            clamped |= c;
        }
        (x, clamped)
    }

    pub(crate) fn forward(&self, x: [f64; INPUTS]) -> Activations {
        let mut z = Vec::with_capacity(self.hidden_size);
        let mut h = Vec::with_capacity(self.hidden_size);
        let mut o = self.b2;
        for j in 0..self.hidden_size {
            let row = &self.w1[j * INPUTS..(j + 1) * INPUTS];
            let zj = row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j];
            let hj = zj.max(0.0);
            o += self.w2[j] * hj;
            z.push(zj);
            h.push(hj);
        }
        Activations {
            x,
            z,
            h,
            out: sigmoid(o),
        }
    }

    /// Prediction on raw features, clamped to `[0, 1]`.
    pub fn predict(&self, raw: [f64; INPUTS]) -> f64 {
        let (x, clamped) = self.normalize(raw);
        if clamped {
            self.clamped_inputs.bump();
        }
        self.forward(x).out.clamp(0.0, 1.0)
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden_size * (INPUTS + 2) + 1
    }

    /// Flattened parameters in the order `w1, b1, w2, b2`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.parameter_count());
        let h = self.hidden_size;
        let (w1, rest) = p.split_at(h * INPUTS);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = rest[0];
    }
}
