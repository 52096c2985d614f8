use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::INPUTS;
use super::{FeatureRange, ProfilingSample, UtilityError, UtilityModel, UtilityModels};

pub const MIN_TRAINING_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Weight decay on `w1`/`w2` (biases are not decayed).
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_size: 16,
            learning_rate: 0.5,
            epochs: 2000,
            batch_size: 16,
            seed: 42,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), UtilityError> {
        let bad = |m: &str| Err(UtilityError::InvalidConfig(m.into()));
        if self.hidden_size < 1 {
            return bad("hidden_size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a positive finite number");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: UtilityModel,
    /// Mean squared error of the final model on the training set.
    pub train_mse: f64,
}

fn check_sample(index: usize, s: &ProfilingSample) -> Result<(), UtilityError> {
    let fail = |reason: &str| {
        Err(UtilityError::InvalidSample {
            index,
            reason: reason.to_string(),
        })
    };
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    if !unit(s.a) {
        return fail("a outside [0,1]");
    }
    if !unit(s.c) {
        return fail("c outside [0,1]");
    }
    if !(s.bitrate_kbps > 0.0 && s.bitrate_kbps.is_finite()) {
        return fail("bitrate must be positive");
    }
    if !unit(s.accuracy) {
        return fail("accuracy outside [0,1]");
    }
    Ok(())
}

fn feature_ranges(samples: &[ProfilingSample]) -> [FeatureRange; INPUTS] {
    let mut ranges = [FeatureRange {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    }; INPUTS];
    for s in samples {
        for (r, v) in ranges.iter_mut().zip(s.features()) {
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
    }
    ranges
}

/// Adds the gradient of the mean squared error over `idx` into `grad`
/// (flattened `w1, b1, w2, b2`) and returns that loss.
fn accumulate_gradient(
    model: &UtilityModel,
    xs: &[[f64; INPUTS]],
    ys: &[f64],
    idx: &[usize],
    grad: &mut [f64],
) -> f64 {
    let h = model.hidden_size;
    let n = idx.len() as f64;
    let (gw1, rest) = grad.split_at_mut(h * INPUTS);
    let (gb1, rest) = rest.split_at_mut(h);
    let (gw2, gb2) = rest.split_at_mut(h);
    let mut loss = 0.0;
    for &i in idx {
        let act = model.forward(xs[i]);
        let err = act.out - ys[i];
        loss += err * err;
        // d(err^2)/d(pre-sigmoid) averaged over the batch
        let g = 2.0 * err * act.out * (1.0 - act.out) / n;
        gb2[0] += g;
        for j in 0..h {
            gw2[j] += g * act.h[j];
            if act.z[j] > 0.0 {
                let dz = g * model.w2[j];
                gb1[j] += dz;
                for k in 0..INPUTS {
                    gw1[j * INPUTS + k] += dz * act.x[k];
                }
            }
        }
    }
    loss / n
}

fn normalized(model: &UtilityModel, samples: &[ProfilingSample]) -> (Vec<[f64; INPUTS]>, Vec<f64>) {
    let xs = samples.iter().map(|s| model.normalize(s.features()).0).collect();
    let ys = samples.iter().map(|s| s.accuracy).collect();
    (xs, ys)
}

/// Unregularised mean squared error of the (unclamped) network output.
pub fn mse_loss(model: &UtilityModel, samples: &[ProfilingSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let (xs, ys) = normalized(model, samples);
    xs.iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = model.forward(*x).out - y;
            e * e
        })
        .sum::<f64>()
        / samples.len() as f64
}

/// Backpropagated gradient of [`mse_loss`], flattened like
/// [`UtilityModel::parameters`].
pub fn analytic_gradient(model: &UtilityModel, samples: &[ProfilingSample]) -> Vec<f64> {
    let mut grad = vec![0.0; model.parameter_count()];
    if samples.is_empty() {
        return grad;
    }
    let (xs, ys) = normalized(model, samples);
    let idx: Vec<usize> = (0..samples.len()).collect();
    accumulate_gradient(model, &xs, &ys, &idx, &mut grad);
    grad
}

/// Central finite differences of [`mse_loss`] with the given step.
pub fn numeric_gradient(model: &UtilityModel, samples: &[ProfilingSample], step: f64) -> Vec<f64> {
    let base = model.parameters();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut p = base.clone();
    for i in 0..base.len() {
        p[i] = base[i] + step;
        probe.set_parameters(&p);
        let up = mse_loss(&probe, samples);
        p[i] = base[i] - step;
        probe.set_parameters(&p);
        let down = mse_loss(&probe, samples);
        p[i] = base[i];
        out.push((up - down) / (2.0 * step));
    }
    out
}

/// Below this magnitude gradients are compared absolutely.
const RELATIVE_FLOOR: f64 = 1e-7;

/// Largest relative disagreement between backprop and central differences
/// (step 1e-5) over all parameters.
pub fn gradient_check(model: &UtilityModel, samples: &[ProfilingSample]) -> f64 {
    let analytic = analytic_gradient(model, samples);
    let numeric = numeric_gradient(model, samples, 1e-5);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(RELATIVE_FLOOR))
        .fold(0.0, f64::max)
}

fn ensure_finite(epoch: usize, loss: f64, params: &[f64]) -> Result<(), UtilityError> {
    if !loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
        return Err(UtilityError::NonFiniteLoss { epoch, loss });
    }
    Ok(())
}

/// Fits a model with seeded mini-batch SGD on the squared error.
pub fn train_utility(
    samples: &[ProfilingSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, UtilityError> {
    cfg.validate()?;
    if samples.len() < MIN_TRAINING_SAMPLES {
        return Err(UtilityError::InsufficientData {
            needed: MIN_TRAINING_SAMPLES,
            got: samples.len(),
        });
    }
    for (i, s) in samples.iter().enumerate() {
        check_sample(i, s)?;
    }

    let mut model = UtilityModel::random(cfg.hidden_size, feature_ranges(samples), cfg.seed);
    let (xs, ys) = normalized(&model, samples);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grad = vec![0.0; model.parameter_count()];
    let mut params = model.parameters();
    let n_weights1 = cfg.hidden_size * INPUTS;
    let w2_start = n_weights1 + cfg.hidden_size;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            epoch_loss += accumulate_gradient(&model, &xs, &ys, batch, &mut grad) * batch.len() as f64;
            if cfg.l2 > 0.0 {
                for i in (0..n_weights1).chain(w2_start..w2_start + cfg.hidden_size) {
                    grad[i] += cfg.l2 * params[i];
                }
            }
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
            model.set_parameters(&params);
        }
        ensure_finite(epoch, epoch_loss / samples.len() as f64, &params)?;
    }

    let train_mse = mse_loss(&model, samples);
    if !train_mse.is_finite() {
        return Err(UtilityError::NonFiniteLoss {
            epoch: cfg.epochs,
            loss: train_mse,
        });
    }
    Ok(TrainOutcome { model, train_mse })
}

/// Trains one model per camera id. Cameras are independent and train on
/// scoped threads; results do not depend on scheduling.
pub fn train_per_camera(
    by_camera: &BTreeMap<String, Vec<ProfilingSample>>,
    cfg: &TrainConfig,
) -> Result<(UtilityModels, BTreeMap<String, f64>), UtilityError> {
    let outcomes: Vec<(String, Result<TrainOutcome, UtilityError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = by_camera
            .iter()
            .map(|(camera, samples)| (camera, scope.spawn(move || train_utility(samples, cfg))))
            .collect();
        handles
            .into_iter()
            .map(|(camera, h)| (camera.clone(), h.join().expect("training thread panicked")))
            .collect()
    });
    let mut models = UtilityModels::new();
    let mut mse = BTreeMap::new();
    for (camera, outcome) in outcomes {
        let outcome = outcome?;
        mse.insert(camera.clone(), outcome.train_mse);
        models.insert(camera, outcome.model);
    }
    Ok((models, mse))
}
