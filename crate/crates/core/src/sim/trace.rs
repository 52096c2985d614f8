use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Floor applied to generated bandwidth samples, kbps.
pub const MIN_TRACE_KBPS: f64 = 50.0;

/// Lag-one autocorrelation of generated traces.
const TRACE_RHO: f64 = 0.7;

/// Available bandwidth per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthTrace {
    pub name: String,
    /// kbps per slot, all positive.
    pub samples: Vec<f64>,
}

impl BandwidthTrace {
    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }

    pub fn std_dev(&self) -> f64 {
        std_dev(&self.samples)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, v)) = self
            .samples
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            bail!("trace {}: slot {i} has non-positive bandwidth {v}", self.name);
        }
        Ok(())
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Population standard deviation.
fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceProfile {
    Low,
    Medium,
    High,
}

impl TraceProfile {
    pub const ALL: [TraceProfile; 3] = [TraceProfile::Low, TraceProfile::Medium, TraceProfile::High];

    /// Target (mean, std) in kbps.
    pub fn moments(self) -> (f64, f64) {
        match self {
            TraceProfile::Low => (521.0, 230.0),
            TraceProfile::Medium => (1134.0, 499.0),
            TraceProfile::High => (2305.0, 1397.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TraceProfile::Low => "low",
            TraceProfile::Medium => "medium",
            TraceProfile::High => "high",
        }
    }
}

impl std::str::FromStr for TraceProfile {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Self::Low),
            "medium" => Ok(Self::Medium),
            "high" => Ok(Self::High),
            _ => bail!("unknown trace profile {s:?} (expected low, medium or high)"),
        }
    }
}

/// AR(1) bandwidth trace clipped at [`MIN_TRACE_KBPS`], affinely
/// calibrated so the clipped series hits the profile's mean and std.
pub fn generate_trace(seed: u64, profile: TraceProfile, horizon: usize) -> BandwidthTrace {
    let (target_mean, target_std) = profile.moments();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Vec::with_capacity(horizon);
    let innovation = (1.0 - TRACE_RHO * TRACE_RHO).sqrt();
    let mut prev: f64 = StandardNormal.sample(&mut rng);
    for _ in 0..horizon {
        z.push(prev);
        let eps: f64 = StandardNormal.sample(&mut rng);
        prev = TRACE_RHO * prev + innovation * eps;
    }

    let name = profile.name().to_string();
    let (zm, zs) = (mean(&z), std_dev(&z));
    if horizon < 2 || zs == 0.0 {
        return BandwidthTrace {
            name,
            samples: vec![target_mean.max(MIN_TRACE_KBPS); horizon],
        };
    }
    let unit: Vec<f64> = z.iter().map(|v| (v - zm) / zs).collect();

    let clip = |offset: f64, scale: f64| -> Vec<f64> {
        unit.iter()
            .map(|u| (offset + scale * u).max(MIN_TRACE_KBPS))
            .collect()
    };
    let (mut offset, mut scale) = (target_mean, target_std);
    let mut samples = clip(offset, scale);
    for _ in 0..200 {
        let (m, s) = (mean(&samples), std_dev(&samples));
        if (m - target_mean).abs() < 1e-9 * target_mean && (s - target_std).abs() < 1e-9 * target_std {
            break;
        }
        offset += target_mean - m;
        if s > 0.0 {
            scale *= target_std / s;
        }
        samples = clip(offset, scale);
    }
    BandwidthTrace { name, samples }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    slot: usize,
    kbps: f64,
}

/// Parses `slot,kbps`; rows are ordered by slot.
pub fn read_trace_csv(name: &str, reader: impl Read) -> Result<BandwidthTrace> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<TraceRow> = rdr
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("trace row {}", i + 1)))
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.slot);
    for (i, r) in rows.iter().enumerate() {
        if r.slot != i {
            bail!("trace slots must be 0..n without gaps (found slot {} at position {i})", r.slot);
        }
    }
    let trace = BandwidthTrace {
        name: name.to_string(),
        samples: rows.into_iter().map(|r| r.kbps).collect(),
    };
    trace.validate()?;
    Ok(trace)
}

pub fn write_trace_csv(trace: &BandwidthTrace, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (slot, &kbps) in trace.samples.iter().enumerate() {
        w.serialize(TraceRow { slot, kbps })?;
    }
    w.flush()?;
    Ok(())
}
