//! Per-slot bandwidth allocation across cameras.
//!
//! The objective is `max sum_i weight_i * F1_i(b_i, r_i)` subject to
//! `sum_i b_i <= W`. Each camera's choice set is reduced to the best
//! resolution per bitrate plus a zero-bitrate "no transmission" option,
//! which turns the problem into a multiple-choice knapsack solved over
//! budget units of `d = gcd(all bitrates)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::utility::UtilityTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("no cameras or no bitrate options")]
    EmptyOptions,
    #[error("camera {index}: {reason}")]
    InvalidCamera { index: usize, reason: String },
    #[error("quantum {quantum} kbps does not divide bitrate {bitrate} kbps")]
    QuantumMismatch { quantum: u32, bitrate: u32 },
    #[error("camera {0} has no profile-average table")]
    MissingAverageTable(String),
    #[error("budget must be a finite number, got {0}")]
    InvalidBudget(f64),
}

/// One camera's discrete configuration space for the current slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraOptions {
    pub camera_id: String,
    pub weight: f64,
    /// Strictly increasing, kbps.
    pub bitrates: Vec<u32>,
    pub resolutions: Vec<u32>,
    /// Predicted F1, `[bitrate][resolution]`.
    pub table: UtilityTable,
    /// Profile-average table used by the content-agnostic baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_table: Option<UtilityTable>,
}

impl CameraOptions {
    pub fn new(
        camera_id: impl Into<String>,
        weight: f64,
        bitrates: Vec<u32>,
        resolutions: Vec<u32>,
        table: UtilityTable,
    ) -> Self {
        Self {
            camera_id: camera_id.into(),
            weight,
            bitrates,
            resolutions,
            table,
            average_table: None,
        }
    }

    pub fn with_average_table(mut self, table: UtilityTable) -> Self {
        self.average_table = Some(table);
        self
    }

    fn check_table(&self, index: usize, table: &UtilityTable, what: &str) -> Result<(), AllocError> {
        let bad = |reason: String| Err(AllocError::InvalidCamera { index, reason });
        if table.len() != self.bitrates.len()
            || table.iter().any(|row| row.len() != self.resolutions.len())
        {
            return bad(format!(
                "{what} must be {}x{}",
                self.bitrates.len(),
                self.resolutions.len()
            ));
        }
        if table.iter().flatten().any(|v| !v.is_finite()) {
            return bad(format!("{what} has non-finite entries"));
        }
        Ok(())
    }

    pub fn validate(&self, index: usize) -> Result<(), AllocError> {
        let bad = |reason: &str| {
            Err(AllocError::InvalidCamera {
                index,
                reason: reason.to_string(),
            })
        };
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return bad("weight must be finite and >= 0");
        }
        if self.bitrates.is_empty() || self.resolutions.is_empty() {
            return Err(AllocError::EmptyOptions);
        }
        if self.bitrates[0] == 0 || self.bitrates.windows(2).any(|w| w[0] >= w[1]) {
            return bad("bitrates must be positive and strictly increasing");
        }
        self.check_table(index, &self.table, "table")?;
        if let Some(avg) = &self.average_table {
            self.check_table(index, avg, "average_table")?;
        }
        Ok(())
    }
}

/// Best resolution for one bitrate option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitrateChoice {
    pub bitrate: u32,
    pub resolution: u32,
    pub accuracy: f64,
}

/// For each bitrate, the resolution with the highest table entry (ties go
/// to the lowest resolution index).
pub fn best_config_per_bitrate(cam: &CameraOptions) -> Vec<BitrateChoice> {
    cam.bitrates
        .iter()
        .zip(&cam.table)
        .map(|(&bitrate, row)| {
            let mut best = 0;
            for (ri, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = ri;
                }
            }
            BitrateChoice {
                bitrate,
                resolution: cam.resolutions[best],
                accuracy: row[best],
            }
        })
        .collect()
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Greatest common divisor of every bitrate option of every camera.
pub fn compute_quantum(cameras: &[CameraOptions]) -> Result<u32, AllocError> {
    let d = cameras
        .iter()
        .flat_map(|c| c.bitrates.iter().copied())
        .fold(0, gcd);
    if d == 0 {
        return Err(AllocError::EmptyOptions);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpParams {
    /// Budget discretisation unit, kbps.
    pub quantum: u32,
}

impl DpParams {
    pub fn for_cameras(cameras: &[CameraOptions]) -> Result<Self, AllocError> {
        Ok(Self {
            quantum: compute_quantum(cameras)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraAssignment {
    pub camera_id: String,
    /// 0 means the camera does not transmit this slot.
    pub bitrate: u32,
    pub resolution: Option<u32>,
    pub predicted_accuracy: f64,
}

impl CameraAssignment {
    fn idle(camera_id: &str) -> Self {
        Self {
            camera_id: camera_id.to_string(),
            bitrate: 0,
            resolution: None,
            predicted_accuracy: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDecision {
    pub assignments: Vec<CameraAssignment>,
    pub total_bitrate: u32,
    /// `sum_i weight_i * predicted_accuracy_i`, summed in camera order.
    pub total_utility: f64,
}

impl AllocationDecision {
    fn from_assignments(cameras: &[CameraOptions], assignments: Vec<CameraAssignment>) -> Self {
        let total_bitrate = assignments.iter().map(|a| a.bitrate).sum();
        let mut total_utility = 0.0;
        for (cam, a) in cameras.iter().zip(&assignments) {
            total_utility += cam.weight * a.predicted_accuracy;
        }
        Self {
            assignments,
            total_bitrate,
            total_utility,
        }
    }
}

fn validate_all(cameras: &[CameraOptions]) -> Result<(), AllocError> {
    for (i, c) in cameras.iter().enumerate() {
        c.validate(i)?;
    }
    Ok(())
}

fn check_budget(budget_kbps: f64) -> Result<f64, AllocError> {
    if budget_kbps.is_nan() || budget_kbps == f64::NEG_INFINITY {
        return Err(AllocError::InvalidBudget(budget_kbps));
    }
    Ok(budget_kbps.max(0.0))
}

/// Exact weighted-utility optimum via dynamic programming in
/// `O(|I| |B| W / d)`.
///
/// Among optimal solutions the one with the lowest total bitrate wins;
/// remaining ties give higher bitrates to higher-index cameras.
pub fn allocate_dp(
    cameras: &[CameraOptions],
    budget_kbps: f64,
    params: DpParams,
) -> Result<AllocationDecision, AllocError> {
    validate_all(cameras)?;
    let budget = check_budget(budget_kbps)?;
    let d = params.quantum;
    if d == 0 {
        return Err(AllocError::QuantumMismatch { quantum: 0, bitrate: 0 });
    }
    for c in cameras {
        if let Some(&b) = c.bitrates.iter().find(|&&b| b % d != 0) {
            return Err(AllocError::QuantumMismatch { quantum: d, bitrate: b });
        }
    }

    // items[i] = (units, weighted value, choice); index 0 is the idle option
    let items: Vec<Vec<(usize, f64, Option<BitrateChoice>)>> = cameras
        .iter()
        .map(|c| {
            std::iter::once((0, 0.0, None))
                .chain(best_config_per_bitrate(c).into_iter().map(|bc| {
                    ((bc.bitrate / d) as usize, c.weight * bc.accuracy, Some(bc))
                }))
                .collect()
        })
        .collect();

    let ceiling: usize = items.iter().map(|it| it.last().map_or(0, |x| x.0)).sum();
    let cap = ((budget / f64::from(d)).floor().min(ceiling as f64)) as usize;

    // best[i][w]: best value of the first i cameras using exactly w units
    let n = cameras.len();
    let mut best = vec![vec![f64::NEG_INFINITY; cap + 1]; n + 1];
    best[0][0] = 0.0;
    for i in 0..n {
        let (prev, next) = best.split_at_mut(i + 1);
        let (prev, next) = (&prev[i], &mut next[0]);
        for w in 0..=cap {
            let base = prev[w];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for &(units, value, _) in &items[i] {
                let nw = w + units;
                if nw > cap {
                    break;
                }
                let cand = base + value;
                if cand > next[nw] {
                    next[nw] = cand;
                }
            }
        }
    }

    let mut used = 0;
    let mut optimum = f64::NEG_INFINITY;
    for (w, &v) in best[n].iter().enumerate() {
        if v > optimum {
            optimum = v;
            used = w;
        }
    }

    let mut assignments: Vec<CameraAssignment> = Vec::with_capacity(n);
    let mut w = used;
    for i in (0..n).rev() {
        let target = best[i + 1][w];
        let (units, _, choice) = items[i]
            .iter()
            .rev()
            .find(|&&(units, value, _)| units <= w && best[i][w - units] + value == target)
            .copied()
            .expect("dp table is consistent");
        w -= units;
        assignments.push(match choice {
            None => CameraAssignment::idle(&cameras[i].camera_id),
            Some(bc) => CameraAssignment {
                camera_id: cameras[i].camera_id.clone(),
                bitrate: bc.bitrate,
                resolution: Some(bc.resolution),
                predicted_accuracy: bc.accuracy,
            },
        });
    }
    assignments.reverse();

    let mut decision = AllocationDecision::from_assignments(cameras, assignments);
    if n > 0 {
        debug_assert_eq!(decision.total_utility, optimum);
        decision.total_utility = optimum;
    }
    Ok(decision)
}

/// Each camera gets the largest option not above `W / |I|`.
pub fn allocate_fair(
    cameras: &[CameraOptions],
    budget_kbps: f64,
) -> Result<AllocationDecision, AllocError> {
    validate_all(cameras)?;
    let budget = check_budget(budget_kbps)?;
    if cameras.is_empty() {
        return Ok(AllocationDecision::from_assignments(cameras, Vec::new()));
    }
    let share = budget / cameras.len() as f64;
    let assignments = cameras
        .iter()
        .map(|c| {
            best_config_per_bitrate(c)
                .into_iter()
                .rev()
                .find(|bc| f64::from(bc.bitrate) <= share)
                .map_or_else(
                    || CameraAssignment::idle(&c.camera_id),
                    |bc| CameraAssignment {
                        camera_id: c.camera_id.clone(),
                        bitrate: bc.bitrate,
                        resolution: Some(bc.resolution),
                        predicted_accuracy: bc.accuracy,
                    },
                )
        })
        .collect();
    Ok(AllocationDecision::from_assignments(cameras, assignments))
}

/// [`allocate_dp`] on each camera's profile-average table, i.e. ignoring
/// the current content features.
pub fn allocate_content_agnostic(
    cameras: &[CameraOptions],
    budget_kbps: f64,
    params: DpParams,
) -> Result<AllocationDecision, AllocError> {
    let swapped = cameras
        .iter()
        .map(|c| {
            let avg = c
                .average_table
                .clone()
                .ok_or_else(|| AllocError::MissingAverageTable(c.camera_id.clone()))?;
            Ok(CameraOptions {
                table: avg,
                average_table: None,
                ..c.clone()
            })
        })
        .collect::<Result<Vec<_>, AllocError>>()?;
    allocate_dp(&swapped, budget_kbps, params)
}
