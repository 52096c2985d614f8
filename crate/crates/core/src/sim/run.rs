use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{Scheduler, SimConfig};
use super::scenario::Scenario;
use super::trace::BandwidthTrace;
use super::SimError;
use crate::allocation::{
    allocate_content_agnostic, allocate_dp, allocate_fair, AllocationDecision, CameraOptions, DpParams,
};
use crate::elastic::{
    compute_bandwidth_thresholds, elastic_adjust, ema_update, profile_area_history, profiles_from_rows,
    BandwidthThresholds, ElasticConfig, ElasticState,
};
use crate::utility::{profile_average_table, tabulate_utility, UtilityModels, UtilityTable};

/// Per-slot predicted utility tables.
#[derive(Debug, Clone)]
pub enum UtilitySource {
    /// Inject the ground truth as the model.
    GroundTruth,
    Learned(UtilityModels),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChosenConfig {
    /// 0 when the camera is idle.
    pub bitrate: u32,
    pub resolution: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub bandwidth_kbps: f64,
    pub a_total: f64,
    pub d_kbit: f64,
    pub effective_budget_kbps: f64,
    pub budget_used_kbit: f64,
    pub configs: Vec<ChosenConfig>,
    pub total_bitrate: u32,
    pub predicted_utility: f64,
    /// `sum_i weight_i * ground_truth_i(chosen b, r)`, in camera order.
    pub realized_utility: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BorrowStats {
    pub borrow_slots: usize,
    pub repay_slots: usize,
    pub total_borrowed_kbit: f64,
    pub total_repaid_kbit: f64,
    pub max_budget_used_kbit: f64,
    pub final_budget_used_kbit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheduler: Scheduler,
    pub trace: String,
    pub horizon: usize,
    pub camera_ids: Vec<String>,
    pub weights: Vec<f64>,
    /// Mean realized segment utility over all slots.
    pub mean_utility: f64,
    /// Mean realized accuracy per camera, idle slots counting as 0.
    pub per_camera_mean_accuracy: Vec<f64>,
    pub mean_total_bitrate: f64,
    pub borrow: BorrowStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<BandwidthThresholds>,
    pub records: Vec<SlotRecord>,
}

fn mean_of_tables<'a>(tables: impl Iterator<Item = &'a UtilityTable>, nb: usize, nr: usize) -> UtilityTable {
    let mut out = vec![vec![0.0; nr]; nb];
    let mut n = 0usize;
    for t in tables {
        n += 1;
        for (row, trow) in out.iter_mut().zip(t) {
            for (v, tv) in row.iter_mut().zip(trow) {
                *v += tv;
            }
        }
    }
    if n > 0 {
        out.iter_mut().flatten().for_each(|v| *v /= n as f64);
    }
    out
}

/// Profile-average tables per camera, in stream order.
fn average_tables(scenario: &Scenario, utility: &UtilitySource) -> Result<Vec<UtilityTable>, SimError> {
    let (nb, nr) = (scenario.bitrates.len(), scenario.resolutions.len());
    let mut out = Vec::with_capacity(scenario.streams.len());
    for s in &scenario.streams {
        let rows: Vec<_> = scenario.profiling.iter().filter(|r| r.camera == s.camera_id).collect();
        let table = match utility {
            UtilitySource::Learned(models) => {
                let model = models
                    .get(&s.camera_id)
                    .ok_or_else(|| SimError::UntrainedModel(s.camera_id.clone()))?;
                let samples: Vec<_> = rows.iter().map(|r| r.sample()).collect();
                profile_average_table(model, &samples, &scenario.bitrates, &scenario.resolutions)
            }
            UtilitySource::GroundTruth => {
                // Accuracy tables of each profiled segment, keyed by (a, c).
                let mut segments: BTreeMap<(u64, u64), UtilityTable> = BTreeMap::new();
                for r in &rows {
                    let bi = scenario.bitrates.iter().position(|&b| f64::from(b) == r.bitrate_kbps);
                    let ri = scenario.resolutions.iter().position(|&x| x == r.resolution);
                    if let (Some(bi), Some(ri)) = (bi, ri) {
                        segments
                            .entry((r.a.to_bits(), r.c.to_bits()))
                            .or_insert_with(|| vec![vec![0.0; nr]; nb])[bi][ri] = r.accuracy;
                    }
                }
                if segments.is_empty() {
                    // Without profiling data fall back to the stream itself.
                    mean_of_tables(s.ground_truth.iter(), nb, nr)
                } else {
                    mean_of_tables(segments.values(), nb, nr)
                }
            }
        };
        out.push(table);
    }
    Ok(out)
}

fn initial_elastic_state(
    scenario: &Scenario,
    trace_mean: f64,
    cfg: &ElasticConfig,
) -> Result<(ElasticState, BandwidthThresholds), SimError> {
    let ids = scenario.camera_ids();
    let profiled: Vec<_> = profiles_from_rows(&scenario.profiling)?
        .into_iter()
        .filter(|p| ids.contains(&p.camera))
        .collect();
    if let Some(missing) = ids.iter().find(|id| !profiled.iter().any(|p| &p.camera == *id)) {
        return Err(SimError::Scenario(format!("camera {missing} has no profiling data")));
    }
    let profiles: Vec<_> = profiled.iter().map(|p| p.profile.clone()).collect();
    let th = compute_bandwidth_thresholds(&profiles, cfg)?;
    let state = ElasticState::new(th.tau_wl, th.tau_wh, cfg.resolved_cap(trace_mean))
        .warm_start(&profile_area_history(&profiled), cfg);
    Ok((state, th))
}

/// Runs the per-slot server loop for `cfg.horizon` slots.
pub fn run_simulation(
    cfg: &SimConfig,
    trace: &BandwidthTrace,
    scenario: &Scenario,
    utility: &UtilitySource,
    elastic_cfg: &ElasticConfig,
) -> Result<SimReport, SimError> {
    cfg.validate()?;
    scenario.validate().map_err(|e| SimError::Scenario(format!("{e:#}")))?;
    trace.validate().map_err(|e| SimError::InvalidConfig(format!("{e:#}")))?;
    if trace.samples.len() < cfg.horizon || scenario.horizon() < cfg.horizon {
        return Err(SimError::HorizonMismatch {
            needed: cfg.horizon,
            trace: trace.samples.len(),
            streams: scenario.horizon(),
        });
    }
    let weights = cfg.weights.resolve(scenario.streams.len())?;
    let elastic_on = cfg.scheduler == Scheduler::DpElastic;
    if elastic_on {
        elastic_cfg.validate()?;
        if elastic_cfg.slot_length != cfg.slot_length {
            return Err(SimError::InvalidConfig(format!(
                "elastic slot_length {} differs from simulation slot_length {}",
                elastic_cfg.slot_length, cfg.slot_length
            )));
        }
    }
    if let UtilitySource::Learned(models) = utility {
        if let Some(s) = scenario.streams.iter().find(|s| !models.contains_key(&s.camera_id)) {
            return Err(SimError::UntrainedModel(s.camera_id.clone()));
        }
    }

    let averages = match cfg.scheduler {
        Scheduler::Agnostic => Some(average_tables(scenario, utility)?),
        _ => None,
    };
    let horizon_samples = &trace.samples[..cfg.horizon];
    let trace_mean = horizon_samples.iter().sum::<f64>() / cfg.horizon as f64;
    let (mut state, thresholds) = if elastic_on {
        let (s, th) = initial_elastic_state(scenario, trace_mean, elastic_cfg)?;
        (Some(s), Some(th))
    } else {
        (None, None)
    };

    let mut cams: Vec<CameraOptions> = scenario
        .streams
        .iter()
        .zip(&weights)
        .enumerate()
        .map(|(i, (s, &w))| {
            let mut c = CameraOptions::new(
                s.camera_id.clone(),
                w,
                scenario.bitrates.clone(),
                scenario.resolutions.clone(),
                Vec::new(),
            );
            if let Some(avg) = &averages {
                c = c.with_average_table(avg[i].clone());
            }
            c
        })
        .collect();
    let params = DpParams {
        quantum: crate::allocation::compute_quantum(&cams)?,
    };

    let mut records = Vec::with_capacity(cfg.horizon);
    let mut borrow = BorrowStats::default();
    let mut per_camera = vec![0.0; cams.len()];
    let mut utility_sum = 0.0;
    let mut bitrate_sum = 0.0;

    for (t, &w) in horizon_samples.iter().enumerate() {
        let a_total: f64 = scenario.streams.iter().map(|s| s.features[t].a).sum();
        for (c, s) in cams.iter_mut().zip(&scenario.streams) {
            c.table = match utility {
                UtilitySource::GroundTruth => s.ground_truth[t].clone(),
                UtilitySource::Learned(models) => {
                    let f = s.features[t];
                    tabulate_utility(&models[&s.camera_id], f.a, f.c, &scenario.bitrates, &scenario.resolutions)
                }
            };
        }

        let (d, budget) = match state.take() {
            Some(st) => {
                let st = ema_update(st, a_total, elastic_cfg);
                let (adj, st) = elastic_adjust(st, a_total, w, elastic_cfg);
                if adj.d_kbit > 0.0 {
                    borrow.borrow_slots += 1;
                    borrow.total_borrowed_kbit += adj.d_kbit;
                } else if adj.d_kbit < 0.0 {
                    borrow.repay_slots += 1;
                    borrow.total_repaid_kbit -= adj.d_kbit;
                }
                borrow.max_budget_used_kbit = borrow.max_budget_used_kbit.max(st.budget_used);
                borrow.final_budget_used_kbit = st.budget_used;
                state = Some(st);
                (adj.d_kbit, adj.effective_budget_kbps)
            }
            None => (0.0, w),
        };

        let decision: AllocationDecision = match cfg.scheduler {
            Scheduler::Dp | Scheduler::DpElastic => allocate_dp(&cams, budget, params)?,
            Scheduler::Fair => allocate_fair(&cams, budget)?,
            Scheduler::Agnostic => allocate_content_agnostic(&cams, budget, params)?,
        };

        let mut realized = 0.0;
        let mut configs = Vec::with_capacity(cams.len());
        for (i, (a, s)) in decision.assignments.iter().zip(&scenario.streams).enumerate() {
            let acc = match a.resolution {
                Some(r) => {
                    let bi = scenario.bitrates.iter().position(|&b| b == a.bitrate);
                    let ri = scenario.resolutions.iter().position(|&x| x == r);
                    match (bi, ri) {
                        (Some(bi), Some(ri)) => s.ground_truth[t][bi][ri],
                        _ => unreachable!("allocator returned an option outside the scenario"),
                    }
                }
                None => 0.0,
            };
            realized += weights[i] * acc;
            per_camera[i] += acc;
            configs.push(ChosenConfig {
                bitrate: a.bitrate,
                resolution: a.resolution,
            });
        }
        utility_sum += realized;
        bitrate_sum += f64::from(decision.total_bitrate);
        records.push(SlotRecord {
            slot: t,
            bandwidth_kbps: w,
            a_total,
            d_kbit: d,
            effective_budget_kbps: budget,
            budget_used_kbit: state.as_ref().map_or(0.0, |s| s.budget_used),
            configs,
            total_bitrate: decision.total_bitrate,
            predicted_utility: decision.total_utility,
            realized_utility: realized,
        });
    }

    let n = cfg.horizon as f64;
    Ok(SimReport {
        scheduler: cfg.scheduler,
        trace: trace.name.clone(),
        horizon: cfg.horizon,
        camera_ids: scenario.camera_ids(),
        weights,
        mean_utility: utility_sum / n,
        per_camera_mean_accuracy: per_camera.into_iter().map(|s| s / n).collect(),
        mean_total_bitrate: bitrate_sum / n,
        borrow,
        thresholds,
        records,
    })
}
