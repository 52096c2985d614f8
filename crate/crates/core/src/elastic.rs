//! Elastic transmission: borrow transmission capacity from future slots
//! when ROI area is unusually high and bandwidth is low, and repay it when
//! bandwidth is plentiful.
//!
//! Per slot the area threshold is `tau_a = ema(a) + gamma_a * sigma_a`.
//! Borrowing happens when `a > tau_a` and `W < tau_wl` and is
//! `D = gamma_wl * (tau_wl - W) * T`, capped by the remaining headroom
//! `E - used`. Repayment happens when `W >= tau_wh` and is
//! `D = -min(gamma_wh * (W - tau_wh) * T, used)`. The allocator then sees
//! an effective budget of `W + D / T`.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::utility::io::ProfilingRow;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElasticError {
    #[error("invalid elastic config: {0}")]
    InvalidConfig(String),
    #[error("camera {camera}: {reason}")]
    InsufficientProfile { camera: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticConfig {
    /// EMA smoothing factor in (0, 1].
    pub alpha: f64,
    pub gamma_a: f64,
    pub gamma_wl: f64,
    pub gamma_wh: f64,
    /// Std-dev cutoff above which a bitrate counts as "still lossy" (tau_wl).
    pub sigma_high: f64,
    /// Std-dev cutoff below which a bitrate counts as "good enough" (tau_wh).
    pub sigma_low: f64,
    /// Max borrowed data E in kbit; `None` means twice the mean trace
    /// bandwidth times the slot length.
    pub budget_cap: Option<f64>,
    /// Slot length T in seconds.
    pub slot_length: f64,
    /// Optional sliding window (slots) for sigma_a; unbounded when `None`.
    pub sigma_window: Option<usize>,
}

impl Default for ElasticConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            gamma_a: 0.5,
            gamma_wl: 1.0,
            gamma_wh: 1.0,
            sigma_high: 0.05,
            sigma_low: 0.01,
            budget_cap: None,
            slot_length: 1.0,
            sigma_window: None,
        }
    }
}

impl ElasticConfig {
    pub fn validate(&self) -> Result<(), ElasticError> {
        let bad = |m: String| Err(ElasticError::InvalidConfig(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha {} must be in (0, 1]", self.alpha));
        }
        for (name, v) in [
            ("gamma_a", self.gamma_a),
            ("gamma_wl", self.gamma_wl),
            ("gamma_wh", self.gamma_wh),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        if !(self.sigma_low <= self.sigma_high) {
            return bad("sigma_low must not exceed sigma_high".into());
        }
        if let Some(e) = self.budget_cap {
            if !(e >= 0.0 && e.is_finite()) {
                return bad("budget_cap must be finite and >= 0".into());
            }
        }
        if !(self.slot_length > 0.0 && self.slot_length.is_finite()) {
            return bad("slot_length must be positive".into());
        }
        if self.sigma_window == Some(0) {
            return bad("sigma_window must be at least 1".into());
        }
        Ok(())
    }

    /// Resolves the borrow cap against the mean bandwidth of a trace.
    pub fn resolved_cap(&self, mean_bandwidth_kbps: f64) -> f64 {
        self.budget_cap
            .unwrap_or(2.0 * mean_bandwidth_kbps * self.slot_length)
    }
}

/// Welford running mean/variance, optionally over a sliding window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    #[serde(default, skip_serializing_if = "VecDeque::is_empty")]
    window: VecDeque<f64>,
}

impl RunningStats {
    pub fn push(&mut self, x: f64, window: Option<usize>) {
        match window {
            None => {
                self.count += 1;
                let delta = x - self.mean;
                self.mean += delta / self.count as f64;
                self.m2 += delta * (x - self.mean);
            }
            Some(k) => {
                self.window.push_back(x);
                while self.window.len() > k {
                    self.window.pop_front();
                }
                let n = self.window.len() as f64;
                self.count = self.window.len() as u64;
                self.mean = self.window.iter().sum::<f64>() / n;
                self.m2 = self.window.iter().map(|v| (v - self.mean).powi(2)).sum();
            }
        }
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticState {
    pub ema_a: f64,
    pub ema_seeded: bool,
    pub stats: RunningStats,
    /// Borrowed and not yet repaid, kbit, in `[0, budget_cap]`.
    pub budget_used: f64,
    pub budget_cap: f64,
    pub tau_a: f64,
    pub tau_wl: f64,
    pub tau_wh: f64,
}

impl ElasticState {
    pub fn new(tau_wl: f64, tau_wh: f64, budget_cap: f64) -> Self {
        if tau_wl > tau_wh {
            log::warn!("bandwidth thresholds inverted: tau_wl {tau_wl} > tau_wh {tau_wh}");
        }
        Self {
            ema_a: 0.0,
            ema_seeded: false,
            stats: RunningStats::default(),
            budget_used: 0.0,
            budget_cap,
            tau_a: 0.0,
            tau_wl,
            tau_wh,
        }
    }

    /// State with a pre-set moving average, as if some history had been
    /// observed already.
    pub fn with_ema(mut self, ema_a: f64) -> Self {
        self.ema_a = ema_a;
        self.ema_seeded = true;
        self.tau_a = ema_a;
        self
    }

    /// Feeds an offline series of total ROI areas through [`ema_update`].
    pub fn warm_start(mut self, history: &[f64], cfg: &ElasticConfig) -> Self {
        for &a in history {
            self = ema_update(self, a, cfg);
        }
        self
    }
}

/// Updates the ROI-area moving average and the area threshold.
/// The first observation seeds the average.
pub fn ema_update(mut state: ElasticState, a_total: f64, cfg: &ElasticConfig) -> ElasticState {
    if state.ema_seeded {
        state.ema_a = cfg.alpha * a_total + (1.0 - cfg.alpha) * state.ema_a;
    } else {
        state.ema_a = a_total;
        state.ema_seeded = true;
    }
    state.stats.push(a_total, cfg.sigma_window);
    state.tau_a = state.ema_a + cfg.gamma_a * state.stats.std_dev();
    state
}

/// Outcome of one slot's adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    /// Signed data amount in kbit: positive borrows, negative repays.
    pub d_kbit: f64,
    /// Bitrate budget handed to the allocator, `W + D / T`.
    pub effective_budget_kbps: f64,
}

pub fn elastic_adjust(
    mut state: ElasticState,
    a_total: f64,
    bandwidth_kbps: f64,
    cfg: &ElasticConfig,
) -> (Adjustment, ElasticState) {
    let t = cfg.slot_length;
    let cap = state.budget_cap;
    let mut d = 0.0;
    if a_total > state.tau_a && bandwidth_kbps < state.tau_wl {
        let headroom = (cap - state.budget_used).max(0.0);
        let want = cfg.gamma_wl * (state.tau_wl - bandwidth_kbps) * t;
        if want >= headroom {
            d = headroom;
            state.budget_used = cap;
        } else {
            d = want;
            state.budget_used += d;
        }
    } else if bandwidth_kbps >= state.tau_wh {
        let give = cfg.gamma_wh * (bandwidth_kbps - state.tau_wh) * t;
        if give >= state.budget_used {
            d = -state.budget_used;
            state.budget_used = 0.0;
        } else {
            d = -give;
            state.budget_used += d;
        }
    }
    if d == 0.0 {
        // Keep no-op slots free of negative zero.
        d = 0.0;
    }
    (
        Adjustment {
            d_kbit: d,
            effective_budget_kbps: bandwidth_kbps + d / t,
        },
        state,
    )
}

/// Offline profile of one camera: accuracies per segment at each bitrate,
/// already maximised over resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraProfile {
    /// Strictly increasing, kbps.
    pub bitrates: Vec<u32>,
    /// `segments[s][b]`
    pub segments: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthThresholds {
    pub tau_wl: f64,
    pub tau_wh: f64,
    /// Per camera, per bitrate: sample std-dev of `acc(b_max) - acc(b)`.
    pub std_devs: Vec<Vec<f64>>,
    pub chosen_low: Vec<u32>,
    pub chosen_high: Vec<u32>,
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// `tau_wl` sums, per camera, the largest bitrate whose accuracy gap to the
/// top bitrate has std-dev above `sigma_high` (smallest option if none);
/// `tau_wh` sums the smallest bitrate with std-dev below `sigma_low`
/// (largest option if none).
pub fn compute_bandwidth_thresholds(
    profiles: &[CameraProfile],
    cfg: &ElasticConfig,
) -> Result<BandwidthThresholds, ElasticError> {
    let mut out = BandwidthThresholds {
        tau_wl: 0.0,
        tau_wh: 0.0,
        std_devs: Vec::new(),
        chosen_low: Vec::new(),
        chosen_high: Vec::new(),
    };
    for (ci, p) in profiles.iter().enumerate() {
        let fail = |reason: &str| ElasticError::InsufficientProfile {
            camera: ci,
            reason: reason.to_string(),
        };
        if p.bitrates.is_empty() {
            return Err(fail("no bitrate options"));
        }
        if p.segments.len() < 2 {
            return Err(fail("need at least 2 profiling segments"));
        }
        if p.segments.iter().any(|s| s.len() != p.bitrates.len()) {
            return Err(fail("segment accuracy count does not match bitrate options"));
        }
        let top = p.bitrates.len() - 1;
        let sds: Vec<f64> = (0..p.bitrates.len())
            .map(|b| {
                let diffs: Vec<f64> = p.segments.iter().map(|s| s[top] - s[b]).collect();
                sample_std(&diffs)
            })
            .collect();
        let low = (0..p.bitrates.len())
            .rev()
            .find(|&b| sds[b] > cfg.sigma_high)
            .map_or(p.bitrates[0], |b| p.bitrates[b]);
        let high = (0..p.bitrates.len())
            .find(|&b| sds[b] < cfg.sigma_low)
            .map_or(p.bitrates[top], |b| p.bitrates[b]);
        out.tau_wl += f64::from(low);
        out.tau_wh += f64::from(high);
        out.chosen_low.push(low);
        out.chosen_high.push(high);
        out.std_devs.push(sds);
    }
    if out.tau_wl > out.tau_wh {
        log::warn!(
            "bandwidth thresholds inverted: tau_wl {} > tau_wh {}",
            out.tau_wl,
            out.tau_wh
        );
    }
    Ok(out)
}

/// A camera's profile together with the per-segment ROI area ratios it was
/// built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfiledCamera {
    pub camera: String,
    pub profile: CameraProfile,
    pub segment_a: Vec<f64>,
}

/// Groups profiling rows into segments. The CSV has no segment column, so a
/// segment is identified by its exact `(camera, a, c)` triple; accuracy is
/// maximised over resolution. Cameras and segments keep first-appearance
/// order.
pub fn profiles_from_rows(rows: &[ProfilingRow]) -> Result<Vec<ProfiledCamera>, ElasticError> {
    let mut cameras: Vec<(String, Vec<(u64, u64)>, Vec<BTreeMap<u32, f64>>)> = Vec::new();
    for row in rows {
        let ci = match cameras.iter().position(|c| c.0 == row.camera) {
            Some(i) => i,
            None => {
                cameras.push((row.camera.clone(), Vec::new(), Vec::new()));
                cameras.len() - 1
            }
        };
        let b = row.bitrate_kbps;
        if !(b >= 1.0 && b.fract() == 0.0 && b <= f64::from(u32::MAX)) {
            return Err(ElasticError::InsufficientProfile {
                camera: ci,
                reason: format!("bitrate {b} is not a positive integer kbps value"),
            });
        }
        let key = (row.a.to_bits(), row.c.to_bits());
        let (_, keys, segs) = &mut cameras[ci];
        let si = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                segs.push(BTreeMap::new());
                keys.len() - 1
            }
        };
        let slot = segs[si].entry(b as u32).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(row.accuracy);
    }
    cameras
        .into_iter()
        .enumerate()
        .map(|(ci, (camera, keys, segs))| {
            let mut bitrates: Vec<u32> = segs.iter().flat_map(|s| s.keys().copied()).collect();
            bitrates.sort_unstable();
            bitrates.dedup();
            let segments = segs
                .iter()
                .map(|s| {
                    bitrates
                        .iter()
                        .map(|b| s.get(b).copied())
                        .collect::<Option<Vec<f64>>>()
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| ElasticError::InsufficientProfile {
                    camera: ci,
                    reason: format!("{camera}: some segment lacks a bitrate option"),
                })?;
            Ok(ProfiledCamera {
                camera,
                profile: CameraProfile { bitrates, segments },
                segment_a: keys.iter().map(|k| f64::from_bits(k.0)).collect(),
            })
        })
        .collect()
}

/// Sum of per-camera ROI areas for each profiling segment index shared by
/// all cameras, used to warm-start the area average.
pub fn profile_area_history(cameras: &[ProfiledCamera]) -> Vec<f64> {
    let n = cameras.iter().map(|c| c.segment_a.len()).min().unwrap_or(0);
    (0..n)
        .map(|s| cameras.iter().map(|c| c.segment_a[s]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ElasticConfig {
        ElasticConfig::default()
    }

    #[test]
    fn alpha_one_tracks_latest() {
        let c = ElasticConfig { alpha: 1.0, ..cfg() };
        let mut s = ElasticState::new(0.0, 0.0, 10.0);
        for a in [0.2, 0.9, 0.4] {
            s = ema_update(s, a, &c);
            assert_eq!(s.ema_a, a);
        }
    }

    #[test]
    fn half_alpha_step() {
        let c = ElasticConfig { alpha: 0.5, ..cfg() };
        let s = ema_update(ElasticState::new(0.0, 0.0, 10.0).with_ema(0.4), 0.8, &c);
        assert!((s.ema_a - 0.6).abs() < 1e-15);
    }

    #[test]
    fn constant_stream_has_zero_spread() {
        let mut s = ElasticState::new(0.0, 0.0, 10.0);
        for _ in 0..100 {
            s = ema_update(s, 0.3, &cfg());
        }
        assert!(s.stats.std_dev() < 1e-12);
        assert!((s.tau_a - 0.3).abs() < 1e-12);
    }

    #[test]
    fn windowed_spread_forgets() {
        let c = ElasticConfig {
            sigma_window: Some(3),
            ..cfg()
        };
        let mut s = ElasticState::new(0.0, 0.0, 10.0);
        for a in [5.0, 0.0, 1.0, 1.0, 1.0] {
            s = ema_update(s, a, &c);
        }
        assert_eq!(s.stats.std_dev(), 0.0);
        s = ema_update(s, 3.0, &c);
        assert!(s.stats.std_dev() > 0.0);
    }

    fn armed(tau_a: f64, tau_wl: f64, tau_wh: f64, cap: f64, used: f64) -> ElasticState {
        let mut s = ElasticState::new(tau_wl, tau_wh, cap);
        s.tau_a = tau_a;
        s.budget_used = used;
        s
    }

    #[test]
    fn no_borrow_below_area_threshold() {
        let (adj, s) = elastic_adjust(armed(0.5, 800.0, 1000.0, 1e6, 0.0), 0.5, 100.0, &cfg());
        assert_eq!(adj.d_kbit, 0.0);
        assert_eq!(adj.effective_budget_kbps, 100.0);
        assert_eq!(s.budget_used, 0.0);
    }

    #[test]
    fn borrow_formula() {
        let (adj, s) = elastic_adjust(armed(0.5, 800.0, 1000.0, 1e6, 0.0), 0.6, 600.0, &cfg());
        assert_eq!(adj.d_kbit, 200.0);
        assert_eq!(adj.effective_budget_kbps, 800.0);
        assert_eq!(s.budget_used, 200.0);
    }

    #[test]
    fn borrow_respects_slot_length() {
        let c = ElasticConfig {
            slot_length: 2.0,
            gamma_wl: 0.5,
            ..cfg()
        };
        let (adj, _) = elastic_adjust(armed(0.5, 800.0, 1000.0, 1e6, 0.0), 0.6, 600.0, &c);
        assert_eq!(adj.d_kbit, 200.0);
        assert_eq!(adj.effective_budget_kbps, 700.0);
    }

    #[test]
    fn saturated_budget_blocks_borrowing() {
        let (adj, s) = elastic_adjust(armed(0.5, 800.0, 1000.0, 300.0, 300.0), 0.6, 600.0, &cfg());
        assert_eq!(adj.d_kbit, 0.0);
        assert_eq!(s.budget_used, 300.0);
        let (adj, s) = elastic_adjust(armed(0.5, 800.0, 1000.0, 300.0, 250.0), 0.6, 600.0, &cfg());
        assert_eq!(adj.d_kbit, 50.0);
        assert_eq!(s.budget_used, 300.0);
    }

    #[test]
    fn repay_limited_by_debt() {
        let (adj, s) = elastic_adjust(armed(0.5, 800.0, 1000.0, 1e6, 150.0), 0.1, 1200.0, &cfg());
        assert_eq!(adj.d_kbit, -150.0);
        assert_eq!(adj.effective_budget_kbps, 1050.0);
        assert_eq!(s.budget_used, 0.0);
        let (adj, s) = elastic_adjust(armed(0.5, 800.0, 1000.0, 1e6, 500.0), 0.1, 1200.0, &cfg());
        assert_eq!(adj.d_kbit, -200.0);
        assert_eq!(s.budget_used, 300.0);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(ElasticConfig { alpha: 0.0, ..cfg() }.validate().is_err());
        assert!(ElasticConfig { sigma_low: 0.1, sigma_high: 0.05, ..cfg() }.validate().is_err());
        assert!(ElasticConfig { budget_cap: Some(-1.0), ..cfg() }.validate().is_err());
        assert_eq!(cfg().resolved_cap(1134.0), 2268.0);
    }

    #[test]
    fn flat_profile_falls_back_to_smallest_options() {
        let p = CameraProfile {
            bitrates: vec![50, 100, 200],
            segments: vec![vec![0.7; 3]; 4],
        };
        let t = compute_bandwidth_thresholds(&[p.clone(), p], &cfg()).unwrap();
        assert_eq!(t.tau_wl, 100.0);
        assert_eq!(t.tau_wh, 100.0);
    }

    #[test]
    fn one_camera_two_bitrates_by_hand() {
        // diffs at 50 kbps: 0.9-0.5=0.4, 0.8-0.7=0.1 -> mean .25, sample sd
        // sqrt(((.15)^2 + (.15)^2) / 1) = 0.212132
        let p = CameraProfile {
            bitrates: vec![50, 100],
            segments: vec![vec![0.5, 0.9], vec![0.7, 0.8]],
        };
        let t = compute_bandwidth_thresholds(&[p], &cfg()).unwrap();
        assert!((t.std_devs[0][0] - 0.212_132_034_355_964_26).abs() < 1e-12);
        assert_eq!(t.std_devs[0][1], 0.0);
        assert_eq!(t.tau_wl, 50.0);
        assert_eq!(t.tau_wh, 100.0);
    }

    #[test]
    fn insufficient_profiles() {
        let p = CameraProfile {
            bitrates: vec![50, 100],
            segments: vec![vec![0.5, 0.9]],
        };
        assert!(matches!(
            compute_bandwidth_thresholds(&[p], &cfg()),
            Err(ElasticError::InsufficientProfile { camera: 0, .. })
        ));
    }

    #[test]
    fn profiles_group_by_segment_and_max_over_resolution() {
        let row = |cam: &str, a: f64, b: f64, r: u32, acc: f64| ProfilingRow {
            camera: cam.into(),
            a,
            c: 0.5,
            bitrate_kbps: b,
            resolution: r,
            accuracy: acc,
        };
        let rows = vec![
            row("y", 0.2, 100.0, 0, 0.3),
            row("y", 0.2, 100.0, 1, 0.4),
            row("y", 0.2, 50.0, 0, 0.1),
            row("y", 0.3, 50.0, 0, 0.2),
            row("y", 0.3, 100.0, 0, 0.5),
            row("x", 0.1, 50.0, 0, 0.6),
        ];
        let p = profiles_from_rows(&rows).unwrap();
        assert_eq!(p[0].camera, "y");
        assert_eq!(p[0].profile.bitrates, vec![50, 100]);
        assert_eq!(p[0].profile.segments, vec![vec![0.1, 0.4], vec![0.2, 0.5]]);
        assert_eq!(p[0].segment_a, vec![0.2, 0.3]);
        assert_eq!(profile_area_history(&p), vec![0.2 + 0.1]);

        let mut gappy = rows.clone();
        gappy.push(row("y", 0.4, 50.0, 0, 0.2));
        assert!(profiles_from_rows(&gappy).is_err());
        gappy.pop();
        gappy.push(row("y", 0.2, 75.5, 0, 0.2));
        assert!(profiles_from_rows(&gappy).is_err());
    }
}
