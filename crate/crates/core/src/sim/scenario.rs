use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::fsutil::write_atomic;
use crate::utility::io::{read_profiling_csv, write_profiling_csv, ProfilingRow};
use crate::utility::UtilityTable;

pub const DEFAULT_BITRATES: [u32; 6] = [50, 100, 200, 400, 800, 1000];
pub const DEFAULT_RESOLUTIONS: [u32; 3] = [0, 1, 2];
pub const DEFAULT_PROFILING_SLOTS: usize = 80;

pub const FEATURES_FILE: &str = "features.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const PROFILING_FILE: &str = "profiling.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotFeatures {
    pub a: f64,
    pub c: f64,
}

/// Per-slot content features of one camera and the accuracy each
/// configuration would actually achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStream {
    pub camera_id: String,
    pub features: Vec<SlotFeatures>,
    /// `ground_truth[slot][bitrate][resolution]`
    pub ground_truth: Vec<UtilityTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub bitrates: Vec<u32>,
    pub resolutions: Vec<u32>,
    pub streams: Vec<FeatureStream>,
    /// Offline profiling data, disjoint from the simulated slots.
    pub profiling: Vec<ProfilingRow>,
}

impl Scenario {
    pub fn horizon(&self) -> usize {
        self.streams.first().map_or(0, |s| s.features.len())
    }

    pub fn camera_ids(&self) -> Vec<String> {
        self.streams.iter().map(|s| s.camera_id.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.streams.is_empty(), "scenario has no cameras");
        ensure!(!self.bitrates.is_empty(), "scenario has no bitrate options");
        ensure!(!self.resolutions.is_empty(), "scenario has no resolution options");
        let n = self.horizon();
        for s in &self.streams {
            ensure!(
                s.features.len() == n && s.ground_truth.len() == n,
                "camera {}: stream lengths differ from {n}",
                s.camera_id
            );
            for (t, f) in s.features.iter().enumerate() {
                ensure!(
                    (0.0..=1.0).contains(&f.a) && (0.0..=1.0).contains(&f.c),
                    "camera {} slot {t}: features out of [0, 1]",
                    s.camera_id
                );
            }
            for (t, table) in s.ground_truth.iter().enumerate() {
                ensure!(
                    table.len() == self.bitrates.len()
                        && table.iter().all(|r| r.len() == self.resolutions.len()),
                    "camera {} slot {t}: ground-truth table has wrong shape",
                    s.camera_id
                );
                ensure!(
                    table.iter().flatten().all(|v| (0.0..=1.0).contains(v)),
                    "camera {} slot {t}: accuracy out of [0, 1]",
                    s.camera_id
                );
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub cameras: usize,
    pub horizon: usize,
    pub profiling_slots: usize,
    pub bitrates: Vec<u32>,
    pub resolutions: Vec<u32>,
}

impl ScenarioSpec {
    pub fn new(seed: u64, cameras: usize, horizon: usize) -> Self {
        Self {
            seed,
            cameras,
            horizon,
            profiling_slots: DEFAULT_PROFILING_SLOTS,
            bitrates: DEFAULT_BITRATES.to_vec(),
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
        }
    }
}

/// Fixed per-camera traits of the synthetic world.
#[derive(Debug, Clone, Copy)]
struct CameraTraits {
    area_bias: f64,
    area_gain: f64,
    base_confidence: f64,
    /// kbps at which a low-area scene reaches ~63% of its ceiling.
    demand_kbps: f64,
}

impl CameraTraits {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Self {
            area_bias: rng.random_range(-1.2..0.2),
            area_gain: rng.random_range(1.3..2.0),
            base_confidence: rng.random_range(0.5..0.85),
            demand_kbps: rng.random_range(30.0..90.0),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Saturating in bitrate, slower to saturate for larger ROI area, with the
/// ceiling raised by detector confidence and by resolution.
fn true_accuracy(cam: &CameraTraits, f: SlotFeatures, bitrate: u32, res_frac: f64, quality: f64) -> f64 {
    let ceiling = (0.78 + 0.22 * res_frac) * (0.55 + 0.45 * f.c);
    let scale = cam.demand_kbps * (0.5 + res_frac) * (1.0 + 5.0 * f.a);
    let acc = quality * ceiling * (1.0 - (-f64::from(bitrate) / scale).exp());
    acc.clamp(0.0, 1.0)
}

/// Correlated multi-camera world with default bitrate/resolution options.
pub fn generate_synthetic_scenario(seed: u64, cameras: usize, horizon: usize) -> Scenario {
    generate_scenario(&ScenarioSpec::new(seed, cameras, horizon))
}

/// A shared AR(1) "traffic intensity" drives every camera's ROI area,
/// plus independent per-camera noise. The first `profiling_slots` slots
/// become the profiling CSV; the remaining `horizon` slots become the
/// feature streams.
pub fn generate_scenario(spec: &ScenarioSpec) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let traits: Vec<CameraTraits> = (0..spec.cameras).map(|_| CameraTraits::draw(&mut rng)).collect();
    let ids: Vec<String> = (0..spec.cameras).map(|i| format!("cam{i}")).collect();
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let res_frac: Vec<f64> = (0..spec.resolutions.len())
        .map(|j| {
            if spec.resolutions.len() > 1 {
                j as f64 / (spec.resolutions.len() - 1) as f64
            } else {
                1.0
            }
        })
        .collect();

    let rho: f64 = 0.9;
    let mut latent = normal(&mut rng);
    let mut profiling = Vec::new();
    let mut streams: Vec<FeatureStream> = ids
        .iter()
        .map(|id| FeatureStream {
            camera_id: id.clone(),
            features: Vec::with_capacity(spec.horizon),
            ground_truth: Vec::with_capacity(spec.horizon),
        })
        .collect();

    for t in 0..spec.profiling_slots + spec.horizon {
        for (i, cam) in traits.iter().enumerate() {
            let a = 0.02 + 0.78 * sigmoid(cam.area_bias + cam.area_gain * latent + 0.25 * normal(&mut rng));
            let c = (cam.base_confidence + 0.08 * normal(&mut rng) - 0.2 * (a - 0.3)).clamp(0.2, 0.95);
            let quality = (1.0 + 0.03 * normal(&mut rng)).clamp(0.9, 1.05);
            let f = SlotFeatures { a, c };
            let table: UtilityTable = spec
                .bitrates
                .iter()
                .map(|&b| res_frac.iter().map(|&rf| true_accuracy(cam, f, b, rf, quality)).collect())
                .collect();
            if t < spec.profiling_slots {
                for (bi, &b) in spec.bitrates.iter().enumerate() {
                    for (ri, &r) in spec.resolutions.iter().enumerate() {
                        profiling.push(ProfilingRow {
                            camera: ids[i].clone(),
                            a,
                            c,
                            bitrate_kbps: f64::from(b),
                            resolution: r,
                            accuracy: table[bi][ri],
                        });
                    }
                }
            } else {
                streams[i].features.push(f);
                streams[i].ground_truth.push(table);
            }
        }
        latent = rho * latent + (1.0 - rho * rho).sqrt() * normal(&mut rng);
    }

    Scenario {
        bitrates: spec.bitrates.clone(),
        resolutions: spec.resolutions.clone(),
        streams,
        profiling,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureRow {
    slot: usize,
    camera: String,
    a: f64,
    c: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GroundTruthRow {
    slot: usize,
    camera: String,
    bitrate: u32,
    resolution: u32,
    accuracy: f64,
}

pub fn write_features_csv(scenario: &Scenario, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in 0..scenario.horizon() {
        for s in &scenario.streams {
            let f = s.features[t];
            w.serialize(FeatureRow {
                slot: t,
                camera: s.camera_id.clone(),
                a: f.a,
                c: f.c,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ground_truth_csv(scenario: &Scenario, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in 0..scenario.horizon() {
        for s in &scenario.streams {
            for (bi, &bitrate) in scenario.bitrates.iter().enumerate() {
                for (ri, &resolution) in scenario.resolutions.iter().enumerate() {
                    w.serialize(GroundTruthRow {
                        slot: t,
                        camera: s.camera_id.clone(),
                        bitrate,
                        resolution,
                        accuracy: s.ground_truth[t][bi][ri],
                    })?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_rows<T: serde::de::DeserializeOwned>(reader: impl Read, what: &str) -> Result<Vec<T>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{what} row {}", i + 1)))
        .collect()
}

fn sorted_unique(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Rebuilds a scenario from its three CSVs. Cameras keep their order of
/// first appearance in the feature CSV.
pub fn read_scenario_csv(features: impl Read, ground_truth: impl Read, profiling: impl Read) -> Result<Scenario> {
    let feature_rows: Vec<FeatureRow> = csv_rows(features, "feature")?;
    let gt_rows: Vec<GroundTruthRow> = csv_rows(ground_truth, "ground-truth")?;
    let profiling = read_profiling_csv(profiling)?;

    let mut order: Vec<String> = Vec::new();
    let mut feats: BTreeMap<String, BTreeMap<usize, SlotFeatures>> = BTreeMap::new();
    for r in feature_rows {
        if !feats.contains_key(&r.camera) {
            order.push(r.camera.clone());
        }
        let slots = feats.entry(r.camera.clone()).or_default();
        if slots.insert(r.slot, SlotFeatures { a: r.a, c: r.c }).is_some() {
            bail!("feature CSV: duplicate row for camera {} slot {}", r.camera, r.slot);
        }
    }
    ensure!(!order.is_empty(), "feature CSV has no rows");

    let bitrates = sorted_unique(gt_rows.iter().map(|r| r.bitrate).collect());
    let resolutions = sorted_unique(gt_rows.iter().map(|r| r.resolution).collect());
    let horizon = feats[&order[0]].len();
    let mut tables: BTreeMap<&str, Vec<Vec<Vec<Option<f64>>>>> = order
        .iter()
        .map(|id| {
            (
                id.as_str(),
                vec![vec![vec![None; resolutions.len()]; bitrates.len()]; horizon],
            )
        })
        .collect();
    for r in &gt_rows {
        let per_cam = tables
            .get_mut(r.camera.as_str())
            .with_context(|| format!("ground-truth CSV: camera {} has no features", r.camera))?;
        ensure!(r.slot < horizon, "ground-truth CSV: slot {} beyond horizon {horizon}", r.slot);
        let bi = bitrates.binary_search(&r.bitrate).unwrap_or_default();
        let ri = resolutions.binary_search(&r.resolution).unwrap_or_default();
        let cell = &mut per_cam[r.slot][bi][ri];
        ensure!(
            cell.is_none(),
            "ground-truth CSV: duplicate row for camera {} slot {}",
            r.camera,
            r.slot
        );
        *cell = Some(r.accuracy);
    }

    let mut streams = Vec::with_capacity(order.len());
    for id in &order {
        let slots = &feats[id];
        ensure!(
            slots.len() == horizon && slots.keys().copied().eq(0..horizon),
            "feature CSV: camera {id} must cover slots 0..{horizon} exactly"
        );
        let ground_truth = tables
            .remove(id.as_str())
            .unwrap_or_default()
            .into_iter()
            .enumerate()
            .map(|(t, table)| {
                table
                    .into_iter()
                    .map(|row| row.into_iter().collect::<Option<Vec<f64>>>())
                    .collect::<Option<UtilityTable>>()
                    .with_context(|| format!("ground-truth CSV: camera {id} slot {t} is incomplete"))
            })
            .collect::<Result<Vec<_>>>()?;
        streams.push(FeatureStream {
            camera_id: id.clone(),
            features: slots.values().copied().collect(),
            ground_truth,
        });
    }
    let scenario = Scenario {
        bitrates,
        resolutions,
        streams,
        profiling,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn read_scenario_dir(dir: &Path) -> Result<Scenario> {
    let open = |name: &str| {
        let p = dir.join(name);
        std::fs::File::open(&p).with_context(|| format!("opening {}", p.display()))
    };
    read_scenario_csv(open(FEATURES_FILE)?, open(GROUND_TRUTH_FILE)?, open(PROFILING_FILE)?)
        .with_context(|| format!("loading scenario from {}", dir.display()))
}

pub fn write_scenario_dir(scenario: &Scenario, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_atomic(&dir.join(FEATURES_FILE), |w| write_features_csv(scenario, w))?;
    write_atomic(&dir.join(GROUND_TRUTH_FILE), |w| write_ground_truth_csv(scenario, w))?;
    write_atomic(&dir.join(PROFILING_FILE), |w| write_profiling_csv(&scenario.profiling, w))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let s = generate_synthetic_scenario(9, 3, 20);
        s.validate().unwrap();
        assert_eq!(s.horizon(), 20);
        assert_eq!(s.camera_ids(), vec!["cam0", "cam1", "cam2"]);
        assert_eq!(s.profiling.len(), 3 * DEFAULT_PROFILING_SLOTS * 6 * 3);
        assert_eq!(s, generate_synthetic_scenario(9, 3, 20));
        assert_ne!(s, generate_synthetic_scenario(10, 3, 20));
    }

    #[test]
    fn csv_round_trip() {
        let s = generate_synthetic_scenario(2, 2, 5);
        let (mut f, mut g, mut p) = (Vec::new(), Vec::new(), Vec::new());
        write_features_csv(&s, &mut f).unwrap();
        write_ground_truth_csv(&s, &mut g).unwrap();
        write_profiling_csv(&s.profiling, &mut p).unwrap();
        assert!(f.starts_with(b"slot,camera,a,c\n"));
        assert!(g.starts_with(b"slot,camera,bitrate,resolution,accuracy\n"));
        assert_eq!(read_scenario_csv(&f[..], &g[..], &p[..]).unwrap(), s);
    }

    #[test]
    fn incomplete_ground_truth_rejected() {
        let s = generate_synthetic_scenario(2, 1, 2);
        let (mut f, mut g) = (Vec::new(), Vec::new());
        write_features_csv(&s, &mut f).unwrap();
        write_ground_truth_csv(&s, &mut g).unwrap();
        let text = String::from_utf8(g).unwrap();
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        let prof = "camera,a,c,bitrate_kbps,resolution,accuracy\n";
        assert!(read_scenario_csv(&f[..], truncated.as_bytes(), prof.as_bytes()).is_err());
    }
}
