//! Profiling CSV and model JSON persistence.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use super::{ProfilingSample, UtilityModel, UtilityModels};

/// One line of `camera,a,c,bitrate_kbps,resolution,accuracy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilingRow {
    pub camera: String,
    pub a: f64,
    pub c: f64,
    pub bitrate_kbps: f64,
    pub resolution: u32,
    pub accuracy: f64,
}

impl ProfilingRow {
    pub fn sample(&self) -> ProfilingSample {
        ProfilingSample {
            a: self.a,
            c: self.c,
            bitrate_kbps: self.bitrate_kbps,
            resolution: self.resolution,
            accuracy: self.accuracy,
        }
    }
}

pub fn read_profiling_csv(reader: impl Read) -> Result<Vec<ProfilingRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("profiling row {}", i + 1)))
        .collect()
}

pub fn write_profiling_csv(rows: &[ProfilingRow], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn group_by_camera(rows: &[ProfilingRow]) -> BTreeMap<String, Vec<ProfilingSample>> {
    let mut out: BTreeMap<String, Vec<ProfilingSample>> = BTreeMap::new();
    for r in rows {
        out.entry(r.camera.clone()).or_default().push(r.sample());
    }
    out
}

pub fn model_to_json(model: &UtilityModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(model)?)
}

pub fn model_from_json(text: &str) -> Result<UtilityModel> {
    let model: UtilityModel = serde_json::from_str(text).context("parsing utility model")?;
    model.validate()?;
    Ok(model)
}

/// Loads every `<camera>.json` in `dir`.
pub fn load_models(dir: &Path) -> Result<UtilityModels> {
    let mut models = UtilityModels::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let Some(camera) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if camera == "training_report" {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let model = model_from_json(&text).with_context(|| format!("loading {}", path.display()))?;
        models.insert(camera.to_string(), model);
    }
    Ok(models)
}
