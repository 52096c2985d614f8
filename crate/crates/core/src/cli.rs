//! The `roistream` command line.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors.
//! Errors go to stderr prefixed with `error:`. Every output file is written
//! to a temp file and renamed into place. The log level is read from
//! `ROISTREAM_LOG` (default `warn`).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::allocation::{allocate_content_agnostic, allocate_dp, allocate_fair, AllocationDecision, CameraOptions, DpParams};
use crate::elastic::{compute_bandwidth_thresholds, profiles_from_rows, BandwidthThresholds, ElasticConfig};
use crate::fsutil::{write_atomic, write_atomic_bytes};
use crate::roidet::io::{load_frames, read_oracle_csv, write_roi_csv};
use crate::roidet::{detect_segments, OracleDetector, RoidetParams};
use crate::sim::scenario::ScenarioSpec;
use crate::sim::{
    compare_schedulers, generate_scenario, generate_trace, read_scenario_dir, read_trace_csv, run_simulation,
    write_comparison_csv, write_scenario_dir, write_slot_records_csv, write_trace_csv, BandwidthTrace,
    ExperimentConfig, Scenario, Scheduler, SimReport, TraceProfile, UtilityMode, UtilitySource, WeightPreset,
    WeightSpec,
};
use crate::utility::io::{group_by_camera, load_models, model_to_json, read_profiling_csv};
use crate::utility::{train_per_camera, TrainConfig, UtilityModels};

pub const LOG_ENV: &str = "ROISTREAM_LOG";

#[derive(Debug, Parser)]
#[command(name = "roistream", version, about = "Content-aware bandwidth scheduling for co-located cameras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect ROIs on a directory of P5 PGM frames.
    Detect(DetectArgs),
    /// Train one utility model per camera from a profiling CSV.
    Profile(ProfileArgs),
    /// Compute the elastic bandwidth thresholds from a profiling CSV.
    Thresholds(ThresholdsArgs),
    /// Solve one slot's bitrate allocation.
    Allocate(AllocateArgs),
    /// Run one scheduler over a trace and scenario.
    Simulate(SimulateArgs),
    /// Run all four schedulers over one or more traces.
    Compare(CompareArgs),
    /// Write a synthetic scenario directory.
    GenerateScenario(GenerateScenarioArgs),
    /// Write a synthetic bandwidth trace CSV.
    GenerateTrace(GenerateTraceArgs),
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Directory of `.pgm` frames, processed in lexicographic order.
    #[arg(long)]
    frames: PathBuf,
    /// Oracle detections CSV (`frame,x,y,w,h,confidence`).
    #[arg(long)]
    oracle: PathBuf,
    /// RoidetParams JSON; defaults apply when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    frames_per_segment: usize,
    /// ROI CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Profiling CSV (`camera,a,c,bitrate_kbps,resolution,accuracy`).
    #[arg(long)]
    data: PathBuf,
    /// TrainConfig JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model directory; receives `<camera>.json` and `training_report.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ThresholdsArgs {
    #[arg(long)]
    data: PathBuf,
    /// ElasticConfig JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Thresholds report JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum AllocMode {
    Dp,
    Fair,
    Agnostic,
}

#[derive(Debug, Args)]
struct AllocateArgs {
    /// JSON `{"cameras": [...]}` with per-camera options and tables.
    #[arg(long)]
    tables: PathBuf,
    /// Available bandwidth W, kbps.
    #[arg(long)]
    budget: f64,
    #[arg(long, value_enum, default_value = "dp")]
    mode: AllocMode,
    /// Decision JSON to write; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// ExperimentConfig JSON (simulation, elastic and training settings).
    #[arg(long)]
    config: PathBuf,
    /// `synthetic:<seed>` or a scenario directory with features.csv,
    /// ground_truth.csv and profiling.csv.
    #[arg(long)]
    scenario: String,
    /// Directory of trained `<camera>.json` models; models are trained from
    /// the scenario's profiling data when omitted in learned mode.
    #[arg(long)]
    models: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    /// `ones`, `set2`, or a comma-separated list.
    #[arg(long)]
    weights: Option<String>,
    /// `learned` or `ground_truth`.
    #[arg(long)]
    utility: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// `profile:<low|medium|high>` or a `slot,kbps` CSV.
    #[arg(long)]
    trace: String,
    /// Overrides the config's scheduler.
    #[arg(long)]
    scheduler: Option<String>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Repeatable; defaults to the three generated profiles.
    #[arg(long)]
    trace: Vec<String>,
}

#[derive(Debug, Args)]
struct GenerateScenarioArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    cameras: usize,
    #[arg(long, default_value_t = 200)]
    horizon: usize,
    #[arg(long, default_value_t = crate::sim::scenario::DEFAULT_PROFILING_SLOTS)]
    profiling_slots: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenerateTraceArgs {
    #[arg(long)]
    profile: TraceProfile,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    horizon: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Detect(a) => detect(a),
        Command::Profile(a) => profile(a),
        Command::Thresholds(a) => thresholds(a),
        Command::Allocate(a) => allocate(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
        Command::GenerateScenario(a) => {
            let spec = ScenarioSpec {
                profiling_slots: a.profiling_slots,
                ..ScenarioSpec::new(a.seed, a.cameras, a.horizon)
            };
            if spec.cameras == 0 {
                bail!("--cameras must be at least 1");
            }
            write_scenario_dir(&generate_scenario(&spec), &a.out)
        }
        Command::GenerateTrace(a) => {
            let trace = generate_trace(a.seed, a.profile, a.horizon);
            write_atomic(&a.out, |w| write_trace_csv(&trace, w))
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_json_or_default<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic_bytes(path, text.as_bytes())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn detect(a: DetectArgs) -> Result<()> {
    let params: RoidetParams = read_json_or_default(a.params.as_deref())?;
    params.validate()?;
    let frames = load_frames(&a.frames)?;
    let oracle = OracleDetector::new(read_oracle_csv(open(&a.oracle)?)?);
    let reports = detect_segments(&frames, a.frames_per_segment, &oracle, &params)?;
    log::info!("{} segments from {} frames", reports.len(), frames.len());
    write_atomic(&a.out, |w| write_roi_csv(&reports, w))
}

#[derive(Debug, Serialize)]
struct TrainingReport {
    config: TrainConfig,
    cameras: BTreeMap<String, CameraTraining>,
}

#[derive(Debug, Serialize)]
struct CameraTraining {
    samples: usize,
    train_mse: f64,
}

fn save_models(models: &UtilityModels, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    for (camera, model) in models {
        if camera.contains(['/', '\\']) || camera == "training_report" || camera.starts_with('.') {
            bail!("camera id {camera:?} cannot be used as a model file name");
        }
        let mut text = model_to_json(model)?;
        text.push('\n');
        write_atomic_bytes(&dir.join(format!("{camera}.json")), text.as_bytes())?;
    }
    Ok(())
}

fn profile(a: ProfileArgs) -> Result<()> {
    let cfg: TrainConfig = read_json_or_default(a.config.as_deref())?;
    let rows = read_profiling_csv(open(&a.data)?)?;
    let grouped = group_by_camera(&rows);
    if grouped.is_empty() {
        bail!("{}: no profiling rows", a.data.display());
    }
    let (models, mse) = train_per_camera(&grouped, &cfg)?;
    save_models(&models, &a.out)?;
    let report = TrainingReport {
        config: cfg,
        cameras: grouped
            .iter()
            .map(|(c, s)| {
                (
                    c.clone(),
                    CameraTraining {
                        samples: s.len(),
                        train_mse: mse[c],
                    },
                )
            })
            .collect(),
    };
    write_json(&a.out.join("training_report.json"), &report)
}

#[derive(Debug, Serialize)]
struct ThresholdReport {
    cameras: Vec<String>,
    #[serde(flatten)]
    thresholds: BandwidthThresholds,
}

fn thresholds(a: ThresholdsArgs) -> Result<()> {
    let cfg: ElasticConfig = read_json_or_default(a.config.as_deref())?;
    cfg.validate()?;
    let profiled = profiles_from_rows(&read_profiling_csv(open(&a.data)?)?)?;
    if profiled.is_empty() {
        bail!("{}: no profiling rows", a.data.display());
    }
    let profiles: Vec<_> = profiled.iter().map(|p| p.profile.clone()).collect();
    let report = ThresholdReport {
        cameras: profiled.iter().map(|p| p.camera.clone()).collect(),
        thresholds: compute_bandwidth_thresholds(&profiles, &cfg)?,
    };
    write_json(&a.out, &report)
}

#[derive(Debug, Serialize, Deserialize)]
struct AllocateInput {
    cameras: Vec<CameraOptions>,
}

fn allocate(a: AllocateArgs) -> Result<()> {
    let input: AllocateInput = read_json(&a.tables)?;
    let params = || DpParams::for_cameras(&input.cameras);
    let decision: AllocationDecision = match a.mode {
        AllocMode::Dp => allocate_dp(&input.cameras, a.budget, params()?)?,
        AllocMode::Fair => allocate_fair(&input.cameras, a.budget)?,
        AllocMode::Agnostic => allocate_content_agnostic(&input.cameras, a.budget, params()?)?,
    };
    match &a.out {
        Some(p) => write_json(p, &decision),
        None => {
            println!("{}", serde_json::to_string_pretty(&decision)?);
            Ok(())
        }
    }
}

fn parse_weights(s: &str) -> Result<WeightSpec> {
    Ok(match s {
        "ones" => WeightSpec::Preset(WeightPreset::Ones),
        "set2" => WeightSpec::Preset(WeightPreset::Set2),
        list => WeightSpec::Explicit(
            list.split(',')
                .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad weight {x:?}")))
                .collect::<Result<_>>()?,
        ),
    })
}

/// Inputs shared by `simulate` and `compare`.
struct Prepared {
    cfg: ExperimentConfig,
    scenario: Scenario,
    utility: UtilitySource,
}

fn prepare(a: &RunArgs) -> Result<Prepared> {
    let mut cfg: ExperimentConfig = read_json(&a.config)?;
    if let Some(s) = a.seed {
        cfg.sim.seed = s;
    }
    if let Some(h) = a.horizon {
        cfg.sim.horizon = h;
    }
    if let Some(w) = &a.weights {
        cfg.sim.weights = parse_weights(w)?;
    }
    if let Some(u) = &a.utility {
        cfg.sim.utility = match u.as_str() {
            "learned" => UtilityMode::Learned,
            "ground_truth" => UtilityMode::GroundTruth,
            _ => bail!("--utility must be learned or ground_truth"),
        };
    }
    cfg.sim.validate()?;
    cfg.elastic.validate()?;

    let scenario = match a.scenario.strip_prefix("synthetic:") {
        Some(seed) => {
            let seed: u64 = seed.parse().with_context(|| format!("bad scenario seed {seed:?}"))?;
            generate_scenario(&ScenarioSpec {
                bitrates: cfg.sim.bitrates.clone(),
                resolutions: cfg.sim.resolutions.clone(),
                ..ScenarioSpec::new(seed, cfg.sim.cameras, cfg.sim.horizon)
            })
        }
        None => read_scenario_dir(Path::new(&a.scenario))?,
    };

    let utility = match cfg.sim.utility {
        UtilityMode::GroundTruth => UtilitySource::GroundTruth,
        UtilityMode::Learned => {
            let models = match &a.models {
                Some(dir) => load_models(dir)?,
                None => {
                    let grouped = group_by_camera(&scenario.profiling);
                    let (models, mse) = train_per_camera(&grouped, &cfg.train)?;
                    for (c, m) in &mse {
                        log::info!("trained {c}: mse {m:.6}");
                    }
                    models
                }
            };
            UtilitySource::Learned(models)
        }
    };
    Ok(Prepared { cfg, scenario, utility })
}

fn load_trace(spec: &str, seed: u64, horizon: usize) -> Result<BandwidthTrace> {
    match spec.strip_prefix("profile:") {
        Some(name) => Ok(generate_trace(seed, name.parse()?, horizon)),
        None => {
            let path = Path::new(spec);
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
            read_trace_csv(name, open(path)?).with_context(|| format!("loading trace {spec}"))
        }
    }
}

fn slot_file_name(report: &SimReport) -> String {
    format!("slots_{}_{}.csv", report.trace, report.scheduler.name().replace('+', "_"))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut p = prepare(&a.run)?;
    if let Some(s) = &a.scheduler {
        p.cfg.sim.scheduler = s.parse::<Scheduler>()?;
    }
    let trace = load_trace(&a.trace, p.cfg.sim.seed, p.cfg.sim.horizon)?;
    let report = run_simulation(&p.cfg.sim, &trace, &p.scenario, &p.utility, &p.cfg.elastic)?;
    create_dir(&a.run.out)?;
    write_json(&a.run.out.join("report.json"), &report)?;
    write_atomic(&a.run.out.join("slots.csv"), |w| write_slot_records_csv(&report, w))?;
    println!(
        "{} on {}: mean utility {:.6} over {} slots",
        report.scheduler, report.trace, report.mean_utility, report.horizon
    );
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let p = prepare(&a.run)?;
    let specs: Vec<String> = if a.trace.is_empty() {
        TraceProfile::ALL.iter().map(|t| format!("profile:{}", t.name())).collect()
    } else {
        a.trace.clone()
    };
    // Distinct seeds per generated trace, derived from the run seed.
    let traces = specs
        .iter()
        .enumerate()
        .map(|(i, s)| load_trace(s, p.cfg.sim.seed.wrapping_add(i as u64), p.cfg.sim.horizon))
        .collect::<Result<Vec<_>>>()?;
    let mut names: Vec<&str> = traces.iter().map(|t| t.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        bail!("trace names must be distinct");
    }
    let cmp = compare_schedulers(&p.cfg.sim, &traces, &p.scenario, &p.utility, &p.cfg.elastic)?;
    create_dir(&a.run.out)?;
    write_atomic(&a.run.out.join("comparison.csv"), |w| write_comparison_csv(&cmp.rows, w))?;
    for r in &cmp.reports {
        write_atomic(&a.run.out.join(slot_file_name(r)), |w| write_slot_records_csv(r, w))?;
    }
    for r in &cmp.rows {
        println!("{:<10} {:<11} {:.6}", r.trace, r.scheduler.name(), r.mean_utility);
    }
    Ok(())
}
