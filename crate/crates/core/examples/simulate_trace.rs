//! One simulated run of the elastic scheduler on a low-bandwidth trace,
//! with models learned from the scenario's profiling data.
//!
//!     cargo run --release --example simulate_trace

use roistream::elastic::ElasticConfig;
use roistream::sim::{
    generate_synthetic_scenario, generate_trace, run_simulation, Scheduler, SimConfig, TraceProfile, UtilitySource,
    WeightPreset, WeightSpec,
};
use roistream::utility::io::group_by_camera;
use roistream::utility::{train_per_camera, TrainConfig};

fn main() -> anyhow::Result<()> {
    let cfg = SimConfig {
        scheduler: Scheduler::DpElastic,
        weights: WeightSpec::Preset(WeightPreset::Set2),
        horizon: 120,
        ..SimConfig::default()
    };
    let scenario = generate_synthetic_scenario(11, 5, cfg.horizon);
    let trace = generate_trace(11, TraceProfile::Low, cfg.horizon);
    let (models, _) = train_per_camera(&group_by_camera(&scenario.profiling), &TrainConfig::default())?;
    let report = run_simulation(&cfg, &trace, &scenario, &UtilitySource::Learned(models), &ElasticConfig::default())?;

    if let Some(th) = &report.thresholds {
        println!("tau_wl {} kbps, tau_wh {} kbps", th.tau_wl, th.tau_wh);
    }
    println!("mean segment utility {:.4}", report.mean_utility);
    for (id, acc) in report.camera_ids.iter().zip(&report.per_camera_mean_accuracy) {
        println!("  {id}: mean accuracy {acc:.3}");
    }
    let b = &report.borrow;
    println!(
        "borrowed in {} slots ({:.0} kbit), repaid in {} slots ({:.0} kbit)",
        b.borrow_slots, b.total_borrowed_kbit, b.repay_slots, b.total_repaid_kbit
    );
    for r in report.records.iter().filter(|r| r.d_kbit != 0.0) {
        println!(
            "  slot {:>3}: W {:>6.0}  D {:>+7.1}  sent {:>5}  utility {:.3}",
            r.slot, r.bandwidth_kbps, r.d_kbit, r.total_bitrate, r.realized_utility
        );
    }
    Ok(())
}
