//! All four schedulers on the three bandwidth profiles, averaged over a few
//! scenario seeds, with the ground truth injected as the utility model.
//!
//!     cargo run --release --example compare_schedulers

use roistream::elastic::ElasticConfig;
use roistream::sim::{
    compare_schedulers, generate_synthetic_scenario, generate_trace, Scheduler, SimConfig, TraceProfile,
    UtilityMode, UtilitySource, WeightPreset, WeightSpec,
};

fn main() -> anyhow::Result<()> {
    let cfg = SimConfig {
        weights: WeightSpec::Preset(WeightPreset::Set2),
        utility: UtilityMode::GroundTruth,
        horizon: 200,
        ..SimConfig::default()
    };
    let seeds = 0..8u64;
    let mut sums = vec![[0.0; 4]; TraceProfile::ALL.len()];
    for seed in seeds.clone() {
        let scenario = generate_synthetic_scenario(seed, 5, cfg.horizon);
        let traces: Vec<_> = TraceProfile::ALL
            .iter()
            .map(|&p| generate_trace(seed * 10 + p as u64, p, cfg.horizon))
            .collect();
        let cmp = compare_schedulers(&cfg, &traces, &scenario, &UtilitySource::GroundTruth, &ElasticConfig::default())?;
        for (ti, t) in traces.iter().enumerate() {
            for (si, s) in Scheduler::ALL.iter().enumerate() {
                sums[ti][si] += cmp.mean_utility(&t.name, *s).unwrap_or(0.0);
            }
        }
    }
    let n = seeds.count() as f64;
    println!("{:<8} {:>10} {:>11} {:>10} {:>10}", "trace", "dp", "dp+elastic", "fair", "agnostic");
    for (p, row) in TraceProfile::ALL.iter().zip(&sums) {
        println!(
            "{:<8} {:>10.4} {:>11.4} {:>10.4} {:>10.4}",
            p.name(),
            row[0] / n,
            row[1] / n,
            row[2] / n,
            row[3] / n
        );
    }
    Ok(())
}
