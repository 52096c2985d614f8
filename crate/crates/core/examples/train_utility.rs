//! Fit per-camera utility models on a synthetic profiling set and inspect
//! the predicted accuracy tables.
//!
//!     cargo run --release --example train_utility

use roistream::sim::generate_synthetic_scenario;
use roistream::utility::io::group_by_camera;
use roistream::utility::{tabulate_utility, train_per_camera, TrainConfig};

fn main() -> anyhow::Result<()> {
    let scenario = generate_synthetic_scenario(3, 2, 1);
    let (models, mse) = train_per_camera(&group_by_camera(&scenario.profiling), &TrainConfig::default())?;
    for (camera, model) in &models {
        println!("{camera}: train mse {:.5}", mse[camera]);
        for (a, c) in [(0.1, 0.8), (0.5, 0.8)] {
            let table = tabulate_utility(model, a, c, &scenario.bitrates, &scenario.resolutions);
            println!("  a = {a}, c = {c}");
            for (b, row) in scenario.bitrates.iter().zip(&table) {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
                println!("    {b:>5} kbps  {}", cells.join("  "));
            }
        }
    }
    Ok(())
}
