//! One slot of bitrate allocation for three cameras, comparing the exact
//! knapsack solution with the fair-share baseline across budgets.
//!
//!     cargo run --example allocate_bandwidth

use roistream::allocation::{allocate_dp, allocate_fair, CameraOptions, DpParams};

fn main() -> anyhow::Result<()> {
    let bitrates = vec![50, 100, 200, 400, 800, 1000];
    // [bitrate][resolution]; a busy intersection, an empty corridor, a
    // parking lot with a few slow objects
    let busy = vec![
        vec![0.10, 0.05],
        vec![0.22, 0.15],
        vec![0.41, 0.36],
        vec![0.60, 0.63],
        vec![0.71, 0.82],
        vec![0.73, 0.86],
    ];
    let quiet = vec![
        vec![0.70, 0.60],
        vec![0.80, 0.76],
        vec![0.84, 0.85],
        vec![0.85, 0.88],
        vec![0.85, 0.89],
        vec![0.85, 0.89],
    ];
    let parking = vec![
        vec![0.35, 0.20],
        vec![0.52, 0.41],
        vec![0.66, 0.62],
        vec![0.74, 0.77],
        vec![0.77, 0.83],
        vec![0.78, 0.84],
    ];
    let cameras = vec![
        CameraOptions::new("intersection", 1.92, bitrates.clone(), vec![0, 1], busy),
        CameraOptions::new("corridor", 0.38, bitrates.clone(), vec![0, 1], quiet),
        CameraOptions::new("parking", 0.84, bitrates, vec![0, 1], parking),
    ];
    let params = DpParams::for_cameras(&cameras)?;
    println!("quantum d = {} kbps", params.quantum);
    for budget in [300.0, 600.0, 1200.0, 2400.0] {
        let dp = allocate_dp(&cameras, budget, params)?;
        let fair = allocate_fair(&cameras, budget)?;
        let show = |d: &roistream::allocation::AllocationDecision| {
            d.assignments
                .iter()
                .map(|a| format!("{}={}", a.camera_id, a.bitrate))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!("W = {budget:>6} kbps");
        println!("  dp   utility {:.3}  [{}]", dp.total_utility, show(&dp));
        println!("  fair utility {:.3}  [{}]", fair.total_utility, show(&fair));
    }
    Ok(())
}
