//! ROI detection on a synthetic segment: a car-sized block drives across a
//! textured road while a parked object is reported by an oracle detector.
//!
//!     cargo run --example detect_rois

use roistream::roidet::io::write_roi_csv;
use roistream::roidet::{detect_segments, Detection, FrameGray, OracleDetector, RoidetParams};

fn main() -> anyhow::Result<()> {
    let (w, h) = (320, 240);
    let frames: Vec<FrameGray> = (0..20)
        .map(|i| {
            let car_x = 20 + 12 * i;
            FrameGray::from_fn(w, h, |x, y| {
                if (car_x..car_x + 48).contains(&x) && (140..172).contains(&y) {
                    230
                } else if (250..290).contains(&x) && (40..90).contains(&y) {
                    160
                } else {
                    // faint lane markings
                    if y % 60 == 0 && x % 40 < 20 { 90 } else { 50 }
                }
            })
        })
        .collect::<Result<_, _>>()?;

    let oracle = OracleDetector::new([
        Detection { frame: 0, x: 248, y: 38, w: 44, h: 54, confidence: 0.91 },
        Detection { frame: 10, x: 248, y: 38, w: 44, h: 54, confidence: 0.87 },
    ]);
    let reports = detect_segments(&frames, 10, &oracle, &RoidetParams::default())?;
    for r in &reports {
        println!(
            "segment {}: {} stationary, {} moving, a = {:.4}, c = {:.2}",
            r.segment,
            r.rois.stationary.len(),
            r.rois.moving.len(),
            r.area_ratio,
            r.confidence
        );
        for b in &r.rois.moving {
            println!("  moving box x={} y={} w={} h={}", b.x, b.y, b.w, b.h);
        }
    }
    println!();
    write_roi_csv(&reports, std::io::stdout())?;
    Ok(())
}
