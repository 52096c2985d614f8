//! Content-aware bandwidth scheduling for co-located analytics cameras.
//!
//! The crate is organised along the server/camera pipeline:
//!
//! - [`roidet`]: block-based Regions-of-Interest detection on grayscale
//!   segments (Canny edges, edge differencing, block motion flags,
//!   connected-component boxes).
//! - [`utility`]: a small two-layer regression network that predicts
//!   detection F1 from `(area ratio, confidence, bitrate, resolution)`.
//! - [`allocation`]: per-slot multiple-choice knapsack over bitrate options,
//!   plus the fair-share and content-agnostic baselines.
//! - [`elastic`]: borrow/repay adjustment of the per-slot budget driven by ROI
//!   area and bandwidth thresholds.
//! - [`sim`]: trace-driven slot simulator and scheduler comparison.
//! - [`cli`]: the `roistream` command line front end.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod allocation;
pub mod cli;
pub mod elastic;
pub mod fsutil;
pub mod roidet;
pub mod sim;
pub mod utility;
