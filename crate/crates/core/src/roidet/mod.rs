//! Regions-of-Interest detection for a segment of grayscale frames.
//!
//! Stationary objects come from an external detector (see
//! [`StationaryDetector`]); moving objects are found by differencing the
//! Canny edge maps of consecutive frames, flagging blocks whose changed-edge
//! count exceeds a threshold, and boxing the 8-connected flag components.

mod canny;
mod components;
pub mod io;
mod motion;
mod segment;
mod types;

pub use canny::canny_edges;
pub use components::connected_components;
pub use motion::{accumulate_motion, block_motion, edge_difference, BlockLayout};
pub use segment::{
    detect_segments, mean_confidence, roi_area_ratio, roidet_segment, Detection, OracleDetector,
    SegmentReport, StationaryDetector,
};
pub use types::{BlockGrid, BoundingBox, EdgeMap, FrameGray, RoiSet, RoidetParams};

use thiserror::Error;

/// Smallest accepted frame side, in pixels.
pub const MIN_FRAME_SIDE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoidetError {
    #[error("frame {width}x{height} is smaller than the {min}x{min} minimum")]
    DimensionTooSmall { width: usize, height: usize, min: usize },
    #[error("pixel buffer has {actual} values, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },
    #[error("block grid {rows}x{cols} does not fit a {width}x{height} raster")]
    InvalidGrid {
        rows: usize,
        cols: usize,
        width: usize,
        height: usize,
    },
    #[error("no block grids to accumulate")]
    EmptyGridList,
    #[error("block grids disagree in shape: {0}x{1} vs {2}x{3}")]
    GridMismatch(usize, usize, usize, usize),
    #[error("segment needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
