use serde::{Deserialize, Serialize};

use super::{RoidetError, MIN_FRAME_SIDE};

/// Row-major 8-bit luminance raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameGray {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl FrameGray {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RoidetError> {
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(RoidetError::DimensionTooSmall {
                width,
                height,
                min: MIN_FRAME_SIDE,
            });
        }
        if data.len() != width * height {
            return Err(RoidetError::BufferLength {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Frame filled with a single value.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, RoidetError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, RoidetError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Binary raster, one byte per pixel holding 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl EdgeMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    /// Any nonzero input byte is stored as 1.
    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self, RoidetError> {
        if bits.len() != width * height {
            return Err(RoidetError::BufferLength {
                expected: width * height,
                actual: bits.len(),
            });
        }
        let bits = bits.into_iter().map(|b| u8::from(b != 0)).collect();
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = u8::from(on);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub(crate) fn same_shape(&self, other: &EdgeMap) -> Result<(), RoidetError> {
        if self.width != other.width || self.height != other.height {
            return Err(RoidetError::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        Ok(())
    }
}

/// `rows x cols` matrix of motion flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    rows: usize,
    cols: usize,
    flags: Vec<u8>,
}

impl BlockGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "block grid must be at least 1x1");
        Self {
            rows,
            cols,
            flags: vec![0; rows * cols],
        }
    }

    pub fn from_flags(rows: usize, cols: usize, flags: Vec<u8>) -> Result<Self, RoidetError> {
        if rows == 0 || cols == 0 {
            return Err(RoidetError::InvalidParams(format!(
                "block grid {rows}x{cols} must be at least 1x1"
            )));
        }
        if flags.len() != rows * cols {
            return Err(RoidetError::BufferLength {
                expected: rows * cols,
                actual: flags.len(),
            });
        }
        let flags = flags.into_iter().map(|b| u8::from(b != 0)).collect();
        Ok(Self { rows, cols, flags })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn flags(&self) -> &[u8] {
        &self.flags
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.cols + col] != 0
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.flags[row * self.cols + col] = u8::from(on);
    }

    pub fn count_ones(&self) -> usize {
        self.flags.iter().filter(|&&b| b != 0).count()
    }
}

/// Axis-aligned pixel rectangle; `x`/`y` are the inclusive top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    /// Intersects a possibly out-of-frame rectangle with the frame. Returns
    /// `None` when nothing is left.
    pub fn clipped(
        x: i64,
        y: i64,
        w: i64,
        h: i64,
        frame_width: usize,
        frame_height: usize,
    ) -> Option<Self> {
        let x0 = x.max(0);
        let y0 = y.max(0);
        let x1 = x.saturating_add(w).min(frame_width as i64);
        let y1 = y.saturating_add(h).min(frame_height as i64);
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        Some(Self::new(
            x0 as u32,
            y0 as u32,
            (x1 - x0) as u32,
            (y1 - y0) as u32,
        ))
    }

    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }
}

/// ROIs found for one segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSet {
    pub stationary: Vec<BoundingBox>,
    pub moving: Vec<BoundingBox>,
    pub frame_width: usize,
    pub frame_height: usize,
}

impl RoiSet {
    pub fn empty(frame_width: usize, frame_height: usize) -> Self {
        Self {
            stationary: Vec::new(),
            moving: Vec::new(),
            frame_width,
            frame_height,
        }
    }

    pub fn all_boxes(&self) -> impl Iterator<Item = &BoundingBox> {
        self.stationary.iter().chain(self.moving.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoidetParams {
    pub canny_low: f64,
    pub canny_high: f64,
    pub block_rows: usize,
    pub block_cols: usize,
    /// A block is flagged when its changed-edge count is strictly greater.
    pub motion_threshold: usize,
}

impl Default for RoidetParams {
    fn default() -> Self {
        Self {
            canny_low: 50.0,
            canny_high: 150.0,
            block_rows: 32,
            block_cols: 32,
            motion_threshold: 8,
        }
    }
}

impl RoidetParams {
    pub fn validate(&self) -> Result<(), RoidetError> {
        if !(self.canny_low.is_finite() && self.canny_high.is_finite()) {
            return Err(RoidetError::InvalidParams(
                "canny thresholds must be finite".into(),
            ));
        }
        if self.canny_low >= self.canny_high {
            return Err(RoidetError::InvalidParams(format!(
                "canny_low ({}) must be below canny_high ({})",
                self.canny_low, self.canny_high
            )));
        }
        if self.motion_threshold < 1 {
            return Err(RoidetError::InvalidParams(
                "motion_threshold must be at least 1".into(),
            ));
        }
        if self.block_rows < 1 || self.block_cols < 1 {
            return Err(RoidetError::InvalidParams(
                "block grid must be at least 1x1".into(),
            ));
        }
        Ok(())
    }
}
