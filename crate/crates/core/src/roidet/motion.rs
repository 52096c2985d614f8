use super::{BlockGrid, EdgeMap, RoidetError, RoidetParams};

/// Per-pixel symmetric difference of two edge maps.
pub fn edge_difference(prev: &EdgeMap, cur: &EdgeMap) -> Result<EdgeMap, RoidetError> {
    prev.same_shape(cur)?;
    let bits = prev
        .bits()
        .iter()
        .zip(cur.bits())
        .map(|(a, b)| a ^ b)
        .collect();
    EdgeMap::from_bits(cur.width(), cur.height(), bits)
}

/// Pixel extents of an `rows x cols` tiling of a `width x height` raster.
///
/// Tiles are `height / rows` by `width / cols`; the last row and column of
/// tiles absorb the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub rows: usize,
    pub cols: usize,
    pub width: usize,
    pub height: usize,
    tile_w: usize,
    tile_h: usize,
}

impl BlockLayout {
    pub fn new(rows: usize, cols: usize, width: usize, height: usize) -> Result<Self, RoidetError> {
        if rows == 0 || cols == 0 || rows > height || cols > width {
            return Err(RoidetError::InvalidGrid {
                rows,
                cols,
                width,
                height,
            });
        }
        Ok(Self {
            rows,
            cols,
            width,
            height,
            tile_w: width / cols,
            tile_h: height / rows,
        })
    }

    /// Half-open pixel column range `[x0, x1)` of block column `col`.
    pub fn col_span(&self, col: usize) -> (usize, usize) {
        let x0 = col * self.tile_w;
        let x1 = if col + 1 == self.cols {
            self.width
        } else {
            x0 + self.tile_w
        };
        (x0, x1)
    }

    /// Half-open pixel row range `[y0, y1)` of block row `row`.
    pub fn row_span(&self, row: usize) -> (usize, usize) {
        let y0 = row * self.tile_h;
        let y1 = if row + 1 == self.rows {
            self.height
        } else {
            y0 + self.tile_h
        };
        (y0, y1)
    }

    #[inline]
    fn block_of(&self, x: usize, y: usize) -> (usize, usize) {
        ((y / self.tile_h).min(self.rows - 1), (x / self.tile_w).min(self.cols - 1))
    }
}

/// Flags every block whose changed-edge count is strictly above the
/// motion threshold.
pub fn block_motion(delta: &EdgeMap, params: &RoidetParams) -> Result<BlockGrid, RoidetError> {
    params.validate()?;
    let layout = BlockLayout::new(
        params.block_rows,
        params.block_cols,
        delta.width(),
        delta.height(),
    )?;
    let mut counts = vec![0usize; layout.rows * layout.cols];
    for y in 0..delta.height() {
        for x in 0..delta.width() {
            if delta.get(x, y) {
                let (r, c) = layout.block_of(x, y);
                counts[r * layout.cols + c] += 1;
            }
        }
    }
    let flags = counts
        .into_iter()
        .map(|n| u8::from(n > params.motion_threshold))
        .collect();
    BlockGrid::from_flags(layout.rows, layout.cols, flags)
}

/// Elementwise OR of per-frame grids.
pub fn accumulate_motion(per_frame_grids: &[BlockGrid]) -> Result<BlockGrid, RoidetError> {
    let first = per_frame_grids.first().ok_or(RoidetError::EmptyGridList)?;
    let mut out = first.clone();
    for g in &per_frame_grids[1..] {
        if g.rows() != out.rows() || g.cols() != out.cols() {
            return Err(RoidetError::GridMismatch(
                out.rows(),
                out.cols(),
                g.rows(),
                g.cols(),
            ));
        }
        for r in 0..out.rows() {
            for c in 0..out.cols() {
                if g.get(r, c) {
                    out.set(r, c, true);
                }
            }
        }
    }
    Ok(out)
}
