//! Two-pass union-find labeling of block flags under 8-connectivity.

use super::{BlockGrid, BlockLayout, BoundingBox};

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        // label 0 is background
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let root = ra.min(rb);
        self.parent[ra.max(rb) as usize] = root;
        root
    }
}

/// Label image of `grid`: 0 for background, components numbered from 1
/// in raster order of their first cell.
pub(crate) fn label_grid(grid: &BlockGrid) -> (Vec<u32>, usize) {
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut labels = vec![0u32; rows * cols];
    let mut sets = DisjointSet::new();

    for r in 0..rows {
        for c in 0..cols {
            if !grid.get(r, c) {
                continue;
            }
            // already-visited neighbours: W, NW, N, NE
            let mut current = 0u32;
            let mut visit = |l: u32, sets: &mut DisjointSet| {
                if l != 0 {
                    current = if current == 0 { l } else { sets.union(current, l) };
                }
            };
            if c > 0 {
                visit(labels[r * cols + c - 1], &mut sets);
            }
            if r > 0 {
                let up = (r - 1) * cols;
                if c > 0 {
                    visit(labels[up + c - 1], &mut sets);
                }
                visit(labels[up + c], &mut sets);
                if c + 1 < cols {
                    visit(labels[up + c + 1], &mut sets);
                }
            }
            labels[r * cols + c] = if current == 0 { sets.make() } else { current };
        }
    }

    let mut compact = vec![0u32; sets.parent.len()];
    let mut next = 0u32;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = sets.find(*l) as usize;
        if compact[root] == 0 {
            next += 1;
            compact[root] = next;
        }
        *l = compact[root];
    }
    (labels, next as usize)
}

/// One pixel-space bounding box per 8-connected component of set flags,
/// sorted by `(y, x)`.
///
/// Panics if the grid has more rows or columns than the frame has pixels.
pub fn connected_components(
    grid: &BlockGrid,
    frame_width: usize,
    frame_height: usize,
) -> Vec<BoundingBox> {
    let layout = BlockLayout::new(grid.rows(), grid.cols(), frame_width, frame_height)
        .expect("block grid larger than frame");
    let (labels, count) = label_grid(grid);
    // (min_row, min_col, max_row, max_col)
    let mut extents = vec![(usize::MAX, usize::MAX, 0usize, 0usize); count];
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            let l = labels[r * grid.cols() + c];
            if l == 0 {
                continue;
            }
            let e = &mut extents[l as usize - 1];
            e.0 = e.0.min(r);
            e.1 = e.1.min(c);
            e.2 = e.2.max(r);
            e.3 = e.3.max(c);
        }
    }
    let mut boxes: Vec<BoundingBox> = extents
        .into_iter()
        .map(|(r0, c0, r1, c1)| {
            let (x0, _) = layout.col_span(c0);
            let (_, x1) = layout.col_span(c1);
            let (y0, _) = layout.row_span(r0);
            let (_, y1) = layout.row_span(r1);
            BoundingBox::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32)
        })
        .collect();
    boxes.sort_by_key(|b| (b.y, b.x, b.h, b.w));
    boxes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, on: &[(usize, usize)]) -> BlockGrid {
        let mut g = BlockGrid::zeros(rows, cols);
        for &(r, c) in on {
            g.set(r, c, true);
        }
        g
    }

    #[test]
    fn empty_grid_has_no_boxes() {
        assert!(connected_components(&BlockGrid::zeros(4, 4), 64, 64).is_empty());
    }

    #[test]
    fn single_flag_maps_to_its_tile() {
        let boxes = connected_components(&grid(4, 4, &[(1, 2)]), 64, 64);
        assert_eq!(boxes, vec![BoundingBox::new(32, 16, 16, 16)]);
    }

    #[test]
    fn l_shape_is_one_component() {
        let boxes = connected_components(&grid(4, 4, &[(0, 0), (1, 0), (1, 1)]), 64, 64);
        assert_eq!(boxes, vec![BoundingBox::new(0, 0, 32, 32)]);
    }

    #[test]
    fn diagonal_touch_merges_under_eight_connectivity() {
        let (_, n) = label_grid(&grid(3, 3, &[(0, 0), (1, 1), (2, 2)]));
        assert_eq!(n, 1);
        let (_, n) = label_grid(&grid(3, 3, &[(0, 2), (1, 1), (2, 0)]));
        assert_eq!(n, 1);
    }

    #[test]
    fn u_shape_merges_late() {
        // two arms joined only on the bottom row
        let g = grid(3, 3, &[(0, 0), (1, 0), (0, 2), (1, 2), (2, 0), (2, 1), (2, 2)]);
        let (_, n) = label_grid(&g);
        assert_eq!(n, 1);
        assert_eq!(connected_components(&g, 48, 48), vec![BoundingBox::new(0, 0, 48, 48)]);
    }

    #[test]
    fn separate_components_sorted_by_position() {
        let boxes = connected_components(&grid(4, 4, &[(3, 0), (0, 3), (0, 0)]), 64, 64);
        assert_eq!(
            boxes,
            vec![
                BoundingBox::new(0, 0, 16, 16),
                BoundingBox::new(48, 0, 16, 16),
                BoundingBox::new(0, 48, 16, 16),
            ]
        );
    }
}
