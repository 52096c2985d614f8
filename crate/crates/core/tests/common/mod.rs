//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roistream::allocation::CameraOptions;
use roistream::utility::ProfilingSample;
use roistream::roidet::{BlockGrid, BoundingBox};

/// Exhaustive search over idle plus every `(bitrate, resolution)` pair of
/// every camera. Sums weighted terms in ascending camera order.
pub fn brute_force_utility(cameras: &[CameraOptions], budget_kbps: f64) -> (f64, Vec<Option<(usize, usize)>>) {
    let mut best = f64::NEG_INFINITY;
    let mut best_pick = Vec::new();
    let mut pick: Vec<Option<(usize, usize)>> = vec![None; cameras.len()];
    fn rec(
        i: usize,
        cams: &[CameraOptions],
        budget: f64,
        pick: &mut Vec<Option<(usize, usize)>>,
        best: &mut f64,
        best_pick: &mut Vec<Option<(usize, usize)>>,
    ) {
        if i == cams.len() {
            let mut spent = 0u64;
            let mut total = 0.0;
            for (c, p) in cams.iter().zip(pick.iter()) {
                match p {
                    None => total += c.weight * 0.0,
                    Some((b, r)) => {
                        spent += u64::from(c.bitrates[*b]);
                        total += c.weight * c.table[*b][*r];
                    }
                }
            }
            if spent as f64 <= budget && total > *best {
                *best = total;
                *best_pick = pick.clone();
            }
            return;
        }
        pick[i] = None;
        rec(i + 1, cams, budget, pick, best, best_pick);
        for b in 0..cams[i].bitrates.len() {
            for r in 0..cams[i].resolutions.len() {
                pick[i] = Some((b, r));
                rec(i + 1, cams, budget, pick, best, best_pick);
            }
        }
        pick[i] = None;
    }
    rec(0, cameras, budget_kbps.max(0.0), &mut pick, &mut best, &mut best_pick);
    (best, best_pick)
}

/// Random instance: up to `max_cams` cameras, each with its own strictly
/// increasing multiples of 10 kbps and uniform [0,1] utilities.
pub fn random_instance(rng: &mut ChaCha8Rng, max_cams: usize, max_b: usize, max_r: usize) -> Vec<CameraOptions> {
    let n = rng.random_range(1..=max_cams);
    (0..n)
        .map(|i| {
            let nb = rng.random_range(1..=max_b);
            let nr = rng.random_range(1..=max_r);
            let mut bitrates: Vec<u32> = Vec::new();
            while bitrates.len() < nb {
                let b = 10 * rng.random_range(1..=100u32);
                if !bitrates.contains(&b) {
                    bitrates.push(b);
                }
            }
            bitrates.sort_unstable();
            let table = (0..nb)
                .map(|_| (0..nr).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect();
            CameraOptions::new(
                format!("cam{i}"),
                rng.random_range(0.0..2.0),
                bitrates,
                (0..nr as u32).collect(),
                table,
            )
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flood-fill labeling of set flags (8-connectivity) returning block-space
/// extents `(min_row, min_col, max_row, max_col)` sorted.
pub fn flood_fill_extents(grid: &BlockGrid) -> Vec<(usize, usize, usize, usize)> {
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut seen = vec![false; rows * cols];
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if !grid.get(r, c) || seen[r * cols + c] {
                continue;
            }
            let mut ext = (r, c, r, c);
            let mut queue = std::collections::VecDeque::from([(r, c)]);
            seen[r * cols + c] = true;
            while let Some((y, x)) = queue.pop_front() {
                ext = (ext.0.min(y), ext.1.min(x), ext.2.max(y), ext.3.max(x));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                        if ny < 0 || nx < 0 || ny >= rows as i64 || nx >= cols as i64 {
                            continue;
                        }
                        let (ny, nx) = (ny as usize, nx as usize);
                        if grid.get(ny, nx) && !seen[ny * cols + nx] {
                            seen[ny * cols + nx] = true;
                            queue.push_back((ny, nx));
                        }
                    }
                }
            }
            out.push(ext);
        }
    }
    out.sort_unstable();
    out
}

/// Pixel boxes for block extents on a frame tiled like `BlockLayout`.
pub fn extents_to_boxes(
    extents: &[(usize, usize, usize, usize)],
    rows: usize,
    cols: usize,
    width: usize,
    height: usize,
) -> Vec<BoundingBox> {
    let (tw, th) = (width / cols, height / rows);
    let end = |i: usize, n: usize, t: usize, total: usize| if i + 1 == n { total } else { (i + 1) * t };
    let mut boxes: Vec<BoundingBox> = extents
        .iter()
        .map(|&(r0, c0, r1, c1)| {
            let (x0, y0) = (c0 * tw, r0 * th);
            let (x1, y1) = (end(c1, cols, tw, width), end(r1, rows, th, height));
            BoundingBox::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32)
        })
        .collect();
    boxes.sort_by_key(|b| (b.y, b.x, b.h, b.w));
    boxes
}

pub fn random_grid(rng: &mut ChaCha8Rng, max_side: usize) -> BlockGrid {
    let rows = rng.random_range(1..=max_side);
    let cols = rng.random_range(1..=max_side);
    let density = rng.random_range(0.05..0.7);
    let flags = (0..rows * cols).map(|_| u8::from(rng.random_bool(density))).collect();
    BlockGrid::from_flags(rows, cols, flags).unwrap()
}

/// Synthetic accuracy law used by the regression checks.
pub fn law(a: f64, b: f64) -> f64 {
    (0.3 + 0.5 * b / 1000.0 - 0.2 * a).min(1.0)
}

pub fn law_samples(n: usize, seed: u64) -> Vec<ProfilingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = rng.random_range(0.0..1.0);
            let b = rng.random_range(50.0..1000.0);
            ProfilingSample {
                a,
                c: rng.random_range(0.0..1.0),
                bitrate_kbps: b,
                resolution: rng.random_range(0..3),
                accuracy: law(a, b),
            }
        })
        .collect()
}
