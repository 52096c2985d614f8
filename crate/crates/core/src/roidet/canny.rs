//! Canny edge detector: 5x5 Gaussian (sigma 1.4), Sobel gradients,
//! non-maximum suppression, double threshold with hysteresis.
//!
//! Thresholds are compared against the L2 magnitude of the raw Sobel
//! response of the blurred image (OpenCV convention), so a sharp 0->255 step
//! peaks near 554 after blurring.

use super::{EdgeMap, FrameGray, RoidetError, RoidetParams};

const GAUSS_SIGMA: f32 = 1.4;
const GAUSS_RADIUS: usize = 2;

fn gaussian_taps() -> [f32; 2 * GAUSS_RADIUS + 1] {
    let mut taps = [0f32; 2 * GAUSS_RADIUS + 1];
    let denom = 2.0 * GAUSS_SIGMA * GAUSS_SIGMA;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f32 - GAUSS_RADIUS as f32;
        *t = (-d * d / denom).exp();
    }
    let sum: f32 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

#[inline]
fn clamp_idx(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Separable blur with replicated borders.
fn blur(frame: &FrameGray) -> Vec<f32> {
    let (w, h) = (frame.width(), frame.height());
    let taps = gaussian_taps();
    let src = frame.data();
    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0f32;
            for (k, t) in taps.iter().enumerate() {
                let xx = clamp_idx(x as isize + k as isize - GAUSS_RADIUS as isize, w);
                acc += t * f32::from(row[xx]);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0f32;
            for (k, t) in taps.iter().enumerate() {
                let yy = clamp_idx(y as isize + k as isize - GAUSS_RADIUS as isize, h);
                acc += t * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Sobel gradients with replicated borders; returns (gx, gy, magnitude).
fn sobel(img: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>, Vec<f32>) {
    let mut gx = vec![0f32; w * h];
    let mut gy = vec![0f32; w * h];
    let mut mag = vec![0f32; w * h];
    let at = |x: isize, y: isize| img[clamp_idx(y, h) * w + clamp_idx(x, w)];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let tl = at(x - 1, y - 1);
            let tc = at(x, y - 1);
            let tr = at(x + 1, y - 1);
            let ml = at(x - 1, y);
            let mr = at(x + 1, y);
            let bl = at(x - 1, y + 1);
            let bc = at(x, y + 1);
            let br = at(x + 1, y + 1);
            let dx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            let dy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
            let i = y as usize * w + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = (dx * dx + dy * dy).sqrt();
        }
    }
    (gx, gy, mag)
}

// tan(22.5deg) and tan(67.5deg)
const TAN_22: f32 = 0.414_213_57;
const TAN_67: f32 = 2.414_213_6;

fn non_max_suppression(gx: &[f32], gy: &[f32], mag: &[f32], w: usize, h: usize) -> Vec<f32> {
    let mut out = vec![0f32; w * h];
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (ax, ay) = (gx[i].abs(), gy[i].abs());
            let (dx, dy): (isize, isize) = if ay <= ax * TAN_22 {
                (1, 0)
            } else if ay >= ax * TAN_67 {
                (0, 1)
            } else if (gx[i] > 0.0) == (gy[i] > 0.0) {
                (1, 1)
            } else {
                (1, -1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let a = at(xi + dx, yi + dy);
            let b = at(xi - dx, yi - dy);
            // >= on both sides keeps both pixels of a symmetric two-pixel ridge
            if m >= a && m >= b {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(nms: &[f32], w: usize, h: usize, low: f32, high: f32) -> EdgeMap {
    let mut edges = EdgeMap::zeros(w, h);
    let mut stack: Vec<usize> = Vec::new();
    for (i, &m) in nms.iter().enumerate() {
        if m > high {
            edges.set(i % w, i / w, true);
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                let j = ny * w + nx;
                if nms[j] > low && !edges.get(nx, ny) {
                    edges.set(nx, ny, true);
                    stack.push(j);
                }
            }
        }
    }
    edges
}

/// Binary Canny edge map of `frame`.
pub fn canny_edges(frame: &FrameGray, params: &RoidetParams) -> Result<EdgeMap, RoidetError> {
    params.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let blurred = blur(frame);
    let (gx, gy, mag) = sobel(&blurred, w, h);
    let thin = non_max_suppression(&gx, &gy, &mag, w, h);
    Ok(hysteresis(
        &thin,
        w,
        h,
        params.canny_low as f32,
        params.canny_high as f32,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RoidetParams {
        RoidetParams::default()
    }

    #[test]
    fn uniform_frame_has_no_edges() {
        let f = FrameGray::filled(32, 32, 128).unwrap();
        assert_eq!(canny_edges(&f, &params()).unwrap().count_ones(), 0);
    }

    #[test]
    fn small_frames_are_rejected() {
        let err = FrameGray::filled(15, 32, 0).unwrap_err();
        assert!(matches!(err, RoidetError::DimensionTooSmall { .. }));
    }

    #[test]
    fn vertical_step_edges_sit_on_the_two_step_columns() {
        // Hand profile across the step (blurred with taps .110/.237/.306):
        // col 14: 28, 15: 88.5, 16: 166.5, 17: 227. Sobel |gx| = 4 * (I[x+1] - I[x-1])
        // gives 112, 354, 554, 554, 354, 112 for cols 13..18; NMS keeps the
        // tied 15/16 ridge and both exceed the high threshold.
        let f = FrameGray::from_fn(32, 32, |x, _| if x < 16 { 0 } else { 255 }).unwrap();
        let e = canny_edges(&f, &params()).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let expected = x == 15 || x == 16;
                assert_eq!(e.get(x, y), expected, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn taps_are_normalised_and_symmetric() {
        let t = gaussian_taps();
        assert!((t.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        assert_eq!(t[0], t[4]);
        assert_eq!(t[1], t[3]);
        assert!((t[2] - 0.306).abs() < 1e-3);
    }

    #[test]
    fn deterministic() {
        let f = FrameGray::from_fn(40, 24, |x, y| ((x * 7 + y * 13) % 256) as u8).unwrap();
        assert_eq!(
            canny_edges(&f, &params()).unwrap(),
            canny_edges(&f, &params()).unwrap()
        );
    }
}
