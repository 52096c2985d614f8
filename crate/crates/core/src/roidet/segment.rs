use std::collections::BTreeMap;

use super::{
    accumulate_motion, block_motion, canny_edges, connected_components, edge_difference,
    BoundingBox, FrameGray, RoiSet, RoidetError, RoidetParams,
};

/// A stationary-object detection as reported by an on-camera detector.
/// Coordinates may fall outside the frame; they are clipped on use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub frame: usize,
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
    pub confidence: f64,
}

impl Detection {
    pub fn clipped_box(&self, frame_width: usize, frame_height: usize) -> Option<BoundingBox> {
        BoundingBox::clipped(self.x, self.y, self.w, self.h, frame_width, frame_height)
    }
}

/// Source of stationary-object boxes, queried once per segment with the
/// segment's first frame.
pub trait StationaryDetector {
    fn detect(&self, first_frame_index: usize, first_frame: &FrameGray) -> Vec<Detection>;
}

/// Replays detections recorded in an oracle file, keyed by frame index.
#[derive(Debug, Clone, Default)]
pub struct OracleDetector {
    by_frame: BTreeMap<usize, Vec<Detection>>,
}

impl OracleDetector {
    pub fn new(detections: impl IntoIterator<Item = Detection>) -> Self {
        let mut by_frame: BTreeMap<usize, Vec<Detection>> = BTreeMap::new();
        for d in detections {
            by_frame.entry(d.frame).or_default().push(d);
        }
        Self { by_frame }
    }
}

impl StationaryDetector for OracleDetector {
    fn detect(&self, first_frame_index: usize, _first_frame: &FrameGray) -> Vec<Detection> {
        self.by_frame
            .get(&first_frame_index)
            .cloned()
            .unwrap_or_default()
    }
}

/// Mean detector confidence, 0 when there are no detections.
pub fn mean_confidence(detections: &[Detection]) -> f64 {
    if detections.is_empty() {
        return 0.0;
    }
    detections.iter().map(|d| d.confidence).sum::<f64>() / detections.len() as f64
}

/// ROIs of one segment: the supplied stationary boxes (clipped to the
/// frame) plus boxes around the accumulated block motion.
pub fn roidet_segment(
    frames: &[FrameGray],
    stationary_boxes: &[BoundingBox],
    params: &RoidetParams,
) -> Result<RoiSet, RoidetError> {
    if frames.len() < 2 {
        return Err(RoidetError::TooFewFrames(frames.len()));
    }
    params.validate()?;
    let (w, h) = (frames[0].width(), frames[0].height());
    for f in &frames[1..] {
        if f.width() != w || f.height() != h {
            return Err(RoidetError::DimensionMismatch {
                left_w: w,
                left_h: h,
                right_w: f.width(),
                right_h: f.height(),
            });
        }
    }

    let edges = frames
        .iter()
        .map(|f| canny_edges(f, params))
        .collect::<Result<Vec<_>, _>>()?;
    let grids = edges
        .windows(2)
        .map(|pair| edge_difference(&pair[0], &pair[1]).and_then(|d| block_motion(&d, params)))
        .collect::<Result<Vec<_>, _>>()?;
    let motion = accumulate_motion(&grids)?;

    let stationary = stationary_boxes
        .iter()
        .filter_map(|b| {
            BoundingBox::clipped(
                i64::from(b.x),
                i64::from(b.y),
                i64::from(b.w),
                i64::from(b.h),
                w,
                h,
            )
        })
        .collect();
    Ok(RoiSet {
        stationary,
        moving: connected_components(&motion, w, h),
        frame_width: w,
        frame_height: h,
    })
}

/// ROIs and content features of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    pub segment: usize,
    pub rois: RoiSet,
    pub area_ratio: f64,
    pub confidence: f64,
}

/// Splits a frame sequence into segments of `frames_per_segment` frames
/// and runs [`roidet_segment`] on each, querying `detector` with every
/// segment's first frame. A trailing segment shorter than two frames is
/// dropped.
pub fn detect_segments(
    frames: &[FrameGray],
    frames_per_segment: usize,
    detector: &dyn StationaryDetector,
    params: &RoidetParams,
) -> Result<Vec<SegmentReport>, RoidetError> {
    if frames_per_segment < 2 {
        return Err(RoidetError::TooFewFrames(frames_per_segment));
    }
    let mut out = Vec::new();
    for (segment, chunk) in frames.chunks(frames_per_segment).enumerate() {
        if chunk.len() < 2 {
            log::warn!("dropping trailing segment {segment} with a single frame");
            continue;
        }
        let first = segment * frames_per_segment;
        let detections = detector.detect(first, &chunk[0]);
        let (w, h) = (chunk[0].width(), chunk[0].height());
        let boxes: Vec<BoundingBox> = detections.iter().filter_map(|d| d.clipped_box(w, h)).collect();
        let rois = roidet_segment(chunk, &boxes, params)?;
        out.push(SegmentReport {
            segment,
            area_ratio: roi_area_ratio(&rois),
            confidence: mean_confidence(&detections),
            rois,
        });
    }
    Ok(out)
}

/// Union area of all ROIs over the frame area.
pub fn roi_area_ratio(rois: &RoiSet) -> f64 {
    let frame_area = (rois.frame_width * rois.frame_height) as f64;
    if frame_area == 0.0 {
        return 0.0;
    }
    union_area(rois.all_boxes()) as f64 / frame_area
}

/// Exact union area by sweeping over the distinct x edges.
pub(crate) fn union_area<'a>(boxes: impl Iterator<Item = &'a BoundingBox>) -> u64 {
    let boxes: Vec<&BoundingBox> = boxes.filter(|b| b.w > 0 && b.h > 0).collect();
    let mut xs: Vec<u32> = boxes.iter().flat_map(|b| [b.x, b.right()]).collect();
    xs.sort_unstable();
    xs.dedup();
    let mut area = 0u64;
    let mut spans: Vec<(u32, u32)> = Vec::new();
    for slab in xs.windows(2) {
        let (x0, x1) = (slab[0], slab[1]);
        spans.clear();
        spans.extend(
            boxes
                .iter()
                .filter(|b| b.x <= x0 && b.right() >= x1)
                .map(|b| (b.y, b.bottom())),
        );
        spans.sort_unstable();
        let mut covered = 0u64;
        let mut cur: Option<(u32, u32)> = None;
        for &(y0, y1) in &spans {
            match cur {
                Some((s, e)) if y0 <= e => cur = Some((s, e.max(y1))),
                Some((s, e)) => {
                    covered += u64::from(e - s);
                    cur = Some((y0, y1));
                }
                None => cur = Some((y0, y1)),
            }
        }
        if let Some((s, e)) = cur {
            covered += u64::from(e - s);
        }
        area += covered * u64::from(x1 - x0);
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rois(w: usize, h: usize, boxes: &[BoundingBox]) -> RoiSet {
        RoiSet {
            stationary: boxes.to_vec(),
            moving: Vec::new(),
            frame_width: w,
            frame_height: h,
        }
    }

    #[test]
    fn empty_ratio_is_zero() {
        assert_eq!(roi_area_ratio(&RoiSet::empty(100, 100)), 0.0);
    }

    #[test]
    fn full_frame_ratio_is_one() {
        assert_eq!(roi_area_ratio(&rois(100, 80, &[BoundingBox::new(0, 0, 100, 80)])), 1.0);
    }

    #[test]
    fn overlap_is_counted_once() {
        let r = rois(
            100,
            100,
            &[BoundingBox::new(0, 0, 10, 10), BoundingBox::new(5, 0, 10, 10)],
        );
        assert!((roi_area_ratio(&r) - 0.015).abs() < 1e-15);
    }

    #[test]
    fn static_segment_without_oracle_boxes_is_empty() {
        let f = FrameGray::from_fn(64, 64, |x, y| ((x ^ y) * 4) as u8).unwrap();
        let params = RoidetParams {
            block_rows: 8,
            block_cols: 8,
            ..RoidetParams::default()
        };
        let out = roidet_segment(&[f.clone(), f.clone(), f], &[], &params).unwrap();
        assert_eq!(out, RoiSet::empty(64, 64));
    }

    #[test]
    fn static_segment_keeps_clipped_oracle_box() {
        let f = FrameGray::filled(64, 64, 30).unwrap();
        let params = RoidetParams {
            block_rows: 4,
            block_cols: 4,
            ..RoidetParams::default()
        };
        let b = BoundingBox::new(10, 12, 20, 8);
        let out = roidet_segment(&[f.clone(), f], &[b], &params).unwrap();
        assert!(out.moving.is_empty());
        assert_eq!(out.stationary, vec![b]);
    }

    #[test]
    fn segment_errors() {
        let f = FrameGray::filled(32, 32, 0).unwrap();
        let p = RoidetParams {
            block_rows: 4,
            block_cols: 4,
            ..RoidetParams::default()
        };
        assert_eq!(
            roidet_segment(std::slice::from_ref(&f), &[], &p),
            Err(RoidetError::TooFewFrames(1))
        );
        let g = FrameGray::filled(32, 48, 0).unwrap();
        assert!(matches!(
            roidet_segment(&[f, g], &[], &p),
            Err(RoidetError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn oracle_detector_returns_first_frame_detections() {
        let d = |frame, conf| Detection {
            frame,
            x: -5,
            y: 0,
            w: 10,
            h: 10,
            confidence: conf,
        };
        let det = OracleDetector::new([d(0, 0.8), d(0, 0.6), d(3, 0.9)]);
        let frame = FrameGray::filled(16, 16, 0).unwrap();
        let got = det.detect(0, &frame);
        assert_eq!(got.len(), 2);
        assert!((mean_confidence(&got) - 0.7).abs() < 1e-12);
        assert_eq!(got[0].clipped_box(16, 16), Some(BoundingBox::new(0, 0, 5, 10)));
        assert!(det.detect(1, &frame).is_empty());
        assert_eq!(mean_confidence(&[]), 0.0);
    }
}
