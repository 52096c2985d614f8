//! Frame, oracle-detection and ROI-report file formats.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageDecoder};
use serde::{Deserialize, Serialize};

use super::{BoundingBox, Detection, FrameGray, SegmentReport};

/// Decodes a binary PGM (P5, maxval 255).
pub fn read_pgm(reader: impl Read) -> Result<FrameGray> {
    let mut bytes = Vec::new();
    let mut reader = reader;
    reader.read_to_end(&mut bytes)?;
    if !bytes.starts_with(b"P5") {
        bail!("not a binary PGM (P5) file");
    }
    let decoder = PnmDecoder::new(std::io::Cursor::new(bytes))?;
    if decoder.color_type() != image::ColorType::L8 {
        bail!("PGM must be 8-bit grayscale (maxval 255)");
    }
    let (w, h) = decoder.dimensions();
    let mut data = vec![0u8; decoder.total_bytes() as usize];
    decoder.read_image(&mut data)?;
    Ok(FrameGray::new(w as usize, h as usize, data)?)
}

pub fn write_pgm(frame: &FrameGray, writer: impl Write) -> Result<()> {
    let mut enc = PnmEncoder::new(writer).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
    enc.encode(
        frame.data(),
        frame.width() as u32,
        frame.height() as u32,
        ExtendedColorType::L8,
    )?;
    Ok(())
}

/// `.pgm` files in `dir`, sorted lexicographically by file name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading frame directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

pub fn load_frames(dir: &Path) -> Result<Vec<FrameGray>> {
    list_frames(dir)?
        .iter()
        .map(|p| {
            let file = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            read_pgm(std::io::BufReader::new(file)).with_context(|| format!("decoding {}", p.display()))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct OracleRow {
    frame: usize,
    x: i64,
    y: i64,
    w: i64,
    h: i64,
    confidence: f64,
}

/// Parses `frame,x,y,w,h,confidence`.
pub fn read_oracle_csv(reader: impl Read) -> Result<Vec<Detection>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<OracleRow>().enumerate() {
        let r = row.with_context(|| format!("oracle row {}", i + 1))?;
        if !(0.0..=1.0).contains(&r.confidence) {
            bail!("oracle row {}: confidence {} outside [0,1]", i + 1, r.confidence);
        }
        out.push(Detection {
            frame: r.frame,
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
            confidence: r.confidence,
        });
    }
    Ok(out)
}

pub fn write_oracle_csv(detections: &[Detection], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for d in detections {
        w.serialize(OracleRow {
            frame: d.frame,
            x: d.x,
            y: d.y,
            w: d.w,
            h: d.h,
            confidence: d.confidence,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the ROI report. Box rows leave `a`/`c` empty; the per-segment
/// `summary` row leaves the box columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiRow {
    pub segment: usize,
    pub kind: String,
    pub x: Option<u32>,
    pub y: Option<u32>,
    pub w: Option<u32>,
    pub h: Option<u32>,
    pub a: Option<f64>,
    pub c: Option<f64>,
}

pub fn write_roi_csv(reports: &[SegmentReport], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let box_row = |segment, kind: &str, b: &BoundingBox| RoiRow {
        segment,
        kind: kind.to_string(),
        x: Some(b.x),
        y: Some(b.y),
        w: Some(b.w),
        h: Some(b.h),
        a: None,
        c: None,
    };
    for r in reports {
        for b in &r.rois.stationary {
            w.serialize(box_row(r.segment, "stationary", b))?;
        }
        for b in &r.rois.moving {
            w.serialize(box_row(r.segment, "moving", b))?;
        }
        w.serialize(RoiRow {
            segment: r.segment,
            kind: "summary".into(),
            x: None,
            y: None,
            w: None,
            h: None,
            a: Some(r.area_ratio),
            c: Some(r.confidence),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_roi_csv(reader: impl Read) -> Result<Vec<RoiRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .collect::<Result<Vec<RoiRow>, _>>()
        .context("parsing ROI csv")
}
