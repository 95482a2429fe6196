//! Debug image files: masks as binary PGM (`P5`, 0/255) and cost maps as
//! little-endian PFM (`Pf`), both with the usual short text headers. The
//! landmark class rides along as a `#class` comment line.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::hdmap::LandmarkClass;

use super::{CostMap, SegMask};

#[derive(Debug, thiserror::Error)]
pub enum ImageIoError {
    #[error("image i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed image header: {0}")]
    Header(String),
}

struct Header {
    magic: String,
    width: usize,
    height: usize,
    extra: String,
    class: Option<LandmarkClass>,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, ImageIoError> {
    let bad = |m: &str| ImageIoError::Header(m.to_string());
    let mut fields = Vec::new();
    let mut class = None;
    let mut pos = 0;
    while fields.len() < 4 {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated header"))? + pos;
        let line = std::str::from_utf8(&bytes[pos..end]).map_err(|_| bad("non-utf8 header"))?.trim();
        pos = end + 1;
        if let Some(c) = line.strip_prefix("#class") {
            class = Some(c.trim().parse().map_err(|e: String| ImageIoError::Header(e))?);
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        fields.extend(line.split_whitespace().map(str::to_string));
    }
    Ok(Header {
        magic: fields[0].clone(),
        width: fields[1].parse().map_err(|_| bad("width"))?,
        height: fields[2].parse().map_err(|_| bad("height"))?,
        extra: fields[3].clone(),
        class,
        data_start: pos,
    })
}

pub fn write_mask(mask: &SegMask, path: impl AsRef<Path>) -> Result<(), ImageIoError> {
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n#class {}\n{} {}\n255\n", mask.class, mask.width, mask.height)?;
    let bytes: Vec<u8> = mask.data.iter().map(|&v| if v != 0 { 255 } else { 0 }).collect();
    f.write_all(&bytes)?;
    Ok(())
}

/// Reads a PGM mask; any nonzero pixel counts as occupied. `class` is used
/// when the file carries no class comment.
pub fn read_mask(path: impl AsRef<Path>, class: LandmarkClass) -> Result<SegMask, ImageIoError> {
    let bytes = fs::read(path)?;
    let h = parse_header(&bytes)?;
    if h.magic != "P5" || h.extra != "255" {
        return Err(ImageIoError::Header(format!("expected 8-bit P5, got {} {}", h.magic, h.extra)));
    }
    let data = &bytes[h.data_start..];
    if data.len() != h.width * h.height {
        return Err(ImageIoError::Header("pixel payload size mismatch".into()));
    }
    Ok(SegMask {
        width: h.width,
        height: h.height,
        class: h.class.unwrap_or(class),
        data: data.iter().map(|&b| (b != 0) as u8).collect(),
    })
}

pub fn write_costmap(map: &CostMap, path: impl AsRef<Path>) -> Result<(), ImageIoError> {
    let mut f = fs::File::create(path)?;
    write!(f, "Pf\n#class {}\n{} {}\n-1.0\n", map.class, map.width, map.height)?;
    // PFM stores rows bottom to top.
    let mut bytes = Vec::with_capacity(map.data.len() * 4);
    for row in map.data.chunks_exact(map.width).rev() {
        for v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_costmap(path: impl AsRef<Path>, class: LandmarkClass) -> Result<CostMap, ImageIoError> {
    let bytes = fs::read(path)?;
    let h = parse_header(&bytes)?;
    let scale: f64 = h.extra.parse().map_err(|_| ImageIoError::Header("scale".into()))?;
    if h.magic != "Pf" || scale >= 0.0 {
        return Err(ImageIoError::Header("expected little-endian grayscale PFM".into()));
    }
    let payload = &bytes[h.data_start..];
    if payload.len() != h.width * h.height * 4 {
        return Err(ImageIoError::Header("pixel payload size mismatch".into()));
    }
    let vals: Vec<f32> = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    let data = vals.chunks_exact(h.width).rev().flatten().copied().collect();
    Ok(CostMap { width: h.width, height: h.height, class: h.class.unwrap_or(class), data })
}
