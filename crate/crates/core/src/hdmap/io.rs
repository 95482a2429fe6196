//! Plain-text map format.
//!
//! ```text
//! semloc-map 1
//! # comment
//! landmark <id> <class> <n> x1 y1 z1 ... xn yn zn
//! ```
//!
//! Coordinates are meters in the world frame; `<class>` is one of
//! `lane_marking`, `pole`, `signboard`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use super::{HdMap, Landmark, LandmarkClass, MapError};

pub const MAP_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "semloc-map";

pub fn load_map(path: impl AsRef<Path>) -> Result<HdMap, MapError> {
    let text = fs::read_to_string(path)?;
    parse_map(&text)
}

pub fn parse_map(text: &str) -> Result<HdMap, MapError> {
    let perr = |line: usize, message: String| MapError::Parse { line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
    let mut head = header.split_whitespace();
    if head.next() != Some(MAGIC) {
        return Err(perr(hline, format!("expected '{MAGIC} <version>' header")));
    }
    let version: u32 = head
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(hline, "missing or malformed version".into()))?;
    if version != MAP_FORMAT_VERSION {
        return Err(perr(hline, format!("unsupported map version {version}")));
    }

    let mut landmarks = Vec::new();
    for (line, body) in lines {
        let mut tok = body.split_whitespace();
        match tok.next() {
            Some("landmark") => {}
            Some(other) => return Err(perr(line, format!("unknown record '{other}'"))),
            None => continue,
        }
        let id: u64 = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(line, "bad landmark id".into()))?;
        let class: LandmarkClass = tok
            .next()
            .ok_or_else(|| perr(line, "missing class".into()))?
            .parse()
            .map_err(|e| perr(line, e))?;
        let n: usize = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(line, "bad point count".into()))?;
        let coords = tok
            .map(|t| t.parse::<f64>().map_err(|_| perr(line, format!("bad coordinate '{t}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        if coords.len() != 3 * n {
            return Err(perr(line, format!("expected {} coordinates for {n} points, got {}", 3 * n, coords.len())));
        }
        let points = coords.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
        landmarks.push(Landmark::new(id, class, points)?);
    }
    HdMap::new(landmarks)
}

pub fn write_map(map: &HdMap) -> String {
    let mut out = format!("{MAGIC} {MAP_FORMAT_VERSION}\n");
    for lm in map.landmarks() {
        let _ = write!(out, "landmark {} {} {}", lm.id, lm.class, lm.points.len());
        for p in &lm.points {
            // `{:?}` on f64 is shortest round-trip.
            let _ = write!(out, " {:?} {:?} {:?}", p.x, p.y, p.z);
        }
        out.push('\n');
    }
    out
}

pub fn save_map(map: &HdMap, path: impl AsRef<Path>) -> Result<(), MapError> {
    fs::write(path, write_map(map))?;
    Ok(())
}
