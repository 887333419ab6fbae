//! CSV samples plus a JSON header describing the grid and declared support.

use super::grid1d::{Grid1, GridFn1D};
use super::grid2d::GridFn2D;
use super::interval::{Box2, Interval};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header1D {
    pub grid: Grid1,
    pub support: Option<Interval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header2D {
    pub grid0: Grid1,
    pub grid1: Grid1,
    pub support: Option<Box2>,
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn csv_1d(f: &GridFn1D) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["x", "value"])?;
    for (i, v) in f.samples().iter().enumerate() {
        w.write_record([fmt(f.x(i)), fmt(*v)])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn csv_2d(f: &GridFn2D) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["x", "y", "value"])?;
    let (g0, g1) = f.grids();
    for i in 0..g0.n {
        for (j, v) in f.row(i).iter().enumerate() {
            w.write_record([fmt(g0.x(i)), fmt(g1.x(j)), fmt(*v)])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Shortest representation that round-trips exactly.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn save_1d(f: &GridFn1D, dir: &Path, stem: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.csv")), &csv_1d(f)?)?;
    let header = Header1D { grid: f.grid(), support: f.support() };
    write_atomic(&dir.join(format!("{stem}.json")), &serde_json::to_vec_pretty(&header)?)
}

pub fn save_2d(f: &GridFn2D, dir: &Path, stem: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.csv")), &csv_2d(f)?)?;
    let (grid0, grid1) = f.grids();
    let header = Header2D { grid0, grid1, support: f.support() };
    write_atomic(&dir.join(format!("{stem}.json")), &serde_json::to_vec_pretty(&header)?)
}

pub fn load_1d(dir: &Path, stem: &str) -> Result<GridFn1D> {
    let header: Header1D = serde_json::from_slice(&std::fs::read(dir.join(format!("{stem}.json")))?)?;
    let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
    let mut samples = Vec::with_capacity(header.grid.n);
    for rec in r.records() {
        let rec = rec?;
        let v: f64 = rec
            .get(1)
            .ok_or_else(|| Error::invalid("missing value column"))?
            .parse()
            .map_err(|e| Error::invalid(format!("bad sample: {e}")))?;
        samples.push(v);
    }
    GridFn1D::new(header.grid, samples, header.support)
}

pub fn load_2d(dir: &Path, stem: &str) -> Result<GridFn2D> {
    let header: Header2D = serde_json::from_slice(&std::fs::read(dir.join(format!("{stem}.json")))?)?;
    let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
    let mut samples = Vec::with_capacity(header.grid0.n * header.grid1.n);
    for rec in r.records() {
        let rec = rec?;
        let v: f64 = rec
            .get(2)
            .ok_or_else(|| Error::invalid("missing value column"))?
            .parse()
            .map_err(|e| Error::invalid(format!("bad sample: {e}")))?;
        samples.push(v);
    }
    GridFn2D::new(header.grid0, header.grid1, samples, header.support)
}
