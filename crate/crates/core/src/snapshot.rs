//! NSFLD1 field snapshots: the 6-byte magic `NSFLD1`, `N` as a little-endian
//! `u32`, then `3·N³` coefficients as little-endian `(re, im)` `f64` pairs.
//!
//! Coefficients are ordered by signed wavevector, lexicographically with
//! `kx` slowest and each axis running from `-N/2` to `N/2 - 1`; the three
//! velocity components of one wavevector are adjacent.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{FourierField, Mode};
use crate::grid::Grid;
use crate::renorm::{renormed_norm, RenormContext};

pub const MAGIC: &[u8; 6] = b"NSFLD1";

/// Storage position `i` of a signed wavevector component on an `N` grid.
fn signed_axis(n: usize) -> impl Iterator<Item = i64> {
    let h = (n / 2) as i64;
    -h..h
}

fn storage_order(grid: Grid) -> Vec<usize> {
    let n = grid.n();
    let mut order = Vec::with_capacity(grid.len());
    for kx in signed_axis(n) {
        for ky in signed_axis(n) {
            for kz in signed_axis(n) {
                let wrap = |k: i64| k.rem_euclid(n as i64) as usize;
                order.push(grid.index(wrap(kx), wrap(ky), wrap(kz)));
            }
        }
    }
    order
}

pub fn encode(u: &FourierField) -> Vec<u8> {
    let grid = u.grid();
    let mut out = Vec::with_capacity(10 + grid.len() * 48);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    for idx in storage_order(grid) {
        for c in &u.coeffs()[idx] {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

/// Parses and validates a snapshot: support, conjugate symmetry and
/// divergence are checked as for any constructed field.
pub fn decode(bytes: &[u8]) -> Result<FourierField> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(LabError::Snapshot("missing NSFLD1 magic".into()));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let grid = Grid::new(n).map_err(|e| LabError::Snapshot(format!("bad grid size: {e}")))?;
    let expected = 10 + grid.len() * 48;
    if bytes.len() != expected {
        return Err(LabError::Snapshot(format!(
            "expected {expected} bytes for N={n}, found {}",
            bytes.len()
        )));
    }
    let mut coeffs = vec![Mode::default(); grid.len()];
    let mut chunks = bytes[10..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for idx in storage_order(grid) {
        for c in coeffs[idx].iter_mut() {
            let re = chunks.next().expect("length checked");
            let im = chunks.next().expect("length checked");
            *c = Complex64::new(re, im);
        }
    }
    FourierField::from_coefficients(grid, coeffs).map_err(|e| LabError::Snapshot(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNorms {
    pub h: f64,
    pub v: f64,
    pub h1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub format: String,
    pub n: usize,
    pub seed: Option<u64>,
    pub step: Option<usize>,
    pub time: Option<f64>,
    pub norms: SnapshotNorms,
    /// Free-form creation parameters.
    pub params: serde_json::Value,
}

impl SnapshotManifest {
    pub fn describe(u: &FourierField, ctx: Option<&RenormContext>) -> Result<Self> {
        Ok(Self {
            format: "NSFLD1".into(),
            n: u.grid().n(),
            seed: None,
            step: None,
            time: None,
            norms: SnapshotNorms {
                h: u.norm(),
                v: u.sobolev_norm(1)?,
                h1: ctx.map(|c| renormed_norm(u, c)).transpose()?,
            },
            params: serde_json::Value::Null,
        })
    }
}

/// Path of the manifest that accompanies a snapshot file.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the snapshot and its manifest (`<path>.json`).
pub fn write_snapshot(path: &Path, u: &FourierField, manifest: &SnapshotManifest) -> Result<()> {
    if manifest.n != u.grid().n() {
        return Err(LabError::Snapshot(format!(
            "manifest grid {} does not match field grid {}",
            manifest.n,
            u.grid().n()
        )));
    }
    fs::File::create(path)?.write_all(&encode(u))?;
    fs::write(manifest_path(path), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<FourierField> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn read_manifest(path: &Path) -> Result<SnapshotManifest> {
    Ok(serde_json::from_str(&fs::read_to_string(manifest_path(path))?)?)
}
