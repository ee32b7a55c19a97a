//! File formats at the tool boundary.
//!
//! * cubes and PAN images: ENVI-compatible text header + little-endian float32 BSQ data
//! * label maps: integer CSV, one text line per raster line
//! * spectral libraries and endmember signatures: `wavelength_nm,<name>...` CSV
//! * quality reports and run manifests: JSON
//!
//! Every writer goes through [`atomic_write`], so an interrupted run never leaves a
//! half-written artifact behind.

mod envi;
mod text;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::QualityReport;

pub use envi::{header_path, read_cube, read_pan, write_cube, write_pan};
pub(crate) use envi::{write_cube_styled, HeaderStyle};
pub use text::{
    read_cost_trace, read_labels, read_library, read_signatures, write_cost_trace, write_labels, write_library,
    write_signatures,
};

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".hyperfuse-")
        .tempfile_in(dir)
        .map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_report(report: &QualityReport, path: &Path) -> Result<()> {
    write_json(report, path)
}

pub fn read_report(path: &Path) -> Result<QualityReport> {
    read_json(path)
}
