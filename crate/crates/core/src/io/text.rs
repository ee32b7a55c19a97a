//! CSV encodings: label maps, spectral libraries, endmember signatures and cost traces.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::library::{Material, SpectralLibrary, MAX_LIBRARY_REFLECTANCE};
use crate::raster::LabelMap;

use super::atomic_write;

fn open_csv(path: &Path, has_headers: bool) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

pub fn read_labels(path: &Path) -> Result<LabelMap> {
    let mut reader = open_csv(path, false)?;
    let mut labels = Vec::new();
    let mut samples = None;
    let mut lines = 0usize;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match samples {
            None => samples = Some(rec.len()),
            Some(n) if n != rec.len() => {
                return Err(Error::format(
                    path,
                    format!("line {}: {} cells, expected {n} (ragged rows)", row + 1, rec.len()),
                ))
            }
            _ => {}
        }
        for (col, cell) in rec.iter().enumerate() {
            let v: i64 = cell.parse().map_err(|_| {
                Error::format(
                    path,
                    format!("line {}, column {}: '{cell}' is not an integer", row + 1, col + 1),
                )
            })?;
            if v < 0 {
                return Err(Error::format(
                    path,
                    format!("line {}, column {}: negative label {v}", row + 1, col + 1),
                ));
            }
            let v =
                u32::try_from(v).map_err(|_| Error::format(path, format!("line {}: label {v} too large", row + 1)))?;
            labels.push(v);
        }
        lines += 1;
    }
    let samples = samples.ok_or_else(|| Error::format(path, "label file is empty"))?;
    LabelMap::new(samples, lines, labels).map_err(|e| Error::format(path, e.to_string()))
}

pub(crate) fn render_labels(samples: usize, labels: &[u32]) -> String {
    let mut out = String::with_capacity(labels.len() * 3);
    for row in labels.chunks(samples) {
        let cells: Vec<String> = row.iter().map(u32::to_string).collect();
        out += &cells.join(",");
        out.push('\n');
    }
    out
}

pub fn write_labels(map: &LabelMap, path: &Path) -> Result<()> {
    atomic_write(path, render_labels(map.samples(), map.labels()).as_bytes())
}

/// Wavelength column plus named value columns, as found in library and signature CSVs.
struct SpectralTable {
    wavelengths: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn read_spectral_table(path: &Path) -> Result<SpectralTable> {
    let mut reader = open_csv(path, true)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() || !headers[0].eq_ignore_ascii_case("wavelength_nm") {
        return Err(Error::format(path, "first header cell must be 'wavelength_nm'"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::format(path, "no material columns"));
    }
    if let Some(i) = names.iter().position(|n| n.is_empty()) {
        return Err(Error::InvalidLibrary(format!(
            "{}: empty material name in column {}",
            path.display(),
            i + 2
        )));
    }
    let mut wavelengths = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = row + 2;
        if rec.len() != names.len() + 1 {
            return Err(Error::format(
                path,
                format!("line {line}: {} cells, expected {}", rec.len(), names.len() + 1),
            ));
        }
        let mut nums = rec.iter().enumerate().map(|(col, cell)| {
            cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::format(
                    path,
                    format!("line {line}, column {}: '{cell}' is not a number", col + 1),
                )
            })
        });
        let w = nums.next().expect("record has at least one cell")?;
        if let Some(&prev) = wavelengths.last() {
            if w <= prev {
                return Err(Error::InvalidLibrary(format!(
                    "{}: line {line}: wavelength {w} does not increase (previous {prev})",
                    path.display()
                )));
            }
        }
        wavelengths.push(w);
        for (col, v) in columns.iter_mut().zip(nums) {
            col.push(v?);
        }
    }
    if wavelengths.is_empty() {
        return Err(Error::format(path, "no wavelength rows"));
    }
    Ok(SpectralTable {
        wavelengths,
        names,
        columns,
    })
}

fn table_to_materials(path: &Path, t: SpectralTable, max_reflectance: f64) -> Result<Vec<Material>> {
    t.names
        .into_iter()
        .zip(t.columns)
        .map(|(name, reflectance)| {
            let m = Material {
                name,
                wavelengths_nm: t.wavelengths.clone(),
                reflectance,
            };
            m.validate(max_reflectance).map_err(|e| match e {
                Error::InvalidLibrary(msg) => Error::InvalidLibrary(format!("{}: {msg}", path.display())),
                other => other,
            })?;
            Ok(m)
        })
        .collect()
}

pub fn read_library(path: &Path) -> Result<SpectralLibrary> {
    let table = read_spectral_table(path)?;
    SpectralLibrary::new(table_to_materials(path, table, MAX_LIBRARY_REFLECTANCE)?)
}

/// Writes materials that share one wavelength grid as a library CSV.
pub fn write_library(library: &SpectralLibrary, path: &Path) -> Result<()> {
    let Some(first) = library.materials().first() else {
        return Err(Error::InvalidLibrary("cannot write an empty library".into()));
    };
    let grid = &first.wavelengths_nm;
    if library.materials().iter().any(|m| &m.wavelengths_nm != grid) {
        return Err(Error::InvalidLibrary(
            "materials must share one wavelength grid to be written as CSV".into(),
        ));
    }
    let columns: Vec<&[f64]> = library.materials().iter().map(|m| m.reflectance.as_slice()).collect();
    let names: Vec<&str> = library.materials().iter().map(|m| m.name.as_str()).collect();
    write_spectral_table(path, grid, &names, &columns)
}

fn write_spectral_table(path: &Path, wavelengths: &[f64], names: &[&str], columns: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["wavelength_nm".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, wl) in wavelengths.iter().enumerate() {
        let mut row = vec![wl.to_string()];
        row.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    atomic_write(path, &bytes)
}

/// Endmember signature table: `wavelength_nm,e1,...,eP`, one column per endmember.
pub fn write_signatures(path: &Path, wavelengths: &[f64], signatures: &[Vec<f64>]) -> Result<()> {
    let names: Vec<String> = (1..=signatures.len()).map(|i| format!("e{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let cols: Vec<&[f64]> = signatures.iter().map(Vec::as_slice).collect();
    write_spectral_table(path, wavelengths, &name_refs, &cols)
}

/// Reads a signature table; returns the wavelength grid and one vector per endmember.
///
/// Unlike library files, signature magnitudes are only required to be finite and
/// non-negative.
pub fn read_signatures(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let table = read_spectral_table(path)?;
    let wavelengths = table.wavelengths.clone();
    let materials = table_to_materials(path, table, f64::INFINITY)?;
    Ok((wavelengths, materials.into_iter().map(|m| m.reflectance).collect()))
}

pub fn write_cost_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut s = String::from("iteration,cost\n");
    for (i, c) in trace.iter().enumerate() {
        s += &format!("{i},{c}\n");
    }
    atomic_write(path, s.as_bytes())
}

pub fn read_cost_trace(path: &Path) -> Result<Vec<f64>> {
    let mut reader = open_csv(path, true)?;
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            rec.get(1)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| Error::format(path, "bad cost trace row"))
        })
        .collect()
}
