//! ENVI-style header plus raw little-endian float32 band-sequential data.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::raster::{PanImage, SpectralCube};

use super::atomic_write;

/// Header file paired with a raster data file: `scene.bsq` -> `scene.hdr`.
pub fn header_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("hdr")
}

/// Optional extras for the header text.
#[derive(Debug, Clone)]
pub(crate) struct HeaderStyle<'a> {
    pub description: &'a str,
    pub wavelength_units: &'a str,
    pub band_names: Option<Vec<String>>,
}

impl Default for HeaderStyle<'_> {
    fn default() -> Self {
        Self {
            description: "hyperfuse cube",
            wavelength_units: "Nanometers",
            band_names: None,
        }
    }
}

#[derive(Debug)]
struct Header {
    samples: usize,
    lines: usize,
    bands: usize,
    header_offset: usize,
    wavelengths: Option<Vec<f64>>,
}

fn format_list<T: std::fmt::Display>(items: &[T]) -> String {
    let body: Vec<String> = items.iter().map(|x| x.to_string()).collect();
    format!("{{ {} }}", body.join(", "))
}

fn render_header(
    samples: usize,
    lines: usize,
    bands: usize,
    wavelengths: Option<&[f64]>,
    style: &HeaderStyle<'_>,
) -> String {
    let mut s = String::from("ENVI\n");
    s += &format!("description = {{{}}}\n", style.description);
    s += &format!("samples = {samples}\n");
    s += &format!("lines = {lines}\n");
    s += &format!("bands = {bands}\n");
    s += "header offset = 0\n";
    s += "file type = ENVI Standard\n";
    s += "data type = 4\n";
    s += "interleave = bsq\n";
    s += "byte order = 0\n";
    if let Some(names) = &style.band_names {
        s += &format!("band names = {}\n", format_list(names));
    }
    if let Some(w) = wavelengths {
        s += &format!("wavelength units = {}\n", style.wavelength_units);
        s += &format!("wavelength = {}\n", format_list(w));
    }
    s
}

fn parse_header(path: &Path, text: &str) -> Result<Header> {
    let mut lines = text.lines();
    match lines.by_ref().map(str::trim).find(|l| !l.is_empty()) {
        Some("ENVI") => {}
        _ => return Err(Error::format(path, "header must start with 'ENVI'")),
    }

    let mut fields: HashMap<String, String> = HashMap::new();
    let mut pending: Option<(String, String)> = None;
    for raw in lines {
        if let Some((key, mut acc)) = pending.take() {
            acc.push(' ');
            acc.push_str(raw.trim());
            if acc.contains('}') {
                fields.insert(key, acc);
            } else {
                pending = Some((key, acc));
            }
            continue;
        }
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::format(path, format!("malformed header line '{line}'")));
        };
        let key = k.trim().to_ascii_lowercase();
        let value = v.trim().to_string();
        if value.starts_with('{') && !value.contains('}') {
            pending = Some((key, value));
        } else {
            fields.insert(key, value);
        }
    }
    if let Some((key, _)) = pending {
        return Err(Error::format(path, format!("unterminated '{{' in header key '{key}'")));
    }

    let int = |key: &str| -> Result<usize> {
        let v = fields
            .get(key)
            .ok_or_else(|| Error::format(path, format!("missing header key '{key}'")))?;
        v.parse::<usize>()
            .map_err(|_| Error::format(path, format!("header key '{key}' has non-integer value '{v}'")))
    };
    let samples = int("samples")?;
    let lines = int("lines")?;
    let bands = int("bands")?;
    let header_offset = if fields.contains_key("header offset") {
        int("header offset")?
    } else {
        0
    };
    if int("data type")? != 4 {
        return Err(Error::format(path, "only 'data type = 4' (float32) is supported"));
    }
    if int("byte order")? != 0 {
        return Err(Error::format(
            path,
            "only 'byte order = 0' (little-endian) is supported",
        ));
    }
    let interleave = fields
        .get("interleave")
        .ok_or_else(|| Error::format(path, "missing header key 'interleave'"))?;
    if !interleave.eq_ignore_ascii_case("bsq") {
        return Err(Error::format(
            path,
            format!("unsupported interleave '{interleave}' (only bsq)"),
        ));
    }
    if samples == 0 || lines == 0 || bands == 0 {
        return Err(Error::format(path, "samples, lines and bands must be positive"));
    }

    let wavelengths = match fields.get("wavelength") {
        None => None,
        Some(v) => {
            let inner = v
                .trim()
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(|| Error::format(path, "wavelength list must be enclosed in braces"))?;
            let parsed = inner
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::format(path, format!("bad wavelength '{s}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            Some(parsed)
        }
    };

    Ok(Header {
        samples,
        lines,
        bands,
        header_offset,
        wavelengths,
    })
}

fn read_raw(data_path: &Path) -> Result<(Header, Vec<f32>)> {
    let hdr_path = header_path(data_path);
    let text = fs::read_to_string(&hdr_path).map_err(|e| Error::io(&hdr_path, e))?;
    let header = parse_header(&hdr_path, &text)?;
    let bytes = fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
    let count = header.samples * header.lines * header.bands;
    let expected = (header.header_offset + count * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: data_path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let values = bytes[header.header_offset..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((header, values))
}

fn encode(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_cube(path: &Path) -> Result<SpectralCube> {
    let (h, values) = read_raw(path)?;
    let hdr_path = header_path(path);
    let wavelengths = h
        .wavelengths
        .ok_or_else(|| Error::format(&hdr_path, "missing header key 'wavelength'"))?;
    if wavelengths.len() != h.bands {
        return Err(Error::format(
            &hdr_path,
            format!(
                "bands = {} but wavelength list has {} entries",
                h.bands,
                wavelengths.len()
            ),
        ));
    }
    if let Some(p) = wavelengths.windows(2).find(|p| p[1] <= p[0]) {
        return Err(Error::format(
            &hdr_path,
            format!("wavelengths not strictly increasing ({} then {})", p[0], p[1]),
        ));
    }
    SpectralCube::new(h.samples, h.lines, h.bands, wavelengths, values).map_err(|e| Error::format(path, e.to_string()))
}

pub(crate) fn write_cube_styled(cube: &SpectralCube, path: &Path, style: &HeaderStyle<'_>) -> Result<()> {
    let header = render_header(
        cube.samples(),
        cube.lines(),
        cube.bands(),
        Some(cube.wavelengths_nm()),
        style,
    );
    atomic_write(path, &encode(cube.values()))?;
    atomic_write(&header_path(path), header.as_bytes())
}

pub fn write_cube(cube: &SpectralCube, path: &Path) -> Result<()> {
    write_cube_styled(cube, path, &HeaderStyle::default())
}

pub fn read_pan(path: &Path) -> Result<PanImage> {
    let (h, values) = read_raw(path)?;
    if h.bands != 1 {
        return Err(Error::format(
            header_path(path),
            format!("panchromatic image must have 1 band, header says {}", h.bands),
        ));
    }
    PanImage::new(h.samples, h.lines, values).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_pan(pan: &PanImage, path: &Path) -> Result<()> {
    let style = HeaderStyle {
        description: "hyperfuse panchromatic image",
        ..HeaderStyle::default()
    };
    let header = render_header(pan.samples(), pan.lines(), 1, None, &style);
    atomic_write(path, &encode(pan.values()))?;
    atomic_write(&header_path(path), header.as_bytes())
}
