//! In-memory raster types: hyperspectral cubes, panchromatic images and class label maps.
//!
//! Pixel data is held as `f32` in band-sequential order, matching the on-disk
//! representation, so a read/write round trip is bit-exact. Numerical code
//! widens to `f64` as needed.

use crate::error::{Error, Result};

/// An L-band reflectance raster stored band-sequentially.
///
/// Value `(band, line, sample)` lives at `band * lines * samples + line * samples + sample`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    samples: usize,
    lines: usize,
    bands: usize,
    wavelengths_nm: Vec<f64>,
    values: Vec<f32>,
}

impl SpectralCube {
    pub fn new(samples: usize, lines: usize, bands: usize, wavelengths_nm: Vec<f64>, values: Vec<f32>) -> Result<Self> {
        if samples == 0 || lines == 0 || bands == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be positive, got {samples}x{lines}x{bands}"
            )));
        }
        if wavelengths_nm.len() != bands {
            return Err(Error::InvalidRaster(format!(
                "{} wavelengths for {bands} bands",
                wavelengths_nm.len()
            )));
        }
        validate_wavelengths(&wavelengths_nm)?;
        let expected = samples * lines * bands;
        if values.len() != expected {
            return Err(Error::InvalidRaster(format!(
                "{} values for a {samples}x{lines}x{bands} cube (expected {expected})",
                values.len()
            )));
        }
        validate_values(&values)?;
        Ok(Self {
            samples,
            lines,
            bands,
            wavelengths_nm,
            values,
        })
    }

    /// Builds a cube from per-pixel spectra given in row-major pixel order.
    pub fn from_pixels(samples: usize, lines: usize, wavelengths_nm: Vec<f64>, pixels: &[Vec<f64>]) -> Result<Self> {
        let bands = wavelengths_nm.len();
        let n = samples * lines;
        if pixels.len() != n {
            return Err(Error::InvalidRaster(format!(
                "{} pixel spectra for a {samples}x{lines} raster",
                pixels.len()
            )));
        }
        let mut values = vec![0f32; n * bands];
        for (k, px) in pixels.iter().enumerate() {
            if px.len() != bands {
                return Err(Error::InvalidRaster(format!(
                    "pixel {k} has {} bands, expected {bands}",
                    px.len()
                )));
            }
            for (b, &v) in px.iter().enumerate() {
                values[b * n + k] = v as f32;
            }
        }
        Self::new(samples, lines, bands, wavelengths_nm, values)
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    /// Number of pixels, `samples * lines`.
    pub fn pixel_count(&self) -> usize {
        self.samples * self.lines
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn band(&self, band: usize) -> &[f32] {
        let n = self.pixel_count();
        &self.values[band * n..(band + 1) * n]
    }

    pub fn get(&self, band: usize, line: usize, sample: usize) -> f32 {
        self.values[(band * self.lines + line) * self.samples + sample]
    }

    /// Spectrum of the pixel at row-major index `pixel`, widened to `f64`.
    pub fn spectrum(&self, pixel: usize) -> Vec<f64> {
        let n = self.pixel_count();
        (0..self.bands).map(|b| f64::from(self.values[b * n + pixel])).collect()
    }

    /// The cube as an L×N matrix in `f64` (row = band, column = pixel), row-major.
    pub fn to_band_matrix(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }
}

/// A single-band broadband intensity image.
#[derive(Debug, Clone, PartialEq)]
pub struct PanImage {
    samples: usize,
    lines: usize,
    values: Vec<f32>,
}

impl PanImage {
    pub fn new(samples: usize, lines: usize, values: Vec<f32>) -> Result<Self> {
        if samples == 0 || lines == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be positive, got {samples}x{lines}"
            )));
        }
        if values.len() != samples * lines {
            return Err(Error::InvalidRaster(format!(
                "{} values for a {samples}x{lines} image",
                values.len()
            )));
        }
        validate_values(&values)?;
        Ok(Self { samples, lines, values })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, line: usize, sample: usize) -> f32 {
        self.values[line * self.samples + sample]
    }

    pub fn scaled(&self, k: f32) -> Result<Self> {
        Self::new(self.samples, self.lines, self.values.iter().map(|v| v * k).collect())
    }
}

/// Integer class map; label 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    samples: usize,
    lines: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(samples: usize, lines: usize, labels: Vec<u32>) -> Result<Self> {
        if samples == 0 || lines == 0 {
            return Err(Error::InvalidLabels(format!(
                "dimensions must be positive, got {samples}x{lines}"
            )));
        }
        if labels.len() != samples * lines {
            return Err(Error::InvalidLabels(format!(
                "{} labels for a {samples}x{lines} map",
                labels.len()
            )));
        }
        Ok(Self { samples, lines, labels })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, line: usize, sample: usize) -> u32 {
        self.labels[line * self.samples + sample]
    }
}

pub(crate) fn validate_wavelengths(wavelengths: &[f64]) -> Result<()> {
    if let Some(w) = wavelengths.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidRaster(format!(
            "wavelength {w} is not a positive finite value"
        )));
    }
    if let Some(pair) = wavelengths.windows(2).find(|p| p[1] <= p[0]) {
        return Err(Error::InvalidRaster(format!(
            "wavelengths must be strictly increasing ({} then {})",
            pair[0], pair[1]
        )));
    }
    Ok(())
}

fn validate_values(values: &[f32]) -> Result<()> {
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidRaster(format!(
            "value {v} at index {i} is not a finite non-negative number"
        )));
    }
    Ok(())
}
