//! Simulated-scene generation: a high-resolution cube painted from a class map and a
//! material library, box downsampling to the hyperspectral resolution, and a
//! panchromatic image synthesized from the visible bands.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{Material, SpectralLibrary};
use crate::raster::{LabelMap, PanImage, SpectralCube};

pub const DEFAULT_PAN_RANGE_NM: (f64, f64) = (400.0, 700.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Ratio between the high- and low-resolution pixel pitch.
    pub scale: usize,
    /// Additive Gaussian noise level; `None` produces a noiseless cube.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_pan_range")]
    pub pan_range_nm: (f64, f64),
    /// Class id in the label map -> material name in the library.
    #[serde(default)]
    pub class_mapping: BTreeMap<u32, String>,
    #[serde(default)]
    pub seed: u64,
}

fn default_pan_range() -> (f64, f64) {
    DEFAULT_PAN_RANGE_NM
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            scale: 3,
            snr_db: None,
            pan_range_nm: DEFAULT_PAN_RANGE_NM,
            class_mapping: BTreeMap::new(),
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale < 2 {
            return Err(Error::Config(format!("scale must be >= 2, got {}", self.scale)));
        }
        let (lo, hi) = self.pan_range_nm;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("PAN range [{lo}, {hi}] is not a valid interval")));
        }
        if self.class_mapping.contains_key(&0) {
            return Err(Error::Config("class 0 is background and cannot be mapped".into()));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::Config(format!("snr_db must be finite, got {snr}")));
            }
        }
        Ok(())
    }
}

/// `count` evenly spaced wavelengths from `start_nm` to `end_nm` inclusive.
pub fn linear_grid(start_nm: f64, end_nm: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start_nm],
        _ => {
            let step = (end_nm - start_nm) / (count - 1) as f64;
            (0..count).map(|i| start_nm + step * i as f64).collect()
        }
    }
}

/// Piecewise-linear interpolation of a material's reflectance onto `target_nm`.
pub fn resample_signature(material: &Material, target_nm: &[f64]) -> Result<Vec<f64>> {
    let w = &material.wavelengths_nm;
    let r = &material.reflectance;
    let (low, high) = (w[0], w[w.len() - 1]);
    target_nm
        .iter()
        .map(|&t| {
            if !(t >= low && t <= high) {
                return Err(Error::OutOfSupport {
                    material: material.name.clone(),
                    wavelength: t,
                    low,
                    high,
                });
            }
            // first index with w[i] >= t
            let i = w.partition_point(|&x| x < t);
            if w[i] == t {
                return Ok(r[i]);
            }
            let (w0, w1) = (w[i - 1], w[i]);
            let f = (t - w0) / (w1 - w0);
            Ok(r[i - 1] + f * (r[i] - r[i - 1]))
        })
        .collect()
}

/// Paints each labelled pixel with its class material resampled to `target_nm`.
///
/// Background pixels (label 0) get an all-zero spectrum. With `snr_db` set, each
/// sample receives zero-mean Gaussian noise whose variance is the mean signal power
/// divided by `10^(snr_db/10)`, and the result is clamped at zero. Noise for pixel
/// `k` is drawn from ChaCha stream `k` of the configured seed, so the output does not
/// depend on evaluation order.
pub fn synthesize_hr_cube(
    labels: &LabelMap,
    library: &SpectralLibrary,
    cfg: &SimulationConfig,
    target_nm: &[f64],
) -> Result<SpectralCube> {
    cfg.validate()?;
    if target_nm.is_empty() {
        return Err(Error::InvalidArgument("empty target wavelength grid".into()));
    }
    crate::raster::validate_wavelengths(target_nm)?;

    let mut signatures: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for &label in labels.labels() {
        if label == 0 || signatures.contains_key(&label) {
            continue;
        }
        let name = cfg.class_mapping.get(&label).ok_or(Error::UnmappedClass(label))?;
        let material = library.get(name).ok_or_else(|| Error::UnknownMaterial(name.clone()))?;
        signatures.insert(label, resample_signature(material, target_nm)?);
    }

    let bands = target_nm.len();
    let zero = vec![0.0; bands];
    let mut pixels: Vec<Vec<f64>> = labels
        .labels()
        .iter()
        .map(|l| signatures.get(l).unwrap_or(&zero).clone())
        .collect();

    if let Some(snr_db) = cfg.snr_db {
        let count = (pixels.len() * bands) as f64;
        let power: f64 = pixels.iter().flatten().map(|v| v * v).sum::<f64>() / count;
        let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
        let seed = cfg.seed;
        pixels.par_iter_mut().enumerate().for_each(|(k, px)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            for v in px.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v = (*v + sigma * z).max(0.0);
            }
        });
    }

    SpectralCube::from_pixels(labels.samples(), labels.lines(), target_nm.to_vec(), &pixels)
}

/// Non-overlapping `scale`×`scale` box average of every band.
pub fn downsample(cube: &SpectralCube, scale: usize) -> Result<SpectralCube> {
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let (s, l) = (cube.samples(), cube.lines());
    if s % scale != 0 || l % scale != 0 {
        return Err(Error::Dimension(format!(
            "{s}x{l} raster is not divisible by scale {scale}"
        )));
    }
    let (os, ol) = (s / scale, l / scale);
    let area = (scale * scale) as f64;
    let values: Vec<f32> = (0..cube.bands())
        .into_par_iter()
        .flat_map_iter(|b| {
            let band = cube.band(b);
            (0..ol * os).map(move |idx| {
                let (oy, ox) = (idx / os, idx % os);
                let mut acc = 0.0f64;
                for y in oy * scale..(oy + 1) * scale {
                    for x in ox * scale..(ox + 1) * scale {
                        acc += f64::from(band[y * s + x]);
                    }
                }
                (acc / area) as f32
            })
        })
        .collect();
    SpectralCube::new(os, ol, cube.bands(), cube.wavelengths_nm().to_vec(), values)
}

/// Unweighted mean over every band whose wavelength lies in `[low, high]`.
pub fn synthesize_pan(cube: &SpectralCube, range_nm: (f64, f64)) -> Result<PanImage> {
    let (low, high) = range_nm;
    let in_range: Vec<usize> = cube
        .wavelengths_nm()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w >= low && w <= high)
        .map(|(i, _)| i)
        .collect();
    if in_range.is_empty() {
        return Err(Error::NoBandInRange { low, high });
    }
    let n = cube.pixel_count();
    let count = in_range.len() as f64;
    let values: Vec<f32> = (0..n)
        .into_par_iter()
        .map(|k| {
            let sum: f64 = in_range.iter().map(|&b| f64::from(cube.band(b)[k])).sum();
            (sum / count) as f32
        })
        .collect();
    PanImage::new(cube.samples(), cube.lines(), values)
}
