//! Spectral angle (SAD/SAE) and per-band MSE/PSNR quality measures.

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::raster::{LabelMap, SpectralCube};
use crate::report::QualityReport;

/// Spectral angle between two spectra, in degrees.
pub fn sad(m: &[f64], m_hat: &[f64]) -> Result<f64> {
    if m.len() != m_hat.len() {
        return Err(Error::Dimension(format!(
            "spectra have {} and {} bands",
            m.len(),
            m_hat.len()
        )));
    }
    let dot: f64 = m.iter().zip(m_hat).map(|(a, b)| a * b).sum();
    let na = m.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb = m_hat.iter().map(|b| b * b).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("spectral angle of a zero vector".into()));
    }
    let cos = (dot / (na * nb)).clamp(-1.0, 1.0);
    if cos > 0.999 {
        // near-parallel: acos loses precision, use the chord between unit vectors
        let chord = m
            .iter()
            .zip(m_hat)
            .map(|(a, b)| (a / na - b / nb).powi(2))
            .sum::<f64>()
            .sqrt();
        return Ok((2.0 * (chord / 2.0).min(1.0).asin()).to_degrees());
    }
    Ok(cos.acos().to_degrees())
}

/// Spectral angle error with its pixel bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaeSummary {
    pub sae_degrees: f64,
    pub pixels_used: usize,
    pub pixels_masked: usize,
    /// Pixels skipped because the reference or estimate spectrum is all zero.
    pub pixels_zero: usize,
}

fn check_geometry(reference: &SpectralCube, estimate: &SpectralCube) -> Result<()> {
    if reference.samples() != estimate.samples()
        || reference.lines() != estimate.lines()
        || reference.bands() != estimate.bands()
    {
        return Err(Error::Dimension(format!(
            "reference is {}x{}x{}, estimate is {}x{}x{}",
            reference.samples(),
            reference.lines(),
            reference.bands(),
            estimate.samples(),
            estimate.lines(),
            estimate.bands()
        )));
    }
    Ok(())
}

/// Root-mean-square SAD over the scene.
///
/// With a mask, pixels labelled 0 are left out.
pub fn sae(reference: &SpectralCube, estimate: &SpectralCube, mask: Option<&LabelMap>) -> Result<SaeSummary> {
    check_geometry(reference, estimate)?;
    if let Some(m) = mask {
        if m.samples() != reference.samples() || m.lines() != reference.lines() {
            return Err(Error::Dimension(format!(
                "mask is {}x{}, cube is {}x{}",
                m.samples(),
                m.lines(),
                reference.samples(),
                reference.lines()
            )));
        }
    }
    let n = reference.pixel_count();
    let angles: Vec<Option<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|k| {
            if mask.is_some_and(|m| m.labels()[k] == 0) {
                return None;
            }
            let a = reference.spectrum(k);
            let b = estimate.spectrum(k);
            Some(sad(&a, &b).ok())
        })
        .collect();
    let mut summary = SaeSummary {
        sae_degrees: 0.0,
        pixels_used: 0,
        pixels_masked: 0,
        pixels_zero: 0,
    };
    let mut sum_sq = 0.0;
    for a in angles {
        match a {
            None => summary.pixels_masked += 1,
            Some(None) => summary.pixels_zero += 1,
            Some(Some(deg)) => {
                sum_sq += deg * deg;
                summary.pixels_used += 1;
            }
        }
    }
    if summary.pixels_used == 0 {
        return Err(Error::Degenerate("no unmasked non-zero pixels to compare".into()));
    }
    summary.sae_degrees = (sum_sq / summary.pixels_used as f64).sqrt();
    Ok(summary)
}

pub fn mse_band(reference: &[f32], estimate: &[f32]) -> Result<f64> {
    if reference.len() != estimate.len() || reference.is_empty() {
        return Err(Error::Dimension(format!(
            "bands have {} and {} pixels",
            reference.len(),
            estimate.len()
        )));
    }
    let sum: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum();
    Ok(sum / reference.len() as f64)
}

/// `10·log10(MAX² / MSE)` with MAX the reference band maximum.
pub fn psnr_from(max: f64, mse: f64) -> Option<f64> {
    (mse > 0.0).then(|| 10.0 * (max * max / mse).log10())
}

/// PSNR of one band in dB; `None` when the band is reproduced exactly.
pub fn psnr_band(reference: &[f32], estimate: &[f32]) -> Result<Option<f64>> {
    let mse = mse_band(reference, estimate)?;
    let max = reference.iter().copied().fold(0f32, f32::max);
    if max <= 0.0 {
        return Err(Error::Degenerate("reference band is all zero (MAX = 0)".into()));
    }
    Ok(psnr_from(f64::from(max), mse))
}

/// Full quality report: SAE plus per-band MSE and PSNR.
///
/// `psnr_mean_db` averages the finite per-band values.
pub fn evaluate(reference: &SpectralCube, estimate: &SpectralCube, mask: Option<&LabelMap>) -> Result<QualityReport> {
    check_geometry(reference, estimate)?;
    let summary = sae(reference, estimate, mask)?;
    let per_band: Vec<(f64, Option<f64>)> = (0..reference.bands())
        .into_par_iter()
        .map(|b| {
            let (r, e) = (reference.band(b), estimate.band(b));
            let mse = mse_band(r, e)?;
            let psnr = psnr_band(r, e)?;
            Ok((mse, psnr))
        })
        .collect::<Result<_>>()?;
    let finite: Vec<f64> = per_band.iter().filter_map(|(_, p)| *p).collect();
    let psnr_mean_db = (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);

    let mut parameters = Map::new();
    parameters.insert("bands".into(), json!(reference.bands()));
    parameters.insert("pixels".into(), json!(reference.pixel_count()));
    parameters.insert("sae_pixels_used".into(), json!(summary.pixels_used));
    parameters.insert("sae_pixels_masked".into(), json!(summary.pixels_masked));
    parameters.insert("sae_pixels_zero".into(), json!(summary.pixels_zero));
    parameters.insert("psnr_infinite_bands".into(), json!(per_band.len() - finite.len()));
    parameters.insert("mask".into(), Value::Bool(mask.is_some()));

    Ok(QualityReport {
        sae_degrees: summary.sae_degrees,
        mse_per_band: per_band.iter().map(|(m, _)| *m).collect(),
        psnr_per_band_db: per_band.into_iter().map(|(_, p)| p).collect(),
        psnr_mean_db,
        parameters,
    })
}
