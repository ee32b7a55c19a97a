use std::collections::HashSet;

use crate::error::{Error, Result};

/// Highest reflectance accepted in a library file; values a little above 1 occur
/// in calibrated field spectra.
pub const MAX_LIBRARY_REFLECTANCE: f64 = 1.5;

/// A named material signature sampled on its own wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub wavelengths_nm: Vec<f64>,
    pub reflectance: Vec<f64>,
}

impl Material {
    pub fn new(name: impl Into<String>, wavelengths_nm: Vec<f64>, reflectance: Vec<f64>) -> Result<Self> {
        let m = Self {
            name: name.into(),
            wavelengths_nm,
            reflectance,
        };
        m.validate(MAX_LIBRARY_REFLECTANCE)?;
        Ok(m)
    }

    pub(crate) fn validate(&self, max_reflectance: f64) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidLibrary("empty material name".into()));
        }
        if self.wavelengths_nm.is_empty() {
            return Err(Error::InvalidLibrary(format!(
                "material '{}' has no samples",
                self.name
            )));
        }
        if self.wavelengths_nm.len() != self.reflectance.len() {
            return Err(Error::InvalidLibrary(format!(
                "material '{}' has {} wavelengths but {} reflectance values",
                self.name,
                self.wavelengths_nm.len(),
                self.reflectance.len()
            )));
        }
        if self.wavelengths_nm.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidLibrary(format!(
                "material '{}' has a non-finite wavelength",
                self.name
            )));
        }
        if let Some(p) = self.wavelengths_nm.windows(2).find(|p| p[1] <= p[0]) {
            return Err(Error::InvalidLibrary(format!(
                "material '{}': wavelengths not strictly increasing ({} then {})",
                self.name, p[0], p[1]
            )));
        }
        if let Some(r) = self
            .reflectance
            .iter()
            .find(|r| !(r.is_finite() && **r >= 0.0 && **r <= max_reflectance))
        {
            return Err(Error::InvalidLibrary(format!(
                "material '{}': reflectance {r} outside [0, {max_reflectance}]",
                self.name
            )));
        }
        Ok(())
    }
}

/// A collection of uniquely named material signatures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralLibrary {
    materials: Vec<Material>,
}

impl SpectralLibrary {
    pub fn new(materials: Vec<Material>) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &materials {
            if !seen.insert(m.name.as_str()) {
                return Err(Error::InvalidLibrary(format!("duplicate material name '{}'", m.name)));
            }
        }
        Ok(Self { materials })
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn get(&self, name: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }
}
