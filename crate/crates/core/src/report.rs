use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Reconstruction quality of an estimated cube against a reference.
///
/// `None` entries in `psnr_per_band_db` mark bands reproduced exactly (MSE = 0);
/// they serialize as JSON `null` and are left out of `psnr_mean_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub sae_degrees: f64,
    pub mse_per_band: Vec<f64>,
    pub psnr_per_band_db: Vec<Option<f64>>,
    pub psnr_mean_db: Option<f64>,
    #[serde(default)]
    pub parameters: Map<String, Value>,
}
