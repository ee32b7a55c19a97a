//! Linear spectral unmixing by non-negative matrix factorization.
//!
//! The low-resolution cube is flattened to an L×N matrix `X` (bands × pixels) and
//! factored as `X ≈ U Vᵀ` with `U` (L×P, endmember signatures) and `V` (N×P,
//! per-pixel abundances) non-negative, minimizing the squared Frobenius residual
//! with Lee–Seung multiplicative updates.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, HeaderStyle};
use crate::raster::SpectralCube;

pub const DEFAULT_EPSILON_GUARD: f64 = 1e-12;
pub const DEFAULT_ABUNDANCE_THRESHOLD: f64 = 0.05;

/// Starting point for the multiplicative updates.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum NmfInit {
    /// Uniform draws in (0, 1], rescaled so that `U Vᵀ` has the mean of `X`.
    #[default]
    RandomNonnegative,
    /// Caller-supplied `U` (L×P) and `V` (N×P).
    Provided {
        signatures: DMatrix<f64>,
        coefficients: DMatrix<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmfConfig {
    pub endmembers: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop once the relative cost decrease of one iteration falls below this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon_guard: f64,
    /// Rescale the converged factor pair (`U D⁻¹`, `V D`) so abundance columns sum
    /// to one in the least-squares sense. The product `U Vᵀ` is unchanged.
    #[serde(default = "default_true")]
    pub balance_scale: bool,
    #[serde(skip)]
    pub init: NmfInit,
}

fn default_max_iter() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-6
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON_GUARD
}
fn default_true() -> bool {
    true
}

impl NmfConfig {
    pub fn new(endmembers: usize) -> Self {
        Self {
            endmembers,
            max_iter: default_max_iter(),
            tol: default_tol(),
            seed: 0,
            epsilon_guard: DEFAULT_EPSILON_GUARD,
            balance_scale: true,
            init: NmfInit::RandomNonnegative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.epsilon_guard.is_nan() || self.epsilon_guard <= 0.0 {
            return Err(Error::Config(format!(
                "epsilon_guard must be > 0, got {}",
                self.epsilon_guard
            )));
        }
        Ok(())
    }
}

/// Endmember signatures `S` (L×P) and abundances `A` (P×N) for a low-resolution scene.
#[derive(Debug, Clone, PartialEq)]
pub struct EndmemberModel {
    pub signatures: DMatrix<f64>,
    pub abundances: DMatrix<f64>,
    pub samples: usize,
    pub lines: usize,
    pub wavelengths_nm: Vec<f64>,
}

impl EndmemberModel {
    pub fn new(
        signatures: DMatrix<f64>,
        abundances: DMatrix<f64>,
        samples: usize,
        lines: usize,
        wavelengths_nm: Vec<f64>,
    ) -> Result<Self> {
        let p = signatures.ncols();
        if p == 0 {
            return Err(Error::InvalidArgument("model needs at least one endmember".into()));
        }
        if abundances.nrows() != p || abundances.ncols() != samples * lines {
            return Err(Error::Dimension(format!(
                "abundance matrix is {}x{}, expected {p}x{}",
                abundances.nrows(),
                abundances.ncols(),
                samples * lines
            )));
        }
        if wavelengths_nm.len() != signatures.nrows() {
            return Err(Error::Dimension(format!(
                "{} wavelengths for {} signature rows",
                wavelengths_nm.len(),
                signatures.nrows()
            )));
        }
        let bad = |m: &DMatrix<f64>| m.iter().any(|v| !(v.is_finite() && *v >= 0.0));
        if bad(&signatures) || bad(&abundances) {
            return Err(Error::InvalidArgument(
                "model entries must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            signatures,
            abundances,
            samples,
            lines,
            wavelengths_nm,
        })
    }

    pub fn endmember_count(&self) -> usize {
        self.signatures.ncols()
    }

    pub fn pixel_count(&self) -> usize {
        self.abundances.ncols()
    }

    pub fn band_count(&self) -> usize {
        self.signatures.nrows()
    }

    pub fn signature(&self, endmember: usize) -> Vec<f64> {
        self.signatures.column(endmember).iter().copied().collect()
    }

    pub fn abundance_column(&self, pixel: usize) -> Vec<f64> {
        self.abundances.column(pixel).iter().copied().collect()
    }

    /// Writes `wavelength_nm,e1..eP` signatures and a P-band abundance cube.
    pub fn save(&self, signatures_path: &Path, abundances_path: &Path) -> Result<()> {
        let cols: Vec<Vec<f64>> = (0..self.endmember_count()).map(|p| self.signature(p)).collect();
        io::write_signatures(signatures_path, &self.wavelengths_nm, &cols)?;
        let p = self.endmember_count();
        // abundances are P×N; row p is band p in BSQ order
        let values: Vec<f32> = self.abundances.transpose().iter().map(|&v| v as f32).collect();
        let cube = SpectralCube::new(self.samples, self.lines, p, (1..=p).map(|i| i as f64).collect(), values)?;
        let style = HeaderStyle {
            description: "hyperfuse abundance fractions",
            wavelength_units: "Index",
            band_names: Some((1..=p).map(|i| format!("e{i}")).collect()),
        };
        io::write_cube_styled(&cube, abundances_path, &style)
    }

    pub fn load(signatures_path: &Path, abundances_path: &Path) -> Result<Self> {
        let (wavelengths, cols) = io::read_signatures(signatures_path)?;
        let l = wavelengths.len();
        let p = cols.len();
        let signatures = DMatrix::from_fn(l, p, |i, j| cols[j][i]);
        let cube = io::read_cube(abundances_path)?;
        if cube.bands() != p {
            return Err(Error::Dimension(format!(
                "{} signatures but abundance cube has {} bands",
                p,
                cube.bands()
            )));
        }
        let n = cube.pixel_count();
        let abundances = DMatrix::from_fn(p, n, |i, j| f64::from(cube.values()[i * n + j]));
        Self::new(signatures, abundances, cube.samples(), cube.lines(), wavelengths)
    }
}

/// Squared Frobenius norm of `X − U Vᵀ`.
pub fn nmf_cost(x: &DMatrix<f64>, u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    if u.nrows() != x.nrows() || v.nrows() != x.ncols() || u.ncols() != v.ncols() {
        return Err(Error::Dimension(format!(
            "X is {}x{}, U is {}x{}, V is {}x{}",
            x.nrows(),
            x.ncols(),
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(residual_norm_sq(x, u, v))
}

fn residual_norm_sq(x: &DMatrix<f64>, u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let approx = u * v.transpose();
    x.iter().zip(approx.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// One Lee–Seung step: `U ← U ⊙ XV ⊘ (UVᵀV + ε)`, then `V ← V ⊙ XᵀU ⊘ (VUᵀU + ε)`.
pub fn multiplicative_update(x: &DMatrix<f64>, u: &mut DMatrix<f64>, v: &mut DMatrix<f64>, eps: f64) {
    let num_u = x * &*v;
    let den_u = &*u * (v.transpose() * &*v);
    u.zip_zip_apply(&num_u, &den_u, |w, n, d| *w *= n / (d + eps));

    let num_v = x.transpose() * &*u;
    let den_v = &*v * (u.transpose() * &*u);
    v.zip_zip_apply(&num_v, &den_v, |h, n, d| *h *= n / (d + eps));
}

/// Result of [`nmf_unmix`]: factors, the cost after every iterate, and the
/// iteration count actually run.
#[derive(Debug, Clone)]
pub struct NmfOutput {
    pub signatures: DMatrix<f64>,
    pub coefficients: DMatrix<f64>,
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
}

fn random_init(x: &DMatrix<f64>, p: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (l, n) = x.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (0, 1]
    let mut draw = || 1.0 - rng.random::<f64>();
    let mut u = DMatrix::from_fn(l, p, |_, _| draw());
    let mut v = DMatrix::from_fn(n, p, |_, _| draw());
    let mean_x = x.mean();
    let mean_uv = (&u * v.transpose()).mean();
    let f = (mean_x / mean_uv).sqrt();
    u *= f;
    v *= f;
    (u, v)
}

/// Least-squares weights `w` with `V w ≈ 1`, falling back to per-endmember maxima
/// when the system is singular or yields a non-positive weight.
fn sum_to_one_weights(v: &DMatrix<f64>) -> DVector<f64> {
    let gram = v.transpose() * v;
    let rhs = v.transpose() * DVector::from_element(v.nrows(), 1.0);
    if let Some(w) = gram.lu().solve(&rhs) {
        if w.iter().all(|x| x.is_finite() && *x > 0.0) {
            return w;
        }
    }
    DVector::from_iterator(
        v.ncols(),
        v.column_iter().map(|c| {
            let m = c.max();
            if m > 0.0 {
                1.0 / m
            } else {
                1.0
            }
        }),
    )
}

/// Factors `x` (L×N, non-negative) into P endmembers.
pub fn nmf_unmix(x: &DMatrix<f64>, cfg: &NmfConfig) -> Result<NmfOutput> {
    cfg.validate()?;
    let (l, n) = x.shape();
    let p = cfg.endmembers;
    if p < 1 || p > l.min(n) {
        return Err(Error::InvalidArgument(format!(
            "endmember count {p} must lie in [1, min(L={l}, N={n})]"
        )));
    }
    if let Some(bad) = x.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "input matrix has a negative or non-finite entry ({bad})"
        )));
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("input matrix is all zeros".into()));
    }

    let (mut u, mut v) = match &cfg.init {
        NmfInit::RandomNonnegative => random_init(x, p, cfg.seed),
        NmfInit::Provided {
            signatures,
            coefficients,
        } => {
            if signatures.shape() != (l, p) || coefficients.shape() != (n, p) {
                return Err(Error::Dimension(format!(
                    "provided factors are {:?} and {:?}, expected ({l}, {p}) and ({n}, {p})",
                    signatures.shape(),
                    coefficients.shape()
                )));
            }
            if signatures
                .iter()
                .chain(coefficients.iter())
                .any(|v| !(v.is_finite() && *v >= 0.0))
            {
                return Err(Error::InvalidArgument("provided factors must be non-negative".into()));
            }
            (signatures.clone(), coefficients.clone())
        }
    };

    let mut trace = vec![residual_norm_sq(x, &u, &v)];
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let prev = *trace.last().expect("trace starts non-empty");
        if prev == 0.0 {
            break;
        }
        multiplicative_update(x, &mut u, &mut v, cfg.epsilon_guard);
        iterations += 1;
        let cost = residual_norm_sq(x, &u, &v);
        trace.push(cost);
        if (prev - cost) / prev < cfg.tol {
            break;
        }
    }
    log::debug!(
        "nmf: {iterations} iterations, cost {:.6e} -> {:.6e}",
        trace[0],
        trace[trace.len() - 1]
    );

    if cfg.balance_scale {
        let w = sum_to_one_weights(&v);
        for (p, wp) in w.iter().enumerate() {
            v.column_mut(p).scale_mut(*wp);
            u.column_mut(p).unscale_mut(*wp);
        }
    }

    Ok(NmfOutput {
        signatures: u,
        coefficients: v,
        cost_trace: trace,
        iterations,
    })
}

/// Runs [`nmf_unmix`] on a cube and packages the result as a (not yet normalized) model.
pub fn unmix_cube(cube: &SpectralCube, cfg: &NmfConfig) -> Result<(EndmemberModel, NmfOutput)> {
    let x = DMatrix::from_row_slice(cube.bands(), cube.pixel_count(), &cube.to_band_matrix());
    let out = nmf_unmix(&x, cfg)?;
    let model = EndmemberModel::new(
        out.signatures.clone(),
        out.coefficients.transpose(),
        cube.samples(),
        cube.lines(),
        cube.wavelengths_nm().to_vec(),
    )?;
    Ok((model, out))
}

/// Scales every abundance column to sum to one.
///
/// Columns summing to less than `eps` become uniform `1/P`. Signatures are left as is.
pub fn normalize_abundances(model: &EndmemberModel, eps: f64) -> EndmemberModel {
    let p = model.endmember_count();
    let mut out = model.clone();
    for mut col in out.abundances.column_iter_mut() {
        let sum: f64 = col.iter().sum();
        if sum < eps {
            col.fill(1.0 / p as f64);
        } else {
            col.unscale_mut(sum);
        }
    }
    out
}

/// Endmembers whose abundance reaches `threshold`, largest first (ties: lower index).
/// When none qualifies, the single largest is returned.
pub fn active_endmembers(abundances: &[f64], threshold: f64) -> Result<Vec<usize>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "abundance threshold {threshold} must lie in (0, 1)"
        )));
    }
    if abundances.is_empty() {
        return Err(Error::InvalidArgument("empty abundance vector".into()));
    }
    let mut order: Vec<usize> = (0..abundances.len()).collect();
    order.sort_by(|&a, &b| abundances[b].total_cmp(&abundances[a]).then(a.cmp(&b)));
    let active: Vec<usize> = order.iter().copied().filter(|&i| abundances[i] >= threshold).collect();
    if active.is_empty() {
        Ok(vec![order[0]])
    } else {
        Ok(active)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_examples() {
        let x = DMatrix::from_element(1, 1, 1.0);
        let z = DMatrix::zeros(1, 1);
        assert_eq!(nmf_cost(&x, &z, &z).unwrap(), 1.0);

        let x = DMatrix::from_element(2, 2, 1.0);
        let u = DMatrix::zeros(2, 1);
        let v = DMatrix::zeros(2, 1);
        assert_eq!(nmf_cost(&x, &u, &v).unwrap(), 4.0);

        let u = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let v = DMatrix::from_column_slice(3, 1, &[3.0, 0.5, 1.0]);
        let x = &u * v.transpose();
        assert_eq!(nmf_cost(&x, &u, &v).unwrap(), 0.0);
        assert!(nmf_cost(&x, &u, &DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn exact_rank_one_is_a_fixed_point() {
        let u = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 4.0]);
        let v = DMatrix::from_column_slice(2, 1, &[0.5, 2.0]);
        let x = &u * v.transpose();
        let (mut u1, mut v1) = (u.clone(), v.clone());
        multiplicative_update(&x, &mut u1, &mut v1, DEFAULT_EPSILON_GUARD);
        for (a, b) in u1.iter().zip(u.iter()).chain(v1.iter().zip(v.iter())) {
            assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
        }
        let mut cfg = NmfConfig::new(1);
        cfg.balance_scale = false;
        cfg.init = NmfInit::Provided {
            signatures: u,
            coefficients: v,
        };
        let out = nmf_unmix(&x, &cfg).unwrap();
        assert_eq!(out.cost_trace[0], 0.0);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn input_validation() {
        let cfg = NmfConfig::new(2);
        let x = DMatrix::from_element(3, 3, 1.0);
        assert!(nmf_unmix(&x, &NmfConfig::new(4)).is_err());
        assert!(nmf_unmix(&x, &NmfConfig::new(0)).is_err());
        let mut neg = x.clone();
        neg[(1, 1)] = -0.1;
        assert!(nmf_unmix(&neg, &cfg).is_err());
        assert!(matches!(
            nmf_unmix(&DMatrix::zeros(3, 3), &cfg),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn zero_row_drives_signature_row_to_zero() {
        let mut x = DMatrix::from_fn(6, 8, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.5);
        x.row_mut(2).fill(0.0);
        let mut cfg = NmfConfig::new(2);
        cfg.seed = 3;
        cfg.balance_scale = false;
        let out = nmf_unmix(&x, &cfg).unwrap();
        let max = out.signatures.max();
        assert!(out.signatures.row(2).iter().all(|v| *v <= 1e-6 * max));
    }

    #[test]
    fn balancing_preserves_product() {
        let x = DMatrix::from_fn(8, 12, |i, j| ((i * 5 + j * 11) % 7) as f64 * 0.1 + 0.05);
        let mut cfg = NmfConfig::new(3);
        cfg.max_iter = 50;
        cfg.balance_scale = false;
        let raw = nmf_unmix(&x, &cfg).unwrap();
        cfg.balance_scale = true;
        let bal = nmf_unmix(&x, &cfg).unwrap();
        let a = &raw.signatures * raw.coefficients.transpose();
        let b = &bal.signatures * bal.coefficients.transpose();
        assert!((a - b).abs().max() < 1e-10);
    }

    #[test]
    fn normalize_rules() {
        let sig = DMatrix::from_element(1, 2, 1.0);
        let ab = DMatrix::from_column_slice(2, 3, &[2.0, 2.0, 0.0, 0.0, 0.25, 0.75]);
        let model = EndmemberModel::new(sig, ab, 3, 1, vec![500.0]).unwrap();
        let norm = normalize_abundances(&model, DEFAULT_EPSILON_GUARD);
        assert_eq!(norm.abundance_column(0), vec![0.5, 0.5]);
        assert_eq!(norm.abundance_column(1), vec![0.5, 0.5]);
        assert_eq!(norm.abundance_column(2), vec![0.25, 0.75]);
        assert_eq!(normalize_abundances(&norm, DEFAULT_EPSILON_GUARD), norm);
        assert_eq!(norm.signatures, model.signatures);
    }

    #[test]
    fn active_set_examples() {
        assert_eq!(active_endmembers(&[0.7, 0.3, 0.0], 0.05).unwrap(), vec![0, 1]);
        assert_eq!(active_endmembers(&[1.0, 0.0, 0.0], 0.05).unwrap(), vec![0]);
        assert_eq!(active_endmembers(&[0.04, 0.03, 0.93], 0.05).unwrap(), vec![2]);
        assert_eq!(active_endmembers(&[0.3, 0.4, 0.3], 0.05).unwrap(), vec![1, 0, 2]);
        assert_eq!(active_endmembers(&[0.02, 0.03, 0.03], 0.05).unwrap(), vec![1]);
        assert!(active_endmembers(&[1.0], 0.0).is_err());
        assert!(active_endmembers(&[1.0], 1.0).is_err());
    }

    #[test]
    fn model_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sig = DMatrix::from_column_slice(3, 2, &[0.1, 0.2, 0.3, 0.9, 0.8, 0.7]);
        let ab = DMatrix::from_column_slice(2, 2, &[0.25, 0.75, 1.0, 0.0]);
        let model = EndmemberModel::new(sig, ab, 2, 1, vec![400.0, 500.0, 600.0]).unwrap();
        let (s, a) = (dir.path().join("sig.csv"), dir.path().join("ab.bsq"));
        model.save(&s, &a).unwrap();
        let back = EndmemberModel::load(&s, &a).unwrap();
        assert_eq!(back, model);
        let hdr = std::fs::read_to_string(io::header_path(&a)).unwrap();
        assert!(hdr.contains("wavelength = { 1, 2 }"));
    }
}
