//! Fuzzy C-means on the PAN intensities of one superpixel.
//!
//! A superpixel is the r×r block of PAN pixels covered by one low-resolution
//! hyperspectral pixel. Intensity is the only feature, so distances are `|x − v|`.

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::PanImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcmConfig {
    #[serde(default = "default_m")]
    pub fuzzifier_m: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop once no center moves by this much or more in one iteration.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Draw initial centers at random instead of the deterministic quantile rule.
    #[serde(default)]
    pub random_init: bool,
}

fn default_m() -> f64 {
    2.0
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-6
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self {
            fuzzifier_m: default_m(),
            max_iter: default_max_iter(),
            tol: default_tol(),
            seed: 0,
            random_init: false,
        }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fuzzifier_m > 1.0 && self.fuzzifier_m.is_finite()) {
            return Err(Error::Config(format!(
                "fuzzifier m must be > 1, got {}",
                self.fuzzifier_m
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!("FCM tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("FCM max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    /// n rows of c membership degrees, each row summing to one.
    pub memberships: Vec<Vec<f64>>,
    pub centers: Vec<f64>,
    pub iterations: usize,
    /// `J_m = Σ u^m d²` after initialization and after every iteration.
    pub objective_trace: Vec<f64>,
}

/// Membership row of one point: `u_j = 1 / Σ_k (d_j / d_k)^(2/(m−1))`.
///
/// A point sitting exactly on a center belongs to it alone (first such center).
pub fn membership_row(x: f64, centers: &[f64], m: f64) -> Vec<f64> {
    let d: Vec<f64> = centers.iter().map(|c| (x - c).abs()).collect();
    if let Some(hit) = d.iter().position(|&v| v == 0.0) {
        let mut row = vec![0.0; centers.len()];
        row[hit] = 1.0;
        return row;
    }
    let exponent = 2.0 / (m - 1.0);
    let d_min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = d.iter().map(|&dj| (d_min / dj).powf(exponent)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

pub fn objective(intensities: &[f64], memberships: &[Vec<f64>], centers: &[f64], m: f64) -> f64 {
    intensities
        .iter()
        .zip(memberships)
        .map(|(&x, row)| {
            row.iter()
                .zip(centers)
                .map(|(&u, &c)| u.powf(m) * (x - c) * (x - c))
                .sum::<f64>()
        })
        .sum()
}

fn update_centers(intensities: &[f64], memberships: &[Vec<f64>], previous: &[f64], m: f64) -> Vec<f64> {
    previous
        .iter()
        .enumerate()
        .map(|(j, &old)| {
            let (mut num, mut den) = (0.0, 0.0);
            for (&x, row) in intensities.iter().zip(memberships) {
                let w = row[j].powf(m);
                num += w * x;
                den += w;
            }
            if den > 0.0 {
                num / den
            } else {
                old
            }
        })
        .collect()
}

fn sorted_distinct(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Deterministic initial centers: `c` evenly spaced quantiles of the distinct
/// intensities, ascending. A single class starts at the mean.
pub fn quantile_centers(intensities: &[f64], c: usize) -> Vec<f64> {
    if c == 1 {
        return vec![intensities.iter().sum::<f64>() / intensities.len() as f64];
    }
    let distinct = sorted_distinct(intensities);
    let k = distinct.len();
    (0..c)
        .map(|j| {
            let pos = (j as f64 * (k - 1) as f64 / (c - 1) as f64).round() as usize;
            distinct[pos.min(k - 1)]
        })
        .collect()
}

fn random_centers(intensities: &[f64], c: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut distinct = sorted_distinct(intensities);
    if distinct.len() >= c {
        distinct.shuffle(&mut rng);
        distinct.truncate(c);
        distinct
    } else {
        let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
        (0..c).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
    }
}

fn check_inputs(intensities: &[f64], c: usize, cfg: &FcmConfig) -> Result<()> {
    cfg.validate()?;
    let n = intensities.len();
    if c < 1 {
        return Err(Error::InvalidArgument("class count must be >= 1".into()));
    }
    if c > n {
        return Err(Error::InvalidArgument(format!(
            "class count {c} exceeds the {n} points"
        )));
    }
    if intensities.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("intensities must be finite".into()));
    }
    if c >= 2 && intensities.iter().all(|&x| x == intensities[0]) {
        return Err(Error::Degenerate(format!(
            "all {n} intensities are identical; cannot split into {c} classes"
        )));
    }
    Ok(())
}

/// Clusters `intensities` into `c` fuzzy classes.
pub fn fcm(intensities: &[f64], c: usize, cfg: &FcmConfig) -> Result<FcmResult> {
    fcm_observed(intensities, c, cfg, |_, _, _| {})
}

/// [`fcm`] with a callback receiving `(iteration, memberships, centers)` after
/// initialization (iteration 0) and after every update.
pub fn fcm_observed<F>(intensities: &[f64], c: usize, cfg: &FcmConfig, observer: F) -> Result<FcmResult>
where
    F: FnMut(usize, &[Vec<f64>], &[f64]),
{
    check_inputs(intensities, c, cfg)?;
    let init = if cfg.random_init && c > 1 {
        random_centers(intensities, c, cfg.seed)
    } else {
        quantile_centers(intensities, c)
    };
    run(intensities, init, cfg, observer)
}

/// Runs FCM from caller-chosen initial centers.
pub fn fcm_from_centers(intensities: &[f64], centers: Vec<f64>, cfg: &FcmConfig) -> Result<FcmResult> {
    check_inputs(intensities, centers.len(), cfg)?;
    run(intensities, centers, cfg, |_, _, _| {})
}

fn run<F>(intensities: &[f64], mut centers: Vec<f64>, cfg: &FcmConfig, mut observer: F) -> Result<FcmResult>
where
    F: FnMut(usize, &[Vec<f64>], &[f64]),
{
    let m = cfg.fuzzifier_m;
    let memberships_for =
        |centers: &[f64]| -> Vec<Vec<f64>> { intensities.iter().map(|&x| membership_row(x, centers, m)).collect() };
    let mut u = memberships_for(&centers);
    let mut trace = vec![objective(intensities, &u, &centers, m)];
    observer(0, &u, &centers);

    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let next = update_centers(intensities, &u, &centers, m);
        let shift = next
            .iter()
            .zip(&centers)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        centers = next;
        u = memberships_for(&centers);
        iterations += 1;
        trace.push(objective(intensities, &u, &centers, m));
        observer(iterations, &u, &centers);
        if shift < cfg.tol {
            break;
        }
    }
    Ok(FcmResult {
        memberships: u,
        centers,
        iterations,
        objective_trace: trace,
    })
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Fuzzy segmentation of one r×r PAN block, classes ordered brightest first.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelSegmentation {
    /// (line, sample) of the block's top-left pixel in the PAN grid.
    pub block_origin: (usize, usize),
    pub r: usize,
    /// Class count actually used after clamping.
    pub c: usize,
    /// r·r rows (row-major within the block) of c memberships.
    pub memberships: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Class intensities, descending.
    pub centers: Vec<f64>,
}

impl SuperpixelSegmentation {
    /// Fraction of block pixels labelled with each class.
    pub fn area_fractions(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.c];
        for &l in &self.labels {
            counts[l] += 1;
        }
        let total = self.labels.len() as f64;
        counts.into_iter().map(|k| k as f64 / total).collect()
    }
}

pub fn block_intensities(pan: &PanImage, origin: (usize, usize), r: usize) -> Result<Vec<f64>> {
    let (line, sample) = origin;
    if r == 0 || line + r > pan.lines() || sample + r > pan.samples() {
        return Err(Error::Dimension(format!(
            "block at (line {line}, sample {sample}) of size {r} exceeds the {}x{} PAN image",
            pan.samples(),
            pan.lines()
        )));
    }
    let mut out = Vec::with_capacity(r * r);
    for y in line..line + r {
        for x in sample..sample + r {
            out.push(f64::from(pan.get(y, x)));
        }
    }
    Ok(out)
}

/// Number of distinct values, the upper bound on a meaningful class count.
pub fn distinct_count(values: &[f64]) -> usize {
    sorted_distinct(values).len()
}

/// Segments the r×r PAN block at `origin` into at most `c` classes.
///
/// `c` is clamped to the number of distinct intensities in the block. Output classes
/// are sorted by descending center intensity and labels are the argmax of each
/// membership row.
pub fn segment_superpixel(
    pan: &PanImage,
    origin: (usize, usize),
    r: usize,
    c: usize,
    cfg: &FcmConfig,
) -> Result<SuperpixelSegmentation> {
    if c < 1 {
        return Err(Error::InvalidArgument("class count must be >= 1".into()));
    }
    let block = block_intensities(pan, origin, r)?;
    let c = c.min(distinct_count(&block));
    let result = fcm(&block, c, cfg)?;
    Ok(canonicalize(origin, r, result))
}

fn canonicalize(origin: (usize, usize), r: usize, result: FcmResult) -> SuperpixelSegmentation {
    let c = result.centers.len();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| result.centers[b].total_cmp(&result.centers[a]).then(a.cmp(&b)));
    let centers = order.iter().map(|&j| result.centers[j]).collect();
    let memberships: Vec<Vec<f64>> = result
        .memberships
        .iter()
        .map(|row| order.iter().map(|&j| row[j]).collect())
        .collect();
    let labels = memberships.iter().map(|row| argmax(row)).collect();
    SuperpixelSegmentation {
        block_origin: origin,
        r,
        c,
        memberships,
        labels,
        centers,
    }
}

/// Like [`segment_superpixel`] but starting FCM from the given centers (any order).
pub fn segment_superpixel_from_centers(
    pan: &PanImage,
    origin: (usize, usize),
    r: usize,
    centers: Vec<f64>,
    cfg: &FcmConfig,
) -> Result<SuperpixelSegmentation> {
    let block = block_intensities(pan, origin, r)?;
    let result = fcm_from_centers(&block, centers, cfg)?;
    Ok(canonicalize(origin, r, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class_is_mean() {
        let x = [0.1, 0.2, 0.6];
        let r = fcm(&x, 1, &FcmConfig::default()).unwrap();
        assert!(r.memberships.iter().all(|row| row == &vec![1.0]));
        assert!((r.centers[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn crisp_row_at_center() {
        assert_eq!(membership_row(0.5, &[0.1, 0.5, 0.9], 2.0), vec![0.0, 1.0, 0.0]);
        let row = membership_row(0.2, &[0.0, 1.0], 2.0);
        // d = (0.2, 0.8): u0 = 1 / (1 + (0.2/0.8)^2)
        assert!((row[0] - 1.0 / (1.0 + 0.0625)).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let cfg = FcmConfig::default();
        assert!(fcm(&[1.0, 2.0], 3, &cfg).is_err());
        assert!(fcm(&[1.0, 2.0], 0, &cfg).is_err());
        assert!(matches!(fcm(&[0.3; 4], 2, &cfg), Err(Error::Degenerate(_))));
        assert!(fcm(&[0.3; 4], 1, &cfg).is_ok());
        let bad = FcmConfig {
            fuzzifier_m: 1.0,
            ..FcmConfig::default()
        };
        assert!(fcm(&[0.0, 1.0], 2, &bad).is_err());
    }

    #[test]
    fn quantile_init_is_distinct_when_possible() {
        let x = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0];
        assert_eq!(quantile_centers(&x, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(quantile_centers(&x, 2), vec![0.0, 1.0]);
    }

    #[test]
    fn uniform_block_clamps_to_one_class() {
        let pan = PanImage::new(3, 3, vec![0.4; 9]).unwrap();
        let seg = segment_superpixel(&pan, (0, 0), 3, 3, &FcmConfig::default()).unwrap();
        assert_eq!(seg.c, 1);
        assert!(seg.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn out_of_bounds_block() {
        let pan = PanImage::new(3, 3, vec![0.4; 9]).unwrap();
        assert!(segment_superpixel(&pan, (1, 0), 3, 1, &FcmConfig::default()).is_err());
        assert!(segment_superpixel(&pan, (0, 5), 3, 1, &FcmConfig::default()).is_err());
    }

    #[test]
    fn brightest_class_first() {
        let pan = PanImage::new(3, 3, vec![0.9, 0.1, 0.9, 0.9, 0.1, 0.9, 0.9, 0.1, 0.9]).unwrap();
        let seg = segment_superpixel(&pan, (0, 0), 3, 2, &FcmConfig::default()).unwrap();
        assert_eq!(seg.labels, vec![0, 1, 0, 0, 1, 0, 0, 1, 0]);
        assert!(seg.centers[0] > seg.centers[1]);
        let area = seg.area_fractions();
        assert!((area[0] - 6.0 / 9.0).abs() < 1e-15);
    }
}
