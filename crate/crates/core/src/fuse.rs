//! Subpixel fusion of unmixing and PAN segmentation results.
//!
//! For each superpixel the active endmembers are matched one-to-one to the FCM
//! segments of the PAN block by comparing segment area fractions with abundance
//! fractions. When the abundances are too close to tell endmembers apart, the
//! candidate matchings are ranked by how many border subpixels agree with the
//! already-fused north and west neighbours. Every subpixel then receives the full
//! signature of its matched endmember.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{LabelMap, PanImage, SpectralCube};
use crate::segment::{self, FcmConfig, SuperpixelSegmentation};
use crate::unmix::{self, EndmemberModel, DEFAULT_ABUNDANCE_THRESHOLD, DEFAULT_EPSILON_GUARD};

/// Cost difference below which two matchings count as tied.
pub const COST_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    #[serde(default = "default_scale")]
    pub scale: usize,
    /// Abundance gap under which two active endmembers are "not distinct enough".
    #[serde(default = "default_delta")]
    pub distinct_delta: f64,
    #[serde(default = "default_threshold")]
    pub abundance_threshold: f64,
}

fn default_scale() -> usize {
    3
}
fn default_delta() -> f64 {
    0.1
}
fn default_threshold() -> f64 {
    DEFAULT_ABUNDANCE_THRESHOLD
}

impl FusionConfig {
    pub fn new(scale: usize) -> Self {
        Self {
            scale,
            distinct_delta: default_delta(),
            abundance_threshold: default_threshold(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale < 1 {
            return Err(Error::Config("fusion scale must be >= 1".into()));
        }
        if !(self.distinct_delta > 0.0 && self.distinct_delta < 1.0) {
            return Err(Error::Config(format!(
                "distinct_delta {} must lie in (0, 1)",
                self.distinct_delta
            )));
        }
        if !(self.abundance_threshold > 0.0 && self.abundance_threshold < 1.0) {
            return Err(Error::Config(format!(
                "abundance_threshold {} must lie in (0, 1)",
                self.abundance_threshold
            )));
        }
        Ok(())
    }
}

/// Injective segment-class → endmember matching for one superpixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// (line, sample) of the superpixel in the low-resolution grid.
    pub superpixel: (usize, usize),
    pub class_to_endmember: Vec<usize>,
    pub ambiguous: bool,
    /// Σ |area_fraction(class) − abundance(endmember)|.
    pub cost: f64,
}

/// Endmember index of every high-resolution subpixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubpixelMap {
    pub samples: usize,
    pub lines: usize,
    pub endmember_index: Vec<usize>,
}

impl SubpixelMap {
    pub fn get(&self, line: usize, sample: usize) -> usize {
        self.endmember_index[line * self.samples + sample]
    }

    pub fn to_label_map(&self) -> LabelMap {
        LabelMap::new(
            self.samples,
            self.lines,
            self.endmember_index.iter().map(|&e| e as u32).collect(),
        )
        .expect("subpixel map geometry is valid")
    }

    pub fn from_label_map(labels: &LabelMap) -> Self {
        Self {
            samples: labels.samples(),
            lines: labels.lines(),
            endmember_index: labels.labels().iter().map(|&l| l as usize).collect(),
        }
    }
}

/// Endmembers of already-fused subpixels bordering a superpixel.
///
/// `north[k]` sits directly above the block's top-row cell `k`; `west[k]` sits
/// directly left of the block's left-column cell `k`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NeighborContext {
    pub north: Option<Vec<usize>>,
    pub west: Option<Vec<usize>>,
}

impl NeighborContext {
    pub fn is_empty(&self) -> bool {
        self.north.is_none() && self.west.is_none()
    }
}

fn matching_cost(areas: &[f64], abundances: &[f64], perm: &[usize]) -> f64 {
    areas.iter().zip(perm).map(|(a, &e)| (a - abundances[e]).abs()).sum()
}

/// Advances `perm` to the next lexicographic permutation; false after the last one.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
        return false;
    };
    let j = (i + 1..n)
        .rev()
        .find(|&j| perm[j] > perm[i])
        .expect("pivot has a successor");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

fn for_each_permutation(c: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..c).collect();
    loop {
        f(&perm);
        if !next_permutation(&mut perm) {
            break;
        }
    }
}

fn check_match_inputs(areas: &[f64], abundances: &[f64]) -> Result<()> {
    if areas.is_empty() || abundances.is_empty() {
        return Err(Error::InvalidArgument("empty area or abundance list".into()));
    }
    if areas.len() != abundances.len() {
        return Err(Error::Dimension(format!(
            "{} segments but {} endmembers",
            areas.len(),
            abundances.len()
        )));
    }
    if areas.iter().chain(abundances).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(
            "area and abundance fractions must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

fn abundances_indistinct(abundances: &[f64], delta: f64) -> bool {
    abundances
        .iter()
        .enumerate()
        .any(|(i, a)| abundances[i + 1..].iter().any(|b| (a - b).abs() < delta))
}

/// Minimum-L1 injective matching of segment classes to endmembers.
///
/// Every permutation is enumerated; among equal costs the lexicographically first
/// mapping wins. Endmember indices in the result are positions in `abundances`.
pub fn match_segments(areas: &[f64], abundances: &[f64], distinct_delta: f64) -> Result<Assignment> {
    check_match_inputs(areas, abundances)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut costs = Vec::new();
    for_each_permutation(areas.len(), |perm| {
        let cost = matching_cost(areas, abundances, perm);
        costs.push(cost);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, perm.to_vec()));
        }
    });
    let (cost, mapping) = best.expect("at least one permutation");
    // second-best over all other permutations
    let mut sorted = costs;
    sorted.sort_by(f64::total_cmp);
    let tied = sorted.len() > 1 && sorted[1] - sorted[0] < COST_TIE_EPS;
    Ok(Assignment {
        superpixel: (0, 0),
        class_to_endmember: mapping,
        ambiguous: tied || abundances_indistinct(abundances, distinct_delta),
        cost,
    })
}

/// Matchings that cannot be told apart from `best`.
///
/// A permutation qualifies when its cost ties the best within [`COST_TIE_EPS`], or
/// when it differs from `best` only by exchanging endmembers whose abundances are
/// chained together by gaps below `distinct_delta`. Returned in lexicographic order.
pub fn ambiguity_candidates(
    areas: &[f64],
    abundances: &[f64],
    distinct_delta: f64,
    best: &Assignment,
) -> Result<Vec<Assignment>> {
    check_match_inputs(areas, abundances)?;
    let c = abundances.len();
    // union-find over "too close" pairs
    let mut group: Vec<usize> = (0..c).collect();
    fn root(g: &mut [usize], mut i: usize) -> usize {
        while g[i] != i {
            g[i] = g[g[i]];
            i = g[i];
        }
        i
    }
    for i in 0..c {
        for j in i + 1..c {
            if (abundances[i] - abundances[j]).abs() < distinct_delta {
                let (ri, rj) = (root(&mut group, i), root(&mut group, j));
                group[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let groups: Vec<usize> = (0..c).map(|i| root(&mut group, i)).collect();

    let mut out = Vec::new();
    for_each_permutation(c, |perm| {
        let cost = matching_cost(areas, abundances, perm);
        let same_groups = perm
            .iter()
            .zip(&best.class_to_endmember)
            .all(|(&p, &b)| groups[p] == groups[b]);
        if same_groups || cost - best.cost < COST_TIE_EPS {
            out.push(Assignment {
                superpixel: best.superpixel,
                class_to_endmember: perm.to_vec(),
                ambiguous: true,
                cost,
            });
        }
    });
    Ok(out)
}

/// Number of block border cells whose endmember under `mapping` equals the
/// already-fused neighbour across the border.
pub fn neighbor_agreement(mapping: &[usize], seg: &SuperpixelSegmentation, context: &NeighborContext) -> usize {
    let r = seg.r;
    let mut score = 0;
    if let Some(north) = &context.north {
        score += (0..r).filter(|&k| mapping[seg.labels[k]] == north[k]).count();
    }
    if let Some(west) = &context.west {
        score += (0..r).filter(|&k| mapping[seg.labels[k * r]] == west[k]).count();
    }
    score
}

/// Picks the candidate with the most border agreements; ties (and an empty
/// context) go to the lexicographically smallest mapping.
pub fn resolve_ambiguity(
    candidates: &[Assignment],
    context: &NeighborContext,
    segmentation: &SuperpixelSegmentation,
) -> Result<Assignment> {
    let mut best: Option<(usize, &Assignment)> = None;
    for cand in candidates {
        let score = if context.is_empty() {
            0
        } else {
            neighbor_agreement(&cand.class_to_endmember, segmentation, context)
        };
        let better = match best {
            None => true,
            Some((s, b)) => score > s || (score == s && cand.class_to_endmember < b.class_to_endmember),
        };
        if better {
            best = Some((score, cand));
        }
    }
    best.map(|(_, a)| a.clone())
        .ok_or_else(|| Error::InvalidArgument("no candidate assignments".into()))
}

/// Fusion result for one superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedBlock {
    /// r·r endmember indices, row-major within the block.
    pub endmembers: Vec<usize>,
    pub assignment: Assignment,
    pub segmentation: SuperpixelSegmentation,
}

/// Fuses one superpixel.
///
/// `abundances` is the (sum-to-one) abundance column of the low-resolution pixel at
/// `superpixel`; `context` holds the already-fused neighbours.
pub fn fuse_superpixel(
    abundances: &[f64],
    superpixel: (usize, usize),
    pan: &PanImage,
    cfg: &FusionConfig,
    fcm_cfg: &FcmConfig,
    context: &NeighborContext,
) -> Result<FusedBlock> {
    let r = cfg.scale;
    let origin = (superpixel.0 * r, superpixel.1 * r);
    let active = unmix::active_endmembers(abundances, cfg.abundance_threshold)?;
    let block = segment::block_intensities(pan, origin, r)?;
    let c = active.len().min(segment::distinct_count(&block));
    let kept = &active[..c];
    let kept_total: f64 = kept.iter().map(|&e| abundances[e]).sum();
    let kept_ab: Vec<f64> = if kept_total > 0.0 {
        kept.iter().map(|&e| abundances[e] / kept_total).collect()
    } else {
        vec![1.0 / c as f64; c]
    };

    let seg = segment::segment_superpixel(pan, origin, r, c, fcm_cfg)?;
    let areas = seg.area_fractions();
    let local = match_segments(&areas, &kept_ab, cfg.distinct_delta)?;
    let to_global = |a: &Assignment| Assignment {
        superpixel,
        class_to_endmember: a.class_to_endmember.iter().map(|&i| kept[i]).collect(),
        ambiguous: a.ambiguous,
        cost: a.cost,
    };
    let assignment = if local.ambiguous {
        let candidates: Vec<Assignment> = ambiguity_candidates(&areas, &kept_ab, cfg.distinct_delta, &local)?
            .iter()
            .map(to_global)
            .collect();
        resolve_ambiguity(&candidates, context, &seg)?
    } else {
        to_global(&local)
    };
    let endmembers = seg.labels.iter().map(|&l| assignment.class_to_endmember[l]).collect();
    Ok(FusedBlock {
        endmembers,
        assignment,
        segmentation: seg,
    })
}

/// Order in which superpixels are fused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanOrder {
    /// Row-major; north and west neighbours are always fused first.
    #[default]
    Raster,
    /// Anti-diagonals processed in parallel. Output is identical to `Raster`.
    Wavefront,
    /// Reverse row-major, so north/west context is never available.
    Reverse,
}

#[derive(Debug, Clone)]
pub struct SceneFusion {
    pub map: SubpixelMap,
    /// One per superpixel, row-major.
    pub assignments: Vec<Assignment>,
    /// FCM class of every PAN pixel (brightest class = 0).
    pub segment_labels: LabelMap,
}

struct Canvas {
    samples: usize,
    cells: Vec<Option<usize>>,
    segments: Vec<u32>,
}

impl Canvas {
    fn context(&self, superpixel: (usize, usize), r: usize) -> NeighborContext {
        let (y0, x0) = (superpixel.0 * r, superpixel.1 * r);
        let collect = |idx: Vec<usize>| -> Option<Vec<usize>> { idx.into_iter().map(|i| self.cells[i]).collect() };
        let north = (y0 > 0)
            .then(|| collect((0..r).map(|k| (y0 - 1) * self.samples + x0 + k).collect()))
            .flatten();
        let west = (x0 > 0)
            .then(|| collect((0..r).map(|k| (y0 + k) * self.samples + x0 - 1).collect()))
            .flatten();
        NeighborContext { north, west }
    }

    fn stamp(&mut self, block: &FusedBlock, r: usize) {
        let (y0, x0) = block.segmentation.block_origin;
        for dy in 0..r {
            for dx in 0..r {
                let i = (y0 + dy) * self.samples + x0 + dx;
                self.cells[i] = Some(block.endmembers[dy * r + dx]);
                self.segments[i] = block.segmentation.labels[dy * r + dx] as u32;
            }
        }
    }
}

/// Fuses every superpixel of the scene in raster order.
pub fn fuse_scene(
    lowres: &SpectralCube,
    pan: &PanImage,
    model: &EndmemberModel,
    cfg: &FusionConfig,
    fcm_cfg: &FcmConfig,
) -> Result<SceneFusion> {
    fuse_scene_ordered(lowres, pan, model, cfg, fcm_cfg, ScanOrder::Raster)
}

pub fn fuse_scene_ordered(
    lowres: &SpectralCube,
    pan: &PanImage,
    model: &EndmemberModel,
    cfg: &FusionConfig,
    fcm_cfg: &FcmConfig,
    order: ScanOrder,
) -> Result<SceneFusion> {
    cfg.validate()?;
    fcm_cfg.validate()?;
    let r = cfg.scale;
    let (ls, ll) = (lowres.samples(), lowres.lines());
    if pan.samples() != ls * r || pan.lines() != ll * r {
        return Err(Error::Dimension(format!(
            "PAN is {}x{}, expected {}x{} for a {ls}x{ll} cube at scale {r}",
            pan.samples(),
            pan.lines(),
            ls * r,
            ll * r
        )));
    }
    if model.samples != ls || model.lines != ll {
        return Err(Error::Dimension(format!(
            "endmember model covers {}x{} pixels, cube is {ls}x{ll}",
            model.samples, model.lines
        )));
    }
    let model = unmix::normalize_abundances(model, DEFAULT_EPSILON_GUARD);

    let mut canvas = Canvas {
        samples: pan.samples(),
        cells: vec![None; pan.samples() * pan.lines()],
        segments: vec![0; pan.samples() * pan.lines()],
    };
    let mut assignments: Vec<Option<Assignment>> = vec![None; ls * ll];

    let fuse_one = |canvas: &Canvas, sp: (usize, usize)| -> Result<FusedBlock> {
        let a = model.abundance_column(sp.0 * ls + sp.1);
        fuse_superpixel(&a, sp, pan, cfg, fcm_cfg, &canvas.context(sp, r))
    };

    match order {
        ScanOrder::Raster | ScanOrder::Reverse => {
            let mut cells: Vec<(usize, usize)> = (0..ll).flat_map(|y| (0..ls).map(move |x| (y, x))).collect();
            if order == ScanOrder::Reverse {
                cells.reverse();
            }
            for sp in cells {
                let block = fuse_one(&canvas, sp)?;
                canvas.stamp(&block, r);
                assignments[sp.0 * ls + sp.1] = Some(block.assignment);
            }
        }
        ScanOrder::Wavefront => {
            for d in 0..(ll + ls - 1) {
                let cells: Vec<(usize, usize)> =
                    (0..ll).filter(|&y| d >= y && d - y < ls).map(|y| (y, d - y)).collect();
                let blocks: Vec<FusedBlock> = cells
                    .par_iter()
                    .map(|&sp| fuse_one(&canvas, sp))
                    .collect::<Result<_>>()?;
                for (sp, block) in cells.into_iter().zip(blocks) {
                    canvas.stamp(&block, r);
                    assignments[sp.0 * ls + sp.1] = Some(block.assignment);
                }
            }
        }
    }

    let map = SubpixelMap {
        samples: pan.samples(),
        lines: pan.lines(),
        endmember_index: canvas
            .cells
            .into_iter()
            .map(|c| c.expect("every subpixel is stamped"))
            .collect(),
    };
    let segment_labels = LabelMap::new(pan.samples(), pan.lines(), canvas.segments)?;
    Ok(SceneFusion {
        map,
        assignments: assignments.into_iter().map(|a| a.expect("all fused")).collect(),
        segment_labels,
    })
}

/// Builds the high-resolution cube by giving each subpixel its endmember's signature.
pub fn reconstruct_hr(map: &SubpixelMap, model: &EndmemberModel) -> Result<SpectralCube> {
    let p = model.endmember_count();
    if let Some(bad) = map.endmember_index.iter().find(|&&e| e >= p) {
        return Err(Error::InvalidArgument(format!(
            "subpixel map references endmember {bad}, model has {p}"
        )));
    }
    let n = map.samples * map.lines;
    let bands = model.band_count();
    let mut values = vec![0f32; n * bands];
    for (k, &e) in map.endmember_index.iter().enumerate() {
        for b in 0..bands {
            values[b * n + k] = model.signatures[(b, e)] as f32;
        }
    }
    SpectralCube::new(map.samples, map.lines, bands, model.wavelengths_nm.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn permutations_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_permutation(3, |p| seen.push(p.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        let mut count = 0;
        for_each_permutation(1, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn match_two_classes() {
        let a = match_segments(&[6.0 / 9.0, 3.0 / 9.0], &[0.667, 0.333], 0.1).unwrap();
        assert_eq!(a.class_to_endmember, vec![0, 1]);
        assert!(!a.ambiguous);
        // identity: |6/9 − .667| + |3/9 − .333|; swap: |6/9 − .333| + |3/9 − .667|
        let identity = (6.0f64 / 9.0 - 0.667).abs() + (3.0f64 / 9.0 - 0.333).abs();
        assert!((a.cost - identity).abs() < 1e-15);
        assert!(a.cost < 1e-3);
    }

    #[test]
    fn match_single_and_ambiguous() {
        let a = match_segments(&[1.0], &[1.0], 0.1).unwrap();
        assert_eq!(a.class_to_endmember, vec![0]);
        assert_eq!(a.cost, 0.0);
        assert!(!a.ambiguous);

        let a = match_segments(&[5.0 / 9.0, 4.0 / 9.0], &[0.5, 0.5], 0.1).unwrap();
        assert!(a.ambiguous);
        assert!(match_segments(&[1.0], &[0.5, 0.5], 0.1).is_err());
        assert!(match_segments(&[], &[], 0.1).is_err());
    }

    fn two_class_seg() -> SuperpixelSegmentation {
        // class 0 fills the two left columns, class 1 the right column
        SuperpixelSegmentation {
            block_origin: (3, 3),
            r: 3,
            c: 2,
            memberships: vec![vec![1.0, 0.0]; 9],
            labels: vec![0, 0, 1, 0, 0, 1, 0, 0, 1],
            centers: vec![0.9, 0.1],
        }
    }

    #[test]
    fn west_neighbor_breaks_tie() {
        let seg = two_class_seg();
        let a = Assignment {
            superpixel: (1, 1),
            class_to_endmember: vec![2, 0],
            ambiguous: true,
            cost: 0.0,
        };
        let b = Assignment {
            class_to_endmember: vec![0, 2],
            ..a.clone()
        };
        let context = NeighborContext {
            north: None,
            west: Some(vec![2, 2, 2]),
        };
        assert_eq!(neighbor_agreement(&a.class_to_endmember, &seg, &context), 3);
        assert_eq!(neighbor_agreement(&b.class_to_endmember, &seg, &context), 0);
        let chosen = resolve_ambiguity(&[b.clone(), a.clone()], &context, &seg).unwrap();
        assert_eq!(chosen, a);

        let chosen = resolve_ambiguity(&[a.clone(), b.clone()], &NeighborContext::default(), &seg).unwrap();
        assert_eq!(chosen.class_to_endmember, vec![0, 2]);

        assert_eq!(resolve_ambiguity(std::slice::from_ref(&a), &context, &seg).unwrap(), a);
        assert!(resolve_ambiguity(&[], &context, &seg).is_err());
    }

    #[test]
    fn candidates_swap_close_endmembers() {
        let areas = [5.0 / 9.0, 4.0 / 9.0];
        let ab = [0.52, 0.48];
        let best = match_segments(&areas, &ab, 0.1).unwrap();
        assert!(best.ambiguous);
        let cands = ambiguity_candidates(&areas, &ab, 0.1, &best).unwrap();
        let maps: Vec<_> = cands.iter().map(|c| c.class_to_endmember.clone()).collect();
        assert_eq!(maps, vec![vec![0, 1], vec![1, 0]]);

        // a distinct third endmember keeps its class
        let areas = [3.0 / 9.0, 2.0 / 9.0, 4.0 / 9.0];
        let ab = [0.30, 0.25, 0.45];
        let best = match_segments(&areas, &ab, 0.1).unwrap();
        let cands = ambiguity_candidates(&areas, &ab, 0.1, &best).unwrap();
        assert!(cands.iter().all(|c| c.class_to_endmember[2] == 2));
        assert_eq!(cands.len(), 2);
    }

    fn pan3(values: [f32; 9]) -> PanImage {
        PanImage::new(3, 3, values.to_vec()).unwrap()
    }

    #[test]
    fn pure_superpixel_ignores_pan() {
        let pan = pan3([0.1, 0.9, 0.3, 0.5, 0.2, 0.8, 0.4, 0.6, 0.7]);
        let cfg = FusionConfig::new(3);
        let out = fuse_superpixel(
            &[1.0, 0.0, 0.0],
            (0, 0),
            &pan,
            &cfg,
            &FcmConfig::default(),
            &NeighborContext::default(),
        )
        .unwrap();
        assert_eq!(out.endmembers, vec![0; 9]);
    }

    #[test]
    fn two_thirds_one_third_split() {
        let pan = pan3([0.9, 0.9, 0.1, 0.9, 0.9, 0.1, 0.9, 0.9, 0.1]);
        let cfg = FusionConfig::new(3);
        let out = fuse_superpixel(
            &[2.0 / 3.0, 1.0 / 3.0, 0.0],
            (0, 0),
            &pan,
            &cfg,
            &FcmConfig::default(),
            &NeighborContext::default(),
        )
        .unwrap();
        assert_eq!(out.endmembers, vec![0, 0, 1, 0, 0, 1, 0, 0, 1]);
        assert!(!out.assignment.ambiguous);
    }

    #[test]
    fn uniform_block_clamps_to_largest_abundance() {
        let pan = pan3([0.4; 9]);
        let cfg = FusionConfig::new(3);
        let out = fuse_superpixel(
            &[0.5, 0.5, 0.0],
            (0, 0),
            &pan,
            &cfg,
            &FcmConfig::default(),
            &NeighborContext::default(),
        )
        .unwrap();
        assert_eq!(out.endmembers, vec![0; 9]);
        assert_eq!(out.segmentation.c, 1);
    }

    fn one_pixel_model(abundances: &[f64]) -> EndmemberModel {
        let p = abundances.len();
        EndmemberModel::new(
            DMatrix::from_fn(2, p, |i, j| 0.1 + 0.2 * (i + j) as f64),
            DMatrix::from_column_slice(p, 1, abundances),
            1,
            1,
            vec![500.0, 600.0],
        )
        .unwrap()
    }

    #[test]
    fn scene_dimension_checks() {
        let lowres = SpectralCube::new(3, 3, 2, vec![500.0, 600.0], vec![0.1; 18]).unwrap();
        let pan = PanImage::new(10, 10, vec![0.1; 100]).unwrap();
        let model = one_pixel_model(&[1.0]);
        let err = fuse_scene(&lowres, &pan, &model, &FusionConfig::new(3), &FcmConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn single_superpixel_scene() {
        let lowres = SpectralCube::new(1, 1, 2, vec![500.0, 600.0], vec![0.1, 0.2]).unwrap();
        let pan = pan3([0.1, 0.9, 0.3, 0.5, 0.2, 0.8, 0.4, 0.6, 0.7]);
        let model = one_pixel_model(&[1.0]);
        let out = fuse_scene(&lowres, &pan, &model, &FusionConfig::new(3), &FcmConfig::default()).unwrap();
        assert_eq!(out.map.endmember_index, vec![0; 9]);
        let cube = reconstruct_hr(&out.map, &model).unwrap();
        for k in 0..9 {
            let s: Vec<f64> = model.signature(0).iter().map(|&v| v as f32 as f64).collect();
            assert_eq!(cube.spectrum(k), s);
        }
    }

    #[test]
    fn reconstruct_checkerboard_and_bad_index() {
        let model = one_pixel_model(&[0.5, 0.5]);
        let map = SubpixelMap {
            samples: 2,
            lines: 2,
            endmember_index: vec![0, 1, 1, 0],
        };
        let cube = reconstruct_hr(&map, &model).unwrap();
        assert_eq!(cube.spectrum(0), cube.spectrum(3));
        assert_eq!(cube.spectrum(1), cube.spectrum(2));
        assert_ne!(cube.spectrum(0), cube.spectrum(1));
        let bad = SubpixelMap {
            endmember_index: vec![0, 2, 1, 0],
            ..map
        };
        assert!(reconstruct_hr(&bad, &model).is_err());
    }
}
