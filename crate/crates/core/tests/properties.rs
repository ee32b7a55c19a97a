mod common;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;

use hyperfuse::fuse::{self, FusionConfig, NeighborContext, ScanOrder};
use hyperfuse::io;
use hyperfuse::metrics;
use hyperfuse::segment::{self, FcmConfig};
use hyperfuse::simulate::{self, SimulationConfig};
use hyperfuse::unmix::{self, EndmemberModel, NmfConfig};
use hyperfuse::{LabelMap, Material, PanImage, SpectralCube, SpectralLibrary};

use common::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(0.0f64..1.0, rows * cols).prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

fn nmf_instance() -> impl Strategy<Value = (DMatrix<f64>, usize, u64)> {
    (2usize..8, 2usize..12)
        .prop_flat_map(|(l, n)| (matrix(l, n), 1..=l.min(n), any::<u64>()))
        .prop_filter("non-zero input", |(x, _, _)| x.iter().any(|v| *v > 0.0))
}

fn simplex(c: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, c).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn cube(samples: usize, lines: usize, bands: usize) -> impl Strategy<Value = SpectralCube> {
    prop::collection::vec(0.0f32..2.0, samples * lines * bands).prop_map(move |v| {
        let wl = (0..bands).map(|b| 400.0 + 50.0 * b as f64).collect();
        SpectralCube::new(samples, lines, bands, wl, v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nmf_cost_never_increases((x, p, seed) in nmf_instance()) {
        let mut cfg = NmfConfig::new(p);
        cfg.max_iter = 60;
        cfg.seed = seed;
        let out = unmix::nmf_unmix(&x, &cfg).unwrap();
        for w in out.cost_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        prop_assert!(out.signatures.iter().chain(out.coefficients.iter()).all(|v| *v >= 0.0));
        let again = unmix::nmf_unmix(&x, &cfg).unwrap();
        prop_assert_eq!(again.signatures, out.signatures);
        prop_assert_eq!(again.cost_trace, out.cost_trace);
    }

    #[test]
    fn nmf_trace_matches_independent_cost((x, p, seed) in nmf_instance()) {
        let mut cfg = NmfConfig::new(p);
        cfg.max_iter = 20;
        cfg.seed = seed;
        let out = unmix::nmf_unmix(&x, &cfg).unwrap();
        let (l, n) = x.shape();
        let flat = |m: &DMatrix<f64>| -> Vec<f64> {
            (0..m.nrows() * m.ncols()).map(|i| m[(i / m.ncols(), i % m.ncols())]).collect()
        };
        // the balanced final factors have the same product as the last iterate
        let cost = frobenius_cost(&flat(&x), &flat(&out.signatures), &flat(&out.coefficients), l, n, p);
        let last = *out.cost_trace.last().unwrap();
        prop_assert!((cost - last).abs() <= 1e-9 * last.max(1.0), "{cost} vs {last}");
    }

    #[test]
    fn normalized_abundances_sum_to_one(ab in matrix(3, 7)) {
        let model = EndmemberModel::new(DMatrix::from_element(4, 3, 0.5), ab, 7, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let once = unmix::normalize_abundances(&model, 1e-12);
        for k in 0..7 {
            let s: f64 = once.abundance_column(k).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
        let twice = unmix::normalize_abundances(&once, 1e-12);
        for (a, b) in once.abundances.iter().zip(twice.abundances.iter()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn active_endmembers_respect_threshold(a in simplex(5), t in 0.01f64..0.5) {
        let active = unmix::active_endmembers(&a, t).unwrap();
        prop_assert!(!active.is_empty());
        for w in active.windows(2) {
            prop_assert!(a[w[0]] >= a[w[1]]);
        }
        if active.len() > 1 || a[active[0]] >= t {
            prop_assert!(active.iter().all(|&e| a[e] >= t));
            prop_assert_eq!(active.len(), a.iter().filter(|&&v| v >= t).count());
        }
    }
}

proptest! {
    #[test]
    fn fcm_rows_stochastic_and_objective_descends(
        x in prop::collection::vec(0.0f64..1.0, 9),
        c in 1usize..=4,
    ) {
        prop_assume!(segment::distinct_count(&x) >= c);
        let cfg = FcmConfig::default();
        let mut ok = true;
        let res = segment::fcm_observed(&x, c, &cfg, |_, u, _| {
            ok &= u.iter().all(|row| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }).unwrap();
        prop_assert!(ok);
        for w in res.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn fcm_agrees_with_reference(x in prop::collection::vec(0.0f64..1.0, 9), c in 1usize..=4) {
        prop_assume!(segment::distinct_count(&x) >= c);
        let cfg = FcmConfig { tol: 1e-11, max_iter: 10_000, ..FcmConfig::default() };
        let mut got = segment::fcm(&x, c, &cfg).unwrap().centers;
        let mut want = reference_fcm(&x, &segment::quantile_centers(&x, c), 2.0, 1e-12, 100_000);
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-6, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn segmentation_is_canonical_under_init_permutation(
        v in prop::collection::vec(0.0f32..1.0, 9),
        c in 2usize..=3,
    ) {
        let pan = PanImage::new(3, 3, v).unwrap();
        let cfg = FcmConfig::default();
        let block = segment::block_intensities(&pan, (0, 0), 3).unwrap();
        prop_assume!(segment::distinct_count(&block) >= c);
        let seg = segment::segment_superpixel(&pan, (0, 0), 3, c, &cfg).unwrap();
        prop_assert!(seg.c <= segment::distinct_count(&block));
        for w in seg.centers.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        let mut init = segment::quantile_centers(&block, c);
        init.reverse();
        let permuted = segment::segment_superpixel_from_centers(&pan, (0, 0), 3, init, &cfg).unwrap();
        prop_assert_eq!(permuted.labels, seg.labels);
    }

    #[test]
    fn class_count_is_clamped(levels in prop::collection::vec(0u8..3, 9), c in 1usize..=5) {
        let pan = PanImage::new(3, 3, levels.iter().map(|&l| f32::from(l) / 4.0).collect()).unwrap();
        let seg = segment::segment_superpixel(&pan, (0, 0), 3, c, &FcmConfig::default()).unwrap();
        let block = segment::block_intensities(&pan, (0, 0), 3).unwrap();
        prop_assert_eq!(seg.c, c.min(segment::distinct_count(&block)));
    }

    #[test]
    fn matching_is_optimal_and_injective(
        (areas, abundances) in (1usize..=4).prop_flat_map(|c| (simplex(c), simplex(c))),
    ) {
        let got = fuse::match_segments(&areas, &abundances, 0.1).unwrap();
        let mut seen = got.class_to_endmember.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..areas.len()).collect::<Vec<_>>());
        let best = brute_force_min_cost(&areas, &abundances);
        prop_assert!((got.cost - best).abs() <= 1e-12);
    }

    #[test]
    fn sad_is_symmetric_and_scale_invariant(
        a in prop::collection::vec(0.01f64..1.0, 8),
        b in prop::collection::vec(0.01f64..1.0, 8),
        k in 1e-3f64..1e3,
    ) {
        prop_assert_eq!(metrics::sad(&a, &b).unwrap(), metrics::sad(&b, &a).unwrap());
        let ka: Vec<f64> = a.iter().map(|v| v * k).collect();
        prop_assert!(metrics::sad(&a, &ka).unwrap() <= 1e-6);
        let d = metrics::sad(&a, &b).unwrap();
        prop_assert!((0.0..=180.0).contains(&d));
        prop_assert!((d - angle_deg(&a, &b)).abs() <= 1e-6);
    }

    #[test]
    fn psnr_falls_as_noise_grows(
        band in prop::collection::vec(0.1f32..1.0, 16),
        pattern in prop::collection::vec(-0.5f32..0.5, 16),
    ) {
        prop_assume!(pattern.iter().any(|p| p.abs() > 1e-3));
        let psnr: Vec<f64> = [0.01f32, 0.02, 0.04, 0.08, 0.16]
            .iter()
            .map(|&amp| {
                let noisy: Vec<f32> = band.iter().zip(&pattern).map(|(b, p)| b + amp * p).collect();
                metrics::psnr_band(&band, &noisy).unwrap().unwrap()
            })
            .collect();
        for w in psnr.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn masked_padding_leaves_sae_unchanged(reference in cube(2, 2, 3), estimate in cube(2, 2, 3)) {
        let zero_free = |c: &SpectralCube| (0..4).all(|k| c.spectrum(k).iter().any(|v| *v > 0.0));
        prop_assume!(zero_free(&reference) && zero_free(&estimate));
        let base = metrics::sae(&reference, &estimate, None).unwrap().sae_degrees;
        // pad to 3x3 with background pixels whose spectra are arbitrary
        let pad = |c: &SpectralCube, fill: f64| -> SpectralCube {
            let mut pixels = Vec::new();
            for y in 0..3 {
                for x in 0..3 {
                    pixels.push(if y < 2 && x < 2 { c.spectrum(y * 2 + x) } else { vec![fill, 0.5, 0.1] });
                }
            }
            SpectralCube::from_pixels(3, 3, c.wavelengths_nm().to_vec(), &pixels).unwrap()
        };
        let mask = LabelMap::new(3, 3, vec![1, 1, 0, 1, 1, 0, 0, 0, 0]).unwrap();
        let padded = metrics::sae(&pad(&reference, 0.9), &pad(&estimate, 0.1), Some(&mask)).unwrap();
        prop_assert_eq!(padded.pixels_masked, 5);
        prop_assert!((padded.sae_degrees - base).abs() <= 1e-12);
    }

    #[test]
    fn downsample_preserves_band_means(c in cube(6, 6, 2)) {
        let low = simulate::downsample(&c, 3).unwrap();
        for b in 0..2 {
            let mean = |v: &[f32]| v.iter().map(|&x| f64::from(x)).sum::<f64>() / v.len() as f64;
            let (hi, lo) = (mean(c.band(b)), mean(low.band(b)));
            prop_assert!((hi - lo).abs() <= 1e-6 * hi.abs().max(1e-12));
        }
    }

    #[test]
    fn pan_is_linear(c in cube(3, 2, 4), k in 0.1f64..10.0) {
        let pan = simulate::synthesize_pan(&c, (400.0, 700.0)).unwrap();
        let scaled_values: Vec<f32> = c.values().iter().map(|&v| (f64::from(v) * k) as f32).collect();
        let scaled = SpectralCube::new(3, 2, 4, c.wavelengths_nm().to_vec(), scaled_values).unwrap();
        let pan_k = simulate::synthesize_pan(&scaled, (400.0, 700.0)).unwrap();
        for (a, b) in pan.values().iter().zip(pan_k.values()) {
            let want = f64::from(*a) * k;
            prop_assert!((f64::from(*b) - want).abs() <= 1e-5 * want.abs().max(1e-6));
        }
    }

    #[test]
    fn cube_round_trip_is_bit_exact(c in cube(3, 2, 3)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bsq");
        io::write_cube(&c, &path).unwrap();
        let back = io::read_cube(&path).unwrap();
        prop_assert_eq!(back.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        c.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

fn tiny_library() -> SpectralLibrary {
    let wl = vec![400.0, 550.0, 700.0, 1000.0];
    SpectralLibrary::new(vec![
        Material::new("a", wl.clone(), vec![0.1, 0.1, 0.1, 0.8]).unwrap(),
        Material::new("b", wl.clone(), vec![0.5, 0.5, 0.5, 0.1]).unwrap(),
        Material::new("c", wl, vec![0.9, 0.9, 0.9, 0.3]).unwrap(),
    ])
    .unwrap()
}

fn scene(labels: Vec<u32>, samples: usize, lines: usize) -> (SpectralCube, SpectralCube, PanImage, EndmemberModel) {
    let labels = LabelMap::new(samples, lines, labels).unwrap();
    let cfg = SimulationConfig {
        scale: 3,
        class_mapping: BTreeMap::from([(1, "a".into()), (2, "b".into()), (3, "c".into())]),
        ..SimulationConfig::default()
    };
    let wl = vec![450.0, 600.0, 800.0, 950.0];
    let hr = simulate::synthesize_hr_cube(&labels, &tiny_library(), &cfg, &wl).unwrap();
    let low = simulate::downsample(&hr, 3).unwrap();
    let pan = simulate::synthesize_pan(&hr, (400.0, 700.0)).unwrap();
    let (model, _) = unmix::unmix_cube(&low, &NmfConfig::new(3)).unwrap();
    (hr, low, pan, model)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scan_orders_agree_and_blocks_are_consistent(labels in prop::collection::vec(1u32..=3, 36)) {
        prop_assume!(labels.iter().collect::<std::collections::BTreeSet<_>>().len() == 3);
        let (_, low, pan, model) = scene(labels, 6, 6);
        let cfg = FusionConfig::new(3);
        let fcm = FcmConfig::default();
        let raster = fuse::fuse_scene_ordered(&low, &pan, &model, &cfg, &fcm, ScanOrder::Raster).unwrap();
        let wave = fuse::fuse_scene_ordered(&low, &pan, &model, &cfg, &fcm, ScanOrder::Wavefront).unwrap();
        prop_assert_eq!(&raster.map, &wave.map);
        prop_assert_eq!(&raster.assignments, &wave.assignments);
        let again = fuse::fuse_scene(&low, &pan, &model, &cfg, &fcm).unwrap();
        prop_assert_eq!(&again.map, &raster.map);

        for a in &raster.assignments {
            let mut seen = a.class_to_endmember.clone();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), a.class_to_endmember.len());
        }

        // stamped area fractions equal the segment areas under the chosen mapping
        let norm = unmix::normalize_abundances(&model, 1e-12);
        for y in 0..2 {
            for x in 0..2 {
                let ab = norm.abundance_column(y * 2 + x);
                let block = fuse::fuse_superpixel(&ab, (y, x), &pan, &cfg, &fcm, &NeighborContext::default()).unwrap();
                let areas = block.segmentation.area_fractions();
                for (class, &e) in block.assignment.class_to_endmember.iter().enumerate() {
                    let stamped = block.endmembers.iter().filter(|&&v| v == e).count() as f64 / 9.0;
                    prop_assert!((stamped - areas[class]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_class_blocks_downsample_to_the_signature(blocks in prop::collection::vec(1u32..=3, 4)) {
        let labels: Vec<u32> = (0..36).map(|i| blocks[(i / 6 / 3) * 2 + (i % 6) / 3]).collect();
        let (hr, low) = scene_without_unmix(labels);
        for (k, &class) in blocks.iter().enumerate() {
            let (y, x) = (k / 2, k % 2);
            let hr_pixel = hr.spectrum(y * 3 * 6 + x * 3);
            prop_assert_eq!(low.spectrum(k), hr_pixel, "class {}", class);
        }
    }
}

fn scene_without_unmix(labels: Vec<u32>) -> (SpectralCube, SpectralCube) {
    let labels = LabelMap::new(6, 6, labels).unwrap();
    let cfg = SimulationConfig {
        scale: 3,
        class_mapping: BTreeMap::from([(1, "a".into()), (2, "b".into()), (3, "c".into())]),
        ..SimulationConfig::default()
    };
    let hr = simulate::synthesize_hr_cube(&labels, &tiny_library(), &cfg, &[450.0, 600.0, 800.0]).unwrap();
    let low = simulate::downsample(&hr, 3).unwrap();
    (hr, low)
}

#[test]
fn noiseless_reconstruction_fits() {
    let labels = io::read_labels(&fixture("labels_30x30.csv")).unwrap();
    let library = io::read_library(&fixture("library.csv")).unwrap();
    let names = ["vegetation", "soil", "water", "concrete", "sand"];
    let cfg = SimulationConfig {
        class_mapping: names
            .iter()
            .enumerate()
            .map(|(i, n)| (i as u32 + 1, n.to_string()))
            .collect(),
        ..SimulationConfig::default()
    };
    let hr = simulate::synthesize_hr_cube(&labels, &library, &cfg, &simulate::linear_grid(400.0, 2450.0, 50)).unwrap();
    let low = simulate::downsample(&hr, 3).unwrap();
    let (_, out) = unmix::unmix_cube(&low, &NmfConfig::new(5)).unwrap();
    let x_norm: f64 = low.values().iter().map(|&v| f64::from(v).powi(2)).sum();
    assert!(out.cost_trace.last().unwrap() / x_norm <= 1e-2);
}

#[test]
fn noise_is_reproducible() {
    let labels = LabelMap::new(3, 3, vec![1, 2, 3, 1, 2, 3, 1, 2, 3]).unwrap();
    let mut cfg = SimulationConfig {
        scale: 3,
        snr_db: Some(20.0),
        class_mapping: BTreeMap::from([(1, "a".into()), (2, "b".into()), (3, "c".into())]),
        seed: 9,
        ..SimulationConfig::default()
    };
    let wl = [450.0, 600.0, 800.0];
    let a = simulate::synthesize_hr_cube(&labels, &tiny_library(), &cfg, &wl).unwrap();
    let b = simulate::synthesize_hr_cube(&labels, &tiny_library(), &cfg, &wl).unwrap();
    assert_eq!(a, b);
    cfg.seed = 10;
    let c = simulate::synthesize_hr_cube(&labels, &tiny_library(), &cfg, &wl).unwrap();
    assert_ne!(a, c);
}
