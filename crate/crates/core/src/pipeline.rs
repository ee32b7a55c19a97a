//! The tool's stages (simulate, unmix, fuse, evaluate) as file-to-file steps.
//!
//! Each stage reads its inputs from the configured paths or the output directory,
//! writes its artifacts atomically, and drops a manifest with the resolved config
//! next to them. No timestamps or host details go into any output, so identical
//! configs reproduce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ResolvedConfig;
use crate::error::{Error, Result};
use crate::fuse::{self, ScanOrder, SubpixelMap};
use crate::io;
use crate::metrics;
use crate::report::QualityReport;
use crate::simulate;
use crate::unmix::{self, EndmemberModel};

pub const HR_CUBE: &str = "hr.bsq";
pub const LOWRES_CUBE: &str = "lowres.bsq";
pub const PAN_IMAGE: &str = "pan.bsq";
pub const SIGNATURES: &str = "signatures.csv";
pub const ABUNDANCES: &str = "abundances.bsq";
pub const COST_TRACE: &str = "cost_trace.csv";
pub const SUBPIXEL_MAP: &str = "subpixel_map.csv";
pub const SEGMENT_LABELS: &str = "segments.csv";
pub const FUSED_CUBE: &str = "fused.bsq";
pub const REPORT: &str = "report.json";

#[derive(Serialize)]
struct Manifest<'a> {
    stage: &'a str,
    version: &'a str,
    config: &'a crate::config::PipelineConfig,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    summary: Value,
}

fn write_manifest(cfg: &ResolvedConfig, stage: &str, outputs: &[&str], summary: Value) -> Result<PathBuf> {
    let path = cfg.out_dir().join(format!("{stage}_manifest.json"));
    let manifest = Manifest {
        stage,
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg.config,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        summary,
    };
    io::write_json(&manifest, &path)?;
    Ok(path)
}

fn ensure_out_dir(cfg: &ResolvedConfig) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
        ))
    }
}

/// Paths of the files a stage wrote.
#[derive(Debug, Clone)]
pub struct StageOutputs {
    pub files: Vec<PathBuf>,
}

pub fn run_simulate(cfg: &ResolvedConfig) -> Result<StageOutputs> {
    let c = &cfg.config;
    let labels_path = cfg.required(&c.paths.labels, "labels")?;
    let library_path = cfg.required(&c.paths.library, "library")?;
    require_file(&labels_path)?;
    require_file(&library_path)?;
    let labels = io::read_labels(&labels_path)?;
    let library = io::read_library(&library_path)?;
    let wavelengths = c.wavelengths.to_vec();

    let hr = simulate::synthesize_hr_cube(&labels, &library, &c.simulation, &wavelengths)?;
    let lowres = simulate::downsample(&hr, c.simulation.scale)?;
    let pan = simulate::synthesize_pan(&hr, c.simulation.pan_range_nm)?;
    log::info!(
        "simulated {}x{}x{} scene -> {}x{} low-res, PAN {}x{}",
        hr.samples(),
        hr.lines(),
        hr.bands(),
        lowres.samples(),
        lowres.lines(),
        pan.samples(),
        pan.lines()
    );

    let dir = ensure_out_dir(cfg)?;
    io::write_cube(&hr, &dir.join(HR_CUBE))?;
    io::write_cube(&lowres, &dir.join(LOWRES_CUBE))?;
    io::write_pan(&pan, &dir.join(PAN_IMAGE))?;
    let manifest = write_manifest(cfg, "simulate", &[HR_CUBE, LOWRES_CUBE, PAN_IMAGE], Value::Null)?;
    Ok(StageOutputs {
        files: vec![dir.join(HR_CUBE), dir.join(LOWRES_CUBE), dir.join(PAN_IMAGE), manifest],
    })
}

pub fn run_unmix(cfg: &ResolvedConfig) -> Result<StageOutputs> {
    let c = &cfg.config;
    let lowres_path = cfg.optional(&c.paths.lowres_cube, LOWRES_CUBE);
    require_file(&lowres_path)?;
    let lowres = io::read_cube(&lowres_path)?;
    let (model, out) = unmix::unmix_cube(&lowres, &c.unmix)?;
    let model = unmix::normalize_abundances(&model, c.unmix.epsilon_guard);
    let final_cost = *out.cost_trace.last().expect("non-empty trace");
    log::info!(
        "unmixed {} endmembers in {} iterations, cost {final_cost:.6e}",
        model.endmember_count(),
        out.iterations
    );

    let dir = ensure_out_dir(cfg)?;
    model.save(&dir.join(SIGNATURES), &dir.join(ABUNDANCES))?;
    io::write_cost_trace(&dir.join(COST_TRACE), &out.cost_trace)?;
    let x_norm: f64 = lowres.values().iter().map(|&v| f64::from(v).powi(2)).sum();
    let summary = json!({
        "iterations": out.iterations,
        "final_cost": final_cost,
        "relative_cost": final_cost / x_norm,
    });
    let manifest = write_manifest(cfg, "unmix", &[SIGNATURES, ABUNDANCES, COST_TRACE], summary)?;
    Ok(StageOutputs {
        files: vec![
            dir.join(SIGNATURES),
            dir.join(ABUNDANCES),
            dir.join(COST_TRACE),
            manifest,
        ],
    })
}

pub fn run_fuse(cfg: &ResolvedConfig) -> Result<StageOutputs> {
    let c = &cfg.config;
    let dir = cfg.out_dir();
    let lowres_path = cfg.optional(&c.paths.lowres_cube, LOWRES_CUBE);
    let pan_path = cfg.optional(&c.paths.pan, PAN_IMAGE);
    for p in [&lowres_path, &pan_path, &dir.join(SIGNATURES), &dir.join(ABUNDANCES)] {
        require_file(p)?;
    }
    let lowres = io::read_cube(&lowres_path)?;
    let pan = io::read_pan(&pan_path)?;
    let model = EndmemberModel::load(&dir.join(SIGNATURES), &dir.join(ABUNDANCES))?;
    let order = if c.threads > 1 {
        ScanOrder::Wavefront
    } else {
        ScanOrder::Raster
    };
    let fused = fuse::fuse_scene_ordered(&lowres, &pan, &model, &c.fusion, &c.segment, order)?;
    let ambiguous = fused.assignments.iter().filter(|a| a.ambiguous).count();
    log::info!(
        "fused {} superpixels ({ambiguous} resolved by neighbour agreement)",
        fused.assignments.len()
    );
    let cube = fuse::reconstruct_hr(&fused.map, &model)?;

    let dir = ensure_out_dir(cfg)?;
    io::write_labels(&fused.map.to_label_map(), &dir.join(SUBPIXEL_MAP))?;
    io::write_labels(&fused.segment_labels, &dir.join(SEGMENT_LABELS))?;
    io::write_cube(&cube, &dir.join(FUSED_CUBE))?;
    let summary = json!({
        "superpixels": fused.assignments.len(),
        "ambiguous_superpixels": ambiguous,
    });
    let manifest = write_manifest(cfg, "fuse", &[SUBPIXEL_MAP, SEGMENT_LABELS, FUSED_CUBE], summary)?;
    Ok(StageOutputs {
        files: vec![
            dir.join(SUBPIXEL_MAP),
            dir.join(SEGMENT_LABELS),
            dir.join(FUSED_CUBE),
            manifest,
        ],
    })
}

pub fn run_evaluate(cfg: &ResolvedConfig) -> Result<(StageOutputs, QualityReport)> {
    let c = &cfg.config;
    let reference_path = cfg.optional(&c.paths.reference, HR_CUBE);
    let estimate_path = cfg.optional(&c.paths.estimate, FUSED_CUBE);
    require_file(&reference_path)?;
    require_file(&estimate_path)?;
    let reference = io::read_cube(&reference_path)?;
    let estimate = io::read_cube(&estimate_path)?;
    let mask = match &c.paths.mask {
        Some(p) => {
            let p = cfg.resolve_path(p);
            require_file(&p)?;
            Some(io::read_labels(&p)?)
        }
        None => None,
    };
    let mut report = metrics::evaluate(&reference, &estimate, mask.as_ref())?;
    let resolved = serde_json::to_value(&cfg.config).map_err(|e| Error::Config(e.to_string()))?;
    report.parameters.insert("config".into(), resolved);
    log::info!(
        "SAE {:.4} deg, mean PSNR {}",
        report.sae_degrees,
        report
            .psnr_mean_db
            .map(|p| format!("{p:.2} dB"))
            .unwrap_or_else(|| "inf".into())
    );

    let dir = ensure_out_dir(cfg)?;
    io::write_report(&report, &dir.join(REPORT))?;
    Ok((
        StageOutputs {
            files: vec![dir.join(REPORT)],
        },
        report,
    ))
}

/// Simulate, unmix, fuse and evaluate in sequence.
pub fn run_pipeline(cfg: &ResolvedConfig) -> Result<(StageOutputs, QualityReport)> {
    let mut files = run_simulate(cfg)?.files;
    files.extend(run_unmix(cfg)?.files);
    files.extend(run_fuse(cfg)?.files);
    let (eval, report) = run_evaluate(cfg)?;
    files.extend(eval.files);
    Ok((StageOutputs { files }, report))
}

/// Loads a persisted subpixel map.
pub fn read_subpixel_map(path: &Path) -> Result<SubpixelMap> {
    Ok(SubpixelMap::from_label_map(&io::read_labels(path)?))
}
