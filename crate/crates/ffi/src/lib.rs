//! C ABI over the hyperfuse library.
//!
//! Rasters and endmember models cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every entry point returns
//! an [`HfStatus`]; on failure, [`hf_last_error`] describes the problem on the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hyperfuse::fuse::{self, FusionConfig};
use hyperfuse::segment::FcmConfig;
use hyperfuse::unmix::{self, EndmemberModel, NmfConfig};
use hyperfuse::{io, metrics, simulate, Error, PanImage, SpectralCube};

/// Result code of every `hf_*` function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A file could not be read or written.
    Io = 2,
    /// A file was readable but malformed.
    Format = 3,
    /// Arguments or data violate a documented precondition.
    Invalid = 4,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 5,
    /// A path was not valid UTF-8.
    Utf8 = 6,
    /// An internal panic was caught at the boundary.
    Panic = 7,
}

/// Opaque hyperspectral cube.
pub struct HfCube(SpectralCube);

/// Opaque single-band panchromatic image.
pub struct HfPan(PanImage);

/// Opaque endmember model (signatures and sum-to-one abundances).
pub struct HfModel(EndmemberModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> HfStatus {
    match err {
        Error::Io { .. } => HfStatus::Io,
        Error::Format { .. } | Error::SizeMismatch { .. } => HfStatus::Format,
        _ => HfStatus::Invalid,
    }
}

struct Fail(HfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            HfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            HfStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Fail(HfStatus::Utf8, "path is not valid UTF-8".into()))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(
            HfStatus::BufferTooSmall,
            format!("buffer holds {len} elements, {} needed", src.len()),
        ));
    }
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Message for the last failed call on this thread, or an empty string.
///
/// The pointer stays valid until the next `hf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn hf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- cubes -------------------------------------------------------------------

/// Builds a cube from band-sequential values (`bands·lines·samples` floats) and
/// `bands` strictly increasing wavelengths.
///
/// # Safety
/// `wavelengths` and `values` must point to arrays of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn hf_cube_new(
    samples: usize,
    lines: usize,
    bands: usize,
    wavelengths_nm: *const f64,
    values: *const f32,
    out: *mut *mut HfCube,
) -> HfStatus {
    guard(|| {
        let wl = slice_arg(wavelengths_nm, bands, "wavelengths")?.to_vec();
        let n = samples
            .checked_mul(lines)
            .and_then(|v| v.checked_mul(bands))
            .ok_or_else(|| Fail(HfStatus::Invalid, "cube dimensions overflow".into()))?;
        let vals = slice_arg(values, n, "values")?.to_vec();
        put(out, HfCube(SpectralCube::new(samples, lines, bands, wl, vals)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_cube_read(path: *const c_char, out: *mut *mut HfCube) -> HfStatus {
    guard(|| {
        let p = path_arg(path)?;
        put(out, HfCube(io::read_cube(&p)?))
    })
}

/// # Safety
/// `cube` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hf_cube_write(cube: *const HfCube, path: *const c_char) -> HfStatus {
    guard(|| {
        let c = handle(cube, "cube")?;
        io::write_cube(&c.0, &path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `cube` must be a live handle; output pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn hf_cube_dims(
    cube: *const HfCube,
    samples: *mut usize,
    lines: *mut usize,
    bands: *mut usize,
) -> HfStatus {
    guard(|| {
        let c = &handle(cube, "cube")?.0;
        for (dst, v) in [(samples, c.samples()), (lines, c.lines()), (bands, c.bands())] {
            if !dst.is_null() {
                *dst = v;
            }
        }
        Ok(())
    })
}

/// Copies the band-sequential values into `buf` (capacity `len` floats).
///
/// # Safety
/// `cube` must be a live handle and `buf` writable for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn hf_cube_copy_values(cube: *const HfCube, buf: *mut f32, len: usize) -> HfStatus {
    guard(|| copy_out(handle(cube, "cube")?.0.values(), buf, len))
}

/// # Safety
/// `cube` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hf_cube_copy_wavelengths(cube: *const HfCube, buf: *mut f64, len: usize) -> HfStatus {
    guard(|| copy_out(handle(cube, "cube")?.0.wavelengths_nm(), buf, len))
}

/// # Safety
/// `cube` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_cube_free(cube: *mut HfCube) {
    if !cube.is_null() {
        drop(Box::from_raw(cube));
    }
}

// ---- PAN ---------------------------------------------------------------------

/// # Safety
/// `values` must point to `samples·lines` floats, row-major.
#[no_mangle]
pub unsafe extern "C" fn hf_pan_new(
    samples: usize,
    lines: usize,
    values: *const f32,
    out: *mut *mut HfPan,
) -> HfStatus {
    guard(|| {
        let n = samples
            .checked_mul(lines)
            .ok_or_else(|| Fail(HfStatus::Invalid, "PAN dimensions overflow".into()))?;
        let vals = slice_arg(values, n, "values")?.to_vec();
        put(out, HfPan(PanImage::new(samples, lines, vals)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_pan_read(path: *const c_char, out: *mut *mut HfPan) -> HfStatus {
    guard(|| {
        let p = path_arg(path)?;
        put(out, HfPan(io::read_pan(&p)?))
    })
}

/// # Safety
/// `pan` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hf_pan_write(pan: *const HfPan, path: *const c_char) -> HfStatus {
    guard(|| {
        let p = handle(pan, "pan")?;
        io::write_pan(&p.0, &path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `pan` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hf_pan_dims(pan: *const HfPan, samples: *mut usize, lines: *mut usize) -> HfStatus {
    guard(|| {
        let p = &handle(pan, "pan")?.0;
        if !samples.is_null() {
            *samples = p.samples();
        }
        if !lines.is_null() {
            *lines = p.lines();
        }
        Ok(())
    })
}

/// # Safety
/// `pan` must be a live handle and `buf` writable for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn hf_pan_copy_values(pan: *const HfPan, buf: *mut f32, len: usize) -> HfStatus {
    guard(|| copy_out(handle(pan, "pan")?.0.values(), buf, len))
}

/// # Safety
/// `pan` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_pan_free(pan: *mut HfPan) {
    if !pan.is_null() {
        drop(Box::from_raw(pan));
    }
}

// ---- processing ----------------------------------------------------------------

/// Box-averages `scale`×`scale` blocks of every band.
///
/// # Safety
/// `cube` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_downsample(cube: *const HfCube, scale: usize, out: *mut *mut HfCube) -> HfStatus {
    guard(|| {
        let c = handle(cube, "cube")?;
        put(out, HfCube(simulate::downsample(&c.0, scale)?))
    })
}

/// Mean of the bands whose wavelength lies in `[low_nm, high_nm]`.
///
/// # Safety
/// `cube` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_synthesize_pan(
    cube: *const HfCube,
    low_nm: f64,
    high_nm: f64,
    out: *mut *mut HfPan,
) -> HfStatus {
    guard(|| {
        let c = handle(cube, "cube")?;
        put(out, HfPan(simulate::synthesize_pan(&c.0, (low_nm, high_nm))?))
    })
}

/// Unmixes `cube` into `endmembers` signatures with multiplicative-update NMF.
/// The returned model's abundances are normalized to sum to one per pixel.
///
/// # Safety
/// `cube` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_unmix(
    cube: *const HfCube,
    endmembers: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
    out: *mut *mut HfModel,
) -> HfStatus {
    guard(|| {
        let c = handle(cube, "cube")?;
        let mut cfg = NmfConfig::new(endmembers);
        cfg.max_iter = max_iter;
        cfg.tol = tol;
        cfg.seed = seed;
        let (model, _) = unmix::unmix_cube(&c.0, &cfg)?;
        put(out, HfModel(unmix::normalize_abundances(&model, cfg.epsilon_guard)))
    })
}

/// # Safety
/// `model` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hf_model_dims(
    model: *const HfModel,
    endmembers: *mut usize,
    bands: *mut usize,
    pixels: *mut usize,
) -> HfStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        for (dst, v) in [
            (endmembers, m.endmember_count()),
            (bands, m.band_count()),
            (pixels, m.pixel_count()),
        ] {
            if !dst.is_null() {
                *dst = v;
            }
        }
        Ok(())
    })
}

/// Copies signatures endmember by endmember (`endmembers·bands` doubles).
///
/// # Safety
/// `model` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hf_model_copy_signatures(model: *const HfModel, buf: *mut f64, len: usize) -> HfStatus {
    guard(|| copy_out(handle(model, "model")?.0.signatures.as_slice(), buf, len))
}

/// Copies abundances pixel by pixel (`pixels·endmembers` doubles).
///
/// # Safety
/// `model` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hf_model_copy_abundances(model: *const HfModel, buf: *mut f64, len: usize) -> HfStatus {
    guard(|| copy_out(handle(model, "model")?.0.abundances.as_slice(), buf, len))
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_model_free(model: *mut HfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Fuses a low-resolution cube with a PAN image `scale` times finer.
///
/// Writes the high-resolution cube to `out` and, when `subpixel_map` is non-null,
/// the endmember index of every PAN pixel (row-major, `map_len` capacity).
///
/// # Safety
/// All handles must be live; `subpixel_map` must be null or writable for `map_len`.
#[no_mangle]
pub unsafe extern "C" fn hf_fuse(
    lowres: *const HfCube,
    pan: *const HfPan,
    model: *const HfModel,
    scale: usize,
    distinct_delta: f64,
    abundance_threshold: f64,
    out: *mut *mut HfCube,
    subpixel_map: *mut u32,
    map_len: usize,
) -> HfStatus {
    guard(|| {
        let (l, p, m) = (handle(lowres, "lowres")?, handle(pan, "pan")?, handle(model, "model")?);
        if out.is_null() {
            return Err(null("output handle"));
        }
        let cfg = FusionConfig {
            scale,
            distinct_delta,
            abundance_threshold,
        };
        let fused = fuse::fuse_scene(&l.0, &p.0, &m.0, &cfg, &FcmConfig::default())?;
        let cube = fuse::reconstruct_hr(&fused.map, &m.0)?;
        if !subpixel_map.is_null() {
            let labels: Vec<u32> = fused.map.endmember_index.iter().map(|&e| e as u32).collect();
            copy_out(&labels, subpixel_map, map_len)?;
        }
        put(out, HfCube(cube))
    })
}

/// SAE in degrees and mean PSNR in dB of `estimate` against `reference`.
///
/// `psnr_mean_db` is set to +infinity when every band is reproduced exactly.
///
/// # Safety
/// Both handles must be live; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hf_evaluate(
    reference: *const HfCube,
    estimate: *const HfCube,
    sae_degrees: *mut f64,
    psnr_mean_db: *mut f64,
) -> HfStatus {
    guard(|| {
        let (r, e) = (handle(reference, "reference")?, handle(estimate, "estimate")?);
        let report = metrics::evaluate(&r.0, &e.0, None)?;
        if !sae_degrees.is_null() {
            *sae_degrees = report.sae_degrees;
        }
        if !psnr_mean_db.is_null() {
            *psnr_mean_db = report.psnr_mean_db.unwrap_or(f64::INFINITY);
        }
        Ok(())
    })
}

/// Spectral angle between two spectra of length `len`, in degrees.
///
/// # Safety
/// `a` and `b` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_sad(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> HfStatus {
    guard(|| {
        let (a, b) = (slice_arg(a, len, "a")?, slice_arg(b, len, "b")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = metrics::sad(a, b)?;
        Ok(())
    })
}
