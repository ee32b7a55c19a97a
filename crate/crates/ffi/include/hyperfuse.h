#ifndef HYPERFUSE_H
#define HYPERFUSE_H

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every `hf_*` function.
 */
typedef enum HfStatus {
  HF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  HF_STATUS_NULL_POINTER = 1,
  /**
   * A file could not be read or written.
   */
  HF_STATUS_IO = 2,
  /**
   * A file was readable but malformed.
   */
  HF_STATUS_FORMAT = 3,
  /**
   * Arguments or data violate a documented precondition.
   */
  HF_STATUS_INVALID = 4,
  /**
   * A caller-provided buffer is too small.
   */
  HF_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A path was not valid UTF-8.
   */
  HF_STATUS_UTF8 = 6,
  /**
   * An internal panic was caught at the boundary.
   */
  HF_STATUS_PANIC = 7,
} HfStatus;

/**
 * Opaque hyperspectral cube.
 */
typedef struct HfCube HfCube;

/**
 * Opaque endmember model (signatures and sum-to-one abundances).
 */
typedef struct HfModel HfModel;

/**
 * Opaque single-band panchromatic image.
 */
typedef struct HfPan HfPan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 *
 * The pointer stays valid until the next `hf_*` call on the same thread.
 */
const char *hf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hf_version(void);

/**
 * Builds a cube from band-sequential values (`bands·lines·samples` floats) and
 * `bands` strictly increasing wavelengths.
 *
 * # Safety
 * `wavelengths` and `values` must point to arrays of the stated lengths.
 */
enum HfStatus hf_cube_new(size_t samples,
                          size_t lines,
                          size_t bands,
                          const double *wavelengths_nm,
                          const float *values,
                          struct HfCube **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HfStatus hf_cube_read(const char *path, struct HfCube **out);

/**
 * # Safety
 * `cube` must be a live handle and `path` a NUL-terminated string.
 */
enum HfStatus hf_cube_write(const struct HfCube *cube, const char *path);

/**
 * # Safety
 * `cube` must be a live handle; output pointers may be null to skip a value.
 */
enum HfStatus hf_cube_dims(const struct HfCube *cube,
                           size_t *samples,
                           size_t *lines,
                           size_t *bands);

/**
 * Copies the band-sequential values into `buf` (capacity `len` floats).
 *
 * # Safety
 * `cube` must be a live handle and `buf` writable for `len` floats.
 */
enum HfStatus hf_cube_copy_values(const struct HfCube *cube, float *buf, size_t len);

/**
 * # Safety
 * `cube` must be a live handle and `buf` writable for `len` doubles.
 */
enum HfStatus hf_cube_copy_wavelengths(const struct HfCube *cube, double *buf, size_t len);

/**
 * # Safety
 * `cube` must be null or a handle not yet freed.
 */
void hf_cube_free(struct HfCube *cube);

/**
 * # Safety
 * `values` must point to `samples·lines` floats, row-major.
 */
enum HfStatus hf_pan_new(size_t samples, size_t lines, const float *values, struct HfPan **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HfStatus hf_pan_read(const char *path, struct HfPan **out);

/**
 * # Safety
 * `pan` must be a live handle and `path` a NUL-terminated string.
 */
enum HfStatus hf_pan_write(const struct HfPan *pan, const char *path);

/**
 * # Safety
 * `pan` must be a live handle; output pointers may be null.
 */
enum HfStatus hf_pan_dims(const struct HfPan *pan, size_t *samples, size_t *lines);

/**
 * # Safety
 * `pan` must be a live handle and `buf` writable for `len` floats.
 */
enum HfStatus hf_pan_copy_values(const struct HfPan *pan, float *buf, size_t len);

/**
 * # Safety
 * `pan` must be null or a handle not yet freed.
 */
void hf_pan_free(struct HfPan *pan);

/**
 * Box-averages `scale`×`scale` blocks of every band.
 *
 * # Safety
 * `cube` must be a live handle; `out` must be writable.
 */
enum HfStatus hf_downsample(const struct HfCube *cube, size_t scale, struct HfCube **out);

/**
 * Mean of the bands whose wavelength lies in `[low_nm, high_nm]`.
 *
 * # Safety
 * `cube` must be a live handle; `out` must be writable.
 */
enum HfStatus hf_synthesize_pan(const struct HfCube *cube,
                                double low_nm,
                                double high_nm,
                                struct HfPan **out);

/**
 * Unmixes `cube` into `endmembers` signatures with multiplicative-update NMF.
 * The returned model's abundances are normalized to sum to one per pixel.
 *
 * # Safety
 * `cube` must be a live handle; `out` must be writable.
 */
enum HfStatus hf_unmix(const struct HfCube *cube,
                       size_t endmembers,
                       size_t max_iter,
                       double tol,
                       uint64_t seed,
                       struct HfModel **out);

/**
 * # Safety
 * `model` must be a live handle; output pointers may be null.
 */
enum HfStatus hf_model_dims(const struct HfModel *model,
                            size_t *endmembers,
                            size_t *bands,
                            size_t *pixels);

/**
 * Copies signatures endmember by endmember (`endmembers·bands` doubles).
 *
 * # Safety
 * `model` must be a live handle and `buf` writable for `len` doubles.
 */
enum HfStatus hf_model_copy_signatures(const struct HfModel *model, double *buf, size_t len);

/**
 * Copies abundances pixel by pixel (`pixels·endmembers` doubles).
 *
 * # Safety
 * `model` must be a live handle and `buf` writable for `len` doubles.
 */
enum HfStatus hf_model_copy_abundances(const struct HfModel *model, double *buf, size_t len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void hf_model_free(struct HfModel *model);

/**
 * Fuses a low-resolution cube with a PAN image `scale` times finer.
 *
 * Writes the high-resolution cube to `out` and, when `subpixel_map` is non-null,
 * the endmember index of every PAN pixel (row-major, `map_len` capacity).
 *
 * # Safety
 * All handles must be live; `subpixel_map` must be null or writable for `map_len`.
 */
enum HfStatus hf_fuse(const struct HfCube *lowres,
                      const struct HfPan *pan,
                      const struct HfModel *model,
                      size_t scale,
                      double distinct_delta,
                      double abundance_threshold,
                      struct HfCube **out,
                      uint32_t *subpixel_map,
                      size_t map_len);

/**
 * SAE in degrees and mean PSNR in dB of `estimate` against `reference`.
 *
 * `psnr_mean_db` is set to +infinity when every band is reproduced exactly.
 *
 * # Safety
 * Both handles must be live; output pointers may be null.
 */
enum HfStatus hf_evaluate(const struct HfCube *reference,
                          const struct HfCube *estimate,
                          double *sae_degrees,
                          double *psnr_mean_db);

/**
 * Spectral angle between two spectra of length `len`, in degrees.
 *
 * # Safety
 * `a` and `b` must point to `len` doubles; `out` must be writable.
 */
enum HfStatus hf_sad(const double *a, const double *b, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERFUSE_H */
