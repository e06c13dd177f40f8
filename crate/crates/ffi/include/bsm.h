#ifndef BSM_H
#define BSM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum BsmStatus {
  BSM_STATUS_OK = 0,
  // A required pointer argument was null.
  BSM_STATUS_NULL_POINTER = 1,
  // Invalid argument or configuration.
  BSM_STATUS_CONFIG = 2,
  // Numerical failure (singular system, silent input, ...).
  BSM_STATUS_NUMERIC = 3,
  // File or format error.
  BSM_STATUS_IO = 4,
  // Internal panic; the handle involved should be discarded.
  BSM_STATUS_PANIC = 5,
} BsmStatus;

// Left or right ear.
typedef enum BsmEar {
  BSM_EAR_LEFT = 0,
  BSM_EAR_RIGHT = 1,
} BsmEar;

// Per-frequency filters of both ears.
typedef struct BsmFilterBank BsmFilterBank;

// Microphone array geometry.
typedef struct BsmGeometry BsmGeometry;

// Two-ear HRTF set.
typedef struct BsmHrtf BsmHrtf;

// FIR renderer built from a filter bank.
typedef struct BsmRenderer BsmRenderer;

// Design parameters. Obtain defaults from [`bsm_design_params_default`].
typedef struct BsmDesignParams {
  double snr_db;
  // MagLS at and above this frequency; `INFINITY` disables MagLS.
  double cutoff_hz;
  // Head yaw compensated at playback, degrees.
  double head_yaw_deg;
  // Array yaw compensated at recording, degrees.
  double array_yaw_deg;
  double fmin_hz;
  double fmax_hz;
  double fstep_hz;
  // Number of spiral design directions.
  size_t num_directions;
} BsmDesignParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *bsm_last_error(void);

// Library version as a static NUL-terminated string.
const char *bsm_version(void);

// Semicircular rigid-sphere array of `mics` microphones at `radius` metres.
//
// # Safety
// `out` must be a valid pointer to writable storage.
enum BsmStatus bsm_geometry_semicircle(size_t mics, double radius, struct BsmGeometry **out);

// Loads a geometry JSON file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum BsmStatus bsm_geometry_load(const char *path, struct BsmGeometry **out);

// Number of microphones, or 0 for a null handle.
//
// # Safety
// `geom` must be null or a live handle.
size_t bsm_geometry_num_mics(const struct BsmGeometry *geom);

// # Safety
// `geom` must be null or a handle not yet freed.
void bsm_geometry_free(struct BsmGeometry *geom);

// Opens an HRTF source: `surrogate`, `surrogate:<radius_m>` or the
// directory of a stored set.
//
// # Safety
// `source` must be a NUL-terminated string and `out` writable.
enum BsmStatus bsm_hrtf_open(const char *source, struct BsmHrtf **out);

// # Safety
// `hrtf` must be null or a handle not yet freed.
void bsm_hrtf_free(struct BsmHrtf *hrtf);

// Default design parameters: 20 dB SNR, MagLS from 1.5 kHz, no rotation,
// 75 to 10000 Hz in 75 Hz steps, 240 spiral directions.
struct BsmDesignParams bsm_design_params_default(void);

// Designs a filter bank.
//
// # Safety
// `geom`, `hrtf` and `params` must be live pointers and `out` writable.
enum BsmStatus bsm_design(const struct BsmGeometry *geom,
                          const struct BsmHrtf *hrtf,
                          const struct BsmDesignParams *params,
                          struct BsmFilterBank **out);

// Loads a bank written by [`bsm_filter_bank_save`] or the command-line tool.
//
// # Safety
// `dir` must be a NUL-terminated string and `out` writable.
enum BsmStatus bsm_filter_bank_load(const char *dir, struct BsmFilterBank **out);

// # Safety
// `bank` must be a live handle and `dir` a NUL-terminated string.
enum BsmStatus bsm_filter_bank_save(const struct BsmFilterBank *bank, const char *dir);

// Number of design frequencies, or 0 for a null handle.
//
// # Safety
// `bank` must be null or a live handle.
size_t bsm_filter_bank_num_freqs(const struct BsmFilterBank *bank);

// Number of microphones, or 0 for a null handle.
//
// # Safety
// `bank` must be null or a live handle.
size_t bsm_filter_bank_num_mics(const struct BsmFilterBank *bank);

// Frequency in Hz of bin `index`.
//
// # Safety
// `bank` must be a live handle and `out_hz` writable.
enum BsmStatus bsm_filter_bank_freq(const struct BsmFilterBank *bank, size_t index, double *out_hz);

// Copies the filter of one ear at bin `index` into `re` and `im`, each of
// length `num_mics`.
//
// # Safety
// `bank` must be a live handle; `re` and `im` must hold `len` doubles.
enum BsmStatus bsm_filter_bank_coefficients(const struct BsmFilterBank *bank,
                                            size_t index,
                                            enum BsmEar ear,
                                            double *re,
                                            double *im,
                                            size_t len);

// # Safety
// `bank` must be null or a handle not yet freed.
void bsm_filter_bank_free(struct BsmFilterBank *bank);

// FIR renderer with filters of length `nfft` (a power of two) at
// `sample_rate`.
//
// # Safety
// `bank` must be a live handle and `out` writable.
enum BsmStatus bsm_renderer_new(const struct BsmFilterBank *bank,
                                size_t nfft,
                                double sample_rate,
                                struct BsmRenderer **out);

// Output length for an input of `frames` samples, or 0 for a null handle.
//
// # Safety
// `renderer` must be null or a live handle.
size_t bsm_renderer_output_len(const struct BsmRenderer *renderer, size_t frames);

// Delay in samples introduced by the filters, or 0 for a null handle.
//
// # Safety
// `renderer` must be null or a live handle.
size_t bsm_renderer_latency(const struct BsmRenderer *renderer);

// Renders `frames` samples of interleaved `num_mics`-channel input into
// `left` and `right`, each of length [`bsm_renderer_output_len`].
//
// # Safety
// `input` must hold `frames * num_mics` doubles; `left` and `right` must
// hold `out_len` doubles.
enum BsmStatus bsm_renderer_process(const struct BsmRenderer *renderer,
                                    const double *input,
                                    size_t frames,
                                    size_t num_mics,
                                    double sample_rate,
                                    double *left,
                                    double *right,
                                    size_t out_len);

// # Safety
// `renderer` must be null or a handle not yet freed.
void bsm_renderer_free(struct BsmRenderer *renderer);

// Interaural time difference in seconds (positive when the left channel
// lags), from the cross-correlation peak after a 1.5 kHz low-pass.
//
// # Safety
// `left` and `right` must hold `len` doubles; `out_seconds` writable.
enum BsmStatus bsm_itd(const double *left,
                       const double *right,
                       size_t len,
                       double sample_rate,
                       double *out_seconds);

// Interaural level difference in dB averaged over 29 ERB bands.
//
// # Safety
// `left` and `right` must hold `len` doubles; `out_db` writable.
enum BsmStatus bsm_ild(const double *left,
                       const double *right,
                       size_t len,
                       double sample_rate,
                       double *out_db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BSM_H */
