/* C interface to the multi-band sampling library.
 *
 * Every object is an opaque handle created and destroyed here; every
 * function returns a status code, with outputs through pointers.  On any
 * failure the thread-local message of msband_last_error() describes the
 * cause, and msband_last_error_condition() carries the offending system's
 * condition number when one exists (NaN otherwise).  Strings returned
 * through char** outputs are released with msband_string_free().
 */
#ifndef MSBAND_H
#define MSBAND_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MSBAND_API __declspec(dllexport)
#else
#define MSBAND_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msband_status {
  MSBAND_OK = 0,
  MSBAND_INVALID_ARGUMENT,
  MSBAND_DOMAIN_ERROR,
  MSBAND_OVERLAPPING_BLOCKS,
  MSBAND_ASYMMETRIC_SPECTRUM,
  MSBAND_ZERO_LEVEL,
  MSBAND_INFEASIBLE_PLACEMENT,
  MSBAND_GRID_MISMATCH,
  MSBAND_SIZE_MISMATCH,
  MSBAND_DIMENSION_ERROR,
  MSBAND_RANK_DEFICIENT,
  MSBAND_SINGULAR_SYSTEM,
  MSBAND_IMAGINARY_RESIDUE,
  MSBAND_DEGENERATE_COVARIANCE,
  MSBAND_EMPTY_SUPPORT,
  MSBAND_INSUFFICIENT_DATA,
  MSBAND_NON_NUMERIC_CELL,
  MSBAND_ZERO_REFERENCE,
  MSBAND_IO_ERROR,
  MSBAND_PARSE_ERROR,
  MSBAND_INTERNAL_ERROR
} msband_status;

MSBAND_API const char* msband_status_name(msband_status status);
MSBAND_API const char* msband_last_error(void);
MSBAND_API double msband_last_error_condition(void);
MSBAND_API void msband_string_free(char* text);

typedef struct msband_psd_spec msband_psd_spec;
typedef struct msband_plan msband_plan;
typedef struct msband_mixing msband_mixing;
typedef struct msband_ensemble msband_ensemble;
typedef struct msband_sample_set msband_sample_set;
typedef struct msband_real_pipeline msband_real_pipeline;

/* Block spectra.  Blocks passed to _build cover bins 0..T/2 only; mirrors
 * are added the same way the JSON loader does. */
MSBAND_API msband_status msband_psd_spec_random(int length, uint64_t seed,
                                                int max_blocks, double level_lo,
                                                double level_hi, int width_lo,
                                                int width_hi, int source_index,
                                                msband_psd_spec** out);
MSBAND_API msband_status msband_psd_spec_build(int length, const int* lo,
                                               const int* hi,
                                               const double* level, int count,
                                               int source_index,
                                               msband_psd_spec** out);
MSBAND_API msband_status msband_psd_spec_load(const char* path,
                                              int source_index,
                                              msband_psd_spec** out);
MSBAND_API msband_status msband_psd_spec_save(const msband_psd_spec* spec,
                                              const char* path);
MSBAND_API msband_status msband_psd_spec_length(const msband_psd_spec* spec,
                                                int* out);
MSBAND_API msband_status msband_psd_spec_support(const msband_psd_spec* spec,
                                                 long* bins);
MSBAND_API void msband_psd_spec_free(msband_psd_spec* spec);

/* Subband plans. */
MSBAND_API msband_status msband_plan_build(const msband_psd_spec* const* specs,
                                           int count, msband_plan** out);
MSBAND_API msband_status msband_plan_info(const msband_plan* plan,
                                          int* subband_count, long* bandwidth);
MSBAND_API msband_status msband_plan_busiest(const msband_plan* plan,
                                             const msband_psd_spec* const* specs,
                                             int count, int* out);
MSBAND_API void msband_plan_free(msband_plan* plan);

/* Mixing matrices (row-major buffers). */
MSBAND_API msband_status msband_mixing_random(int channels, int sources,
                                              uint64_t seed,
                                              msband_mixing** out);
MSBAND_API msband_status msband_mixing_build(const double* values, int channels,
                                             int sources, msband_mixing** out);
MSBAND_API msband_status msband_mixing_load_csv(const char* path,
                                                msband_mixing** out);
MSBAND_API msband_status msband_mixing_save_csv(const msband_mixing* mixing,
                                                const char* path);
MSBAND_API msband_status msband_mixing_dims(const msband_mixing* mixing,
                                            int* channels, int* sources);
MSBAND_API void msband_mixing_free(msband_mixing* mixing);

/* Ensembles (row-major buffers, one row per channel).
 * Roles: 0 latent, 1 observed, 2 reconstructed. */
MSBAND_API msband_status msband_synthesize(const msband_psd_spec* const* specs,
                                           int count, uint64_t phase_seed,
                                           msband_ensemble** out);
MSBAND_API msband_status msband_mix(const msband_mixing* mixing,
                                    const msband_ensemble* latents,
                                    msband_ensemble** out);
MSBAND_API msband_status msband_ensemble_dims(const msband_ensemble* ensemble,
                                              int* channels, int* length);
MSBAND_API msband_status msband_ensemble_role(const msband_ensemble* ensemble,
                                              int* role);
MSBAND_API msband_status msband_ensemble_data(const msband_ensemble* ensemble,
                                              double* buffer, size_t capacity);
MSBAND_API msband_status msband_ensemble_save_csv(const msband_ensemble* ensemble,
                                                  const char* path);
MSBAND_API msband_status msband_ensemble_load_csv(const char* path, int role,
                                                  msband_ensemble** out);
MSBAND_API msband_status msband_ensemble_save_binary(
    const msband_ensemble* ensemble, const char* path);
MSBAND_API msband_status msband_ensemble_load_binary(const char* path,
                                                     msband_ensemble** out);
MSBAND_API void msband_ensemble_free(msband_ensemble* ensemble);

/* Acquisition. */
MSBAND_API msband_status msband_acquire(const msband_ensemble* observed,
                                        const msband_plan* plan,
                                        const msband_mixing* mixing,
                                        msband_sample_set** out);
MSBAND_API msband_status msband_sample_set_totals(const msband_sample_set* samples,
                                                  long* total, double* density);
MSBAND_API msband_status msband_sample_set_drop(const msband_sample_set* samples,
                                                int subband,
                                                msband_sample_set** out);
MSBAND_API msband_status msband_sample_set_save(const msband_sample_set* samples,
                                                const char* path);
MSBAND_API msband_status msband_sample_set_load(const char* path,
                                                msband_sample_set** out);
MSBAND_API void msband_sample_set_free(msband_sample_set* samples);

/* Reconstruction and metrics.  info_json (optional) receives conditioning
 * details of the solves. */
MSBAND_API msband_status msband_reconstruct(const msband_sample_set* samples,
                                            const msband_plan* plan,
                                            const msband_mixing* mixing,
                                            msband_ensemble** out,
                                            char** info_json);
MSBAND_API msband_status msband_separate_reconstruct(
    const msband_ensemble* observed, const msband_mixing* mixing,
    const msband_psd_spec* const* specs, int count, msband_ensemble** out,
    char** info_json);
MSBAND_API msband_status msband_nmse_db(const msband_ensemble* reference,
                                        const msband_ensemble* estimate,
                                        double* out);
MSBAND_API msband_status msband_check_premises(const double* mixing,
                                               int channels, int sources,
                                               const double* powers,
                                               int* more_channels,
                                               int* positive_powers,
                                               int* no_zero_rows,
                                               int* satisfied);
MSBAND_API msband_status msband_rate_comparison(const msband_mixing* mixing,
                                                const msband_psd_spec* const* specs,
                                                int count, long* joint_total,
                                                long* separate_total);

/* Self-contained synthetic trial; the report is returned as JSON. */
typedef struct msband_trial_config {
  uint64_t seed;
  int length;
  int channels;
  int sources;
  int max_blocks;
  double level_lo;
  double level_hi;
  int width_lo;
  int width_hi;
  int drop_subband;     /* -1 keeps every subband */
  int with_baseline;    /* nonzero also runs the per-channel baseline */
  double nmse_threshold; /* dB; NaN picks the grid-dependent default */
} msband_trial_config;

MSBAND_API void msband_trial_config_init(msband_trial_config* config);
MSBAND_API msband_status msband_trial_run(const msband_trial_config* config,
                                          char** report_json);

/* Measured-data pipeline: factor, fit block spectra, form the bandlimited
 * target.  `path` may be a wide CSV or a directory of one-column CSVs. */
MSBAND_API msband_status msband_real_run(const char* path, int length,
                                         int channels, int sources,
                                         double variance_target,
                                         double fraction,
                                         msband_real_pipeline** out);
MSBAND_API msband_status msband_real_report_json(const msband_real_pipeline* p,
                                                 char** json);
MSBAND_API msband_status msband_real_sources(const msband_real_pipeline* p,
                                             int* sources);
MSBAND_API msband_status msband_real_observed(const msband_real_pipeline* p,
                                              msband_ensemble** out);
MSBAND_API msband_status msband_real_latents(const msband_real_pipeline* p,
                                             msband_ensemble** out);
MSBAND_API msband_status msband_real_mixing(const msband_real_pipeline* p,
                                            msband_mixing** out);
MSBAND_API msband_status msband_real_spec(const msband_real_pipeline* p,
                                          int source, msband_psd_spec** out);
MSBAND_API msband_status msband_real_psd(const msband_real_pipeline* p,
                                         int source, double* buffer,
                                         size_t capacity);
MSBAND_API msband_status msband_real_means(const msband_real_pipeline* p,
                                           double* buffer, size_t capacity);
MSBAND_API void msband_real_pipeline_free(msband_real_pipeline* p);

#ifdef __cplusplus
}
#endif

#endif /* MSBAND_H */
