/* C interface of the photonic recurrent network simulator. */

#ifndef PHOTONIC_RNN_H
#define PHOTONIC_RNN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PrnnStatus {
  /**
   * Success.
   */
  PRNN_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PRNN_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments or configuration were rejected before running.
   */
  PRNN_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation or an artifact write failed.
   */
  PRNN_STATUS_RUNTIME = 3,
  /**
   * A string argument was not valid UTF-8.
   */
  PRNN_STATUS_INVALID_UTF8 = 4,
  /**
   * An internal invariant failed; the handle state is unspecified.
   */
  PRNN_STATUS_PANIC = 5,
} PrnnStatus;

/**
 * Opaque sparse coupling matrix.
 */
typedef struct PrnnCoupling PrnnCoupling;

/**
 * Opaque sampled scalar series.
 */
typedef struct PrnnSeries PrnnSeries;

/**
 * Headline numbers of one training run.
 */
typedef struct PrnnRunSummary {
  size_t n_nodes;
  /**
   * Detector gain after calibration (or the configured fixed value).
   */
  double alpha;
  /**
   * Error of the random initial readout weights.
   */
  double epsilon_initial;
  /**
   * Final training error.
   */
  double epsilon_train;
  /**
   * Error on the held-out window under training-frozen transforms.
   */
  double epsilon_test;
  size_t iterations;
  size_t accepted_flips;
  /**
   * NUL-terminated hash of the effective configuration (16 hex digits).
   */
  char config_hash[17];
} PrnnRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *prnn_version(void);

/**
 * Message of the calling thread's most recent failure. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *prnn_last_error(void);

/**
 * Integrate the chaotic delay-differential benchmark series and return a
 * new series handle holding `n_samples` values after `burn_in` discarded
 * steps.
 */
enum PrnnStatus prnn_mg_generate(double a,
                                 double b,
                                 double p,
                                 double tau,
                                 double dt,
                                 double x0,
                                 size_t n_samples,
                                 size_t burn_in,
                                 struct PrnnSeries **out);

/**
 * Number of samples in a series.
 */
enum PrnnStatus prnn_series_len(const struct PrnnSeries *series, size_t *out);

/**
 * Sample spacing of a series (after any downsampling).
 */
enum PrnnStatus prnn_series_dt(const struct PrnnSeries *series, double *out);

/**
 * Copy all samples into `buffer`, which must hold at least `capacity`
 * doubles; fails unless `capacity` covers the whole series.
 */
enum PrnnStatus prnn_series_copy(const struct PrnnSeries *series, double *buffer, size_t capacity);

/**
 * Keep every `factor`-th sample, returning a new series handle.
 */
enum PrnnStatus prnn_series_downsample(const struct PrnnSeries *series,
                                       size_t factor,
                                       struct PrnnSeries **out);

/**
 * Standardize to mean 0 and standard deviation 1, returning a new handle
 * and the applied transform parameters.
 */
enum PrnnStatus prnn_series_standardize(const struct PrnnSeries *series,
                                        struct PrnnSeries **out,
                                        double *mean,
                                        double *std);

/**
 * Release a series handle; a null handle is ignored.
 */
void prnn_series_free(struct PrnnSeries *series);

/**
 * Build a max-row-sum normalized synthetic coupling matrix on a
 * `grid_side` x `grid_side` node grid with the given kernel radius and
 * per-entry heterogeneity in [0, 1].
 */
enum PrnnStatus prnn_coupling_synthetic(size_t grid_side,
                                        size_t kernel_radius,
                                        double heterogeneity,
                                        uint64_t seed,
                                        struct PrnnCoupling **out);

/**
 * Node count of a coupling matrix.
 */
enum PrnnStatus prnn_coupling_n_nodes(const struct PrnnCoupling *coupling, size_t *out);

/**
 * Kernel radius (grid distance beyond which entries are zero).
 */
enum PrnnStatus prnn_coupling_kernel_radius(const struct PrnnCoupling *coupling, size_t *out);

/**
 * Weight at `(i, j)`; zero where the kernel has no support.
 */
enum PrnnStatus prnn_coupling_entry(const struct PrnnCoupling *coupling,
                                    size_t i,
                                    size_t j,
                                    double *out);

/**
 * Write a coupling matrix as a plain-text triplet file.
 */
enum PrnnStatus prnn_coupling_write(const struct PrnnCoupling *coupling, const char *path);

/**
 * Read a coupling matrix from a triplet file written by
 * [`prnn_coupling_write`].
 */
enum PrnnStatus prnn_coupling_read(const char *path, struct PrnnCoupling **out);

/**
 * Release a coupling handle; a null handle is ignored.
 */
void prnn_coupling_free(struct PrnnCoupling *coupling);

/**
 * Run one seeded end-to-end training described by a TOML config string.
 *
 * `out_dir` may be null to skip artifact emission; when given, the
 * directory is created and receives the learning record, prediction table,
 * final weights and summary. `summary` receives the headline numbers.
 */
enum PrnnStatus prnn_train_from_config(const char *config_toml,
                                       const char *out_dir,
                                       struct PrnnRunSummary *summary);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PHOTONIC_RNN_H */
