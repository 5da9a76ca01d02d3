#ifndef QND_H
#define QND_H

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum QndStatus {
  QND_STATUS_OK = 0,
  QND_STATUS_NULL_POINTER = 1,
  QND_STATUS_INVALID_PARAMETER = 2,
  QND_STATUS_IMPOSSIBLE_OUTCOME = 3,
  QND_STATUS_UNDEFINED = 4,
  QND_STATUS_BUFFER_TOO_SMALL = 5,
  QND_STATUS_UNKNOWN_METRIC = 6,
  QND_STATUS_INTERNAL = 7,
} QndStatus;

// Channel selector.
typedef enum QndChannelKind {
  QND_CHANNEL_KIND_NONE = 0,
  QND_CHANNEL_KIND_PHASE_DIFFUSION = 1,
  QND_CHANNEL_KIND_LOSS_GAIN = 2,
  QND_CHANNEL_KIND_DEPHASING = 3,
} QndChannelKind;

// Opaque conditional density matrix.
typedef struct QndDensity QndDensity;

// Parameters of one preparation.
typedef struct QndConfig {
  uint32_t n_atoms;
  double alpha;
  uint32_t n_c;
  uint32_t n_d;
  double tau;
} QndConfig;

// A channel and its rates; rates not used by `kind` are ignored.
typedef struct QndChannel {
  enum QndChannelKind kind;
  double kappa;
  double gamma;
  double gain;
  double dephasing;
} QndChannel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds the conditional density matrix for `config` under `channel` and
// stores a new handle in `*out`. On failure `*out` is set to NULL.
//
// # Safety
// `config` and `channel` must be NULL or point to valid values; `out`
// must be NULL or writable.
enum QndStatus qnd_density_build(const struct QndConfig *config,
                                 const struct QndChannel *channel,
                                 struct QndDensity **out);

// Releases a handle. NULL is ignored.
//
// # Safety
// `density` must be NULL or a handle from [`qnd_density_build`] that has
// not been freed.
void qnd_density_free(struct QndDensity *density);

// Matrix side `(N+1)²`, or 0 for NULL.
//
// # Safety
// `density` must be NULL or a live handle.
size_t qnd_density_dim(const struct QndDensity *density);

// Born probability of the conditioning outcome.
//
// # Safety
// `density` must be NULL or a live handle; `out` NULL or writable.
enum QndStatus qnd_density_outcome_weight(const struct QndDensity *density, double *out);

// Copies the matrix in row-major order into `re` and `im`, each holding
// `len ≥ dim²` doubles. Row/column index is `k1·(N+1) + k2`.
//
// # Safety
// `density` must be NULL or a live handle; `re` and `im` NULL or valid
// for `len` writes.
enum QndStatus qnd_density_copy_matrix(const struct QndDensity *density,
                                       double *re,
                                       double *im,
                                       size_t len);

// Evaluates the metric named `name` (e.g. `"log_negativity"`, `"chsh"`).
// A NaN `theta_b` selects the empirical CHSH angle for `N`.
//
// # Safety
// `density` must be NULL or a live handle; `name` NULL or a NUL-terminated
// string; `out` NULL or writable.
enum QndStatus qnd_metric(const struct QndDensity *density,
                          const char *name,
                          double theta_b,
                          double *out);

// Message of the last failure on this thread; valid until the next call
// on the same thread. Empty if nothing has failed.
const char *qnd_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qnd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QND_H */
