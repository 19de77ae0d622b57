#ifndef BRIGHTBEAM_H
#define BRIGHTBEAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum BbStatus {
  BB_STATUS_OK = 0,
  BB_STATUS_NULL_POINTER = 1,
  // Argument out of range or scenario validation failure.
  BB_STATUS_INVALID_ARGUMENT = 2,
  // The configuration leaves a required carrier dark.
  BB_STATUS_DEGENERATE = 3,
  // File access or scenario parsing failed.
  BB_STATUS_IO = 4,
  // A panic was caught at the boundary; treat the library as unusable.
  BB_STATUS_PANIC = 5,
} BbStatus;

// Opaque scenario.
typedef struct BbScenario BbScenario;

// Opaque Gaussian state.
typedef struct BbState BbState;

// Squeezed input beam. A negative `correlated_group` means the input shares
// no classical phase noise with others.
typedef struct BbSqueezedInput {
  double amplitude;
  double squeezing_db;
  double antisqueezing_db;
  double excess_phase_db;
  int64_t correlated_group;
} BbSqueezedInput;

typedef struct BbWitnessReport {
  double v_sq_plus;
  double v_sq_minus;
  double gain;
  double sum;
  double product;
  double bound;
  bool witnessed;
} BbWitnessReport;

// Scenario outcome. Fields without a value are NaN: the separate
// correlations of a single-port measurement and the Monte-Carlo columns
// when sampling is off.
typedef struct BbReport {
  // `'A'`, `'B'` or `'C'`.
  char method;
  double v_sq_plus;
  double v_sq_minus;
  double sum;
  double bound;
  bool witnessed;
  double mc_sum;
  double mc_stderr;
} BbReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call into the library on this thread.
const char *bb_last_error_message(void);

// # Safety
// `out` must point to writable storage for one handle.
enum BbStatus bb_state_coherent(double amplitude, struct BbState **out);

// # Safety
// `spec` must point to a valid input description and `out` to writable storage.
enum BbStatus bb_state_squeezed(const struct BbSqueezedInput *spec, struct BbState **out);

// Tensor product `a ⊗ b`; inputs of one correlation group share their
// classical phase noise with the given correlation in [0, 1].
//
// # Safety
// `a` and `b` must be live handles and `out` must point to writable storage.
enum BbStatus bb_state_compose(const struct BbState *a,
                               const struct BbState *b,
                               double correlation,
                               struct BbState **out);

// # Safety
// `state` must be a live handle and `out` must point to writable storage.
enum BbStatus bb_state_beamsplitter(const struct BbState *state,
                                    uintptr_t i,
                                    uintptr_t j,
                                    double ratio,
                                    double theta,
                                    struct BbState **out);

// # Safety
// `state` must be a live handle and `out` must point to writable storage.
enum BbStatus bb_state_loss(const struct BbState *state,
                            uintptr_t mode,
                            double eta,
                            struct BbState **out);

// # Safety
// `state` must be a live handle and `out` must point to writable storage.
enum BbStatus bb_state_phase(const struct BbState *state,
                             uintptr_t mode,
                             double phi,
                             struct BbState **out);

// Number of modes, or 0 for a NULL handle.
//
// # Safety
// `state` must be NULL or a live handle.
uintptr_t bb_state_num_modes(const struct BbState *state);

// # Safety
// `state` must be a live handle and `out` must point to a writable double.
enum BbStatus bb_state_amplitude(const struct BbState *state, uintptr_t mode, double *out);

// Copies the `2n × 2n` covariance, row-major in `(X₀, Y₀, X₁, Y₁, …)` order.
// `len` is the capacity of `buf` in doubles and must be at least `4n²`.
//
// # Safety
// `state` must be a live handle and `buf` must hold `len` writable doubles.
enum BbStatus bb_state_covariance(const struct BbState *state, double *buf, uintptr_t len);

// # Safety
// `state` must be NULL or a handle from this library that is not used afterwards.
void bb_state_free(struct BbState *state);

// Interferes two squeezed inputs on a splitter of intensity `ratio` at
// relative phase `theta`.
//
// # Safety
// `a` and `b` must point to valid input descriptions and `out` to writable storage.
enum BbStatus bb_generate_entangled(const struct BbSqueezedInput *a,
                                    const struct BbSqueezedInput *b,
                                    double theta,
                                    double ratio,
                                    double excess_correlation,
                                    struct BbState **out);

// Sum and product criteria of a two-mode state at gain `g`.
//
// # Safety
// `state` must be a live handle and `out` must point to a writable report.
enum BbStatus bb_duan_simon(const struct BbState *state, double g, struct BbWitnessReport *out);

// Loads and validates a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` must point to writable storage.
enum BbStatus bb_scenario_load(const char *path, struct BbScenario **out);

// Parses and validates scenario text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` must point to writable storage.
enum BbStatus bb_scenario_parse(const char *text, struct BbScenario **out);

// # Safety
// `scenario` must be a live handle and `out` must point to a writable report.
enum BbStatus bb_scenario_run(const struct BbScenario *scenario, struct BbReport *out);

// # Safety
// `scenario` must be NULL or a handle from this library that is not used afterwards.
void bb_scenario_free(struct BbScenario *scenario);

// Variance for a level `db` decibels above shot noise.
double bb_db_to_var(double db);

// # Safety
// `out` must point to a writable double.
enum BbStatus bb_var_to_db(double v, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRIGHTBEAM_H */
