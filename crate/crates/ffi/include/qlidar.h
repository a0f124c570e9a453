#ifndef QLIDAR_H
#define QLIDAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Status codes.
 */
typedef enum QlStatus {
  QL_STATUS_OK = 0,
  QL_STATUS_NULL_POINTER = 1,
  QL_STATUS_INVALID_ARGUMENT = 2,
  QL_STATUS_NUMERICAL_FAILURE = 3,
  QL_STATUS_BRACKET_EDGE = 4,
  QL_STATUS_INDEX_OUT_OF_RANGE = 5,
  QL_STATUS_PANIC = 6,
} QlStatus;

typedef enum QlRegime {
  QL_REGIME_NO_ENTANGLEMENT = 0,
  QL_REGIME_HIGH_ENTANGLEMENT = 1,
  QL_REGIME_HIGH_SQUEEZING = 2,
  QL_REGIME_MIXED = 3,
  QL_REGIME_INDETERMINATE = 4,
} QlRegime;

/*
 Opaque list of detected signal/idler pairs.
 */
typedef struct QlEventList QlEventList;

/*
 Opaque spectral parameter set.
 */
typedef struct QlParams QlParams;

/*
 Summary of the exact QFI series.
 */
typedef struct QlQfiBreakdown {
  double z_omega;
  double z_sigma;
  double j_q;
  double ln_j_q;
  double photon_number;
  double ln_photon_number;
  double bandwidth_share;
  double truncation_bound;
  uintptr_t n_terms_used;
} QlQfiBreakdown;

/*
 Regime with asymptotic and exact advantage. `asymptotic_ratio` and
 `relative_gap` are NaN when `has_asymptote` is false.
 */
typedef struct QlRegimeReport {
  enum QlRegime regime;
  bool has_asymptote;
  double asymptotic_ratio;
  double exact_ratio;
  double relative_gap;
  double ln_exact_ratio;
} QlRegimeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty after success.
 The pointer stays valid until the next call on the same thread.
 */
const char *ql_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ql_version(void);

/*
 Creates a parameter set from explicit bandwidths.

 # Safety
 `out` must be a valid pointer to writable storage.
 */
enum QlStatus ql_params_new(double omega0,
                            double sigma,
                            double epsilon,
                            double xi,
                            double mu,
                            struct QlParams **out);

/*
 Creates a parameter set from the Schmidt number and the relative
 bandwidth sqrt(sigma eps)/omega0.

 # Safety
 `out` must be a valid pointer to writable storage.
 */
enum QlStatus ql_params_from_schmidt(double omega0,
                                     double k,
                                     double rel_bw,
                                     double xi,
                                     double mu,
                                     struct QlParams **out);

/*
 Releases a parameter set. Null is ignored.

 # Safety
 `p` must come from a `ql_params_*` constructor and not be freed twice.
 */
void ql_params_free(struct QlParams *p);

/*
 Reads back (sigma, epsilon, schmidt number).

 # Safety
 Pointers must be valid; `p` must be a live handle.
 */
enum QlStatus ql_params_get(const struct QlParams *p,
                            double *sigma,
                            double *epsilon,
                            double *schmidt_number);

/*
 Exact quantum Fisher information series.

 # Safety
 Pointers must be valid; `p` must be a live handle.
 */
enum QlStatus ql_qfi_quantum(const struct QlParams *p, struct QlQfiBreakdown *out);

/*
 J_q / J_c against the matched coherent probe, and its logarithm.

 # Safety
 Pointers must be valid; `p` must be a live handle. `ln_ratio` may be null.
 */
enum QlStatus ql_advantage_ratio(const struct QlParams *p, double *ratio, double *ln_ratio);

/*
 Regime classification with the default thresholds.

 # Safety
 Pointers must be valid; `p` must be a live handle.
 */
enum QlStatus ql_classify_regime(const struct QlParams *p, struct QlRegimeReport *out);

/*
 Lossy QFI by the closed form and by the covariance pipeline. Only
 omega0 and sigma*epsilon of `p` enter. `pipeline` may be null to skip
 the (slower) pipeline evaluation.

 # Safety
 Pointers must be valid; `p` must be a live handle.
 */
enum QlStatus ql_lossy_qfi(const struct QlParams *p,
                           double eta,
                           double mu0,
                           double ns0,
                           double ns1,
                           double *closed_form,
                           double *pipeline);

/*
 Photon-counting Fisher information at `mu` by quadrature and closed form.

 # Safety
 Pointers must be valid; `p` must be a live handle.
 */
enum QlStatus ql_fisher_info(const struct QlParams *p,
                             double mu,
                             double *quadrature,
                             double *closed_form);

/*
 Samples `m` detected pairs at Doppler parameter `mu`.

 # Safety
 Pointers must be valid; `p` must be a live handle.
 */
enum QlStatus ql_sample_pairs(const struct QlParams *p,
                              double mu,
                              uintptr_t m,
                              uint64_t seed,
                              struct QlEventList **out);

/*
 Number of events in a list (0 for null).

 # Safety
 `list` must be null or a live handle.
 */
uintptr_t ql_event_list_len(const struct QlEventList *list);

/*
 Reads event `index`.

 # Safety
 Pointers must be valid; `list` must be a live handle.
 */
enum QlStatus ql_event_list_get(const struct QlEventList *list,
                                uintptr_t index,
                                double *omega,
                                double *omega_tilde);

/*
 Releases an event list. Null is ignored.

 # Safety
 `list` must come from `ql_sample_pairs` and not be freed twice.
 */
void ql_event_list_free(struct QlEventList *list);

/*
 Maximum-likelihood estimate of mu on the bracket [lo, hi].

 # Safety
 Pointers must be valid; handles must be live.
 */
enum QlStatus ql_mle(const struct QlEventList *list,
                     const struct QlParams *p,
                     double lo,
                     double hi,
                     double *mu_hat);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QLIDAR_H */
