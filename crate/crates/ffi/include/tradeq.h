#ifndef TRADEQ_H
#define TRADEQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  TQ_STATUS_OK = 0,
  TQ_STATUS_NULL_POINTER = 1,
  TQ_STATUS_INVALID_ARGUMENT = 2,
  TQ_STATUS_BUFFER_TOO_SMALL = 3,
  TQ_STATUS_UNDEFINED_DEMAND = 4,
  TQ_STATUS_ZERO_SUPPLY = 5,
  TQ_STATUS_NO_PROGRESS = 6,
  TQ_STATUS_UNKNOWN_FIXTURE = 7,
  TQ_STATUS_PANIC = 8,
} TqStatus;

/**
 * Demand and supply matrices of one exchange.
 */
typedef struct TqInstance TqInstance;

typedef struct TqResult TqResult;

typedef struct {
  double damping;
  size_t max_iterations;
  double tolerance;
  double zero_price_threshold;
  double expenditure_guard;
  size_t polish_interval;
  size_t stall_window;
} TqSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

TqSolverConfig tq_solver_config_default(void);

/**
 * Builds an instance from row-major `goods × countries` demand and supply
 * matrices.
 *
 * # Safety
 * `demand` and `supply` must point to `goods * countries` values; `out`
 * must be a valid pointer.
 */
TqStatus tq_instance_new(size_t goods,
                         size_t countries,
                         const double *demand,
                         const double *supply,
                         TqInstance **out);

/**
 * Loads a bundled instance fixture such as `degenerate_2x2`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be a valid pointer.
 */
TqStatus tq_instance_from_fixture(const char *name, TqInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from this library not yet freed.
 */
void tq_instance_free(TqInstance *inst);

/**
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t tq_instance_goods(const TqInstance *inst);

/**
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t tq_instance_countries(const TqInstance *inst);

/**
 * Solves `inst`. `config` may be null for defaults. On `NO_PROGRESS` the
 * best iterate is still returned through `out`.
 *
 * # Safety
 * `inst` must be a live handle, `config` null or valid, `out` valid.
 */
TqStatus tq_solve(const TqInstance *inst, const TqSolverConfig *config, TqResult **out);

/**
 * # Safety
 * `res` must be null or a handle from this library not yet freed.
 */
void tq_result_free(TqResult *res);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
size_t tq_result_goods(const TqResult *res);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
size_t tq_result_countries(const TqResult *res);

/**
 * # Safety
 * `res` must be a live handle and `out` must hold `len` values.
 */
TqStatus tq_result_prices(const TqResult *res, double *out, size_t len);

/**
 * # Safety
 * `res` must be a live handle and `out` must hold `len` values.
 */
TqStatus tq_result_excess(const TqResult *res, double *out, size_t len);

/**
 * # Safety
 * `res` must be a live handle and `out` must hold `len` values.
 */
TqStatus tq_result_balance_ratios(const TqResult *res, double *out, size_t len);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
size_t tq_result_degeneracy(const TqResult *res);

/**
 * Unsold share of supply value; NaN for a null handle.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
double tq_result_recession_level(const TqResult *res);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
double tq_result_residual(const TqResult *res);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
bool tq_result_converged(const TqResult *res);

/**
 * # Safety
 * `res` must be null or a live handle.
 */
size_t tq_result_iterations(const TqResult *res);

/**
 * The result as JSON; release with [`tq_string_free`]. Null on failure.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
char *tq_result_to_json(const TqResult *res);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void tq_string_free(char *s);

/**
 * Excess demand of `inst` at `prices` (length = goods count).
 *
 * # Safety
 * `prices` must hold `len` values and `out` must hold `out_len` values.
 */
TqStatus tq_excess_demand(const TqInstance *inst,
                          const double *prices,
                          size_t len,
                          double *out,
                          size_t out_len);

/**
 * Each country's share of total supply (length = country count).
 *
 * # Safety
 * `inst` must be a live handle and `out` must hold `len` values.
 */
TqStatus tq_country_supply_shares(const TqInstance *inst, double *out, size_t len);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *tq_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRADEQ_H */
