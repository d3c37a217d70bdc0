#ifndef CIDC_H
#define CIDC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CidcOutcome {
  CIDC_OUTCOME_SENT = 0,
  CIDC_OUTCOME_COLLIDED = 1,
  CIDC_OUTCOME_EXPIRED = 2,
} CidcOutcome;

typedef enum CidcProtocol {
  CIDC_PROTOCOL_CIDC = 0,
  CIDC_PROTOCOL_DCF = 1,
} CidcProtocol;

typedef enum CidcStatus {
  CIDC_STATUS_OK = 0,
  CIDC_STATUS_NULL_POINTER = 1,
  CIDC_STATUS_INVALID_PARAM = 2,
  CIDC_STATUS_BEYOND_SATURATION = 3,
  CIDC_STATUS_NUMERIC = 4,
  CIDC_STATUS_OUT_OF_RANGE = 5,
  CIDC_STATUS_INTERNAL = 6,
} CidcStatus;

/**
 * Scenario parameters. Create with [`cidc_params_new`].
 */
typedef struct CidcParams CidcParams;

/**
 * Packets and traces of one simulated round.
 */
typedef struct CidcRound CidcRound;

typedef struct CidcCounts {
  uint64_t generated;
  uint64_t sent;
  uint64_t collided;
  uint64_t expired;
} CidcCounts;

/**
 * One packet. Delays are in seconds and negative when the packet never
 * reached the channel; `start_tx` is -1 in that case.
 */
typedef struct CidcPacket {
  uint64_t vehicle;
  uint64_t generation;
  uint64_t gen_slot;
  uint32_t entry_point;
  int64_t start_tx;
  enum CidcOutcome outcome;
  double d_o;
  double d_c;
} CidcPacket;

/**
 * Steady-state model outputs. Times in seconds.
 */
typedef struct CidcSteadyState {
  double c_s;
  double d_o;
  double d_c;
  double upsilon_s;
  double n_s;
  double p_col;
  double p_col_ub;
  double n_sat;
} CidcSteadyState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *cidc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cidc_version(void);

/**
 * Default parameters: 100 vehicles, 10 Hz, M = 2, K = 24, 160 cycles.
 */
struct CidcParams *cidc_params_new(void);

/**
 * # Safety
 * `params` must come from [`cidc_params_new`] and not be used afterwards.
 */
void cidc_params_free(struct CidcParams *params);

/**
 * Sets the scalar fields. Nothing is changed unless the result validates.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum CidcStatus cidc_params_set(struct CidcParams *params,
                                size_t n_vehicles,
                                double lambda,
                                uint32_t m_param,
                                uint32_t w_window,
                                double delta_churn,
                                uint32_t n_cycles,
                                uint64_t rng_seed);

/**
 * Sets the frame airtime in seconds and derives the busy-slot length.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum CidcStatus cidc_params_set_t_tx(struct CidcParams *params, double t_tx);

/**
 * Busy-slot length in mini-slots, 0 for a null handle.
 *
 * # Safety
 * `params` must be a live handle or null.
 */
uint32_t cidc_params_k_busy(const struct CidcParams *params);

/**
 * Initial back-off counter for `estimated` contending messages.
 */
uint32_t cidc_entry_point(uint32_t estimated, uint32_t m_param);

/**
 * Simulates one round. On success `*out` owns a new handle.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum CidcStatus cidc_run_round(const struct CidcParams *params,
                               enum CidcProtocol protocol,
                               uint32_t round,
                               struct CidcRound **out);

/**
 * # Safety
 * `round` must come from [`cidc_run_round`] and not be used afterwards.
 */
void cidc_round_free(struct CidcRound *round);

/**
 * Number of packet records, 0 for a null handle.
 *
 * # Safety
 * `round` must be a live handle or null.
 */
size_t cidc_round_packet_count(const struct CidcRound *round);

/**
 * # Safety
 * `round` must be a live handle and `out` writable.
 */
enum CidcStatus cidc_round_counts(const struct CidcRound *round, struct CidcCounts *out);

/**
 * # Safety
 * `round` must be a live handle and `out` writable.
 */
enum CidcStatus cidc_round_packet(const struct CidcRound *round,
                                  size_t index,
                                  struct CidcPacket *out);

/**
 * Solves the delay and collision models for `params`.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum CidcStatus cidc_steady_state(const struct CidcParams *params, struct CidcSteadyState *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIDC_H */
