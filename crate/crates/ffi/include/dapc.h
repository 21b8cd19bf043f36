#ifndef DAPC_H
#define DAPC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes shared by all functions.
 */
typedef enum DapcStatus {
  DAPC_STATUS_OK = 0,
  DAPC_STATUS_INVALID_ARGUMENT = 1,
  DAPC_STATUS_DIMENSION_MISMATCH = 2,
  DAPC_STATUS_RANK_DEFICIENT = 3,
  DAPC_STATUS_TOO_MANY_SUBSETS = 4,
  DAPC_STATUS_TOO_FEW_CODEWORDS = 5,
  DAPC_STATUS_NUMERICAL = 6,
  DAPC_STATUS_CHECKSUM = 7,
  DAPC_STATUS_PARSE = 8,
  DAPC_STATUS_IO = 9,
  DAPC_STATUS_NULL_POINTER = 10,
  DAPC_STATUS_PANIC = 11,
} DapcStatus;

/**
 * Channel parameters (affinity matrix, gains, background rates).
 */
typedef struct DapcChannel DapcChannel;

/**
 * Identification codebook.
 */
typedef struct DapcCodebook DapcCodebook;

/**
 * Rank-revealing reduction of a channel's effective matrix.
 */
typedef struct DapcReduction DapcReduction;

/**
 * Decoder settings shared by the identification calls.
 */
typedef struct DapcDecoderConfig {
  double a;
  double b;
  double kappa;
  double l;
} DapcDecoderConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *dapc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dapc_version(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void dapc_string_free(char *s);

/**
 * Identity channel with `n` molecule types, uniform gain `v` and
 * background rate `lambda`.
 *
 * # Safety
 * `out_channel` must be a valid pointer.
 */
enum DapcStatus dapc_channel_identity(size_t n,
                                      double v,
                                      double lambda,
                                      struct DapcChannel **out_channel);

/**
 * Channel from its JSON serialization.
 *
 * # Safety
 * `json` must be NUL-terminated; `out_channel` must be valid.
 */
enum DapcStatus dapc_channel_from_json(const char *json, struct DapcChannel **out_channel);

/**
 * Serialize a channel to JSON; free the result with [`dapc_string_free`].
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_channel_to_json(const struct DapcChannel *channel, char **out_json);

/**
 * # Safety
 * `channel` must come from this library; NULL is ignored.
 */
void dapc_channel_free(struct DapcChannel *channel);

/**
 * Number of receptors `k` and molecule types `n`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_channel_dims(const struct DapcChannel *channel, size_t *out_k, size_t *out_n);

/**
 * Draw one channel output for input `x` (length `n`) into `out_y` (length
 * `k`), using a generator seeded with `seed`.
 *
 * # Safety
 * `x` must hold `x_len` values and `out_y` room for `y_len` values.
 */
enum DapcStatus dapc_channel_sample(const struct DapcChannel *channel,
                                    const double *x,
                                    size_t x_len,
                                    uint64_t seed,
                                    uint64_t *out_y,
                                    size_t y_len);

/**
 * SVD reduction of the channel's effective matrix.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_reduction_new(const struct DapcChannel *channel,
                                   struct DapcReduction **out_reduction);

/**
 * Numerical rank `T` of the reduction.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_reduction_rank(const struct DapcReduction *reduction, size_t *out_t);

/**
 * # Safety
 * `reduction` must come from this library; NULL is ignored.
 */
void dapc_reduction_free(struct DapcReduction *reduction);

/**
 * Packing scale `epsilon_t` and radius `r0` for rank `t`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_packing_radius(double a,
                                    double b,
                                    double kappa,
                                    double l,
                                    size_t t,
                                    double *out_epsilon_t,
                                    double *out_r0);

/**
 * Lower and upper capacity bounds at `(kappa, l)`; the lower bound is
 * returned unclamped.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_capacity_bounds(double kappa, double l, double *out_lower, double *out_upper);

/**
 * Greedy sphere-packing codebook.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_codebook_greedy(const struct DapcChannel *channel,
                                     const struct DapcReduction *reduction,
                                     double c_avg,
                                     double c_max,
                                     double r0,
                                     size_t candidate_budget,
                                     uint64_t seed,
                                     struct DapcCodebook **out_codebook);

/**
 * Codebook from its JSON serialization; checksums are verified against the
 * given channel and reduction.
 *
 * # Safety
 * Pointers must be valid; `json` NUL-terminated.
 */
enum DapcStatus dapc_codebook_from_json(const char *json,
                                        const struct DapcChannel *channel,
                                        const struct DapcReduction *reduction,
                                        struct DapcCodebook **out_codebook);

/**
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_codebook_to_json(const struct DapcCodebook *codebook, char **out_json);

/**
 * # Safety
 * `codebook` must come from this library; NULL is ignored.
 */
void dapc_codebook_free(struct DapcCodebook *codebook);

/**
 * Number of codewords `m`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_codebook_size(const struct DapcCodebook *codebook, size_t *out_m);

/**
 * Smallest pairwise distance between reduced codewords; fails with
 * `TooFewCodewords` when `m < 2`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_codebook_min_distance(const struct DapcCodebook *codebook,
                                           double *out_distance);

/**
 * Threshold test: does output `y` (length `k`) identify message `j`?
 *
 * # Safety
 * Pointers must be valid; `y` must hold `y_len` counts.
 */
enum DapcStatus dapc_identify(const struct DapcCodebook *codebook,
                              const struct DapcChannel *channel,
                              const struct DapcReduction *reduction,
                              const struct DapcDecoderConfig *config,
                              const uint64_t *y,
                              size_t y_len,
                              size_t j,
                              bool *out_accept);

/**
 * Monte Carlo type I/II error estimate, returned as a JSON object.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DapcStatus dapc_estimate_errors(const struct DapcCodebook *codebook,
                                     const struct DapcChannel *channel,
                                     const struct DapcReduction *reduction,
                                     const struct DapcDecoderConfig *config,
                                     size_t trials,
                                     uint64_t seed,
                                     size_t pair_cap,
                                     char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DAPC_H */
