#ifndef AP3LAB_H
#define AP3LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every `ap3_*` call.
typedef enum Ap3Status {
  AP3_STATUS_OK = 0,
  AP3_STATUS_NULL_POINTER = 1,
  AP3_STATUS_INVALID_ARGUMENT = 2,
  AP3_STATUS_NOT_FOUND = 3,
  AP3_STATUS_EXHAUSTED = 4,
  AP3_STATUS_PRECONDITION = 5,
  AP3_STATUS_CONSISTENCY = 6,
  AP3_STATUS_INTERNAL = 7,
  AP3_STATUS_PANIC = 8,
} Ap3Status;

// A subset of Z/pZ.
typedef struct Ap3Set Ap3Set;

// A map from Z/pZ to [0, 1].
typedef struct Ap3Weights Ap3Weights;

// Progression counts with ordered differences, `m = 0` included.
typedef struct Ap3Count {
  uint64_t total;
  uint64_t trivial;
  uint64_t nontrivial;
} Ap3Count;

// `start, start + step, ..., start + (length - 1) step` mod p.
typedef struct Ap3Run {
  uint64_t start;
  uint64_t step;
  uint64_t length;
} Ap3Run;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *ap3_last_error_message(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from an `ap3_*` function and not have been freed.
void ap3_string_free(char *s);

// Builds a set from `len` integers, each reduced mod `p`.
//
// # Safety
// `members` must point to `len` readable values; `out_set` must be writable.
enum Ap3Status ap3_set_new(uint64_t p, const int64_t *members, size_t len, struct Ap3Set **out_set);

// Parses the JSON or text set format.
//
// # Safety
// `text` must be a nul-terminated string; `out_set` must be writable.
enum Ap3Status ap3_set_parse(const char *text, struct Ap3Set **out_set);

// Canonical JSON for the set; release with [`ap3_string_free`].
//
// # Safety
// `set` must be a live handle; `out_json` must be writable.
enum Ap3Status ap3_set_to_json(const struct Ap3Set *set, char **out_json);

// # Safety
// `set` must be null or a live handle, not used afterwards.
void ap3_set_free(struct Ap3Set *set);

// # Safety
// `set` must be a live handle; `out_p` must be writable.
enum Ap3Status ap3_set_modulus(const struct Ap3Set *set, uint64_t *out_p);

// # Safety
// `set` must be a live handle; `out_len` must be writable.
enum Ap3Status ap3_set_cardinality(const struct Ap3Set *set, size_t *out_len);

// Writes up to `cap` members in ascending order to `buf` and the
// cardinality to `out_len`. Call with `cap = 0` to size the buffer.
//
// # Safety
// `buf` must have room for `cap` values; `out_len` must be writable.
enum Ap3Status ap3_set_members(const struct Ap3Set *set,
                               uint64_t *buf,
                               size_t cap,
                               size_t *out_len);

// # Safety
// `set` must be a live handle; `out_set` must be writable.
enum Ap3Status ap3_set_complement(const struct Ap3Set *set, struct Ap3Set **out_set);

// Exact bitset count.
//
// # Safety
// `set` must be a live handle; `out_count` must be writable.
enum Ap3Status ap3_count_naive(const struct Ap3Set *set, struct Ap3Count *out_count);

// Real part of `p^{-1} sum_a S^(a)^2 S^(-2a)`.
//
// # Safety
// `set` must be a live handle; `out_value` must be writable.
enum Ap3Status ap3_count_spectral(const struct Ap3Set *set, double *out_value);

// # Safety
// `set` must be a live handle; `out_run` must be writable.
enum Ap3Status ap3_longest_ap(const struct Ap3Set *set, struct Ap3Run *out_run);

// Smallest `n` in `[1, p-1]` with `||a n / p|| < eps` for every frequency.
//
// # Safety
// `freqs` must point to `k` readable values; `out_n` must be writable.
enum Ap3Status ap3_bohr_element(uint64_t p,
                                const uint64_t *freqs,
                                size_t k,
                                double eps,
                                uint64_t *out_n);

// # Safety
// `values` must point to `len` readable values; `out_weights` must be writable.
enum Ap3Status ap3_weights_new(uint64_t p,
                               const double *values,
                               size_t len,
                               struct Ap3Weights **out_weights);

// # Safety
// `w` must be null or a live handle, not used afterwards.
void ap3_weights_free(struct Ap3Weights *w);

// Copies the `p` values into `buf`, which must hold `cap >= p` entries.
//
// # Safety
// `buf` must have room for `cap` values.
enum Ap3Status ap3_weights_values(const struct Ap3Weights *w, double *buf, size_t cap);

// `(S * N)(m) = |S ∩ (m - N)| / |N|` for `N = {0, n0, ..., (length-1) n0}`.
//
// # Safety
// `set` must be a live handle; `out_weights` must be writable.
enum Ap3Status ap3_convolve(const struct Ap3Set *set,
                            uint64_t n0,
                            uint64_t length,
                            struct Ap3Weights **out_weights);

// Bernoulli rounding with retries until every Fourier coefficient is
// within `bound_factor * ln p * sqrt p` of the weights' transform.
//
// # Safety
// `w` must be a live handle; the out pointers must be writable.
enum Ap3Status ap3_round_weights(const struct Ap3Weights *w,
                                 uint64_t seed,
                                 double bound_factor,
                                 struct Ap3Set **out_set,
                                 double *out_deviation);

// `Ubar = [0, θp/2] ∪ [p/2, p/2 + θp/2]` and its complement `U`.
//
// # Safety
// Both out pointers must be writable.
enum Ap3Status ap3_two_interval(uint64_t p,
                                double theta,
                                struct Ap3Set **out_u,
                                struct Ap3Set **out_ubar);

// Minimum count over all `s`-subsets and the lexicographically first
// minimizer.
//
// # Safety
// The out pointers must be writable.
enum Ap3Status ap3_exhaustive_critical(uint64_t p,
                                       size_t s,
                                       uint64_t *out_min_count,
                                       struct Ap3Set **out_minimizer);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AP3LAB_H */
