#ifndef SNLA_H
#define SNLA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SnlaStatus {
  SNLA_STATUS_OK = 0,
  SNLA_STATUS_NULL_POINTER = 1,
  SNLA_STATUS_INVALID_UTF8 = 2,
  SNLA_STATUS_DOMAIN = 3,
  SNLA_STATUS_CONFIG = 4,
  SNLA_STATUS_STATE = 5,
  SNLA_STATUS_SHAPE = 6,
  SNLA_STATUS_FORMAT = 7,
  SNLA_STATUS_COMPATIBILITY = 8,
  SNLA_STATUS_DIVERGED = 9,
  SNLA_STATUS_IO = 10,
  SNLA_STATUS_PANIC = 11,
} SnlaStatus;

/**
 * Simulation environment handle.
 */
typedef struct SnlaEnv SnlaEnv;

/**
 * Trained or reference policy handle.
 */
typedef struct SnlaPolicy SnlaPolicy;

/**
 * Result of one environment step.
 */
typedef struct SnlaStep {
  double next_obs_db;
  double reward;
  double outage_prob;
  double scaled_energy;
  uint32_t consec_count;
  bool outage_flag;
  bool violation_flag;
} SnlaStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Outage probability of a `bits`-bit packet over `blocklength` channel
 * uses at linear SINR `sinr`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SnlaStatus snla_outage_probability(double sinr,
                                        uint32_t bits,
                                        uint32_t blocklength,
                                        double *out);

/**
 * Environment with the default scenario and the given outage weight.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SnlaStatus snla_env_new_default(double weight_outage, struct SnlaEnv **out);

/**
 * Environment built from the scenario keys of an experiment config file.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out` must be valid for
 * writes.
 */
enum SnlaStatus snla_env_from_config(const char *config_path, struct SnlaEnv **out);

/**
 * Starts a new episode and writes the first observation (SINR in dB).
 *
 * # Safety
 * `env` must come from an `snla_env_*` constructor; `obs_db` must be
 * valid for writes.
 */
enum SnlaStatus snla_env_reset(struct SnlaEnv *env, uint64_t seed, double *obs_db);

/**
 * Transmits with `tx_snr_db` and `blocklength` and advances one slot.
 *
 * # Safety
 * `env` must come from an `snla_env_*` constructor; `out` must be valid
 * for writes.
 */
enum SnlaStatus snla_env_step(struct SnlaEnv *env,
                              double tx_snr_db,
                              uint32_t blocklength,
                              struct SnlaStep *out);

/**
 * # Safety
 * `env` must be null or a handle not yet freed.
 */
void snla_env_free(struct SnlaEnv *env);

/**
 * Loads a checkpoint. `config_path` may be null for the default scenario.
 *
 * # Safety
 * `checkpoint_path` must be a NUL-terminated string, `config_path` null or
 * NUL-terminated, and `out` valid for writes.
 */
enum SnlaStatus snla_policy_load(const char *checkpoint_path,
                                 const char *config_path,
                                 uint64_t seed,
                                 struct SnlaPolicy **out);

/**
 * Deterministic action for an observation in dB.
 *
 * # Safety
 * `policy` must come from [`snla_policy_load`]; the out pointers must be
 * valid for writes.
 */
enum SnlaStatus snla_policy_act(struct SnlaPolicy *policy,
                                double obs_db,
                                double *tx_snr_db,
                                uint32_t *blocklength);

/**
 * # Safety
 * `policy` must be null or a handle not yet freed.
 */
void snla_policy_free(struct SnlaPolicy *policy);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t snla_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *snla_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNLA_H */
