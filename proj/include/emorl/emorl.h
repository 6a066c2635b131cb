#ifndef EMORL_EMORL_H
#define EMORL_EMORL_H

/* C interface to the simulator, the training runs and the front metrics.
 *
 * Every function returns an emorl_status. On failure the message is available
 * from emorl_last_error() on the same thread until the next call. Strings
 * returned through char** are owned by the caller and released with
 * emorl_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EMORL_API __declspec(dllexport)
#else
#define EMORL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum emorl_status {
  EMORL_OK = 0,
  EMORL_ERR_NULL = 1,     /* a required pointer was NULL */
  EMORL_ERR_CONFIG = 2,   /* invalid configuration or request */
  EMORL_ERR_DOMAIN = 3,   /* argument outside the function's domain */
  EMORL_ERR_USAGE = 4,    /* call not valid in the current state */
  EMORL_ERR_NUMERIC = 5,  /* non-finite values during training */
  EMORL_ERR_IO = 6,       /* file system failure */
  EMORL_ERR_INTERNAL = 7
} emorl_status;

typedef struct emorl_env emorl_env;

EMORL_API const char* emorl_version(void);
EMORL_API const char* emorl_last_error(void);
EMORL_API void emorl_string_free(char* s);

/* Simulator. config_json may be NULL for the defaults; otherwise a JSON object
 * whose keys overlay the default configuration. */
EMORL_API emorl_status emorl_env_create(const char* config_json, uint64_t instance_seed,
                                        emorl_env** out);
EMORL_API void emorl_env_destroy(emorl_env* env);
/* obs receives the 4 normalized observation features. */
EMORL_API emorl_status emorl_env_reset(emorl_env* env, uint64_t episode_seed, double obs[4]);
/* action = (theta, distance, offload). reward receives (r_D, r_E, r_N). */
EMORL_API emorl_status emorl_env_step(emorl_env* env, const double action[3], double obs[4],
                                      double reward[3], int* done);
EMORL_API emorl_status emorl_env_write_csv(const emorl_env* env, const char* path);

/* Benchmark instance table. request_json: {"seed": N, "desk_scale": bool}, may be NULL. */
EMORL_API emorl_status emorl_instances_json(const char* request_json, char** out_json);

/* request_json: {"algo", "instance", "seed", "desk_scale", "out", "config_path",
 * "workers", "checkpoints"}. out_json receives a run summary. */
EMORL_API emorl_status emorl_train(const char* request_json, char** out_json);

/* request_json: {"fronts": [paths], "labels": [names], "out": dir, "coi": "returns"|"raw"}.
 * Writes report.csv and report.json under "out" when given. */
EMORL_API emorl_status emorl_eval(const char* request_json, char** out_json);

/* request_json: {"policy": path, "instance", "seed", "desk_scale", "config_path",
 * "episode_seed", "out": csv path}. */
EMORL_API emorl_status emorl_replay(const char* request_json, char** out_json);

/* points: n row-major 3-vectors, all maximized. */
EMORL_API emorl_status emorl_hv3(const double* points, size_t n, const double reference[3],
                                 double* out);
EMORL_API emorl_status emorl_igd(const double* reference, size_t n_reference,
                                 const double* approximation, size_t n_approximation, double* out);
/* Rotary-wing propulsion power at speed v with the default constants. */
EMORL_API emorl_status emorl_propulsion_power(double v, double* out);

#ifdef __cplusplus
}
#endif

#endif /* EMORL_EMORL_H */
