#ifndef ARWPCN_ARWPCN_H
#define ARWPCN_ARWPCN_H

/* C interface to the active-RIS WPCN optimizer.
 *
 * Every function returning arwpcn_status leaves a message for the calling
 * thread in arwpcn_last_error() when it fails. Handles are opaque and owned by
 * the caller; free them with the matching *_free function (NULL is accepted). */

#include <stddef.h>
#include <stdint.h>

#if defined(ARWPCN_BUILDING)
#define ARWPCN_API __attribute__((visibility("default")))
#else
#define ARWPCN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  ARWPCN_OK = 0,
  ARWPCN_E_ARGUMENT = 1,   /* null pointer, bad index, unknown name, domain violation */
  ARWPCN_E_CONFIG = 2,     /* malformed configuration; see arwpcn_last_error_key */
  ARWPCN_E_IO = 3,
  ARWPCN_E_INFEASIBLE = 4,
  ARWPCN_E_NUMERICAL = 5,
  ARWPCN_E_RANK_ONE = 6,
  ARWPCN_E_INTERNAL = 7
} arwpcn_status;

typedef struct arwpcn_config arwpcn_config;
typedef struct arwpcn_solution arwpcn_solution;

ARWPCN_API const char* arwpcn_status_string(arwpcn_status status);
ARWPCN_API const char* arwpcn_last_error(void);
/* Configuration key named by the last ARWPCN_E_CONFIG failure ("" otherwise). */
ARWPCN_API const char* arwpcn_last_error_key(void);

/* Configuration. The default is the reference setup: 4 antennas, 10 elements,
 * 4 users, 20 dBm budgets, 50 realizations. */
ARWPCN_API arwpcn_status arwpcn_config_default(arwpcn_config** out);
ARWPCN_API arwpcn_status arwpcn_config_load(const char* path, arwpcn_config** out);
ARWPCN_API arwpcn_status arwpcn_config_parse(const char* text, arwpcn_config** out);
ARWPCN_API arwpcn_status arwpcn_config_set(arwpcn_config* cfg, const char* key, const char* value);
/* Copies the value's text into buf (NUL-terminated, truncated to size);
 * *needed receives the full length without the terminator when non-NULL. */
ARWPCN_API arwpcn_status arwpcn_config_get(const arwpcn_config* cfg, const char* key, char* buf, size_t size,
                                           size_t* needed);
ARWPCN_API arwpcn_status arwpcn_config_write(const arwpcn_config* cfg, const char* path);
ARWPCN_API void arwpcn_config_free(arwpcn_config* cfg);

/* One realization. scheme is "active_ma", "active_sa", "passive_ma" or
 * "active_ma_uebf". Solver failures are reported through the status. */
ARWPCN_API arwpcn_status arwpcn_solve(const arwpcn_config* cfg, const char* scheme, uint64_t seed,
                                      arwpcn_solution** out);
ARWPCN_API void arwpcn_solution_free(arwpcn_solution* sol);

ARWPCN_API double arwpcn_solution_sum_rate(const arwpcn_solution* sol);
ARWPCN_API double arwpcn_solution_initial_sum_rate(const arwpcn_solution* sol);
ARWPCN_API int arwpcn_solution_num_users(const arwpcn_solution* sol);
ARWPCN_API double arwpcn_solution_rate(const arwpcn_solution* sol, int k);
ARWPCN_API double arwpcn_solution_tau0(const arwpcn_solution* sol);
ARWPCN_API double arwpcn_solution_tau(const arwpcn_solution* sol, int k);
ARWPCN_API double arwpcn_solution_energy(const arwpcn_solution* sol, int k);
ARWPCN_API int arwpcn_solution_outer_iters(const arwpcn_solution* sol);
ARWPCN_API double arwpcn_solution_wall_ms(const arwpcn_solution* sol);
ARWPCN_API int arwpcn_solution_trace_length(const arwpcn_solution* sol);
ARWPCN_API double arwpcn_solution_trace(const arwpcn_solution* sol, int i);
/* Most negative relative constraint slack of the independent feasibility report (0 if none). */
ARWPCN_API double arwpcn_solution_worst_violation(const arwpcn_solution* sol);
/* Human-readable summary; the pointer lives as long as the handle. */
ARWPCN_API const char* arwpcn_solution_summary(const arwpcn_solution* sol);
/* Writes the header and the solution's CSV row; omit_timing != 0 writes wall_ms as 0. */
ARWPCN_API arwpcn_status arwpcn_solution_write_csv(const arwpcn_solution* sol, const char* path, int omit_timing);

/* Monte Carlo sweep. family is "convergence", "p0", "n", "k" or "xr";
 * schemes is a comma-separated list; values is a comma-separated list or
 * NULL/"" for the family's default grid. *all_ok (optional) is set to 1 when
 * every row has status "ok". */
ARWPCN_API arwpcn_status arwpcn_sweep(const arwpcn_config* cfg, const char* family, const char* schemes,
                                      const char* values, int omit_timing, const char* out_path, int* all_ok);

#ifdef __cplusplus
}
#endif

#endif
