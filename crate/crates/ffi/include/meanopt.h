#ifndef MEANOPT_H
#define MEANOPT_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MeanoptStatus {
  MEANOPT_STATUS_OK = 0,
  MEANOPT_STATUS_NULL_POINTER = 1,
  MEANOPT_STATUS_INVALID_ARGUMENT = 2,
  MEANOPT_STATUS_NOT_CONVERGED = 3,
  MEANOPT_STATUS_OUT_OF_RANGE = 4,
  MEANOPT_STATUS_PANIC = 5,
} MeanoptStatus;

/**
 * Opaque network solution handle.
 */
typedef struct MeanoptSolution MeanoptSolution;

/**
 * Opaque solver handle: system parameters plus mode-selection policy.
 */
typedef struct MeanoptSolver MeanoptSolver;

/**
 * Network-wide constants, SI units.
 */
typedef struct MeanoptSystemParams {
  double bandwidth_hz;
  double noise_w;
  double p_max_w;
  double snr_threshold;
  double deadline_s;
  double rho_min;
  double base_task_energy_j;
  double usl_beta;
  double usl_xi;
  double switched_cap;
  double local_cycles_per_bit;
} MeanoptSystemParams;

typedef struct MeanoptAgent {
  double data_bits;
  double complexity;
  double cpu_hz;
  double channel_gain;
  double distance_m;
} MeanoptAgent;

/**
 * Per-agent outcome. Collaborative-mode fields are NaN when
 * `bs_feasible` is false.
 */
typedef struct MeanoptAgentResult {
  /**
   * 1 for collaborative mode, 0 for local.
   */
  uint8_t mode;
  bool bs_feasible;
  double snr;
  double rho;
  double power_w;
  double t_comp;
  double t_comm;
  double t_bs;
  double t_local;
  double e_comp;
  double e_comm;
  double e_bs;
  double e_local;
  double delta_save;
} MeanoptAgentResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *meanopt_last_error(void);

/**
 * Static name of a status code.
 */
const char *meanopt_status_str(enum MeanoptStatus status);

/**
 * Fill `out` with the default system parameters.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum MeanoptStatus meanopt_params_default(struct MeanoptSystemParams *out);

/**
 * Create a solver. `min_k` is the smallest collaboration scale (the usual
 * value is 2); with `force_collaboration` the all-local outcome is only
 * chosen when no admissible scale exists.
 *
 * # Safety
 * `params` must be null or point to a valid struct; `out` must be null or
 * valid for writes.
 */
enum MeanoptStatus meanopt_solver_new(const struct MeanoptSystemParams *params,
                                      size_t min_k,
                                      bool force_collaboration,
                                      struct MeanoptSolver **out);

/**
 * # Safety
 * `solver` must be null or a handle from [`meanopt_solver_new`] not yet freed.
 */
void meanopt_solver_free(struct MeanoptSolver *solver);

/**
 * USL collaboration gain `G(k)` for `k >= 1`.
 *
 * # Safety
 * `solver` must be a live handle or null; `out` null or valid for writes.
 */
enum MeanoptStatus meanopt_usl_gain(const struct MeanoptSolver *solver, size_t k, double *out);

/**
 * Optimal compression ratio and power for one agent, ignoring the SNR gate.
 *
 * # Safety
 * `solver` must be a live handle or null; `agent` null or valid for reads;
 * `out` null or valid for writes.
 */
enum MeanoptStatus meanopt_solve_agent(const struct MeanoptSolver *solver,
                                       const struct MeanoptAgent *agent,
                                       struct MeanoptAgentResult *out);

/**
 * Full joint optimisation over `n` agents.
 *
 * # Safety
 * `solver` must be a live handle or null; `agents` must point to `n`
 * readable structs (may be null when `n == 0`); `out` null or valid for writes.
 */
enum MeanoptStatus meanopt_solve_network(const struct MeanoptSolver *solver,
                                         const struct MeanoptAgent *agents,
                                         size_t n,
                                         struct MeanoptSolution **out);

/**
 * # Safety
 * `solution` must be null or a handle from [`meanopt_solve_network`] not yet freed.
 */
void meanopt_solution_free(struct MeanoptSolution *solution);

/**
 * Number of agents in the solution; 0 for a null handle.
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
size_t meanopt_solution_len(const struct MeanoptSolution *solution);

/**
 * Selected collaboration scale `K*`; 0 means all agents run locally.
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
size_t meanopt_solution_k_star(const struct MeanoptSolution *solution);

/**
 * Total network energy (J); NaN for a null handle.
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
double meanopt_solution_total_energy(const struct MeanoptSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle or null; `out` null or valid for writes.
 */
enum MeanoptStatus meanopt_solution_agent(const struct MeanoptSolution *solution,
                                          size_t index,
                                          struct MeanoptAgentResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEANOPT_H */
