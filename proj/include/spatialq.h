/* Public C interface to the spatial-queue solver/simulator core.
 *
 * Conventions:
 *  - Every function returns an sq_status; SQ_OK (0) means success.
 *  - On failure, sq_last_error() returns a thread-local message describing
 *    the most recent error on the calling thread.
 *  - Output strings (char**) are heap-allocated, NUL-terminated, and must be
 *    released with sq_string_free(). Handles are released with the matching
 *    *_free() function. All free functions accept NULL.
 *  - Grids travel as CSV text (one row per driver count l, columns are queue
 *    lengths m = 0..M); reports travel as JSON.
 */
#ifndef SPATIALQ_H
#define SPATIALQ_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sq_status {
  SQ_OK = 0,
  SQ_ERR_VALIDATION = 2, /* bad arguments, malformed input, invariant violation */
  SQ_ERR_SOLVER = 3,     /* iterative procedure failed to converge */
  SQ_ERR_IO = 4          /* reserved for callers doing file I/O */
} sq_status;

/* Opaque handles. */
typedef struct sq_model sq_model; /* model config + reduced/raw costs + demand curve */
typedef struct sq_rates sq_rates; /* service-rate table */

const char* sq_last_error(void);
void sq_string_free(char* s);
void sq_model_free(sq_model* model);
void sq_rates_free(sq_rates* rates);

/* --- model ---------------------------------------------------------------- */

/* Parses key=value config text (keys: L, Lambda, M, t0, p0, p_max and either
 * w_s_d/w_o_d/w_p_r/w_q_r or c_d/c_r/p0_eff). Negative overrides keep the
 * configured c_d / c_r. */
sq_status sq_model_from_config(const char* config_text, double cd_override, double cr_override,
                               sq_model** out);

/* Any output pointer may be NULL to skip that field. */
sq_status sq_model_params(const sq_model* model, int* L, double* Lambda, int* M, double* t0,
                          double* p0, double* p_max, double* c_d, double* c_r, double* p0_eff);

/* Mean trip time on the default 10x10 unit-speed square (~5.2145). */
double sq_mean_trip_time(void);

/* --- rate tables ---------------------------------------------------------- */

sq_status sq_rates_estimate(const sq_model* model, int samples_per_state,
                            unsigned long long seed, sq_rates** out);
sq_status sq_rates_from_csv(const char* csv_text, sq_rates** out);
sq_status sq_rates_to_csv(const sq_rates* rates, char** csv_out);
sq_status sq_rates_powerlaw(const sq_model* model, double C, double alpha1, double alpha2,
                            sq_rates** out);

/* JSON report {"count": n, "violations": [{"condition","direction","l","m","slack"}...]}. */
sq_status sq_rates_check_assumption2(const sq_rates* rates, char** report_json_out);

/* Theorem-1 hold/dispatch map as a policy CSV grid. */
sq_status sq_closed_form_policy(const sq_rates* rates, char** policy_csv_out);

/* --- solving & exact evaluation ------------------------------------------- */

/* method: "zigzag" | "vi" | "greedy"; pricing_mode: "static" | "dynamic"
 * (only "zigzag" distinguishes the two; others use dynamic pricing).
 * wall_cap_s <= 0 keeps the default cap. Output is a SolveResult JSON with
 * method, objective, iterations, wall_time_s, converged, path, dispatch and
 * pricing grids. */
sq_status sq_solve(const sq_model* model, const sq_rates* rates, const char* method,
                   const char* pricing_mode, double wall_cap_s, char** result_json_out);

/* Stationary evaluation of an explicit (policy, pricing) pair; JSON report
 * with objective, revenue_rate, avg_price, avg_pickup_time, avg_queue_time,
 * throughput, mean_l, mean_m. */
sq_status sq_eval(const sq_model* model, const sq_rates* rates, const char* policy_csv,
                  const char* pricing_csv, char** report_json_out);

/* --- spatial simulation --------------------------------------------------- */

/* rule: "constant" (uses r0) | "zigzag" (uses policy_csv) | "two_radius"
 * (uses r0, r1, policy_csv). policy_csv may be NULL for "constant".
 * Output JSON holds the SimMetrics fields (objective_eq4, objective_eq2,
 * revenue_rate, avg_price, avg_pickup_time, avg_queue_time, throughput,
 * mean_l, mean_m, counts, horizon). */
sq_status sq_simulate(const sq_model* model, const char* rule, double r0, double r1,
                      const char* policy_csv, const char* pricing_csv, double T, double warmup,
                      unsigned long long seed, char** metrics_json_out);

/* Section-5.2.1 sample collection at a uniform rate over the default radius
 * grid 0.5..12; output is an `l,m,avg_pickup,count` CSV. */
sq_status sq_collect_samples(const sq_model* model, double lambda_bar, double T, double warmup,
                             unsigned long long seed, char** samples_csv_out);

/* Log-log power-law fit of a samples CSV; L < 0 infers the fleet size from
 * the corpus. Output JSON: C, alpha1, alpha2, standard errors, n_samples. */
sq_status sq_fit_powerlaw(const char* samples_csv, long min_count, int L, char** fit_json_out);

/* Coordinate-ascent calibration of (radius, uniform rate); JSON output
 * {r, lambda_bar, objective, converged, evaluations}. */
sq_status sq_calibrate(const sq_model* model, double T, double warmup, unsigned long long seed,
                       double r_init, double lambda_init, char** result_json_out);

/* Two-radius split search around r_star for a fixed count policy + pricing;
 * JSON output {delta, objective}. */
sq_status sq_two_radius(const sq_model* model, const char* policy_csv, const char* pricing_csv,
                        double r_star, double T, double warmup, unsigned long long seed,
                        char** result_json_out);

/* Robustness sweep. spec_json:
 * {"lambdas":[...], "seeds":[...], "T":..., "warmup":...,
 *  "policies":[{"name":..., "rule":"constant"|"zigzag"|"two_radius",
 *               "r0":..., "r1":..., "policy_csv":..., "pricing_csv":...}]}
 * Output CSV: Lambda,policy,objective,stderr. */
sq_status sq_sweep(const sq_model* model, const char* spec_json, char** table_csv_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPATIALQ_H */
