/* unmask: sequential-unmasking samplers, information profiles and
 * schedule optimization behind a plain C interface.
 *
 * Conventions:
 *  - every object is an opaque handle created by um_*_... constructors and
 *    released with the matching um_*_free;
 *  - every fallible call returns um_status; UM_OK is 0;
 *  - um_last_error() describes the most recent failure on this thread;
 *  - strings returned through char** are heap-allocated by the library
 *    and must be released with um_string_free;
 *  - structured inputs (distributions, planners, size laws, audit and
 *    scaling configs) are JSON texts in the library's documented file
 *    schemas; coordinates in files are 1-based.
 */

#ifndef UNMASK_H
#define UNMASK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) || defined(_WIN64)
#define UM_API __declspec(dllexport)
#else
#define UM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum um_status {
    UM_OK = 0,
    UM_ERR_INVALID_ARGUMENT = 1,
    UM_ERR_PARSE = 2,
    UM_ERR_GUARD_EXCEEDED = 3,
    UM_ERR_HYPOTHESIS = 4,
    UM_ERR_UNDEFINED_CONDITIONAL = 5,
    UM_ERR_SINGULAR = 6,
    UM_ERR_NO_CORRELATION = 7,
    UM_ERR_INTERNAL = 8
} um_status;

UM_API const char* um_status_name(um_status status);

/* Message of the last failure on the calling thread ("" if none). */
UM_API const char* um_last_error(void);

UM_API void um_string_free(char* text);

/* ---------------- distributions ---------------- */

typedef struct um_dist um_dist;

UM_API um_status um_dist_from_json(const char* json_text, uint64_t state_guard, um_dist** out);
UM_API um_status um_dist_to_json(const um_dist* dist, char** json_out);
UM_API void um_dist_free(um_dist* dist);

UM_API int64_t um_dist_n(const um_dist* dist);
/* 0 for the analytic Gaussian family. */
UM_API int um_dist_cardinality(const um_dist* dist);
UM_API int um_dist_is_tabular(const um_dist* dist);

/* D(pi): exact for tabular targets, closed form for the Gaussian family. */
UM_API um_status um_dist_d_measure(const um_dist* dist, double* out);

/* ---------------- information profiles ---------------- */

typedef struct um_profile um_profile;

/* Exact enumeration for tabular targets, closed form for Gaussian ones. */
UM_API um_status um_profile_compute(const um_dist* dist, um_profile** out);
UM_API um_status um_profile_mc(const um_dist* dist, int64_t samples, uint64_t seed,
                               int sum_over_tokens, um_profile** out);
UM_API um_status um_profile_from_json(const char* json_text, um_profile** out);
UM_API um_status um_profile_to_json(const um_profile* profile, char** json_out);
UM_API um_status um_profile_to_csv(const um_profile* profile, char** csv_out);
UM_API void um_profile_free(um_profile* profile);

UM_API int64_t um_profile_n(const um_profile* profile);
UM_API um_status um_profile_value(const um_profile* profile, int64_t i, double* out);
UM_API um_status um_profile_d(const um_profile* profile, double* out);
UM_API int um_profile_is_monotone(const um_profile* profile, double tol);
/* Least-squares nondecreasing projection (for Monte Carlo profiles). */
UM_API um_status um_profile_isotonic(const um_profile* profile, um_profile** out);

/* ---------------- schedules ---------------- */

typedef struct um_schedule um_schedule;

UM_API um_status um_schedule_from_json(const char* json_text, um_schedule** out);
UM_API um_status um_schedule_to_json(const um_schedule* schedule, const char* provenance,
                                     char** json_out);
UM_API void um_schedule_free(um_schedule* schedule);

UM_API int64_t um_schedule_steps(const um_schedule* schedule);
UM_API um_status um_schedule_entry(const um_schedule* schedule, int64_t k, int64_t* out);

UM_API um_status um_schedule_uniform(int64_t n, int64_t k, um_schedule** out);
/* Exact DP minimizer of the Riemann error; also reports the optimum. */
UM_API um_status um_schedule_dp(const um_profile* profile, int64_t k, um_schedule** out,
                                double* a_value_out);
UM_API um_status um_schedule_data_driven(const um_profile* profile, int64_t k, um_schedule** out);
/* Geodesic schedule for the profile's rescaled derivative. */
UM_API um_status um_schedule_alpha_opt(const um_profile* profile, int64_t k, um_schedule** out);
/* a_k = ceil(N alpha_{k/K}) for the exponential family curve. */
UM_API um_status um_schedule_exponential(double xi, int64_t n, int64_t k, um_schedule** out);

/* Riemann error A(a) of a schedule against a profile, both routes. */
UM_API um_status um_a_riemann(const um_profile* profile, const um_schedule* schedule, double* out);
UM_API um_status um_a_discrete_derivative(const um_profile* profile, const um_schedule* schedule,
                                          double* out);

/* Exact factorization error for the truncated-geometric size chain. */
UM_API um_status um_efact_geometric(const um_profile* profile, double p, double* out);
/* Prop-style sandwich for the geometric chain. */
UM_API um_status um_bounds_geometric(double d, double p, double max_delta, double* lower_out,
                                     double* upper_out);

/* ---------------- samplers ---------------- */

typedef struct um_sampler um_sampler;

/* Binds a tabular target, planner spec and denoiser spec. */
UM_API um_status um_sampler_create(const um_dist* dist, const char* planner_json,
                                   const char* denoiser_json, um_sampler** out);
UM_API void um_sampler_free(um_sampler* sampler);

/* One full run; the trace is returned as JSON lines. */
UM_API um_status um_sampler_run(const um_sampler* sampler, uint64_t seed, char** trace_jsonl_out);

/* Exact factorized output law as a distribution handle (N <= 6). */
UM_API um_status um_sampler_output_law(const um_sampler* sampler, um_dist** out);

/* KL decomposition report as JSON:
 * {"kl_marginal","kl_joint","e_learn","e_fact","identity_residual"}. */
UM_API um_status um_sampler_decomposition(const um_sampler* sampler, char** json_out);

UM_API um_status um_kl(const um_dist* p, const um_dist* q, double* out);

/* ---------------- experiment drivers ---------------- */

/* Bound/route audit over a JSON instance set; returns the CSV and the
 * number of rows whose slack is below -1e-10. */
UM_API um_status um_verify_bounds(const char* instances_json, char** csv_out,
                                  int* violations_out);

/* Gaussian-family scaling report over an (N, K) grid; returns CSV. */
UM_API um_status um_scaling_report(const char* config_json, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* UNMASK_H */
