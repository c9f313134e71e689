#ifndef OPTK_CAPI_H
#define OPTK_CAPI_H

/* C interface to the opinion-dynamics toolkit. All entry points return a
 * status code; details of the last failure on the calling thread are
 * available from optk_last_error(). Buffers follow a size-query/fill
 * convention; strings returned through char** are heap-allocated and must
 * be released with optk_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OPTK_API __declspec(dllexport)
#else
#define OPTK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define OPTK_VERSION_STRING "0.1.0"

typedef enum optk_status {
    OPTK_OK = 0,
    OPTK_ERR_INVALID = 1,
    OPTK_ERR_ZENO = 2,
    OPTK_ERR_BOUNDARY = 3,
    OPTK_ERR_SIMULTANEOUS = 4,
    OPTK_ERR_BRACKETING = 5,
    OPTK_ERR_CONTRACTION = 6,
    OPTK_ERR_P_MEMBERSHIP = 7,
    OPTK_ERR_INTERNAL = 8
} optk_status;

OPTK_API const char* optk_version(void);
OPTK_API const char* optk_last_error(void);
OPTK_API void optk_string_free(char* s);

/* ---------------- discrete simulation ---------------- */

typedef struct optk_sim_options {
    double event_tolerance;
    double equilibrium_velocity_tol;
    double cluster_merge_tol;
    double max_time;
    int64_t max_transitions_per_unit_time; /* 0 = auto */
    double sample_interval;                /* 0 = auto */
    int integrator;                        /* 0 auto, 1 exact-expm, 2 adaptive-rk */
    double degeneracy_tol;
    double jitter_rel;
    uint64_t jitter_seed;
} optk_sim_options;

OPTK_API void optk_sim_options_init(optk_sim_options* opts);

typedef struct optk_sim optk_sim; /* opaque trajectory handle */

OPTK_API optk_status optk_simulate(const double* opinions, const double* weights /* nullable */,
                                   int n, const optk_sim_options* opts, optk_sim** out);

OPTK_API int optk_sim_agent_count(const optk_sim* sim); /* original n */
OPTK_API int optk_sim_sample_count(const optk_sim* sim);
OPTK_API int optk_sim_sample_size(const optk_sim* sim, int k);
OPTK_API optk_status optk_sim_sample(const optk_sim* sim, int k, double* time,
                                     double* opinions, double* weights);
/* One column per ORIGINAL agent; merged agents report their composite. */
OPTK_API optk_status optk_sim_sample_expanded(const optk_sim* sim, int k, double* time,
                                              double* opinions);
OPTK_API int optk_sim_event_count(const optk_sim* sim);
OPTK_API optk_status optk_sim_event(const optk_sim* sim, int k, double* time, int* i, int* j,
                                    int* kind /* 0 connect, 1 disconnect */,
                                    double* boundary_gap);
OPTK_API int optk_sim_terminal_size(const optk_sim* sim);
OPTK_API optk_status optk_sim_terminal(const optk_sim* sim, double* time, double* opinions,
                                       double* weights);
OPTK_API int optk_sim_converged(const optk_sim* sim);
OPTK_API optk_status optk_sim_cluster_report_json(const optk_sim* sim, double tol,
                                                  double margin, char** json_out);
OPTK_API optk_status optk_sim_audit_json(const optk_sim* sim, char** json_out);
OPTK_API void optk_sim_free(optk_sim* sim);

/* ---------------- analysis ---------------- */

OPTK_API optk_status optk_stability_threshold(double wa, double wb, double* d);
/* class: 0 stable, 1 unstable, 2 marginal */
OPTK_API optk_status optk_classify_pair(double pos_a, double w_a, double pos_b, double w_b,
                                        double margin, int* cls);
OPTK_API optk_status optk_probe_stability(const double* positions, const double* weights,
                                          int n, double delta, const optk_sim_options* opts,
                                          double* max_displacement, int* merged);

/* ---------------- continuum ---------------- */

typedef struct optk_continuum_options {
    double T;
    int time_levels;
    double picard_tol;
    int picard_max_iters;
    int max_picard_segments;
    double min_picard_segment;
    double store_interval; /* 0 = auto */
    double residual_tol;
    double fixed_point_tol;
} optk_continuum_options;

OPTK_API void optk_continuum_options_init(optk_continuum_options* opts);

typedef struct optk_continuum optk_continuum; /* opaque trajectory handle */

OPTK_API optk_status optk_solve_continuum(const double* knots, const double* values, int size,
                                          const optk_continuum_options* opts,
                                          optk_continuum** out);
OPTK_API int optk_continuum_time_count(const optk_continuum* c);
OPTK_API int optk_continuum_knot_count(const optk_continuum* c);
OPTK_API optk_status optk_continuum_knots(const optk_continuum* c, double* knots);
OPTK_API optk_status optk_continuum_state(const optk_continuum* c, int k, double* time,
                                          double* values);
OPTK_API optk_status optk_continuum_certified_bounds(const optk_continuum* c, int k,
                                                     double* lower, double* upper);
OPTK_API int optk_continuum_segment_count(const optk_continuum* c);
OPTK_API optk_status optk_continuum_segment(const optk_continuum* c, int k, double* t_end,
                                            double* contraction_factor);
OPTK_API double optk_continuum_picard_end_time(const optk_continuum* c);
OPTK_API double optk_continuum_final_residual(const optk_continuum* c);
OPTK_API int optk_continuum_residual_converged(const optk_continuum* c);
OPTK_API optk_status optk_continuum_fixed_point_json(const optk_continuum* c, double tol,
                                                     char** json_out);
OPTK_API optk_status optk_continuum_cluster_report_json(const optk_continuum* c,
                                                        double plateau_tol, char** json_out);
OPTK_API void optk_continuum_free(optk_continuum* c);

OPTK_API optk_status optk_operator_apply(const double* knots, const double* values, int size,
                                         double* rates_out);
OPTK_API optk_status optk_choose_segment(double m, double M, double* t1);

/* ---------------- bridge ---------------- */

OPTK_API optk_status optk_sample_continuum(const double* knots, const double* values, int size,
                                           int n, double* opinions_out);
/* JSON: { "n": [...], "times": [...], "errors": [[...]], "max": [...],
 *         "initial": [...], "bound": [...] } */
OPTK_API optk_status optk_approximation_error_json(const double* knots, const double* values,
                                                   int size, const int* ns, int ns_count,
                                                   double T, char** json_out);

typedef struct optk_density {
    int kind; /* 0 uniform over [a,b]; 1 piecewise-constant */
    double a, b;
    const double* breakpoints; /* kind 1: plateaus+1 entries */
    const double* levels;      /* kind 1: plateaus entries */
    int plateaus;
} optk_density;

OPTK_API optk_status optk_monte_carlo(const optk_density* density, const int* ns, int ns_count,
                                      int trials, uint64_t seed, int threads,
                                      char** report_json_out, char** trials_csv_out);

#ifdef __cplusplus
}
#endif

#endif /* OPTK_CAPI_H */
