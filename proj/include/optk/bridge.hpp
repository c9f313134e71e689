#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optk/continuum.hpp"
#include "optk/sim.hpp"

namespace optk {

/// Right-continuous step function on [0,1): the embedding image of a
/// discrete state (one plateau per agent, width proportional to weight).
struct StepFunction {
    std::vector<double> breakpoints;  // size p+1, 0 = first, 1 = last
    std::vector<double> levels;       // size p, nondecreasing

    double operator()(double alpha) const;
    void validate() const;
};

/// G(xi): plateau i covers an index interval of width w_i / sum(w).
StepFunction embed_discrete(const OpinionState& xi);

/// Exact sup-distance between an embedded state and a piecewise-linear one.
double sup_distance(const StepFunction& s, const OpinionFunction& f);

/// xi_i = x0(i/n) with agent weights 1/n (continuum normalization).
OpinionState sample_continuum(const OpinionFunction& x0, int n);

/// Interaction rates of a step function equal the weighted discrete
/// derivative with weights given by the plateau widths.
std::vector<double> operator_L_step(const StepFunction& s);

/// Deterministic quadratic nudge clearing unit-boundary ties: lattice
/// samples of regular profiles (e.g. a linear profile of range 10 at n a
/// multiple of 10) are non-proper initial conditions. Gap (i,j) moves by
/// eps*(j-i)(i+j+1)/n^2 > 0 -- distinct per pair and far below the 1/n
/// embedding error. Identity when no pair sits near the boundary.
OpinionState nudge_to_proper(const OpinionState& s, double eps = 1e-7,
                             double boundary_tol = 1e-9);

struct DensitySpec {
    enum class Kind { uniform, piecewise_constant };
    Kind kind = Kind::uniform;
    double a = 0.0, b = 1.0;           // uniform support
    std::vector<double> breakpoints;   // piecewise-constant support partition
    std::vector<double> levels;        // positive on the support

    void validate() const;
    /// Inverse-CDF transform of u in [0,1).
    double quantile(double u) const;
    double support_diameter() const;
    std::string describe() const;
};

struct ApproxErrorResult {
    std::vector<double> times;
    std::vector<double> errors;     // sup-norm embedded-discrete vs continuum
    double max_error = 0.0;
    double initial_error = 0.0;     // equals the embedding error at t = 0
    double analytic_bound = 0.0;    // ||y0 - x0||_inf * e^{T (2 + (8/m) e^T)}
};

struct BridgeOptions {
    int check_points = 10;          // comparison grid resolution on [0, T]
    SimOptions sim;                 // sample_interval/max_time set internally
    ContinuumOptions continuum;     // T/store_times set internally
};

/// Finite-horizon approximation error between the discrete run on
/// sample_continuum(x0, n) and the continuum solution, measured on a shared
/// time grid.
ApproxErrorResult approximation_error(const OpinionFunction& x0, int n, double T,
                                      const BridgeOptions& opts = {});

struct MonteCarloRow {
    int n = 0;
    int trials = 0;
    int converged = 0;
    int stable = 0;
    int marginal = 0;
    int unstable = 0;
    int failed = 0;  // simulation error or no convergence before max_time
    double mean_clusters = 0.0;
    double mean_min_adjacent_separation = 0.0;
};

struct MonteCarloTrial {
    int n = 0;
    int trial = 0;
    int clusters = 0;
    double min_separation = 0.0;  // 0 for a single cluster
    std::string classification;
};

struct MonteCarloReport {
    std::uint64_t seed = 0;
    std::string density;
    std::vector<MonteCarloRow> rows;
    std::vector<MonteCarloTrial> trials;

    std::string to_json() const;
    std::string to_csv() const;  // n,trial,clusters,min_separation,classification
};

struct MonteCarloOptions {
    std::uint64_t seed = 7;
    int threads = 0;             // 0 = hardware concurrency
    SimOptions sim;              // tolerances for the per-trial runs
    double trial_max_time = 0.0; // 0 = auto: 5 + 400/n
    double classify_margin = 1e-9;
};

/// Seed-deterministic harness: i.i.d. sorted draws per (seed, n, trial),
/// simulated to convergence and classified against the stability threshold.
MonteCarloReport monte_carlo_conjecture(const DensitySpec& density, const std::vector<int>& ns,
                                        int trials, const MonteCarloOptions& opts = {});

}  // namespace optk
