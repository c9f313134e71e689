#pragma once

#include <string>
#include <utility>
#include <vector>

#include "optk/analysis.hpp"
#include "optk/errors.hpp"

namespace optk {

/// Nondecreasing piecewise-linear function on [0,1]: the continuum state.
/// m_lower/M_upper are certified chord-slope bounds (0 / +inf when unknown).
struct OpinionFunction {
    std::vector<double> knots;   // strictly increasing, knots.front()=0, back()=1
    std::vector<double> values;  // nondecreasing, same length
    double m_lower = 0.0;
    double M_upper = 0.0;  // 0 means "not certified"

    static OpinionFunction linear(double v0, double v1, int K = 512);
    static OpinionFunction constant(double c, int K = 512);
    /// Uniform grid with values sampled from a callable v(alpha).
    template <typename F>
    static OpinionFunction sampled(F&& f, int K = 512) {
        OpinionFunction out;
        out.knots.resize(K + 1);
        out.values.resize(K + 1);
        for (int k = 0; k <= K; ++k) {
            out.knots[k] = static_cast<double>(k) / K;
            out.values[k] = f(out.knots[k]);
        }
        out.infer_slope_bounds();
        return out;
    }

    double operator()(double alpha) const;
    std::size_t size() const { return knots.size(); }
    bool nondecreasing() const;
    /// Min/max chord slope over adjacent knots (equal to the extremes over
    /// all knot pairs for a piecewise-linear function).
    std::pair<double, double> measured_slope_bounds() const;
    void infer_slope_bounds();  // sets m_lower/M_upper from the data
    void validate() const;
    /// Exact integral of the interpolant over [0, alpha].
    double prefix_integral(double alpha) const;
    double integral() const { return prefix_integral(knots.back()); }
    double variance() const;  // integral of (f - mean)^2, exact per piece
};

/// Interaction rates at the knots: L(f)(a) = integral over
/// {g : |f(g)-f(a)| < 1} of (f(g) - f(a)) dg, exact per linear piece.
std::vector<double> operator_L(const OpinionFunction& f);

/// Exact integral of L(f)(alpha) over [0, c]; c = 1 gives the antisymmetry
/// functional (zero up to rounding).
double integral_of_L(const OpinionFunction& f, double c);

/// Lipschitz constant of L on X_m: 2 + 8/m.
double lipschitz_constant(double m);

/// Largest certified contraction segment for start bounds (m, M):
/// min(m/(4M), m/8, (1/2)/(2 + 16/m), ln 2).
double choose_segment(double m, double M);

struct RateBoundsReport {
    double lower_violation = 0.0;  // worst excess of -(f(b)-f(a)) - (L(b)-L(a))
    double upper_violation = 0.0;  // worst excess of (L(b)-L(a)) - (2/m)(f(b)-f(a))
};

/// Pairwise rate bounds on all knot pairs for f in X_m.
RateBoundsReport rate_bounds_check(const OpinionFunction& f);

struct FixedPointReport {
    bool in_F = false;       // every value pair equal (within tol) or >= 1 apart
    bool strict = false;     // separated pairs strictly > 1 apart
    bool in_Fbar = false;    // condition fails on knot measure <= tol only
    double violating_measure = 0.0;
    double tol = 0.0;
    std::string to_json() const;
};

FixedPointReport check_fixed_point(const OpinionFunction& f, double tol);

struct PicardResult {
    std::vector<double> times;                // nt+1 levels including both ends
    std::vector<std::vector<double>> states;  // values per level
    int iterations = 0;
    double max_contraction_factor = 0.0;
    int time_levels = 0;
    bool refined = false;  // needed one time-grid refinement
};

/// Fixed-point iteration of the time-integral map on one segment [t0, t0+t1],
/// starting from the constant-in-time extension of x0. Verifies the 1/2
/// contraction factor and the widening slope bands on every iterate.
PicardResult picard_iterate(const OpinionFunction& x0, double t1, int time_levels = 32,
                            double tol = 1e-11, int max_iters = 80);

struct ContinuumOptions {
    double T = 10.0;
    int time_levels = 32;           // trapezoid levels per Picard segment
    double picard_tol = 1e-11;
    int picard_max_iters = 80;
    int max_picard_segments = 256;  // then switch to direct integration
    double min_picard_segment = 1e-3;
    double store_interval = 0.0;    // 0 = auto: T/128
    std::vector<double> store_times;  // extra exact storage times
    double residual_tol = 1e-8;     // ||L(x)||_inf for the fixed-point stop
    double fixed_point_tol = 1e-2;
    double rk_abs_tol = 1e-11;
    double rk_rel_tol = 1e-9;

    void validate() const;
};

struct ContinuumTrajectory {
    std::vector<double> knots;
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    // Regularity envelope (m e^{-t}, M e^{4t/m}) per stored time.
    std::vector<std::pair<double, double>> certified_bounds;
    std::vector<double> segment_boundaries;   // Picard segment end times
    std::vector<double> contraction_factors;  // worst per segment
    double picard_end_time = 0.0;
    bool residual_converged = false;
    double final_residual = 0.0;
    double m0 = 0.0, M0 = 0.0;

    OpinionFunction state_at(std::size_t idx) const;
    std::size_t size() const { return times.size(); }
};

/// Certified Picard segments while the Appendix-style schedule stays
/// practical, then residual-controlled direct integration of the same
/// mass-conserving semi-discretization up to T.
ContinuumTrajectory solve_continuum(const OpinionFunction& x0, const ContinuumOptions& opts);

/// Plateau extraction on a near-fixed-point state; weights are index-interval
/// lengths (midpoints of the inter-plateau gaps partition [0,1]).
ClusterReport extract_continuum_clusters(const OpinionFunction& f, double plateau_tol,
                                         double classify_margin = 1e-9);

}  // namespace optk
