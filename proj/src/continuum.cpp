#include "optk/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "dopri5.hpp"

namespace optk {

namespace {

// Exact evaluation helpers for one piecewise-linear function.
class PLView {
public:
    PLView(const std::vector<double>& knots, const std::vector<double>& values)
        : a_(knots), v_(values) {
        prefix_.resize(a_.size());
        prefix_[0] = 0.0;
        for (std::size_t k = 1; k < a_.size(); ++k)
            prefix_[k] = prefix_[k - 1] + 0.5 * (v_[k] + v_[k - 1]) * (a_[k] - a_[k - 1]);
    }

    double value(double alpha) const {
        if (alpha <= a_.front()) return v_.front();
        if (alpha >= a_.back()) return v_.back();
        const std::size_t p = piece(alpha);
        const double t = (alpha - a_[p]) / (a_[p + 1] - a_[p]);
        return v_[p] + t * (v_[p + 1] - v_[p]);
    }

    // Integral of f over [0, alpha], exact.
    double integral_to(double alpha) const {
        if (alpha <= a_.front()) return 0.0;
        if (alpha >= a_.back()) return prefix_.back();
        const std::size_t p = piece(alpha);
        const double fa = value(alpha);
        return prefix_[p] + 0.5 * (v_[p] + fa) * (alpha - a_[p]);
    }

    // Infimum of {g : f(g) > t}; the measure-zero plateau at exactly t is
    // excluded, matching the strict interaction inequality.
    double first_above(double t) const {
        auto it = std::upper_bound(v_.begin(), v_.end(), t);
        if (it == v_.begin()) return a_.front();
        if (it == v_.end()) return a_.back();
        const std::size_t q = static_cast<std::size_t>(it - v_.begin());
        const double slope = (v_[q] - v_[q - 1]) / (a_[q] - a_[q - 1]);
        if (slope <= 0.0) return a_[q - 1];
        return a_[q - 1] + (t - v_[q - 1]) / slope;
    }

    // Supremum of {g : f(g) < t}.
    double last_below(double t) const {
        auto it = std::lower_bound(v_.begin(), v_.end(), t);
        if (it == v_.begin()) return a_.front();
        if (it == v_.end()) return a_.back();
        const std::size_t q = static_cast<std::size_t>(it - v_.begin());
        const double slope = (v_[q] - v_[q - 1]) / (a_[q] - a_[q - 1]);
        if (slope <= 0.0) return a_[q - 1];
        return a_[q - 1] + (t - v_[q - 1]) / slope;
    }

    // First alpha with f >= t and last alpha with f <= t (used for the
    // breakpoint set of the exact outer integral).
    double inv_first(double t) const {
        auto it = std::lower_bound(v_.begin(), v_.end(), t);
        if (it == v_.begin()) return a_.front();
        if (it == v_.end()) return a_.back();
        const std::size_t q = static_cast<std::size_t>(it - v_.begin());
        const double slope = (v_[q] - v_[q - 1]) / (a_[q] - a_[q - 1]);
        if (slope <= 0.0) return a_[q];
        return a_[q - 1] + (t - v_[q - 1]) / slope;
    }

    // Interaction rate for an agent currently at value v.
    double rate_of_value(double v) const {
        const double lo = first_above(v - 1.0);
        const double hi = last_below(v + 1.0);
        if (hi <= lo) return 0.0;
        return (integral_to(hi) - integral_to(lo)) - v * (hi - lo);
    }

    double rate_at(double alpha) const { return rate_of_value(value(alpha)); }

    const std::vector<double>& knots() const { return a_; }
    const std::vector<double>& values() const { return v_; }

private:
    std::size_t piece(double alpha) const {
        auto it = std::upper_bound(a_.begin(), a_.end(), alpha);
        std::size_t p = static_cast<std::size_t>(it - a_.begin());
        if (p == 0) return 0;
        if (p >= a_.size()) return a_.size() - 2;
        return p - 1;
    }

    const std::vector<double>& a_;
    const std::vector<double>& v_;
    std::vector<double> prefix_;
};

// Trapezoid quadrature weights of the knot grid (sum to 1 on [0,1]).
std::vector<double> trapezoid_weights(const std::vector<double>& knots) {
    const std::size_t K = knots.size();
    std::vector<double> q(K, 0.0);
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double h = knots[k + 1] - knots[k];
        q[k] += 0.5 * h;
        q[k + 1] += 0.5 * h;
    }
    return q;
}

// Running-max clamp; RK stage vectors can carry sub-rounding inversions
// that would confuse the monotone window searches.
void clamp_monotone(std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] < v[k - 1]) v[k] = v[k - 1];
}

// Rates at all knots, with the quadrature-defect mean removed so the
// trapezoid mass of the state is a conserved linear invariant of every
// update built from these rates.
void projected_rates(const std::vector<double>& knots, const std::vector<double>& q,
                     std::span<const double> values, std::vector<double>& out) {
    static thread_local std::vector<double> v;
    v.assign(values.begin(), values.end());
    clamp_monotone(v);
    PLView f(knots, v);
    const std::size_t K = knots.size();
    out.resize(K);
    double defect = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        out[k] = f.rate_of_value(v[k]);
        defect += q[k] * out[k];
    }
    for (std::size_t k = 0; k < K; ++k) out[k] -= defect;
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

OpinionFunction OpinionFunction::linear(double v0, double v1, int K) {
    return sampled([&](double a) { return v0 + (v1 - v0) * a; }, K);
}

OpinionFunction OpinionFunction::constant(double c, int K) {
    return sampled([&](double) { return c; }, K);
}

double OpinionFunction::operator()(double alpha) const {
    return PLView(knots, values).value(alpha);
}

bool OpinionFunction::nondecreasing() const {
    return std::is_sorted(values.begin(), values.end());
}

std::pair<double, double> OpinionFunction::measured_slope_bounds() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double s = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return {lo, hi};
}

void OpinionFunction::infer_slope_bounds() {
    auto [lo, hi] = measured_slope_bounds();
    m_lower = std::max(lo, 0.0);
    M_upper = hi;
}

void OpinionFunction::validate() const {
    if (knots.size() < 2 || knots.size() != values.size())
        throw InvalidArgument("opinion function needs matching knots/values, at least 2");
    if (std::abs(knots.front()) > 1e-9 || std::abs(knots.back() - 1.0) > 1e-9)
        throw InvalidArgument("knot grid must span [0, 1]");
    for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        if (!(knots[k + 1] > knots[k])) throw InvalidArgument("knots must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("non-finite value");
    if (!nondecreasing()) throw InvalidArgument("values must be nondecreasing");
}

double OpinionFunction::prefix_integral(double alpha) const {
    return PLView(knots, values).integral_to(alpha);
}

double OpinionFunction::variance() const {
    const double mean = integral();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double h = knots[k + 1] - knots[k];
        const double d0 = values[k] - mean, d1 = values[k + 1] - mean;
        acc += h * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
    }
    return acc;
}

std::vector<double> operator_L(const OpinionFunction& f) {
    f.validate();
    PLView view(f.knots, f.values);
    std::vector<double> out(f.values.size());
    for (std::size_t k = 0; k < f.values.size(); ++k) out[k] = view.rate_of_value(f.values[k]);
    return out;
}

double integral_of_L(const OpinionFunction& f, double c) {
    f.validate();
    c = std::clamp(c, 0.0, 1.0);
    PLView view(f.knots, f.values);
    // The rate is piecewise quadratic in alpha with kinks where alpha hits a
    // knot or where f(alpha) -+ 1 crosses a knot value; two-point Gauss per
    // kink-free piece integrates it exactly.
    std::vector<double> cuts;
    for (double a : f.knots)
        if (a <= c) cuts.push_back(a);
    cuts.push_back(c);
    for (double v : f.values) {
        for (double target : {v - 1.0, v + 1.0}) {
            if (target < f.values.front() || target > f.values.back()) continue;
            for (double alpha : {view.inv_first(target), view.first_above(target),
                                 view.last_below(target)}) {
                if (alpha > 0.0 && alpha < c) cuts.push_back(alpha);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-15; }),
               cuts.end());
    constexpr double kGauss = 0.28867513459481287;  // 1/(2 sqrt(3))
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double h = cuts[k + 1] - cuts[k];
        if (h <= 0.0) continue;
        const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        acc += 0.5 * h * (view.rate_at(mid - h * kGauss) + view.rate_at(mid + h * kGauss));
    }
    return acc;
}

double lipschitz_constant(double m) {
    if (!(m > 0.0)) throw InvalidArgument("lower slope bound must be positive");
    return 2.0 + 8.0 / m;
}

double choose_segment(double m, double M) {
    if (!(m > 0.0)) throw InvalidArgument("lower slope bound must be positive");
    if (M < m) throw InvalidArgument("upper slope bound must dominate the lower one");
    const double t1 = m / (4.0 * M);
    const double t2 = m / 8.0;
    const double t3 = 0.5 / (2.0 + 16.0 / m);
    const double t4 = std::log(2.0);
    return std::min(std::min(t1, t2), std::min(t3, t4));
}

RateBoundsReport rate_bounds_check(const OpinionFunction& f) {
    f.validate();
    const double m = f.m_lower;
    if (!(m > 0.0))
        throw InvalidArgument("rate_bounds_check requires a positive certified lower slope");
    auto L = operator_L(f);
    RateBoundsReport rep;
    const std::size_t K = f.values.size();
    for (std::size_t a = 0; a < K; ++a) {
        for (std::size_t b = a + 1; b < K; ++b) {
            const double dv = f.values[b] - f.values[a];
            const double dL = L[b] - L[a];
            rep.lower_violation = std::max(rep.lower_violation, -dv - dL);
            rep.upper_violation = std::max(rep.upper_violation, dL - (2.0 / m) * dv);
        }
    }
    return rep;
}

FixedPointReport check_fixed_point(const OpinionFunction& f, double tol) {
    f.validate();
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    FixedPointReport rep;
    rep.tol = tol;
    const auto q = trapezoid_weights(f.knots);
    const std::size_t K = f.values.size();
    std::vector<bool> bad(K, false);
    bool all_ok = true;
    bool strict = true;
    for (std::size_t a = 0; a < K; ++a) {
        for (std::size_t b = a + 1; b < K; ++b) {
            const double dv = f.values[b] - f.values[a];
            if (dv <= tol) continue;
            if (dv >= 1.0) {
                if (dv <= 1.0) strict = false;  // exactly one
                continue;
            }
            all_ok = false;
            strict = false;
            bad[a] = bad[b] = true;
        }
    }
    rep.in_F = all_ok;
    rep.strict = all_ok && strict;
    for (std::size_t k = 0; k < K; ++k)
        if (bad[k]) rep.violating_measure += q[k];
    rep.in_Fbar = rep.violating_measure <= tol;
    return rep;
}

std::string FixedPointReport::to_json() const {
    nlohmann::ordered_json j;
    j["in_F_nonstrict"] = in_F;
    j["in_F_strict"] = in_F && strict;
    j["in_Fbar"] = in_Fbar;
    j["violating_measure"] = violating_measure;
    j["tol"] = tol;
    return j.dump(2);
}

namespace {

PicardResult picard_run(const OpinionFunction& x0, double t1, int nt, double tol, int max_iters,
                        double mhat, double Mhat) {
    const std::size_t K = x0.values.size();
    const auto q = trapezoid_weights(x0.knots);
    const double dt = t1 / nt;
    PicardResult res;
    res.time_levels = nt;
    res.times.resize(nt + 1);
    for (int j = 0; j <= nt; ++j) res.times[j] = j * dt;
    res.states.assign(nt + 1, x0.values);  // constant-in-time start lies in P

    std::vector<std::vector<double>> rates(nt + 1);
    std::vector<double> cum(K);
    const double scale = std::max(1.0, sup_abs(x0.values));
    const double delta_floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    const double band_slack = 1e-8 * (1.0 + Mhat);
    double prev_delta = -1.0;

    for (int iter = 1; iter <= max_iters; ++iter) {
        for (int j = 0; j <= nt; ++j)
            projected_rates(x0.knots, q, res.states[j], rates[j]);
        double delta = 0.0;
        std::fill(cum.begin(), cum.end(), 0.0);
        for (int j = 1; j <= nt; ++j) {
            for (std::size_t k = 0; k < K; ++k) {
                cum[k] += 0.5 * dt * (rates[j - 1][k] + rates[j][k]);
                const double next = x0.values[k] + cum[k];
                delta = std::max(delta, std::abs(next - res.states[j][k]));
                res.states[j][k] = next;
            }
        }
        res.iterations = iter;
        // Contraction factor, measured away from the rounding floor.
        if (prev_delta > delta_floor && delta > delta_floor) {
            const double factor = delta / prev_delta;
            res.max_contraction_factor = std::max(res.max_contraction_factor, factor);
            if (factor > 0.5 + 1e-3)
                throw ContractionViolated(
                    "picard contraction factor " + std::to_string(factor) +
                    " exceeds 1/2 beyond the quadrature allowance");
        }
        prev_delta = delta;
        // The widening slope bands that the integral map preserves.
        for (int j = 1; j <= nt; ++j) {
            const double tj = res.times[j];
            const double lo_band = mhat - 2.0 * Mhat * tj;
            const double hi_band = Mhat + 8.0 * (Mhat / mhat) * tj;
            const auto& v = res.states[j];
            for (std::size_t k = 0; k + 1 < K; ++k) {
                const double s = (v[k + 1] - v[k]) / (x0.knots[k + 1] - x0.knots[k]);
                if (s < lo_band - band_slack || s > hi_band + band_slack)
                    throw PMembershipViolated("iterate left the certified slope band at t=" +
                                              std::to_string(tj));
            }
        }
        if (delta <= tol) break;
    }
    return res;
}

}  // namespace

PicardResult picard_iterate(const OpinionFunction& x0, double t1, int time_levels, double tol,
                            int max_iters) {
    x0.validate();
    if (!(t1 > 0.0)) throw InvalidArgument("segment length must be positive");
    if (time_levels < 2) throw InvalidArgument("need at least 2 time levels");

    // A numerical fixed point (constant data, separated plateaus) is its own
    // limit: the constant-in-time start is already the answer.
    {
        auto rates = operator_L(x0);
        if (sup_abs(rates) <= tol) {
            PicardResult res;
            res.time_levels = time_levels;
            res.iterations = 1;
            res.times.resize(time_levels + 1);
            for (int j = 0; j <= time_levels; ++j) res.times[j] = j * t1 / time_levels;
            res.states.assign(time_levels + 1, x0.values);
            return res;
        }
    }

    double mhat = x0.m_lower, Mhat = x0.M_upper;
    if (!(mhat > 0.0) || !(Mhat > 0.0)) {
        auto [lo, hi] = x0.measured_slope_bounds();
        mhat = lo;
        Mhat = hi;
    }
    if (!(mhat > 0.0))
        throw InvalidArgument("picard_iterate requires a regular (positive slope) start");
    const double t_cert = choose_segment(mhat, Mhat);
    if (t1 > t_cert * (1.0 + 1e-12))
        throw InvalidArgument("segment length exceeds the certified contraction horizon");
    try {
        return picard_run(x0, t1, time_levels, tol, max_iters, mhat, Mhat);
    } catch (const ContractionViolated&) {
        // One time-grid refinement before giving up: a too-coarse trapezoid
        // grid can fake a factor above 1/2.
        PicardResult res = picard_run(x0, t1, 2 * time_levels, tol, max_iters, mhat, Mhat);
        res.refined = true;
        return res;
    }
}

void ContinuumOptions::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be positive and finite");
    if (time_levels < 2) throw InvalidArgument("need at least 2 time levels");
    if (!(picard_tol > 0.0) || !(residual_tol > 0.0) || !(fixed_point_tol > 0.0))
        throw InvalidArgument("tolerances must be positive");
    if (max_picard_segments < 0) throw InvalidArgument("max_picard_segments must be >= 0");
    if (!(min_picard_segment > 0.0)) throw InvalidArgument("min_picard_segment must be positive");
}

OpinionFunction ContinuumTrajectory::state_at(std::size_t idx) const {
    OpinionFunction f;
    f.knots = knots;
    f.values = states.at(idx);
    f.infer_slope_bounds();
    return f;
}

ContinuumTrajectory solve_continuum(const OpinionFunction& x0, const ContinuumOptions& opts) {
    x0.validate();
    opts.validate();
    double m = x0.m_lower, M = x0.M_upper;
    if (!(m > 0.0) || !(M > 0.0)) {
        auto [lo, hi] = x0.measured_slope_bounds();
        m = lo;
        M = hi;
    }
    const double T = opts.T;

    // Members of F (strict separation) are fixed points with a unique
    // solution, regular or not: the trajectory is constant. This covers
    // constant initial data and well-separated plateau profiles.
    {
        PLView v0(x0.knots, x0.values);
        double residual = 0.0;
        for (double val : x0.values)
            residual = std::max(residual, std::abs(v0.rate_of_value(val)));
        if (residual <= opts.residual_tol) {
            const auto fp = check_fixed_point(x0, std::max(1e-9, opts.residual_tol));
            if (fp.in_F && fp.strict) {
                ContinuumTrajectory traj;
                traj.knots = x0.knots;
                traj.m0 = m;
                traj.M0 = M;
                const double interval =
                    opts.store_interval > 0.0 ? opts.store_interval : T / 128.0;
                std::vector<double> grid{0.0};
                for (double t = interval; t < T + 1e-12; t += interval) grid.push_back(t);
                for (double t : opts.store_times)
                    if (t >= 0.0 && t <= T) grid.push_back(t);
                grid.push_back(T);
                std::sort(grid.begin(), grid.end());
                auto [lo, hi] = x0.measured_slope_bounds();
                for (double t : grid) {
                    if (!traj.times.empty() && t <= traj.times.back() + 1e-15) continue;
                    traj.times.push_back(t);
                    traj.states.push_back(x0.values);
                    traj.certified_bounds.emplace_back(lo, hi);
                }
                traj.picard_end_time = 0.0;
                traj.residual_converged = true;
                traj.final_residual = residual;
                return traj;
            }
        }
    }

    if (!(m > 0.0))
        throw InvalidArgument(
            "solve_continuum requires regular initial data (positive lower slope); "
            "step initial conditions belong to the discrete simulator");

    ContinuumTrajectory traj;
    traj.knots = x0.knots;
    traj.m0 = m;
    traj.M0 = M;
    const auto q = trapezoid_weights(x0.knots);

    std::vector<double> wanted = opts.store_times;
    std::sort(wanted.begin(), wanted.end());
    std::size_t next_wanted = 0;

    auto certified = [&](double t) {
        return std::make_pair(m * std::exp(-t), M * std::exp(4.0 * t / m));
    };
    auto store = [&](double t, const std::vector<double>& v) {
        if (!traj.times.empty() && t <= traj.times.back() + 1e-15) return;
        traj.times.push_back(t);
        traj.states.push_back(v);
        traj.certified_bounds.push_back(certified(t));
    };

    store(0.0, x0.values);
    double t = 0.0;
    std::vector<double> cur = x0.values;

    // Phase 1: certified contraction segments on the global schedule
    // (m e^{-t}, M e^{4t/m}). The schedule shrinks exponentially, so it is
    // capped by segment count and minimum length before direct integration
    // takes over.
    int seg = 0;
    while (t < T && seg < opts.max_picard_segments) {
        const auto [mk, Mk] = certified(t);
        double t1 = choose_segment(mk, Mk);
        if (t1 < opts.min_picard_segment) break;
        t1 = std::min(t1, T - t);
        OpinionFunction fk;
        fk.knots = x0.knots;
        fk.values = cur;
        fk.m_lower = mk;
        fk.M_upper = Mk;
        PicardResult res;
        try {
            res = picard_run(fk, t1, opts.time_levels, opts.picard_tol, opts.picard_max_iters,
                             mk, Mk);
        } catch (const ContractionViolated&) {
            res = picard_run(fk, t1, 2 * opts.time_levels, opts.picard_tol,
                             opts.picard_max_iters, mk, Mk);
            res.refined = true;
        }
        // Exact storage times that fall inside this segment (linear
        // interpolation between trapezoid levels).
        while (next_wanted < wanted.size() && wanted[next_wanted] <= t + t1 + 1e-15) {
            const double tw = wanted[next_wanted];
            if (tw > t) {
                const double s = (tw - t) / (t1 / res.time_levels);
                const int j0 = std::min(static_cast<int>(s), res.time_levels - 1);
                const double frac = s - j0;
                std::vector<double> vi(cur.size());
                for (std::size_t k = 0; k < vi.size(); ++k)
                    vi[k] = (1.0 - frac) * res.states[j0][k] + frac * res.states[j0 + 1][k];
                store(tw, vi);
            }
            ++next_wanted;
        }
        cur = res.states.back();
        t += t1;
        ++seg;
        traj.segment_boundaries.push_back(t);
        traj.contraction_factors.push_back(res.max_contraction_factor);
        store(t, cur);
    }
    traj.picard_end_time = t;

    // Phase 2: direct integration of the same mass-conserving rates.
    if (t < T) {
        detail::Dopri5::Options ropt;
        ropt.abs_tol = opts.rk_abs_tol;
        ropt.rel_tol = opts.rk_rel_tol;
        ropt.dt_max = 0.25;
        ropt.dt_initial = 1e-3;
        const auto& knots = x0.knots;
        std::vector<double> rate_buf;
        detail::Dopri5 stepper(
            [&knots, &q, &rate_buf](double, std::span<const double> y, std::span<double> dydt) {
                projected_rates(knots, q, y, rate_buf);
                std::copy(rate_buf.begin(), rate_buf.end(), dydt.begin());
            },
            ropt);
        stepper.initialize(cur, t);
        const double interval = opts.store_interval > 0.0 ? opts.store_interval : T / 128.0;
        double next_store = std::ceil(t / interval + 1e-9) * interval;
        while (stepper.t_curr() < T) {
            double target = std::min(T, next_store);
            while (next_wanted < wanted.size() && wanted[next_wanted] <= stepper.t_curr() + 1e-15)
                ++next_wanted;
            if (next_wanted < wanted.size()) target = std::min(target, wanted[next_wanted]);
            stepper.step(target);
            if (stepper.t_curr() >= target - 1e-12) {
                cur = stepper.y_curr();
                clamp_monotone(cur);
                store(stepper.t_curr(), cur);
                if (target == next_store) next_store += interval;
                // Residual stop: near a fixed point in Fbar.
                projected_rates(knots, q, cur, rate_buf);
                const double residual = sup_abs(rate_buf);
                if (residual < opts.residual_tol) {
                    OpinionFunction f;
                    f.knots = knots;
                    f.values = cur;
                    if (check_fixed_point(f, opts.fixed_point_tol).in_Fbar) {
                        traj.residual_converged = true;
                        break;
                    }
                }
            }
        }
        cur = stepper.y_curr();
        clamp_monotone(cur);
        store(stepper.t_curr(), cur);
    }

    {
        std::vector<double> r;
        projected_rates(x0.knots, q, cur, r);
        traj.final_residual = sup_abs(r);
    }
    return traj;
}

ClusterReport extract_continuum_clusters(const OpinionFunction& f, double plateau_tol,
                                         double classify_margin) {
    f.validate();
    if (!(plateau_tol > 0.0)) throw InvalidArgument("plateau tolerance must be positive");
    PLView view(f.knots, f.values);

    ClusterReport report;
    report.cluster_tol = plateau_tol;
    const std::size_t K = f.values.size();
    struct Run {
        std::size_t first, last;
    };
    std::vector<Run> runs;
    std::size_t start = 0;
    for (std::size_t k = 0; k < K; ++k) {
        if (k + 1 == K || f.values[k + 1] - f.values[start] >= plateau_tol) {
            runs.push_back({start, k});
            start = k + 1;
        }
    }
    // Weights partition [0,1] at the midpoints of the inter-run gaps.
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const double a_first = f.knots[runs[r].first];
        const double a_last = f.knots[runs[r].last];
        const double left =
            r == 0 ? 0.0 : 0.5 * (f.knots[runs[r - 1].last] + a_first);
        const double right =
            r + 1 == runs.size() ? 1.0 : 0.5 * (a_last + f.knots[runs[r + 1].first]);
        Cluster c;
        c.member_first = static_cast<int>(runs[r].first);
        c.member_last = static_cast<int>(runs[r].last);
        c.weight = right - left;
        c.position = a_last > a_first
                         ? (view.integral_to(a_last) - view.integral_to(a_first)) /
                               (a_last - a_first)
                         : f.values[runs[r].first];
        report.clusters.push_back(c);
    }
    for (std::size_t k = 0; k + 1 < report.clusters.size(); ++k)
        report.separations.push_back(report.clusters[k + 1].position -
                                     report.clusters[k].position);
    classify_report(report, classify_margin);
    report.note =
        "continuum weights are index-interval lengths; the limit bound is nonstrict";
    return report;
}

}  // namespace optk
