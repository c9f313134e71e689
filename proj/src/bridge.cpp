#include "optk/bridge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace optk {

double StepFunction::operator()(double alpha) const {
    if (alpha >= breakpoints.back()) return levels.back();
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), alpha);
    const auto p = static_cast<std::size_t>(it - breakpoints.begin());
    return levels[p == 0 ? 0 : p - 1];
}

void StepFunction::validate() const {
    if (levels.empty() || breakpoints.size() != levels.size() + 1)
        throw InvalidArgument("step function needs p levels and p+1 breakpoints");
    if (std::abs(breakpoints.front()) > 1e-9 || std::abs(breakpoints.back() - 1.0) > 1e-9)
        throw InvalidArgument("breakpoints must span [0, 1]");
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k)
        if (!(breakpoints[k + 1] > breakpoints[k]))
            throw InvalidArgument("breakpoints must be strictly increasing");
    if (!std::is_sorted(levels.begin(), levels.end()))
        throw InvalidArgument("levels must be nondecreasing");
}

StepFunction embed_discrete(const OpinionState& xi) {
    xi.validate();
    StepFunction s;
    const double W = xi.total_weight();
    s.breakpoints.push_back(0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        acc += xi.weights[i];
        s.breakpoints.push_back(acc / W);
        s.levels.push_back(xi.opinions[i]);
    }
    s.breakpoints.back() = 1.0;
    return s;
}

double sup_distance(const StepFunction& s, const OpinionFunction& f) {
    s.validate();
    f.validate();
    // On each plateau the difference to a monotone function is extremal at
    // the plateau ends.
    double sup = 0.0;
    for (std::size_t p = 0; p < s.levels.size(); ++p) {
        const double a = s.breakpoints[p], b = s.breakpoints[p + 1];
        sup = std::max(sup, std::abs(s.levels[p] - f(a)));
        sup = std::max(sup, std::abs(s.levels[p] - f(b)));
    }
    return sup;
}

OpinionState sample_continuum(const OpinionFunction& x0, int n) {
    x0.validate();
    if (n <= 0) throw InvalidArgument("sample size must be positive");
    OpinionState xi;
    xi.opinions.resize(n);
    xi.weights.assign(n, 1.0 / n);
    for (int i = 1; i <= n; ++i)
        xi.opinions[i - 1] = x0(static_cast<double>(i) / n);
    xi.time = 0.0;
    return xi;
}

std::vector<double> operator_L_step(const StepFunction& s) {
    s.validate();
    // Plateau values interact exactly like discrete agents weighted by the
    // plateau widths.
    OpinionState st;
    st.opinions = s.levels;
    st.weights.resize(s.levels.size());
    for (std::size_t p = 0; p < s.levels.size(); ++p)
        st.weights[p] = s.breakpoints[p + 1] - s.breakpoints[p];
    auto g = build_graph(st);
    return derivative(st, g);
}

OpinionState nudge_to_proper(const OpinionState& s, double eps, double boundary_tol) {
    s.validate();
    const int n = static_cast<int>(s.size());
    bool boundary = false;
    for (int i = 0; i < n && !boundary; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double gap = s.opinions[j] - s.opinions[i];
            if (gap > 1.5) break;
            if (std::abs(gap - 1.0) <= boundary_tol) {
                boundary = true;
                break;
            }
        }
    if (!boundary) return s;
    OpinionState out = s;
    const double nn = static_cast<double>(n) * n;
    for (int i = 0; i < n; ++i)
        out.opinions[i] += eps * (static_cast<double>(i) * (i + 1)) / nn;
    return out;
}

void DensitySpec::validate() const {
    if (kind == Kind::uniform) {
        if (!(b > a)) throw InvalidArgument("uniform density needs b > a");
        return;
    }
    if (levels.empty() || breakpoints.size() != levels.size() + 1)
        throw InvalidArgument("piecewise density needs p levels and p+1 breakpoints");
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k)
        if (!(breakpoints[k + 1] > breakpoints[k]))
            throw InvalidArgument("density breakpoints must increase");
    for (double l : levels)
        if (!(l > 0.0))
            throw InvalidArgument("density must be bounded below by a positive number on its "
                                  "connected support");
}

double DensitySpec::quantile(double u) const {
    if (kind == Kind::uniform) return a + (b - a) * u;
    // Piecewise-constant density: piecewise-linear CDF.
    double total = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k)
        total += levels[k] * (breakpoints[k + 1] - breakpoints[k]);
    double target = u * total;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const double mass = levels[k] * (breakpoints[k + 1] - breakpoints[k]);
        if (target <= mass || k + 1 == levels.size())
            return breakpoints[k] + target / levels[k];
        target -= mass;
    }
    return breakpoints.back();
}

double DensitySpec::support_diameter() const {
    return kind == Kind::uniform ? b - a : breakpoints.back() - breakpoints.front();
}

std::string DensitySpec::describe() const {
    std::ostringstream os;
    if (kind == Kind::uniform) {
        os << "uniform(" << a << "," << b << ")";
    } else {
        os << "pwc(";
        for (std::size_t k = 0; k < levels.size(); ++k)
            os << breakpoints[k] << ":" << levels[k] << (k + 1 < levels.size() ? "," : "");
        os << ":" << breakpoints.back() << ")";
    }
    return os.str();
}

ApproxErrorResult approximation_error(const OpinionFunction& x0, int n, double T,
                                      const BridgeOptions& opts) {
    x0.validate();
    if (n <= 0) throw InvalidArgument("sample size must be positive");
    if (!(T > 0.0)) throw InvalidArgument("horizon must be positive");

    ApproxErrorResult out;
    const int cp = std::max(1, opts.check_points);
    for (int k = 0; k <= cp; ++k) out.times.push_back(T * k / cp);

    ContinuumOptions copts = opts.continuum;
    copts.T = T;
    copts.store_times = out.times;
    ContinuumTrajectory cont = solve_continuum(x0, copts);

    OpinionState xi = sample_continuum(x0, n);
    SimOptions sopts = opts.sim;
    sopts.max_time = T;
    sopts.sample_interval = T / cp;
    // The approximation statement assumes proper initial conditions; lattice
    // samples of regular profiles need their unit-boundary ties cleared.
    xi = nudge_to_proper(xi, 1e-7, 10.0 * sopts.event_tolerance);
    Trajectory disc = simulate(xi, sopts);

    double m = x0.m_lower;
    if (!(m > 0.0)) m = x0.measured_slope_bounds().first;
    out.analytic_bound = sup_distance(embed_discrete(xi), cont.state_at(0)) *
                         std::exp(T * (2.0 + (8.0 / m) * std::exp(T)));

    // Match each requested time against the stored trajectories.
    for (double tk : out.times) {
        // Discrete sample at tk: the engine lands exactly on sample times;
        // merged samples keep the weighted composite agents.
        const TrajectorySample* best = nullptr;
        for (const auto& s : disc.samples)
            if (std::abs(s.state.time - tk) < 1e-9) best = &s;
        // A converged run stops early; its terminal state persists.
        OpinionState stepped;
        if (best) {
            stepped = best->state;
        } else {
            stepped = disc.terminal;
        }
        std::size_t ci = 0;
        double dmin = 1e300;
        for (std::size_t k = 0; k < cont.times.size(); ++k) {
            const double d = std::abs(cont.times[k] - tk);
            if (d < dmin) {
                dmin = d;
                ci = k;
            }
        }
        const double err = sup_distance(embed_discrete(stepped), cont.state_at(ci));
        out.errors.push_back(err);
        out.max_error = std::max(out.max_error, err);
    }
    out.initial_error = out.errors.front();
    return out;
}

namespace {

std::vector<double> draw_sorted(const DensitySpec& density, std::uint64_t seed, int n,
                                int trial) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(sq);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(n);
    for (double& x : xs) x = density.quantile(u(rng));
    std::sort(xs.begin(), xs.end());
    return xs;
}

}  // namespace

MonteCarloReport monte_carlo_conjecture(const DensitySpec& density, const std::vector<int>& ns,
                                        int trials, const MonteCarloOptions& opts) {
    density.validate();
    if (trials < 1) throw InvalidArgument("need at least one trial");
    for (int n : ns)
        if (n < 1) throw InvalidArgument("agent counts must be positive");

    MonteCarloReport report;
    report.seed = opts.seed;
    report.density = density.describe();
    report.trials.resize(ns.size() * static_cast<std::size_t>(trials));

    auto run_trial = [&](std::size_t row, int n, int trial) {
        MonteCarloTrial& rec = report.trials[row * trials + trial];
        rec.n = n;
        rec.trial = trial;
        SimOptions sopts = opts.sim;
        // Straggler pairs merge at rate ~2 regardless of n, so the horizon
        // needs a flat component on top of the n-scaled collapse time.
        sopts.max_time = opts.trial_max_time > 0.0 ? opts.trial_max_time : 30.0 + 800.0 / n;
        sopts.sample_interval = sopts.max_time;  // only terminal needed
        try {
            OpinionState init = canonicalize(draw_sorted(density, opts.seed, n, trial));
            Trajectory traj = simulate(init, sopts);
            if (!traj.converged) {
                rec.classification = "unconverged";
                return;
            }
            ClusterReport cr =
                extract_clusters(traj.terminal, 10.0 * sopts.cluster_merge_tol);
            classify_report(cr, opts.classify_margin);
            rec.clusters = static_cast<int>(cr.clusters.size());
            rec.min_separation = cr.separations.empty()
                                     ? 0.0
                                     : *std::min_element(cr.separations.begin(),
                                                         cr.separations.end());
            rec.classification = to_string(cr.overall);
        } catch (const Error&) {
            rec.classification = "failed";
        }
    };

    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int nthreads = std::max(1, opts.threads > 0 ? opts.threads : hw);
    for (std::size_t row = 0; row < ns.size(); ++row) {
        const int n = ns[row];
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&, n, row] {
                for (;;) {
                    const int trial = next.fetch_add(1);
                    if (trial >= trials) return;
                    run_trial(row, n, trial);
                }
            });
        }
        for (auto& th : pool) th.join();

        MonteCarloRow r;
        r.n = n;
        r.trials = trials;
        double cl_sum = 0.0, sep_sum = 0.0;
        int sep_count = 0;
        for (int trial = 0; trial < trials; ++trial) {
            const auto& rec = report.trials[row * trials + trial];
            if (rec.classification == "failed") {
                ++r.failed;
                continue;
            }
            if (rec.classification == "unconverged") {
                ++r.failed;
                continue;
            }
            ++r.converged;
            cl_sum += rec.clusters;
            if (rec.clusters > 1) {
                sep_sum += rec.min_separation;
                ++sep_count;
            }
            if (rec.classification == "stable") ++r.stable;
            else if (rec.classification == "marginal") ++r.marginal;
            else ++r.unstable;
        }
        r.mean_clusters = r.converged > 0 ? cl_sum / r.converged : 0.0;
        r.mean_min_adjacent_separation = sep_count > 0 ? sep_sum / sep_count : 0.0;
        report.rows.push_back(r);
    }
    return report;
}

std::string MonteCarloReport::to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["density"] = density;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"n", r.n},
                             {"trials", r.trials},
                             {"converged", r.converged},
                             {"stable", r.stable},
                             {"marginal", r.marginal},
                             {"unstable", r.unstable},
                             {"failed", r.failed},
                             {"stable_fraction", r.trials > 0
                                                     ? static_cast<double>(r.stable) / r.trials
                                                     : 0.0},
                             {"mean_clusters", r.mean_clusters},
                             {"mean_min_adjacent_separation", r.mean_min_adjacent_separation}});
    }
    return j.dump(2);
}

std::string MonteCarloReport::to_csv() const {
    std::ostringstream os;
    os << "n,trial,clusters,min_separation,classification\n";
    for (const auto& t : trials) {
        os << t.n << "," << t.trial << "," << t.clusters << "," << t.min_separation << ","
           << t.classification << "\n";
    }
    return os.str();
}

}  // namespace optk
