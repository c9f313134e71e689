#include "optk/sim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <random>
#include <tuple>

#include "dopri5.hpp"

namespace optk {

namespace {

constexpr double kEquilibriumGapSlackFactor = 10.0;  // F-membership slack on the unit gap

struct CandidatePair {
    int i, j;
    TransitionEvent::Kind kind;
};

// Pairs violating the frozen regime by more than event_tolerance:
// regime edges at gap >= 1 + tol (want to disconnect) and regime non-edges
// at gap <= 1 - tol (want to connect). Two thresholded sliding windows.
// Violations persist until processed, so a crossing can never be lost, only
// located a step late.
std::vector<CandidatePair> crossing_candidates(std::span<const double> x,
                                               const InteractionGraph& regime, double tol) {
    const int n = static_cast<int>(x.size());
    std::vector<CandidatePair> out;
    int hi_c = 0;
    for (int i = 0; i < n; ++i) {
        if (hi_c < i + 1) hi_c = i + 1;
        while (hi_c < n && x[hi_c] - x[i] <= 1.0 - tol) ++hi_c;
        for (int j = std::max(i + 1, regime.hi[i]); j < hi_c; ++j)
            out.push_back({i, j, TransitionEvent::Kind::connect});
    }
    int hi_d = 0;
    for (int i = 0; i < n; ++i) {
        if (hi_d < i + 1) hi_d = i + 1;
        while (hi_d < n && x[hi_d] - x[i] < 1.0 + tol) ++hi_d;
        for (int j = std::max(i + 1, hi_d); j < regime.hi[i]; ++j)
            out.push_back({i, j, TransitionEvent::Kind::disconnect});
    }
    return out;
}

// Pairs with |gap - 1| <= tol.
std::vector<std::pair<int, int>> boundary_pairs(std::span<const double> x, double tol) {
    const int n = static_cast<int>(x.size());
    std::vector<std::pair<int, int>> out;
    int lo_hi = 0, hi_hi = 0;
    for (int i = 0; i < n; ++i) {
        if (lo_hi < i + 1) lo_hi = i + 1;
        while (lo_hi < n && x[lo_hi] - x[i] < 1.0 - tol) ++lo_hi;
        if (hi_hi < lo_hi) hi_hi = lo_hi;
        while (hi_hi < n && x[hi_hi] - x[i] <= 1.0 + tol) ++hi_hi;
        for (int j = lo_hi; j < hi_hi; ++j) out.emplace_back(i, j);
    }
    return out;
}

// Exact propagation of dx = -L x within one regime. L is similar to the
// symmetric PSD matrix D^(1/2) L D^(-1/2) (D = diag weights), so a single
// eigendecomposition yields the state at arbitrary lead times.
class ExpmFlow {
public:
    ExpmFlow(std::span<const double> x, std::span<const double> w, const InteractionGraph& g) {
        const int n = static_cast<int>(x.size());
        sqw_.resize(n);
        isqw_.resize(n);
        for (int i = 0; i < n; ++i) {
            sqw_[i] = std::sqrt(w[i]);
            isqw_[i] = 1.0 / sqw_[i];
        }
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            double diag = 0.0;
            for (int j = g.lo[i]; j < g.hi[i]; ++j) {
                if (j == i) continue;
                B(i, j) = -sqw_[i] * sqw_[j];
                diag += w[j];
            }
            B(i, i) = diag;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
        U_ = es.eigenvectors();
        lambda_ = es.eigenvalues().cwiseMax(0.0);
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = sqw_[i] * x[i];
        c_ = U_.transpose() * z;
    }

    void eval(double s, std::span<double> out) const {
        Eigen::VectorXd e = (-lambda_.array() * s).exp().matrix().cwiseProduct(c_);
        Eigen::VectorXd z = U_ * e;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = isqw_[i] * z(static_cast<int>(i));
    }

    double gap(double s, int i, int j) const {
        const int n = static_cast<int>(lambda_.size());
        double xi = 0.0, xj = 0.0;
        for (int k = 0; k < n; ++k) {
            const double ek = std::exp(-lambda_(k) * s) * c_(k);
            xi += U_(i, k) * ek;
            xj += U_(j, k) * ek;
        }
        return isqw_[j] * xj - isqw_[i] * xi;
    }

private:
    Eigen::MatrixXd U_;
    Eigen::VectorXd lambda_, c_;
    std::vector<double> sqw_, isqw_;
};

// First boundary touch of one pair inside a bracket. `target_off` is 0 for a
// clean crossing of gap = 1; for grazing re-entries (left endpoint already on
// the far side, within tolerance) the target is shifted by +-tol so the
// bracket has a sign change.
template <typename GapFn>
double bisect_gap(GapFn&& gap_of, double a, double b, double target_off, double tol) {
    double fa = gap_of(a) - 1.0 - target_off;
    double fb = gap_of(b) - 1.0 - target_off;
    if (std::abs(fa) <= tol * 0.25) return a;
    if (fa * fb > 0.0)
        throw BracketingFailure("event bracket lost its sign change while bisecting");
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = gap_of(m) - 1.0 - target_off;
        if (std::abs(fm) <= tol * 0.25 || (b - a) < 1e-300) return m;
        if ((fa < 0.0) == (fm < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

double grazing_offset(TransitionEvent::Kind kind, double g0_minus_1, double tol) {
    if (kind == TransitionEvent::Kind::connect && g0_minus_1 <= 0.0) return -tol;
    if (kind == TransitionEvent::Kind::disconnect && g0_minus_1 >= 0.0) return tol;
    return 0.0;
}

struct ScanResult {
    std::vector<double> x_end;
    double t_end = 0.0;
    bool crossed = false;  // t_end is an event time rather than the horizon
};

// Adaptive scanner over one frozen regime. Holds its stepper across sample
// boundaries; the owner resets it whenever the regime or the state changes.
class RkScanner {
public:
    RkScanner(const std::vector<double>* w, const InteractionGraph* regime,
              const SimOptions& opts)
        : w_(w), regime_(regime), opts_(opts) {
        detail::Dopri5::Options ropt;
        ropt.abs_tol = opts.rk_abs_tol;
        ropt.rel_tol = opts.rk_rel_tol;
        ropt.dt_max = 0.25;
        ropt.dt_initial = 1e-3;
        stepper_ = std::make_unique<detail::Dopri5>(
            [this](double, std::span<const double> y, std::span<double> dydt) {
                derivative_into(y, *w_, *regime_, dydt);
            },
            ropt);
    }

    void reset(const std::vector<double>& x, double t) {
        stepper_->initialize(x, t, dt_hint_);
        live_ = true;
    }

    bool live() const { return live_; }
    void invalidate() { live_ = false; }

    // During event storms a full error-controlled step overshoots hundreds
    // of crossings only to be bisected back; seeding the next step near the
    // observed inter-event spacing keeps the discarded work small.
    void hint_next_dt(double dt) { dt_hint_ = std::clamp(dt, 1e-9, 0.25); }

    // Advances to `target` or the first located crossing.
    ScanResult advance(double target) {
        ScanResult res;
        const double tol = opts_.event_tolerance;
        while (stepper_->t_curr() < target) {
            stepper_->step(target);
            dt_hint_ = stepper_->dt_suggest();
            auto cands = crossing_candidates(stepper_->y_curr(), *regime_, tol);
            double a = stepper_->t_prev(), b = stepper_->t_curr();
            if (cands.empty()) {
                // Midpoint guard against an excursion that returns within
                // one step.
                mid_.resize(stepper_->y_curr().size());
                const double m = 0.5 * (a + b);
                stepper_->dense_state(m, mid_);
                cands = crossing_candidates(mid_, *regime_, tol);
                if (cands.empty()) continue;
                b = m;
            }
            // Earliest crossing wins; a candidate still on its regime side
            // at the current best time cannot cross earlier and is skipped.
            double t_star = b;
            bool have = false;
            for (const auto& c : cands) {
                auto g = [&](double tt) {
                    return stepper_->dense_component(tt, c.j) -
                           stepper_->dense_component(tt, c.i);
                };
                const double fa = g(a) - 1.0;
                const double off = grazing_offset(c.kind, fa, tol);
                if (have) {
                    const double ft = g(t_star) - 1.0 - off;
                    if ((fa - off) * ft > 0.0) continue;
                }
                t_star = std::min(t_star, bisect_gap(g, a, have ? t_star : b, off, tol));
                have = true;
            }
            res.x_end.resize(stepper_->y_curr().size());
            stepper_->dense_state(t_star, res.x_end);
            res.t_end = t_star;
            res.crossed = true;
            live_ = false;  // regime is about to change
            return res;
        }
        res.x_end = stepper_->y_curr();
        res.t_end = stepper_->t_curr();
        return res;
    }

private:
    const std::vector<double>* w_;
    const InteractionGraph* regime_;
    SimOptions opts_;
    std::unique_ptr<detail::Dopri5> stepper_;
    std::vector<double> mid_;
    double dt_hint_ = 0.0;
    bool live_ = false;
};

// One-shot scan over a frozen regime with the exact spectral flow,
// bracketing on a fixed sub-step grid.
ScanResult scan_expm(std::span<const double> x, std::span<const double> w,
                     const InteractionGraph& regime, double t0, double horizon,
                     double total_weight, const SimOptions& opts) {
    ScanResult res;
    res.x_end.assign(x.begin(), x.end());
    const double tol = opts.event_tolerance;
    ExpmFlow flow(x, w, regime);
    const double substep = std::min(horizon, 0.25 / std::max(total_weight, 1e-30));
    std::vector<double> xs(x.size());
    double s = 0.0;
    while (s < horizon) {
        const double s_next = std::min(horizon, s + substep);
        flow.eval(s_next, xs);
        auto cands = crossing_candidates(xs, regime, tol);
        if (cands.empty()) {
            s = s_next;
            continue;
        }
        double s_star = s_next;
        for (const auto& c : cands) {
            auto g = [&](double ss) { return flow.gap(ss, c.i, c.j); };
            const double off = grazing_offset(c.kind, g(s) - 1.0, tol);
            s_star = std::min(s_star, bisect_gap(g, s, s_next, off, tol));
        }
        flow.eval(s_star, res.x_end);
        res.t_end = t0 + s_star;
        res.crossed = true;
        return res;
    }
    flow.eval(horizon, res.x_end);
    res.t_end = t0 + horizon;
    return res;
}

// Boundary pairs at the located time that are genuinely crossing: band pairs
// whose current relative velocity carries them across, plus any pair already
// pushed beyond the band (earliest-crossing batches).
std::vector<CandidatePair> collect_batch(std::span<const double> x, std::span<const double> w,
                                         const InteractionGraph& regime, const SimOptions& opts) {
    std::vector<double> d(x.size());
    derivative_into(x, w, regime, d);
    std::vector<CandidatePair> batch;
    for (auto [i, j] : boundary_pairs(x, opts.event_tolerance)) {
        const bool edge = regime.has_edge(i, j);
        const double rel = d[j] - d[i];  // gap velocity
        if (edge && rel > opts.degeneracy_tol)
            batch.push_back({i, j, TransitionEvent::Kind::disconnect});
        else if (!edge && rel < -opts.degeneracy_tol)
            batch.push_back({i, j, TransitionEvent::Kind::connect});
    }
    for (const auto& c : crossing_candidates(x, regime, opts.event_tolerance))
        batch.push_back(c);
    std::sort(batch.begin(), batch.end(), [](const CandidatePair& a, const CandidatePair& b) {
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    batch.erase(std::unique(batch.begin(), batch.end(),
                            [](const CandidatePair& a, const CandidatePair& b) {
                                return a.i == b.i && a.j == b.j;
                            }),
                batch.end());
    return batch;
}

void toggle_edge(InteractionGraph& g, int i, int j, TransitionEvent::Kind kind) {
    if (kind == TransitionEvent::Kind::connect) {
        // Crossings happen at window edges, so windows stay intervals.
        if (g.hi[i] == j) g.hi[i] = j + 1;
        if (g.lo[j] == i + 1) g.lo[j] = i;
    } else {
        if (g.hi[i] == j + 1) g.hi[i] = j;
        if (g.lo[j] == i) g.lo[j] = i + 1;
    }
}

class Engine {
public:
    Engine(const OpinionState& initial, const SimOptions& opts)
        : opts_(opts), x_(initial.opinions), w_(initial.weights), t_(initial.time) {
        n0_ = static_cast<int>(x_.size());
        owner_.resize(n0_);
        rep_.resize(n0_);
        for (int i = 0; i < n0_; ++i) owner_[i] = rep_[i] = i;
        total_weight_ = 0.0;
        for (double wi : w_) total_weight_ += wi;
        regime_ = build_graph(initial);
        zeno_limit_ = opts.max_transitions_per_unit_time > 0
                          ? opts.max_transitions_per_unit_time
                          : 4 * (static_cast<std::int64_t>(n0_) * n0_ +
                                 n0_ * static_cast<std::int64_t>(std::ceil(total_weight_)) + 100);
        integrator_ = opts.select_integrator(x_.size());
        if (integrator_ == IntegratorKind::adaptive_rk)
            scanner_ = std::make_unique<RkScanner>(&w_, &regime_, opts_);
    }

    Trajectory run() {
        if (!boundary_pairs(x_, opts_.event_tolerance).empty())
            throw InvalidArgument("initial condition is non-generic: a pair sits at the unit "
                                  "boundary within event_tolerance");
        Trajectory traj;
        const double interval =
            opts_.sample_interval > 0.0 ? opts_.sample_interval : opts_.max_time / 256.0;
        emit_sample(traj);
        double next_sample = t_ + interval;
        bool converged = merge_then_equilibrium();
        while (!converged && t_ < opts_.max_time) {
            const double target = std::min(next_sample, opts_.max_time);
            ScanResult res = advance(target);
            x_ = std::move(res.x_end);
            t_ = res.t_end;
            if (res.crossed) {
                apply_batch(traj);
                converged = merge_then_equilibrium();
                continue;
            }
            converged = merge_then_equilibrium();
            if (t_ >= next_sample - 1e-300) {
                emit_sample(traj);
                next_sample += interval;
            }
        }
        if (traj.samples.empty() || traj.samples.back().state.time < t_) emit_sample(traj);
        traj.terminal = current_state();
        traj.terminal_owner = owner_;
        traj.converged = converged;
        traj.transition_count = traj.events.size();
        return traj;
    }

private:
    OpinionState current_state() const {
        OpinionState s;
        s.opinions = x_;
        s.weights = w_;
        s.time = t_;
        return s;
    }

    void emit_sample(Trajectory& traj) { traj.samples.push_back({current_state(), owner_}); }

    ScanResult advance(double target) {
        if (integrator_ == IntegratorKind::exact_expm)
            return scan_expm(x_, w_, regime_, t_, target - t_, total_weight_, opts_);
        if (!scanner_->live()) scanner_->reset(x_, t_);
        return scanner_->advance(target);
    }

    void apply_batch(Trajectory& traj) {
        auto batch = collect_batch(x_, w_, regime_, opts_);
        const bool lenient = batch.size() > 1;
        bool any = false;
        for (const auto& c : batch) {
            if (toggle_checked(c.i, c.j, c.kind, lenient)) {
                TransitionEvent ev;
                ev.time = t_;
                ev.i = c.i;
                ev.j = c.j;
                ev.orig_i = rep_[c.i];
                ev.orig_j = rep_[c.j];
                ev.kind = c.kind;
                ev.boundary_gap = (x_[c.j] - x_[c.i]) - 1.0;
                traj.events.push_back(ev);
                note_transition(t_);
                any = true;
            }
        }
        if (!any)
            throw BracketingFailure("located event batch produced no applicable transition");
        if (scanner_) {
            scanner_->invalidate();
            if (last_event_time_ >= 0.0 && t_ > last_event_time_)
                scanner_->hint_next_dt(4.0 * (t_ - last_event_time_));
            last_event_time_ = t_;
        }
    }

    // Velocity-checked single-edge toggle; with `lenient` (simultaneous
    // batches) a pair whose re-evaluated velocity no longer supports the
    // crossing is skipped instead of raising.
    bool toggle_checked(int i, int j, TransitionEvent::Kind kind, bool lenient) {
        std::vector<double> d(x_.size());
        derivative_into(x_, w_, regime_, d);
        const double rel_old = d[j] - d[i];
        if (std::abs(rel_old) <= opts_.degeneracy_tol) {
            if (lenient) return false;
            throw ProblematicBoundary("degenerate boundary point: crossing pair has equal "
                                      "Laplacian rows within degeneracy_tol");
        }
        toggle_edge(regime_, i, j, kind);
        derivative_into(x_, w_, regime_, d);
        const double rel_new = d[j] - d[i];
        const bool away =
            kind == TransitionEvent::Kind::disconnect ? rel_new > 0.0 : rel_new < 0.0;
        if (!away) {
            toggle_edge(regime_, i, j,
                        kind == TransitionEvent::Kind::disconnect
                            ? TransitionEvent::Kind::connect
                            : TransitionEvent::Kind::disconnect);
            if (lenient) return false;
            throw ProblematicBoundary("post-transition velocity does not leave the boundary");
        }
        return true;
    }

    void note_transition(double time) {
        recent_events_.push_back(time);
        while (!recent_events_.empty() && recent_events_.front() < time - 1.0)
            recent_events_.pop_front();
        if (static_cast<std::int64_t>(recent_events_.size()) > zeno_limit_)
            throw ZenoGuardTripped("transition rate exceeded the Zeno guard (" +
                                   std::to_string(zeno_limit_) + " per unit time)");
    }

    bool merge_then_equilibrium() {
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            if (x_[i + 1] - x_[i] < opts_.cluster_merge_tol) {
                do_merge();
                break;
            }
        }
        // No interaction left and all survivors separated: residual
        // velocities are identically zero, the state is in F.
        if (regime_.edge_count() != 0) return false;
        const double slack = kEquilibriumGapSlackFactor * opts_.cluster_merge_tol;
        for (std::size_t i = 0; i + 1 < x_.size(); ++i)
            if (x_[i + 1] - x_[i] < 1.0 - slack) return false;
        return true;
    }

    void do_merge() {
        const int n = static_cast<int>(x_.size());
        std::vector<int> map(n);
        std::vector<double> nx, nw;
        std::vector<int> nrep;
        std::vector<int> run_first;
        int c = -1;
        for (int i = 0; i < n; ++i) {
            if (i == 0 || x_[i] - x_[i - 1] >= opts_.cluster_merge_tol) {
                ++c;
                run_first.push_back(i);
                nx.push_back(0.0);
                nw.push_back(0.0);
                nrep.push_back(rep_[i]);
            }
            map[i] = c;
            nw[c] += w_[i];
            nx[c] += w_[i] * x_[i];
        }
        const int m = c + 1;
        if (m == n) return;
        for (int k = 0; k < m; ++k) nx[k] /= nw[k];
        // Composites inherit the union of their members' windows, so pairs
        // inside the tolerance band keep their pre-merge status.
        InteractionGraph ng;
        ng.lo.resize(m);
        ng.hi.resize(m);
        for (int k = 0; k < m; ++k) {
            const int first = run_first[k];
            const int last = (k + 1 < m ? run_first[k + 1] : n) - 1;
            ng.lo[k] = map[regime_.lo[first]];
            ng.hi[k] = map[regime_.hi[last] - 1] + 1;
        }
        x_ = std::move(nx);
        w_ = std::move(nw);
        rep_ = std::move(nrep);
        regime_ = std::move(ng);
        for (int a = 0; a < n0_; ++a) owner_[a] = map[owner_[a]];
        if (scanner_) scanner_->invalidate();
    }

    SimOptions opts_;
    std::vector<double> x_, w_;
    double t_ = 0.0;
    double total_weight_ = 0.0;
    int n0_ = 0;
    std::vector<int> owner_, rep_;
    InteractionGraph regime_;
    IntegratorKind integrator_ = IntegratorKind::adaptive_rk;
    std::unique_ptr<RkScanner> scanner_;
    std::deque<double> recent_events_;
    double last_event_time_ = -1.0;
    std::int64_t zeno_limit_ = 0;
};

}  // namespace

void SimOptions::validate(std::size_t n) const {
    if (!(event_tolerance > 0.0) || !(equilibrium_velocity_tol > 0.0) ||
        !(cluster_merge_tol > 0.0) || !(degeneracy_tol > 0.0))
        throw InvalidArgument("tolerances must be positive");
    if (!(max_time > 0.0) || !std::isfinite(max_time))
        throw InvalidArgument("max_time must be positive and finite");
    if (sample_interval < 0.0) throw InvalidArgument("sample_interval must be nonnegative");
    if (integrator == IntegratorKind::exact_expm && static_cast<int>(n) > expm_max_n)
        throw InvalidArgument("exact-expm integrator is limited to n <= " +
                              std::to_string(expm_max_n));
}

IntegratorKind SimOptions::select_integrator(std::size_t n) const {
    if (integrator != IntegratorKind::automatic) return integrator;
    return static_cast<int>(n) <= expm_auto_max_n ? IntegratorKind::exact_expm
                                                  : IntegratorKind::adaptive_rk;
}

std::pair<OpinionState, std::optional<TransitionEvent>> integrate_segment(
    const OpinionState& state, const InteractionGraph& graph, double horizon,
    const SimOptions& opts) {
    if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
    state.validate();
    opts.validate(state.size());
    if (graph.n() != static_cast<int>(state.size()))
        throw InvalidArgument("graph size does not match state");
    const IntegratorKind kind = opts.select_integrator(state.size());
    ScanResult res;
    if (kind == IntegratorKind::exact_expm) {
        res = scan_expm(state.opinions, state.weights, graph, state.time, horizon,
                        state.total_weight(), opts);
    } else {
        RkScanner scanner(&state.weights, &graph, opts);
        scanner.reset(state.opinions, state.time);
        res = scanner.advance(state.time + horizon);
    }
    OpinionState out;
    out.opinions = std::move(res.x_end);
    out.weights = state.weights;
    out.time = res.t_end;
    if (!res.crossed) return {std::move(out), std::nullopt};
    auto batch = collect_batch(out.opinions, out.weights, graph, opts);
    if (batch.empty())
        throw BracketingFailure("crossing located but no boundary pair found");
    TransitionEvent ev;
    ev.time = res.t_end;
    ev.i = batch.front().i;
    ev.j = batch.front().j;
    ev.orig_i = ev.i;
    ev.orig_j = ev.j;
    ev.kind = batch.front().kind;
    ev.boundary_gap = (out.opinions[ev.j] - out.opinions[ev.i]) - 1.0;
    return {std::move(out), ev};
}

Trajectory simulate(const OpinionState& initial, const SimOptions& opts) {
    initial.validate();
    opts.validate(initial.size());
    try {
        Engine engine(initial, opts);
        return engine.run();
    } catch (const ProblematicBoundary&) {
        // Theorem on proper initial conditions: almost all are proper, so a
        // seeded relative jitter restores genericity. One retry, then raise.
        std::mt19937_64 rng(opts.jitter_seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> xs = initial.opinions;
        for (double& v : xs) v += opts.jitter_rel * std::max(1.0, std::abs(v)) * u(rng);
        OpinionState jittered = canonicalize(std::move(xs), initial.weights);
        Engine engine(jittered, opts);
        Trajectory traj = engine.run();
        traj.jitter_applied = true;
        return traj;
    }
}

OpinionState merge_coincident(const OpinionState& state, const SimOptions& opts,
                              std::vector<int>& index_map) {
    state.validate();
    const int n = static_cast<int>(state.size());
    index_map.assign(n, 0);
    OpinionState out;
    out.time = state.time;
    int c = -1;
    std::vector<double> wsum, wxsum;
    for (int i = 0; i < n; ++i) {
        if (i == 0 || state.opinions[i] - state.opinions[i - 1] >= opts.cluster_merge_tol) {
            ++c;
            wsum.push_back(0.0);
            wxsum.push_back(0.0);
        }
        index_map[i] = c;
        wsum[c] += state.weights[i];
        wxsum[c] += state.weights[i] * state.opinions[i];
    }
    for (int k = 0; k <= c; ++k) {
        out.opinions.push_back(wxsum[k] / wsum[k]);
        out.weights.push_back(wsum[k]);
    }
    return out;
}

OpinionState merge_coincident(const OpinionState& state, const SimOptions& opts) {
    std::vector<int> map;
    return merge_coincident(state, opts, map);
}

bool is_equilibrium(const OpinionState& state, const SimOptions& opts) {
    state.validate();
    OpinionState merged = merge_coincident(state, opts);
    const double slack = kEquilibriumGapSlackFactor * opts.cluster_merge_tol;
    for (std::size_t i = 0; i + 1 < merged.size(); ++i)
        if (merged.opinions[i + 1] - merged.opinions[i] < 1.0 - slack) return false;
    auto g = build_graph(merged);
    auto d = derivative(merged, g);
    for (double v : d)
        if (std::abs(v) >= opts.equilibrium_velocity_tol) return false;
    return true;
}

OpinionState add_perturbing_agent(const OpinionState& equilibrium, double delta, double x0,
                                  const SimOptions& opts) {
    if (!(delta > 0.0)) throw InvalidArgument("perturbing agent weight must be positive");
    if (!std::isfinite(x0)) throw InvalidArgument("perturbing agent opinion must be finite");
    if (!is_equilibrium(equilibrium, opts))
        throw InvalidArgument("input state is not an equilibrium");
    OpinionState out = equilibrium;
    auto pos = std::upper_bound(out.opinions.begin(), out.opinions.end(), x0);
    const auto idx = pos - out.opinions.begin();
    out.opinions.insert(pos, x0);
    out.weights.insert(out.weights.begin() + idx, delta);
    return out;
}

InteractionGraph apply_transition(const OpinionState& state, const InteractionGraph& graph,
                                  const TransitionEvent& event, const SimOptions& opts) {
    state.validate();
    if (graph.n() != static_cast<int>(state.size()))
        throw InvalidArgument("graph size does not match state");
    const int i = event.i, j = event.j;
    if (i < 0 || j <= i || j >= graph.n()) throw InvalidArgument("bad event pair");
    const double gap = state.opinions[j] - state.opinions[i];
    if (std::abs(gap - 1.0) > 10.0 * opts.event_tolerance)
        throw InvalidArgument("event pair is not at the unit boundary");
    const bool edge = graph.has_edge(i, j);
    if (event.kind == TransitionEvent::Kind::disconnect && !edge)
        throw InvalidArgument("disconnect event for a pair that is not an edge");
    if (event.kind == TransitionEvent::Kind::connect && edge)
        throw InvalidArgument("connect event for a pair that is already an edge");

    // The simulate loop batches simultaneous crossings; the standalone op
    // refuses them.
    for (auto [a, b] : boundary_pairs(state.opinions, opts.event_tolerance)) {
        if (a == i && b == j) continue;
        throw SimultaneousEvents("another pair sits at the boundary within event_tolerance");
    }

    auto d_old = derivative(state, graph);
    if (std::abs(d_old[j] - d_old[i]) <= opts.degeneracy_tol)
        throw ProblematicBoundary(
            "degenerate boundary point: (L x)_i == (L x)_j within degeneracy_tol");

    InteractionGraph out = graph;
    toggle_edge(out, i, j, event.kind);
    if (out.has_edge(i, j) == (event.kind == TransitionEvent::Kind::disconnect))
        throw InvalidArgument("event pair is not at a window edge of the graph");

    auto d_new = derivative(state, out);
    const double rel_new = d_new[j] - d_new[i];
    const bool away =
        event.kind == TransitionEvent::Kind::disconnect ? rel_new > 0.0 : rel_new < 0.0;
    if (!away)
        throw ProblematicBoundary(
            "post-transition relative velocity does not point away from the boundary");
    return out;
}

}  // namespace optk
