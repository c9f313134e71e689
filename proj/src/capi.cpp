#include "optk/capi.h"

#include <cstring>
#include <exception>
#include <string>

#include <json.hpp>

#include "optk/analysis.hpp"
#include "optk/bridge.hpp"
#include "optk/continuum.hpp"
#include "optk/core.hpp"
#include "optk/errors.hpp"
#include "optk/sim.hpp"

namespace {

thread_local std::string g_last_error;

optk_status status_of(const optk::Error& e) {
    using optk::ErrorCode;
    switch (e.code()) {
        case ErrorCode::ok: return OPTK_OK;
        case ErrorCode::invalid_argument: return OPTK_ERR_INVALID;
        case ErrorCode::zeno_guard: return OPTK_ERR_ZENO;
        case ErrorCode::problematic_boundary: return OPTK_ERR_BOUNDARY;
        case ErrorCode::simultaneous_events: return OPTK_ERR_SIMULTANEOUS;
        case ErrorCode::bracketing_failure: return OPTK_ERR_BRACKETING;
        case ErrorCode::contraction_violated: return OPTK_ERR_CONTRACTION;
        case ErrorCode::p_membership_violated: return OPTK_ERR_P_MEMBERSHIP;
        case ErrorCode::internal: return OPTK_ERR_INTERNAL;
    }
    return OPTK_ERR_INTERNAL;
}

template <typename Fn>
optk_status guarded(Fn&& fn) {
    try {
        fn();
        return OPTK_OK;
    } catch (const optk::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return OPTK_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return OPTK_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

optk::SimOptions convert(const optk_sim_options* o) {
    optk::SimOptions s;
    if (!o) return s;
    s.event_tolerance = o->event_tolerance;
    s.equilibrium_velocity_tol = o->equilibrium_velocity_tol;
    s.cluster_merge_tol = o->cluster_merge_tol;
    s.max_time = o->max_time;
    s.max_transitions_per_unit_time = o->max_transitions_per_unit_time;
    s.sample_interval = o->sample_interval;
    s.integrator = o->integrator == 1   ? optk::IntegratorKind::exact_expm
                   : o->integrator == 2 ? optk::IntegratorKind::adaptive_rk
                                        : optk::IntegratorKind::automatic;
    s.degeneracy_tol = o->degeneracy_tol;
    s.jitter_rel = o->jitter_rel;
    s.jitter_seed = o->jitter_seed;
    return s;
}

optk::ContinuumOptions convert(const optk_continuum_options* o) {
    optk::ContinuumOptions c;
    if (!o) return c;
    c.T = o->T;
    c.time_levels = o->time_levels;
    c.picard_tol = o->picard_tol;
    c.picard_max_iters = o->picard_max_iters;
    c.max_picard_segments = o->max_picard_segments;
    c.min_picard_segment = o->min_picard_segment;
    c.store_interval = o->store_interval;
    c.residual_tol = o->residual_tol;
    c.fixed_point_tol = o->fixed_point_tol;
    return c;
}

optk::DensitySpec convert(const optk_density* d) {
    optk::DensitySpec spec;
    if (!d) throw optk::InvalidArgument("null density");
    if (d->kind == 0) {
        spec.kind = optk::DensitySpec::Kind::uniform;
        spec.a = d->a;
        spec.b = d->b;
    } else {
        spec.kind = optk::DensitySpec::Kind::piecewise_constant;
        spec.breakpoints.assign(d->breakpoints, d->breakpoints + d->plateaus + 1);
        spec.levels.assign(d->levels, d->levels + d->plateaus);
    }
    return spec;
}

optk::OpinionFunction make_function(const double* knots, const double* values, int size) {
    if (!knots || !values || size < 2) throw optk::InvalidArgument("bad function buffers");
    optk::OpinionFunction f;
    f.knots.assign(knots, knots + size);
    f.values.assign(values, values + size);
    f.infer_slope_bounds();
    f.validate();
    return f;
}

}  // namespace

struct optk_sim {
    optk::Trajectory traj;
    optk::SimOptions opts;
};

struct optk_continuum {
    optk::ContinuumTrajectory traj;
};

extern "C" {

const char* optk_version(void) { return OPTK_VERSION_STRING; }

const char* optk_last_error(void) { return g_last_error.c_str(); }

void optk_string_free(char* s) { std::free(s); }

void optk_sim_options_init(optk_sim_options* o) {
    if (!o) return;
    optk::SimOptions d;
    o->event_tolerance = d.event_tolerance;
    o->equilibrium_velocity_tol = d.equilibrium_velocity_tol;
    o->cluster_merge_tol = d.cluster_merge_tol;
    o->max_time = d.max_time;
    o->max_transitions_per_unit_time = d.max_transitions_per_unit_time;
    o->sample_interval = d.sample_interval;
    o->integrator = 0;
    o->degeneracy_tol = d.degeneracy_tol;
    o->jitter_rel = d.jitter_rel;
    o->jitter_seed = d.jitter_seed;
}

optk_status optk_simulate(const double* opinions, const double* weights, int n,
                          const optk_sim_options* opts, optk_sim** out) {
    return guarded([&] {
        if (!opinions || n <= 0 || !out) throw optk::InvalidArgument("bad simulate arguments");
        std::vector<double> x(opinions, opinions + n);
        std::optional<std::vector<double>> w;
        if (weights) w = std::vector<double>(weights, weights + n);
        optk::OpinionState init = optk::canonicalize(std::move(x), std::move(w));
        auto sim = std::make_unique<optk_sim>();
        sim->opts = convert(opts);
        sim->traj = optk::simulate(init, sim->opts);
        *out = sim.release();
    });
}

int optk_sim_agent_count(const optk_sim* sim) {
    return sim ? static_cast<int>(sim->traj.samples.front().owner.size()) : 0;
}

int optk_sim_sample_count(const optk_sim* sim) {
    return sim ? static_cast<int>(sim->traj.samples.size()) : 0;
}

int optk_sim_sample_size(const optk_sim* sim, int k) {
    if (!sim || k < 0 || k >= static_cast<int>(sim->traj.samples.size())) return -1;
    return static_cast<int>(sim->traj.samples[k].state.size());
}

optk_status optk_sim_sample(const optk_sim* sim, int k, double* time, double* opinions,
                            double* weights) {
    return guarded([&] {
        if (!sim || k < 0 || k >= static_cast<int>(sim->traj.samples.size()))
            throw optk::InvalidArgument("bad sample index");
        const auto& s = sim->traj.samples[k].state;
        if (time) *time = s.time;
        if (opinions) std::copy(s.opinions.begin(), s.opinions.end(), opinions);
        if (weights) std::copy(s.weights.begin(), s.weights.end(), weights);
    });
}

optk_status optk_sim_sample_expanded(const optk_sim* sim, int k, double* time,
                                     double* opinions) {
    return guarded([&] {
        if (!sim || k < 0 || k >= static_cast<int>(sim->traj.samples.size()))
            throw optk::InvalidArgument("bad sample index");
        const auto& sample = sim->traj.samples[k];
        if (time) *time = sample.state.time;
        if (opinions)
            for (std::size_t a = 0; a < sample.owner.size(); ++a)
                opinions[a] = sample.state.opinions[sample.owner[a]];
    });
}

int optk_sim_event_count(const optk_sim* sim) {
    return sim ? static_cast<int>(sim->traj.events.size()) : 0;
}

optk_status optk_sim_event(const optk_sim* sim, int k, double* time, int* i, int* j, int* kind,
                           double* boundary_gap) {
    return guarded([&] {
        if (!sim || k < 0 || k >= static_cast<int>(sim->traj.events.size()))
            throw optk::InvalidArgument("bad event index");
        const auto& e = sim->traj.events[k];
        if (time) *time = e.time;
        if (i) *i = e.orig_i;
        if (j) *j = e.orig_j;
        if (kind) *kind = e.kind == optk::TransitionEvent::Kind::connect ? 0 : 1;
        if (boundary_gap) *boundary_gap = e.boundary_gap;
    });
}

int optk_sim_terminal_size(const optk_sim* sim) {
    return sim ? static_cast<int>(sim->traj.terminal.size()) : -1;
}

optk_status optk_sim_terminal(const optk_sim* sim, double* time, double* opinions,
                              double* weights) {
    return guarded([&] {
        if (!sim) throw optk::InvalidArgument("null handle");
        const auto& s = sim->traj.terminal;
        if (time) *time = s.time;
        if (opinions) std::copy(s.opinions.begin(), s.opinions.end(), opinions);
        if (weights) std::copy(s.weights.begin(), s.weights.end(), weights);
    });
}

int optk_sim_converged(const optk_sim* sim) { return sim && sim->traj.converged ? 1 : 0; }

optk_status optk_sim_cluster_report_json(const optk_sim* sim, double tol, double margin,
                                         char** json_out) {
    return guarded([&] {
        if (!sim || !json_out) throw optk::InvalidArgument("null argument");
        auto report = optk::extract_clusters(sim->traj.terminal, tol);
        optk::classify_report(report, margin);
        *json_out = dup_string(report.to_json());
    });
}

optk_status optk_sim_audit_json(const optk_sim* sim, char** json_out) {
    return guarded([&] {
        if (!sim || !json_out) throw optk::InvalidArgument("null argument");
        *json_out = dup_string(optk::audit(sim->traj, sim->opts).to_json());
    });
}

void optk_sim_free(optk_sim* sim) { delete sim; }

optk_status optk_stability_threshold(double wa, double wb, double* d) {
    return guarded([&] {
        if (!d) throw optk::InvalidArgument("null output");
        *d = optk::stability_threshold(wa, wb);
    });
}

optk_status optk_classify_pair(double pos_a, double w_a, double pos_b, double w_b,
                               double margin, int* cls) {
    return guarded([&] {
        if (!cls) throw optk::InvalidArgument("null output");
        optk::Cluster a{pos_a, w_a, 0, 0}, b{pos_b, w_b, 0, 0};
        *cls = static_cast<int>(optk::classify_pair(a, b, margin));
    });
}

optk_status optk_probe_stability(const double* positions, const double* weights, int n,
                                 double delta, const optk_sim_options* opts,
                                 double* max_displacement, int* merged) {
    return guarded([&] {
        if (!positions || !weights || n <= 0) throw optk::InvalidArgument("bad cluster buffers");
        optk::OpinionState eq =
            optk::canonicalize(std::vector<double>(positions, positions + n),
                               std::vector<double>(weights, weights + n));
        auto res = optk::probe_stability(eq, delta, convert(opts));
        if (max_displacement) *max_displacement = res.max_displacement;
        if (merged) *merged = res.merged ? 1 : 0;
    });
}

void optk_continuum_options_init(optk_continuum_options* o) {
    if (!o) return;
    optk::ContinuumOptions d;
    o->T = d.T;
    o->time_levels = d.time_levels;
    o->picard_tol = d.picard_tol;
    o->picard_max_iters = d.picard_max_iters;
    o->max_picard_segments = d.max_picard_segments;
    o->min_picard_segment = d.min_picard_segment;
    o->store_interval = d.store_interval;
    o->residual_tol = d.residual_tol;
    o->fixed_point_tol = d.fixed_point_tol;
}

optk_status optk_solve_continuum(const double* knots, const double* values, int size,
                                 const optk_continuum_options* opts, optk_continuum** out) {
    return guarded([&] {
        if (!out) throw optk::InvalidArgument("null output");
        auto f = make_function(knots, values, size);
        auto handle = std::make_unique<optk_continuum>();
        handle->traj = optk::solve_continuum(f, convert(opts));
        *out = handle.release();
    });
}

int optk_continuum_time_count(const optk_continuum* c) {
    return c ? static_cast<int>(c->traj.times.size()) : 0;
}

int optk_continuum_knot_count(const optk_continuum* c) {
    return c ? static_cast<int>(c->traj.knots.size()) : 0;
}

optk_status optk_continuum_knots(const optk_continuum* c, double* knots) {
    return guarded([&] {
        if (!c || !knots) throw optk::InvalidArgument("null argument");
        std::copy(c->traj.knots.begin(), c->traj.knots.end(), knots);
    });
}

optk_status optk_continuum_state(const optk_continuum* c, int k, double* time, double* values) {
    return guarded([&] {
        if (!c || k < 0 || k >= static_cast<int>(c->traj.times.size()))
            throw optk::InvalidArgument("bad state index");
        if (time) *time = c->traj.times[k];
        if (values)
            std::copy(c->traj.states[k].begin(), c->traj.states[k].end(), values);
    });
}

optk_status optk_continuum_certified_bounds(const optk_continuum* c, int k, double* lower,
                                            double* upper) {
    return guarded([&] {
        if (!c || k < 0 || k >= static_cast<int>(c->traj.certified_bounds.size()))
            throw optk::InvalidArgument("bad state index");
        if (lower) *lower = c->traj.certified_bounds[k].first;
        if (upper) *upper = c->traj.certified_bounds[k].second;
    });
}

int optk_continuum_segment_count(const optk_continuum* c) {
    return c ? static_cast<int>(c->traj.segment_boundaries.size()) : 0;
}

optk_status optk_continuum_segment(const optk_continuum* c, int k, double* t_end,
                                   double* contraction_factor) {
    return guarded([&] {
        if (!c || k < 0 || k >= static_cast<int>(c->traj.segment_boundaries.size()))
            throw optk::InvalidArgument("bad segment index");
        if (t_end) *t_end = c->traj.segment_boundaries[k];
        if (contraction_factor) *contraction_factor = c->traj.contraction_factors[k];
    });
}

double optk_continuum_picard_end_time(const optk_continuum* c) {
    return c ? c->traj.picard_end_time : 0.0;
}

double optk_continuum_final_residual(const optk_continuum* c) {
    return c ? c->traj.final_residual : 0.0;
}

int optk_continuum_residual_converged(const optk_continuum* c) {
    return c && c->traj.residual_converged ? 1 : 0;
}

optk_status optk_continuum_fixed_point_json(const optk_continuum* c, double tol,
                                            char** json_out) {
    return guarded([&] {
        if (!c || !json_out) throw optk::InvalidArgument("null argument");
        auto f = c->traj.state_at(c->traj.size() - 1);
        *json_out = dup_string(optk::check_fixed_point(f, tol).to_json());
    });
}

optk_status optk_continuum_cluster_report_json(const optk_continuum* c, double plateau_tol,
                                               char** json_out) {
    return guarded([&] {
        if (!c || !json_out) throw optk::InvalidArgument("null argument");
        auto f = c->traj.state_at(c->traj.size() - 1);
        *json_out = dup_string(optk::extract_continuum_clusters(f, plateau_tol).to_json());
    });
}

void optk_continuum_free(optk_continuum* c) { delete c; }

optk_status optk_operator_apply(const double* knots, const double* values, int size,
                                double* rates_out) {
    return guarded([&] {
        if (!rates_out) throw optk::InvalidArgument("null output");
        auto f = make_function(knots, values, size);
        auto rates = optk::operator_L(f);
        std::copy(rates.begin(), rates.end(), rates_out);
    });
}

optk_status optk_choose_segment(double m, double M, double* t1) {
    return guarded([&] {
        if (!t1) throw optk::InvalidArgument("null output");
        *t1 = optk::choose_segment(m, M);
    });
}

optk_status optk_sample_continuum(const double* knots, const double* values, int size, int n,
                                  double* opinions_out) {
    return guarded([&] {
        if (!opinions_out) throw optk::InvalidArgument("null output");
        auto f = make_function(knots, values, size);
        auto xi = optk::sample_continuum(f, n);
        std::copy(xi.opinions.begin(), xi.opinions.end(), opinions_out);
    });
}

optk_status optk_approximation_error_json(const double* knots, const double* values, int size,
                                          const int* ns, int ns_count, double T,
                                          char** json_out) {
    return guarded([&] {
        if (!json_out || !ns || ns_count <= 0) throw optk::InvalidArgument("null argument");
        auto f = make_function(knots, values, size);
        nlohmann::ordered_json j;
        j["T"] = T;
        j["n"] = nlohmann::ordered_json::array();
        j["times"] = nlohmann::ordered_json::array();
        j["errors"] = nlohmann::ordered_json::array();
        j["max"] = nlohmann::ordered_json::array();
        j["initial"] = nlohmann::ordered_json::array();
        j["bound"] = nlohmann::ordered_json::array();
        for (int k = 0; k < ns_count; ++k) {
            auto res = optk::approximation_error(f, ns[k], T);
            j["n"].push_back(ns[k]);
            if (k == 0) j["times"] = res.times;
            j["errors"].push_back(res.errors);
            j["max"].push_back(res.max_error);
            j["initial"].push_back(res.initial_error);
            j["bound"].push_back(res.analytic_bound);
        }
        *json_out = dup_string(j.dump(2));
    });
}

optk_status optk_monte_carlo(const optk_density* density, const int* ns, int ns_count,
                             int trials, uint64_t seed, int threads, char** report_json_out,
                             char** trials_csv_out) {
    return guarded([&] {
        if (!ns || ns_count <= 0) throw optk::InvalidArgument("null argument");
        optk::DensitySpec spec = convert(density);
        optk::MonteCarloOptions mopts;
        mopts.seed = seed;
        mopts.threads = threads;
        auto report = optk::monte_carlo_conjecture(
            spec, std::vector<int>(ns, ns + ns_count), trials, mopts);
        if (report_json_out) *report_json_out = dup_string(report.to_json());
        if (trials_csv_out) *trials_csv_out = dup_string(report.to_csv());
    });
}

}  // extern "C"
