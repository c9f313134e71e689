#include <doctest.h>

#include <cmath>
#include <random>

#include "optk/analysis.hpp"
#include "optk/sim.hpp"

using namespace optk;

namespace {

OpinionState state_of(std::vector<double> xs, std::vector<double> ws = {}) {
    OpinionState s;
    s.opinions = std::move(xs);
    s.weights = ws.empty() ? std::vector<double>(s.opinions.size(), 1.0) : std::move(ws);
    return s;
}

}  // namespace

TEST_CASE("integrate_segment: two connected agents contract exponentially") {
    for (auto kind : {IntegratorKind::exact_expm, IntegratorKind::adaptive_rk}) {
        SimOptions opts;
        opts.integrator = kind;
        auto s = state_of({-0.25, 0.25});
        auto [end, ev] = integrate_segment(s, build_graph(s), 1.0, opts);
        CHECK(!ev.has_value());
        const double gap = end.opinions[1] - end.opinions[0];
        CHECK(gap == doctest::Approx(0.5 * std::exp(-2.0)).epsilon(1e-9));
        CHECK(end.time == doctest::Approx(1.0));
    }
}

TEST_CASE("integrate_segment: symmetric triple connects the outer pair at ln 1.8") {
    for (auto kind : {IntegratorKind::exact_expm, IntegratorKind::adaptive_rk}) {
        SimOptions opts;
        opts.integrator = kind;
        auto s = state_of({0.0, 0.9, 1.8});
        auto [end, ev] = integrate_segment(s, build_graph(s), 5.0, opts);
        REQUIRE(ev.has_value());
        CHECK(ev->i == 0);
        CHECK(ev->j == 2);
        CHECK(ev->kind == TransitionEvent::Kind::connect);
        CHECK(std::abs(ev->boundary_gap) <= opts.event_tolerance);
        CHECK(ev->time == doctest::Approx(std::log(1.8)).epsilon(1e-8));
        CHECK(std::abs((end.opinions[2] - end.opinions[0]) - 1.0) <= opts.event_tolerance);
    }
}

TEST_CASE("integrate_segment: disconnected equilibrium never fires") {
    SimOptions opts;
    auto s = state_of({0.0, 1.5});
    auto [end, ev] = integrate_segment(s, build_graph(s), 100.0, opts);
    CHECK(!ev.has_value());
    CHECK(end.opinions[0] == doctest::Approx(0.0));
    CHECK(end.opinions[1] == doctest::Approx(1.5));
    CHECK_THROWS_AS(integrate_segment(s, build_graph(s), 0.0, opts), InvalidArgument);
}

TEST_CASE("apply_transition enforces the exit-velocity identity") {
    // Heavy flank agents drag the middle pair apart through the boundary.
    auto s = state_of({-0.9, 0.0, 1.0 + 1e-13, 1.9 + 1e-13}, {3.0, 1.0, 1.0, 3.0});
    InteractionGraph g;
    g.lo = {0, 0, 1, 2};
    g.hi = {2, 3, 4, 4};  // edges (0,1), (1,2), (2,3); pair (1,2) at the boundary
    SimOptions opts;

    auto d_old = derivative(s, g);
    const double rel_old = d_old[2] - d_old[1];
    CHECK(rel_old > 0.0);

    TransitionEvent ev;
    ev.i = 1;
    ev.j = 2;
    ev.kind = TransitionEvent::Kind::disconnect;
    auto g2 = apply_transition(s, g, ev, opts);
    CHECK(!g2.has_edge(1, 2));

    auto d_new = derivative(s, g2);
    const double rel_new = d_new[2] - d_new[1];
    // Removing the edge adds (w_i + w_j) * gap to the relative velocity.
    CHECK(rel_new == doctest::Approx(rel_old + 2.0).epsilon(1e-9));
    CHECK(rel_new > 0.0);
}

TEST_CASE("apply_transition rejects degenerate and simultaneous boundaries") {
    SimOptions opts;
    // Two isolated agents exactly at unit distance: equal Laplacian rows.
    auto s = state_of({0.0, 1.0 + 1e-13});
    InteractionGraph g;
    g.lo = {0, 1};
    g.hi = {1, 2};  // disconnected
    TransitionEvent ev;
    ev.i = 0;
    ev.j = 1;
    ev.kind = TransitionEvent::Kind::connect;
    CHECK_THROWS_AS(apply_transition(s, g, ev, opts), ProblematicBoundary);

    // Two pairs at the boundary at once.
    auto s2 = state_of({0.0, 1.0 + 1e-12, 2.0 + 2e-12});
    InteractionGraph g2;
    g2.lo = {0, 1, 2};
    g2.hi = {1, 2, 3};
    CHECK_THROWS_AS(apply_transition(s2, g2, ev, opts), SimultaneousEvents);
}

TEST_CASE("merge_coincident collapses to the weighted mean") {
    SimOptions opts;
    auto a = merge_coincident(state_of({1.0, 1.0 + 1e-12}), opts);
    CHECK(a.size() == 1);
    CHECK(a.opinions[0] == doctest::Approx(1.0 + 5e-13).epsilon(1e-15));
    CHECK(a.weights[0] == 2.0);

    auto b = merge_coincident(state_of({0.0, 1.0, 2.0}), opts);
    CHECK(b.size() == 3);

    auto c = merge_coincident(state_of({0.0, 1e-9, 5.0}, {1.0, 3.0, 1.0}), opts);
    CHECK(c.size() == 2);
    CHECK(c.opinions[0] == doctest::Approx(7.5e-10).epsilon(1e-12));
    CHECK(c.weights[0] == 4.0);
    // Weighted mean is preserved.
    CHECK(c.weighted_mean() == doctest::Approx(state_of({0.0, 1e-9, 5.0}, {1.0, 3.0, 1.0})
                                                   .weighted_mean())
                                   .epsilon(1e-15));
}

TEST_CASE("simulate: two-agent consensus and immediate equilibrium") {
    SimOptions opts;
    opts.max_time = 30.0;
    auto traj = simulate(state_of({-0.25, 0.25}), opts);
    CHECK(traj.converged);
    CHECK(traj.terminal.size() == 1);
    CHECK(traj.terminal.opinions[0] == doctest::Approx(0.0).epsilon(1e-10));

    auto eq = simulate(state_of({0.0, 1.5}), opts);
    CHECK(eq.converged);
    CHECK(eq.events.empty());
    CHECK(eq.terminal.opinions == std::vector<double>{0.0, 1.5});
}

TEST_CASE("simulate rejects a pair at the exact unit boundary") {
    SimOptions opts;
    CHECK_THROWS_AS(simulate(state_of({0.0, 1.0}), opts), InvalidArgument);
}

TEST_CASE("simulate logs the ln 1.8 connect event and reaches consensus") {
    SimOptions opts;
    opts.max_time = 40.0;
    auto traj = simulate(state_of({0.0, 0.9, 1.8}), opts);
    CHECK(traj.converged);
    REQUIRE(!traj.events.empty());
    CHECK(traj.events[0].kind == TransitionEvent::Kind::connect);
    CHECK(traj.events[0].time == doctest::Approx(std::log(1.8)).epsilon(1e-8));
    CHECK(traj.terminal.size() == 1);
    CHECK(traj.terminal.opinions[0] == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("zeno guard trips when configured too tight") {
    SimOptions opts;
    opts.max_time = 50.0;
    opts.max_transitions_per_unit_time = 1;
    CHECK_THROWS_AS(simulate(state_of({0.0, 0.6, 1.2, 1.8, 2.4}), opts), ZenoGuardTripped);
}

TEST_CASE("integrators agree on terminal clusters for random instances") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> xd(0.0, 6.0);
    std::uniform_int_distribution<int> nd(2, 50);
    for (int rep = 0; rep < 8; ++rep) {
        std::vector<double> xs(nd(rng));
        for (double& x : xs) x = xd(rng);
        auto init = canonicalize(xs);
        SimOptions a;
        a.max_time = 60.0;
        a.integrator = IntegratorKind::exact_expm;
        SimOptions b = a;
        b.integrator = IntegratorKind::adaptive_rk;
        auto ta = simulate(init, a);
        auto tb = simulate(init, b);
        REQUIRE(ta.converged);
        REQUIRE(tb.converged);
        auto ca = extract_clusters(ta.terminal, 1e-6);
        auto cb = extract_clusters(tb.terminal, 1e-6);
        REQUIRE(ca.clusters.size() == cb.clusters.size());
        for (std::size_t k = 0; k < ca.clusters.size(); ++k) {
            CHECK(ca.clusters[k].position ==
                  doctest::Approx(cb.clusters[k].position).epsilon(1e-6));
            CHECK(ca.clusters[k].weight == doctest::Approx(cb.clusters[k].weight));
        }
    }
}

TEST_CASE("order, average and variance invariants on random runs") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> xd(0.0, 8.0), wd(0.2, 2.0);
    for (int rep = 0; rep < 6; ++rep) {
        std::vector<double> xs(40), ws(40);
        for (double& x : xs) x = xd(rng);
        for (double& w : ws) w = wd(rng);
        auto init = canonicalize(xs, ws);
        SimOptions opts;
        opts.max_time = 20.0;
        opts.sample_interval = 0.05;
        auto traj = simulate(init, opts);
        auto rec = audit(traj, opts);
        CHECK(rec.average_drift_rel <= 1e-9);
        CHECK(rec.max_variance_increase <= 1e-10);
        CHECK(rec.order_violations == 0);
        CHECK(rec.min_gap_bound_ratio >= 1.0 - 1e-6);
    }
}

TEST_CASE("add_perturbing_agent validates its inputs") {
    SimOptions opts;
    auto eq = state_of({0.0, 1.5});
    auto probed = add_perturbing_agent(eq, 0.01, 0.75, opts);
    CHECK(probed.size() == 3);
    CHECK(probed.opinions[1] == 0.75);
    CHECK(probed.weights[1] == 0.01);

    CHECK_THROWS_AS(add_perturbing_agent(eq, 0.0, 0.75, opts), InvalidArgument);
    CHECK_THROWS_AS(add_perturbing_agent(state_of({0.0, 0.5}), 0.01, 0.2, opts),
                    InvalidArgument);
}

TEST_CASE("decoupled blocks never reconnect") {
    // Two blocks whose adjacent gap exceeds 1 at a sample stay decoupled.
    SimOptions opts;
    opts.max_time = 30.0;
    opts.sample_interval = 0.02;
    auto traj = simulate(state_of({0.0, 0.4, 1.9, 2.3}), opts);
    CHECK(traj.converged);
    bool separated = false;
    for (const auto& sample : traj.samples) {
        const auto& x = sample.state.opinions;
        if (sample.state.size() < 2) continue;
        double mid_gap = 1e300;
        // Track the block boundary via the owner of agents 1 and 2.
        const int a = sample.owner[1], b = sample.owner[2];
        if (a != b) mid_gap = x[b] - x[a];
        if (separated) CHECK(mid_gap >= 1.0);
        if (mid_gap >= 1.0) separated = true;
    }
    CHECK(traj.terminal.size() == 2);
}
