#include <doctest.h>

#include <cmath>

#include "optk/bridge.hpp"

using namespace optk;

namespace {

OpinionState state_of(std::vector<double> xs, std::vector<double> ws = {}) {
    OpinionState s;
    s.opinions = std::move(xs);
    s.weights = ws.empty() ? std::vector<double>(s.opinions.size(), 1.0) : std::move(ws);
    return s;
}

}  // namespace

TEST_CASE("embed_discrete builds equal-width plateaus for unit weights") {
    auto s = embed_discrete(state_of({0.0, 1.0}));
    CHECK(s.breakpoints == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(s.levels == std::vector<double>{0.0, 1.0});
    CHECK(s(0.25) == 0.0);
    CHECK(s(0.5) == 1.0);
    CHECK(s(1.0) == 1.0);

    auto single = embed_discrete(state_of({2.0}));
    CHECK(single.levels == std::vector<double>{2.0});

    auto weighted = embed_discrete(state_of({0.0, 1.0}, {1.0, 3.0}));
    CHECK(weighted.breakpoints[1] == doctest::Approx(0.25));
}

TEST_CASE("step rates equal the width-weighted discrete derivative") {
    auto xi = state_of({0.0, 0.3, 0.9, 2.5});
    auto rates = operator_L_step(embed_discrete(xi));
    // Unit weights, total 4: widths 1/4 each, so rates are the unweighted
    // discrete sums divided by 4.
    auto g = build_graph(xi);
    auto d = derivative(xi, g);
    REQUIRE(rates.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        CHECK(rates[i] == doctest::Approx(d[i] / 4.0).epsilon(1e-12));
}

TEST_CASE("sample_continuum evaluates at i/n with weights 1/n") {
    auto f = OpinionFunction::linear(0.0, 1.0, 64);
    auto xi = sample_continuum(f, 4);
    CHECK(xi.opinions == std::vector<double>{0.25, 0.5, 0.75, 1.0});
    CHECK(xi.weights == std::vector<double>(4, 0.25));
    CHECK_THROWS_AS(sample_continuum(f, 0), InvalidArgument);
}

TEST_CASE("embedding error is bounded by M/n and halves with n") {
    auto f = OpinionFunction::linear(0.0, 10.0, 512);
    double prev = 1e300;
    for (int n : {50, 100, 200}) {
        auto xi = sample_continuum(f, n);
        const double err = sup_distance(embed_discrete(xi), f);
        CHECK(err <= 10.0 / n + 1e-12);
        CHECK(err == doctest::Approx(10.0 / n).epsilon(1e-9));
        CHECK(err <= prev / 1.9);
        prev = err;
    }
}

TEST_CASE("density quantiles") {
    DensitySpec u;
    u.kind = DensitySpec::Kind::uniform;
    u.a = 0.0;
    u.b = 10.0;
    u.validate();
    CHECK(u.quantile(0.25) == 2.5);
    CHECK(u.support_diameter() == 10.0);

    DensitySpec p;
    p.kind = DensitySpec::Kind::piecewise_constant;
    p.breakpoints = {0.0, 1.0, 2.0};
    p.levels = {3.0, 1.0};
    p.validate();
    // Total mass 4: three quarters in the first plateau.
    CHECK(p.quantile(0.75) == doctest::Approx(1.0));
    CHECK(p.quantile(0.375) == doctest::Approx(0.5));

    DensitySpec bad = p;
    bad.levels = {3.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("approximation_error: ladder shrinks and starts at the embedding error") {
    auto f = OpinionFunction::linear(0.0, 10.0, 256);
    BridgeOptions opts;
    opts.check_points = 5;
    double prev = 1e300;
    for (int n : {25, 50, 100}) {
        auto res = approximation_error(f, n, 0.2, opts);
        CHECK(res.initial_error == doctest::Approx(10.0 / n).epsilon(1e-6));
        CHECK(res.max_error <= res.analytic_bound + 1e-6);
        CHECK(res.max_error <= prev * 1.05);
        prev = res.max_error;
    }
}

TEST_CASE("monte carlo: connected narrow support is always one stable cluster") {
    DensitySpec u;
    u.kind = DensitySpec::Kind::uniform;
    u.a = 0.0;
    u.b = 0.5;
    MonteCarloOptions opts;
    opts.seed = 99;
    opts.threads = 2;
    auto report = monte_carlo_conjecture(u, {20, 40}, 6, opts);
    REQUIRE(report.rows.size() == 2);
    for (const auto& row : report.rows) {
        CHECK(row.stable == row.trials);
        CHECK(row.mean_clusters == doctest::Approx(1.0));
    }
    // Deterministic given the seed.
    auto again = monte_carlo_conjecture(u, {20, 40}, 6, opts);
    CHECK(report.to_json() == again.to_json());
    CHECK(report.to_csv() == again.to_csv());
}
