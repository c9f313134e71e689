#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "optk/capi.h"

TEST_CASE("version and error strings") {
    CHECK(std::string(optk_version()) == OPTK_VERSION_STRING);
    CHECK(optk_last_error() != nullptr);
}

TEST_CASE("simulate through the C surface") {
    optk_sim_options opts;
    optk_sim_options_init(&opts);
    opts.max_time = 30.0;
    opts.sample_interval = 0.5;

    const double xs[] = {-0.25, 0.25};
    optk_sim* sim = nullptr;
    REQUIRE(optk_simulate(xs, nullptr, 2, &opts, &sim) == OPTK_OK);
    REQUIRE(sim != nullptr);
    CHECK(optk_sim_agent_count(sim) == 2);
    CHECK(optk_sim_converged(sim) == 1);

    const int ts = optk_sim_terminal_size(sim);
    REQUIRE(ts == 1);
    double t = 0, x = 0, w = 0;
    CHECK(optk_sim_terminal(sim, &t, &x, &w) == OPTK_OK);
    CHECK(x == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(w == 2.0);

    // Expanded samples keep one column per original agent.
    const int sc = optk_sim_sample_count(sim);
    REQUIRE(sc >= 2);
    std::vector<double> row(2);
    double st = 0;
    CHECK(optk_sim_sample_expanded(sim, sc - 1, &st, row.data()) == OPTK_OK);
    CHECK(row[0] == row[1]);

    char* json = nullptr;
    REQUIRE(optk_sim_cluster_report_json(sim, 1e-6, 1e-9, &json) == OPTK_OK);
    CHECK(std::string(json).find("clusters") != std::string::npos);
    optk_string_free(json);

    json = nullptr;
    REQUIRE(optk_sim_audit_json(sim, &json) == OPTK_OK);
    CHECK(std::string(json).find("average_drift_rel") != std::string::npos);
    optk_string_free(json);

    optk_sim_free(sim);
}

TEST_CASE("invalid input surfaces an error code and message") {
    optk_sim* sim = nullptr;
    const double xs[] = {0.0, 1.0};  // pair exactly at the boundary
    CHECK(optk_simulate(xs, nullptr, 2, nullptr, &sim) == OPTK_ERR_INVALID);
    CHECK(sim == nullptr);
    CHECK(std::strlen(optk_last_error()) > 0);
}

TEST_CASE("analysis helpers") {
    double d = 0;
    REQUIRE(optk_stability_threshold(1.0, 3.0, &d) == OPTK_OK);
    CHECK(d == doctest::Approx(4.0 / 3.0));
    CHECK(optk_stability_threshold(-1.0, 3.0, &d) == OPTK_ERR_INVALID);

    int cls = -1;
    REQUIRE(optk_classify_pair(0.0, 1.0, 2.2, 1.0, 1e-9, &cls) == OPTK_OK);
    CHECK(cls == 0);
    REQUIRE(optk_classify_pair(0.0, 1.0, 1.5, 1.0, 1e-9, &cls) == OPTK_OK);
    CHECK(cls == 1);
    REQUIRE(optk_classify_pair(0.0, 1.0, 2.0, 1.0, 1e-9, &cls) == OPTK_OK);
    CHECK(cls == 2);
}

TEST_CASE("continuum through the C surface") {
    const int K = 128;
    std::vector<double> knots(K + 1), values(K + 1);
    for (int k = 0; k <= K; ++k) {
        knots[k] = static_cast<double>(k) / K;
        values[k] = 10.0 * knots[k];
    }

    double t1 = 0;
    REQUIRE(optk_choose_segment(10.0, 10.0, &t1) == OPTK_OK);
    CHECK(t1 == doctest::Approx(5.0 / 36.0));

    std::vector<double> rates(K + 1);
    REQUIRE(optk_operator_apply(knots.data(), values.data(), K + 1, rates.data()) == OPTK_OK);
    CHECK(rates[K / 2] == doctest::Approx(0.0).epsilon(1e-10));

    optk_continuum_options copts;
    optk_continuum_options_init(&copts);
    copts.T = 0.5;
    copts.store_interval = 0.1;
    optk_continuum* c = nullptr;
    REQUIRE(optk_solve_continuum(knots.data(), values.data(), K + 1, &copts, &c) == OPTK_OK);
    REQUIRE(c != nullptr);
    CHECK(optk_continuum_knot_count(c) == K + 1);
    const int tc = optk_continuum_time_count(c);
    REQUIRE(tc >= 3);
    double tt = -1;
    std::vector<double> state(K + 1);
    REQUIRE(optk_continuum_state(c, tc - 1, &tt, state.data()) == OPTK_OK);
    CHECK(tt == doctest::Approx(0.5));
    double lo = 0, hi = 0;
    REQUIRE(optk_continuum_certified_bounds(c, tc - 1, &lo, &hi) == OPTK_OK);
    CHECK(lo == doctest::Approx(10.0 * std::exp(-0.5)));

    char* json = nullptr;
    REQUIRE(optk_continuum_fixed_point_json(c, 1e-2, &json) == OPTK_OK);
    optk_string_free(json);
    optk_continuum_free(c);
}

TEST_CASE("bridge through the C surface") {
    const int K = 64;
    std::vector<double> knots(K + 1), values(K + 1);
    for (int k = 0; k <= K; ++k) {
        knots[k] = static_cast<double>(k) / K;
        values[k] = knots[k];
    }
    std::vector<double> xi(4);
    REQUIRE(optk_sample_continuum(knots.data(), values.data(), K + 1, 4, xi.data()) == OPTK_OK);
    CHECK(xi == std::vector<double>{0.25, 0.5, 0.75, 1.0});

    optk_density d;
    d.kind = 0;
    d.a = 0.0;
    d.b = 0.5;
    d.breakpoints = nullptr;
    d.levels = nullptr;
    d.plateaus = 0;
    const int ns[] = {12};
    char* report = nullptr;
    char* csv = nullptr;
    REQUIRE(optk_monte_carlo(&d, ns, 1, 4, 7, 2, &report, &csv) == OPTK_OK);
    CHECK(std::string(report).find("stable_fraction") != std::string::npos);
    CHECK(std::string(csv).find("n,trial") != std::string::npos);
    optk_string_free(report);
    optk_string_free(csv);
}
