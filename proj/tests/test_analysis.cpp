#include <doctest.h>

#include <cmath>
#include <random>

#include "optk/analysis.hpp"

using namespace optk;

namespace {

OpinionState state_of(std::vector<double> xs, std::vector<double> ws = {}) {
    OpinionState s;
    s.opinions = std::move(xs);
    s.weights = ws.empty() ? std::vector<double>(s.opinions.size(), 1.0) : std::move(ws);
    return s;
}

Cluster cluster_at(double pos, double w) { return Cluster{pos, w, 0, 0}; }

}  // namespace

TEST_CASE("stability_threshold") {
    CHECK(stability_threshold(1.0, 1.0) == 2.0);
    CHECK(stability_threshold(1.0, 3.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> wd(0.1, 10.0);
    for (int rep = 0; rep < 50; ++rep) {
        const double w = wd(rng);
        CHECK(stability_threshold(w, w) == 2.0);
        const double d = stability_threshold(wd(rng), wd(rng));
        CHECK(d > 1.0);
        CHECK(d <= 2.0);
    }
    CHECK_THROWS_AS(stability_threshold(0.0, 1.0), InvalidArgument);
}

TEST_CASE("classify_pair around the threshold") {
    CHECK(classify_pair(cluster_at(0.0, 1.0), cluster_at(2.2, 1.0)) == PairClass::stable);
    CHECK(classify_pair(cluster_at(0.0, 1.0), cluster_at(1.5, 1.0)) == PairClass::unstable);
    CHECK(classify_pair(cluster_at(0.0, 1.0), cluster_at(2.0, 1.0)) == PairClass::marginal);
    // Scale invariance in the weights.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> wd(0.1, 5.0), cd(0.1, 100.0), pd(1.0, 3.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double wa = wd(rng), wb = wd(rng), c = cd(rng), sep = pd(rng);
        auto base = classify_pair(cluster_at(0.0, wa), cluster_at(sep, wb));
        auto scaled = classify_pair(cluster_at(0.0, c * wa), cluster_at(sep, c * wb));
        CHECK(base == scaled);
    }
}

TEST_CASE("center_of_mass and the unit-reach criterion") {
    CHECK(center_of_mass(cluster_at(0.0, 1.0), cluster_at(2.0, 1.0)) == 1.0);
    CHECK(center_of_mass(cluster_at(0.0, 1.0), cluster_at(4.0 / 3.0, 3.0)) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(center_of_mass(cluster_at(0.0, 2.0), cluster_at(3.0, 1.0)) == 1.0);

    // com within unit distance of both clusters iff separation <= threshold.
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> wd(0.1, 5.0), sd(1.0, 3.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double wa = wd(rng), wb = wd(rng), sep = sd(rng);
        auto a = cluster_at(0.0, wa), b = cluster_at(sep, wb);
        const double com = center_of_mass(a, b);
        const bool within = std::abs(com - a.position) <= 1.0 + 1e-12 &&
                            std::abs(b.position - com) <= 1.0 + 1e-12;
        const bool below = sep <= stability_threshold(wa, wb) + 1e-12;
        CHECK(within == below);
    }
}

TEST_CASE("extract_clusters") {
    auto r = extract_clusters(state_of({0.0, 0.0, 2.2, 2.2}), 1e-8);
    REQUIRE(r.clusters.size() == 2);
    CHECK(r.clusters[0].position == 0.0);
    CHECK(r.clusters[0].weight == 2.0);
    CHECK(r.clusters[1].position == 2.2);
    CHECK(r.separations[0] == doctest::Approx(2.2));

    auto single = extract_clusters(state_of({1.0}), 1e-8);
    CHECK(single.clusters.size() == 1);
    CHECK(single.clusters[0].weight == 1.0);

    // Weighted mean of clusters equals the state's weighted mean.
    auto s = state_of({0.0, 1e-10, 3.0, 3.0 + 1e-11}, {1.0, 2.0, 3.0, 4.0});
    auto rep = extract_clusters(s, 1e-8);
    double mean = 0.0, wsum = 0.0;
    for (const auto& c : rep.clusters) {
        mean += c.position * c.weight;
        wsum += c.weight;
    }
    CHECK(mean / wsum == doctest::Approx(s.weighted_mean()).epsilon(1e-14));
}

TEST_CASE("classify_report checks all pairs and flags near-unit separations") {
    auto r = extract_clusters(state_of({0.0, 1.0 + 5e-7, 3.5}), 1e-8);
    classify_report(r);
    REQUIRE(r.classifications.size() == 2);
    CHECK(r.near_unit[0]);
    CHECK(!r.near_unit[1]);
    CHECK(r.overall == PairClass::unstable);
    CHECK(!r.to_json().empty());
}

TEST_CASE("probe_stability: below-threshold pair merges, displacement ~ midpoint travel") {
    SimOptions opts;
    auto eq = state_of({0.0, 1.5});
    auto res = probe_stability(eq, 1e-3, opts);
    CHECK(res.merged);
    CHECK(res.max_displacement == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("probe_stability: above-threshold pair only shifts O(delta)") {
    SimOptions opts;
    auto eq = state_of({0.0, 2.5});
    auto res = probe_stability(eq, 1e-3, opts);
    CHECK(!res.merged);
    CHECK(res.max_displacement < 10.0 * 1e-3);
}

TEST_CASE("probe_stability: displacement decreases along a delta ladder") {
    SimOptions opts;
    auto eq = state_of({0.0, 2.5});
    double prev = 1e300;
    for (double delta : {1e-2, 1e-3, 1e-4}) {
        auto res = probe_stability(eq, delta, opts);
        CHECK(!res.merged);
        CHECK(res.max_displacement <= prev + 1e-12);
        prev = res.max_displacement;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("audit flags a hand-corrupted trajectory") {
    SimOptions opts;
    opts.max_time = 10.0;
    opts.sample_interval = 0.1;
    auto traj = simulate(state_of({-0.25, 0.25}), opts);
    auto clean = audit(traj, opts);
    CHECK(clean.average_drift_rel <= 1e-9);
    CHECK(clean.max_variance_increase <= 1e-10);
    CHECK(clean.order_violations == 0);

    // Corrupt: shift one sample's opinion and break sortedness in another.
    Trajectory bad = traj;
    REQUIRE(bad.samples.size() >= 3);
    bad.samples[1].state.opinions[0] += 0.5;
    std::swap(bad.samples[2].state.opinions.front(), bad.samples[2].state.opinions.back());
    auto rec = audit(bad, opts);
    const bool flagged = rec.average_drift_rel > 1e-9 || rec.max_variance_increase > 1e-10 ||
                         rec.order_violations > 0;
    CHECK(flagged);
}
