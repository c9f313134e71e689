#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "optk/core.hpp"

using namespace optk;

namespace {

OpinionState state_of(std::vector<double> xs, std::vector<double> ws = {}) {
    OpinionState s;
    s.opinions = std::move(xs);
    s.weights = ws.empty() ? std::vector<double>(s.opinions.size(), 1.0) : std::move(ws);
    return s;
}

// O(n^2) reference for the sliding-window construction.
std::vector<std::pair<int, int>> brute_force_edges(const OpinionState& s) {
    std::vector<std::pair<int, int>> out;
    const int n = static_cast<int>(s.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(s.opinions[i] - s.opinions[j]) < 1.0) out.emplace_back(i, j);
    return out;
}

}  // namespace

TEST_CASE("build_graph on small states") {
    auto g = build_graph(state_of({0.0, 0.5, 2.0}));
    CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 1}});

    // Strict inequality: distance exactly 1 is disconnected.
    auto g2 = build_graph(state_of({0.0, 1.0}));
    CHECK(g2.edge_count() == 0);

    auto g3 = build_graph(state_of({0.0, 0.9, 1.8}));
    CHECK(g3.edges() == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
}

TEST_CASE("build_graph equals brute force on random sorted states") {
    std::mt19937_64 rng(1234);
    for (int rep = 0; rep < 40; ++rep) {
        std::uniform_int_distribution<int> nd(1, 200);
        std::uniform_real_distribution<double> xd(0.0, 10.0);
        std::vector<double> xs(nd(rng));
        for (double& x : xs) x = xd(rng);
        std::sort(xs.begin(), xs.end());
        auto s = state_of(xs);
        auto g = build_graph(s);
        CHECK(g.edges() == brute_force_edges(s));
        // Contiguous neighborhoods: lo/hi windows are monotone intervals.
        for (int i = 0; i < g.n(); ++i) {
            CHECK(g.lo[i] <= i);
            CHECK(g.hi[i] > i);
        }
    }
}

TEST_CASE("build_graph windows on 1000 uniform agents are contiguous") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> xd(0.0, 10.0);
    std::vector<double> xs(1000);
    for (double& x : xs) x = xd(rng);
    std::sort(xs.begin(), xs.end());
    auto s = state_of(xs);
    auto g = build_graph(s);
    CHECK(g.edges() == brute_force_edges(s));
}

TEST_CASE("laplacian matches its definition") {
    InteractionGraph g;
    g.lo = {0, 0};
    g.hi = {2, 2};
    std::vector<double> w{1.0, 1.0};
    auto L = laplacian(g, w);
    CHECK(L == std::vector<double>{1.0, -1.0, -1.0, 1.0});

    InteractionGraph empty;
    empty.lo = {0, 1, 2};
    empty.hi = {1, 2, 3};
    auto Z = laplacian(empty, std::vector<double>{1.0, 2.0, 1.0});
    CHECK(std::all_of(Z.begin(), Z.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("weighted laplacian reproduces the weighted interaction sums") {
    auto s = state_of({0.0, 0.9, 1.8}, {1.0, 2.0, 1.0});
    auto g = build_graph(s);
    auto L = laplacian(g, s.weights);
    // -L x against the direct sums over neighbors.
    const auto& x = s.opinions;
    std::vector<double> direct(3, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (j != i && std::abs(x[i] - x[j]) < 1.0) direct[i] += s.weights[j] * (x[j] - x[i]);
    for (int i = 0; i < 3; ++i) {
        double Lx = 0.0;
        for (int j = 0; j < 3; ++j) Lx += L[i * 3 + j] * x[j];
        CHECK(-Lx == doctest::Approx(direct[i]).epsilon(1e-14));
    }
    // Row sums annihilate the all-ones vector.
    for (int i = 0; i < 3; ++i) {
        double row = L[i * 3] + L[i * 3 + 1] + L[i * 3 + 2];
        CHECK(std::abs(row) <= 1e-12);
    }
    // Symmetric when weights are equal.
    auto se = state_of({0.0, 0.9, 1.8});
    auto Le = laplacian(build_graph(se), se.weights);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(Le[i * 3 + j] == Le[j * 3 + i]);
}

TEST_CASE("canonicalize sorts and permutes weights consistently") {
    auto s = canonicalize({3.0, 1.0, 2.0});
    CHECK(s.opinions == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(s.time == 0.0);

    auto sorted = canonicalize({1.0, 2.0, 3.0});
    CHECK(sorted.opinions == std::vector<double>{1.0, 2.0, 3.0});

    auto tied = canonicalize({1.0, 1.0, 0.0}, std::vector<double>{2.0, 3.0, 4.0});
    CHECK(tied.opinions == std::vector<double>{0.0, 1.0, 1.0});
    CHECK(tied.weights == std::vector<double>{4.0, 2.0, 3.0});

    CHECK_THROWS_AS(canonicalize({std::nan("")}), InvalidArgument);
    CHECK_THROWS_AS(canonicalize({0.0, 1.0}, std::vector<double>{1.0, -1.0}), InvalidArgument);
}

TEST_CASE("derivative matches the interaction sums") {
    auto s = state_of({0.2, 0.8});
    auto d = derivative(s, build_graph(s));
    CHECK(d[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(d[1] == doctest::Approx(-0.6).epsilon(1e-15));

    auto far = state_of({0.0, 2.0});
    auto d2 = derivative(far, build_graph(far));
    CHECK(d2 == std::vector<double>{0.0, 0.0});

    auto three = state_of({0.0, 0.9, 1.8});
    auto d3 = derivative(three, build_graph(three));
    CHECK(d3[0] == doctest::Approx(0.9));
    CHECK(d3[1] == doctest::Approx(0.0));
    CHECK(d3[2] == doctest::Approx(-0.9));
}

TEST_CASE("weighted derivative sum vanishes") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> xd(0.0, 5.0), wd(0.1, 3.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> xs(50), ws(50);
        for (auto& x : xs) x = xd(rng);
        for (auto& w : ws) w = wd(rng);
        std::sort(xs.begin(), xs.end());
        auto s = state_of(xs, ws);
        auto d = derivative(s, build_graph(s));
        double sum = 0.0, scale = 1.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            sum += ws[i] * d[i];
            scale += ws[i] * std::abs(xs[i]);
        }
        CHECK(std::abs(sum) <= 1e-12 * scale);
    }
}
