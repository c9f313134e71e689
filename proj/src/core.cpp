#include "optk/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace optk {

double OpinionState::total_weight() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double OpinionState::weighted_mean() const {
    double sw = 0.0, swx = 0.0;
    for (std::size_t i = 0; i < opinions.size(); ++i) {
        sw += weights[i];
        swx += weights[i] * opinions[i];
    }
    return swx / sw;
}

double OpinionState::weighted_variance() const {
    const double mean = weighted_mean();
    double v = 0.0;
    for (std::size_t i = 0; i < opinions.size(); ++i) {
        const double d = opinions[i] - mean;
        v += weights[i] * d * d;
    }
    return v;
}

bool OpinionState::is_sorted() const {
    return std::is_sorted(opinions.begin(), opinions.end());
}

void OpinionState::validate() const {
    if (opinions.empty()) throw InvalidArgument("state must contain at least one agent");
    if (weights.size() != opinions.size())
        throw InvalidArgument("weights length does not match opinions length");
    for (double x : opinions)
        if (!std::isfinite(x)) throw InvalidArgument("non-finite opinion entry");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be positive and finite");
    if (!is_sorted()) throw InvalidArgument("opinions must be nondecreasing");
    if (!std::isfinite(time) || time < 0.0) throw InvalidArgument("time must be finite and nonnegative");
}

OpinionState canonicalize(std::vector<double> opinions,
                          std::optional<std::vector<double>> weights) {
    if (opinions.empty()) throw InvalidArgument("empty initial condition");
    for (double x : opinions)
        if (!std::isfinite(x)) throw InvalidArgument("non-finite opinion entry");

    std::vector<double> w;
    if (weights) {
        w = std::move(*weights);
        if (w.size() != opinions.size())
            throw InvalidArgument("weights length does not match opinions length");
        for (double wi : w)
            if (!(wi > 0.0) || !std::isfinite(wi))
                throw InvalidArgument("weights must be positive and finite");
    } else {
        w.assign(opinions.size(), 1.0);
    }

    std::vector<std::size_t> perm(opinions.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return opinions[a] < opinions[b]; });

    OpinionState out;
    out.opinions.reserve(opinions.size());
    out.weights.reserve(opinions.size());
    for (std::size_t idx : perm) {
        out.opinions.push_back(opinions[idx]);
        out.weights.push_back(w[idx]);
    }
    out.time = 0.0;
    return out;
}

std::size_t InteractionGraph::edge_count() const {
    std::size_t twice = 0;
    for (int i = 0; i < n(); ++i) twice += static_cast<std::size_t>(hi[i] - lo[i] - 1);
    return twice / 2;
}

std::vector<std::pair<int, int>> InteractionGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n(); ++i)
        for (int j = i + 1; j < hi[i]; ++j) out.emplace_back(i, j);
    return out;
}

InteractionGraph build_graph(const OpinionState& state) {
    state.validate();
    const auto& x = state.opinions;
    const int n = static_cast<int>(x.size());
    InteractionGraph g;
    g.lo.resize(n);
    g.hi.resize(n);
    int lo = 0, hi = 0;
    for (int i = 0; i < n; ++i) {
        while (x[i] - x[lo] >= 1.0) ++lo;
        if (hi < i + 1) hi = i + 1;
        while (hi < n && x[hi] - x[i] < 1.0) ++hi;
        g.lo[i] = lo;
        g.hi[i] = hi;
    }
    return g;
}

std::vector<double> laplacian(const InteractionGraph& graph, std::span<const double> weights) {
    const int n = graph.n();
    if (static_cast<int>(weights.size()) != n)
        throw InvalidArgument("weights length does not match graph size");
    std::vector<double> L(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = graph.lo[i]; j < graph.hi[i]; ++j) {
            if (j == i) continue;
            L[static_cast<std::size_t>(i) * n + j] = -weights[j];
            diag += weights[j];
        }
        L[static_cast<std::size_t>(i) * n + i] = diag;
    }
    return L;
}

void derivative_into(std::span<const double> x, std::span<const double> w,
                     const InteractionGraph& graph, std::span<double> out) {
    const int n = graph.n();
    // Prefix sums over the sorted order; each neighborhood is [lo, hi).
    static thread_local std::vector<double> pw, pwx;
    pw.resize(static_cast<std::size_t>(n) + 1);
    pwx.resize(static_cast<std::size_t>(n) + 1);
    pw[0] = pwx[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        pw[i + 1] = pw[i] + w[i];
        pwx[i + 1] = pwx[i] + w[i] * x[i];
    }
    for (int i = 0; i < n; ++i) {
        const double sw = pw[graph.hi[i]] - pw[graph.lo[i]];
        const double swx = pwx[graph.hi[i]] - pwx[graph.lo[i]];
        out[i] = swx - sw * x[i];
    }
}

std::vector<double> derivative(const OpinionState& state, const InteractionGraph& graph) {
    if (graph.n() != static_cast<int>(state.size()))
        throw InvalidArgument("graph size does not match state size");
    std::vector<double> out(state.size());
    derivative_into(state.opinions, state.weights, graph, out);
    return out;
}

}  // namespace optk
