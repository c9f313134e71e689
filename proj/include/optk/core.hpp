#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "optk/errors.hpp"

namespace optk {

/// Sorted vector of agent opinions with per-agent positive weights.
///
/// Immutable value type: all mutating operations return new states. The
/// sortedness invariant makes every interaction neighborhood a contiguous
/// index interval, which the rest of the toolkit exploits heavily.
struct OpinionState {
    std::vector<double> opinions;  // nondecreasing
    std::vector<double> weights;   // strictly positive
    double time = 0.0;

    std::size_t size() const { return opinions.size(); }
    double total_weight() const;
    double weighted_mean() const;
    // Sum of w_i (x_i - mean)^2.
    double weighted_variance() const;
    bool is_sorted() const;
    // Throws InvalidArgument on any violated invariant.
    void validate() const;
};

/// Interaction graph of a sorted state: {i,j} is an edge iff
/// |x_i - x_j| < 1 (strict). Stored as one half-open neighbor window
/// [lo[i], hi[i]) per agent; sortedness guarantees windows are intervals
/// and lo[i] <= i < hi[i].
struct InteractionGraph {
    std::vector<int> lo;
    std::vector<int> hi;

    int n() const { return static_cast<int>(lo.size()); }
    bool has_edge(int i, int j) const {
        if (i == j) return false;
        return j >= lo[i] && j < hi[i];
    }
    std::size_t edge_count() const;
    std::vector<std::pair<int, int>> edges() const;  // i < j, sorted
    bool operator==(const InteractionGraph&) const = default;
};

/// Sorts a raw opinion vector (permuting weights consistently) and stamps
/// time zero. Rejects non-finite entries and nonpositive weights.
OpinionState canonicalize(std::vector<double> opinions,
                          std::optional<std::vector<double>> weights = std::nullopt);

/// Neighbor windows at strict distance < 1, via a sliding window over the
/// sorted opinions. O(n) over the whole state.
InteractionGraph build_graph(const OpinionState& state);

/// Dense weighted Laplacian: row i has sum_{j in N(i)} w_j on the diagonal
/// and -w_j at (i,j) for each edge. Row-major n*n buffer.
std::vector<double> laplacian(const InteractionGraph& graph,
                              std::span<const double> weights);

/// Right-hand side of the weighted dynamics, dx_i = sum_{j in N(i)} w_j (x_j - x_i),
/// i.e. -L_G x. Evaluated matrix-free with prefix sums in O(n).
std::vector<double> derivative(const OpinionState& state, const InteractionGraph& graph);

/// Same, writing into a caller buffer with explicit vectors (hot path).
void derivative_into(std::span<const double> x, std::span<const double> w,
                     const InteractionGraph& graph, std::span<double> out);

}  // namespace optk
