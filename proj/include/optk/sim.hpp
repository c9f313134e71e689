#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "optk/core.hpp"

namespace optk {

enum class IntegratorKind { automatic, exact_expm, adaptive_rk };

struct SimOptions {
    double event_tolerance = 1e-10;        // |gap - 1| at located events
    double equilibrium_velocity_tol = 1e-9;
    double cluster_merge_tol = 1e-8;
    double max_time = 100.0;
    // Sliding-window Zeno guard; 0 means auto: 4*(n^2 + n*ceil(W) + 100).
    std::int64_t max_transitions_per_unit_time = 0;
    double sample_interval = 0.0;          // 0 means auto: max_time / 256
    IntegratorKind integrator = IntegratorKind::automatic;
    double degeneracy_tol = 1e-9;          // |(L x)_i - (L x)_j| threshold
    double jitter_rel = 1e-12;             // retry perturbation after ProblematicBoundary
    std::uint64_t jitter_seed = 12345;
    double rk_abs_tol = 1e-12;
    double rk_rel_tol = 1e-10;
    int expm_max_n = 512;                  // hard capability limit of the dense path
    int expm_auto_max_n = 64;              // automatic selection threshold

    void validate(std::size_t n) const;
    IntegratorKind select_integrator(std::size_t n) const;
};

struct TransitionEvent {
    enum class Kind { connect, disconnect };
    double time = 0.0;
    int i = -1, j = -1;           // indices in the state at event time, i < j
    int orig_i = -1, orig_j = -1; // representative original agent indices
    Kind kind = Kind::connect;
    double boundary_gap = 0.0;    // |x_i - x_j| - 1 at detection
};

/// One stored snapshot. `owner[a]` maps original agent a to its index in
/// `state` (identity until merges start collapsing coincident agents).
struct TrajectorySample {
    OpinionState state;
    std::vector<int> owner;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;  // strictly increasing times
    std::vector<TransitionEvent> events;    // time-ordered
    OpinionState terminal;
    std::vector<int> terminal_owner;
    bool converged = false;
    bool jitter_applied = false;
    std::size_t transition_count = 0;
};

/// Advances `state` under the frozen linear regime of `graph` until `horizon`
/// or the first boundary crossing, located to |gap - 1| <= event_tolerance.
/// The returned state sits at the event time (event not yet applied).
std::pair<OpinionState, std::optional<TransitionEvent>> integrate_segment(
    const OpinionState& state, const InteractionGraph& graph, double horizon,
    const SimOptions& opts);

/// Toggles the event's edge and validates the Appendix-style exit conditions:
/// the crossing pair must be non-degenerate in the pre-toggle graph, and its
/// relative velocity in the new graph must point strictly away from
/// re-crossing. Raises SimultaneousEvents if another pair also sits within
/// event_tolerance of the boundary (the simulate loop batches those itself).
InteractionGraph apply_transition(const OpinionState& state, const InteractionGraph& graph,
                                  const TransitionEvent& event, const SimOptions& opts);

/// Collapses every maximal run of agents whose consecutive gaps are below
/// cluster_merge_tol into one agent at the run's weighted mean.
OpinionState merge_coincident(const OpinionState& state, const SimOptions& opts);
/// Same, also reporting the original-index -> merged-index map.
OpinionState merge_coincident(const OpinionState& state, const SimOptions& opts,
                              std::vector<int>& index_map);

/// Event-driven integration until equilibrium or max_time.
Trajectory simulate(const OpinionState& initial, const SimOptions& opts);

/// Returns true when every pair of opinions is either coincident (within
/// cluster_merge_tol) or separated by >= 1, and residual velocities are
/// below equilibrium_velocity_tol.
bool is_equilibrium(const OpinionState& state, const SimOptions& opts);

/// Inserts a probe agent of weight `delta` at opinion `x0` into an
/// equilibrium state. Rejects delta <= 0 and non-equilibrium inputs.
OpinionState add_perturbing_agent(const OpinionState& equilibrium, double delta, double x0,
                                  const SimOptions& opts = {});

}  // namespace optk
