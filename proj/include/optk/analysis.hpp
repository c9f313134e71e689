#pragma once

#include <string>
#include <vector>

#include "optk/sim.hpp"

namespace optk {

struct Cluster {
    double position = 0.0;
    double weight = 0.0;
    int member_first = 0;  // index range in the originating state
    int member_last = 0;   // inclusive
};

enum class PairClass { stable, unstable, marginal };

const char* to_string(PairClass c);

struct ClusterReport {
    std::vector<Cluster> clusters;          // ordered by position
    std::vector<double> separations;        // adjacent distances
    std::vector<PairClass> classifications; // per adjacent pair
    PairClass overall = PairClass::stable;  // quantified over all pairs
    std::vector<bool> near_unit;            // separation in [1, 1 + 1e-6]
    double cluster_tol = 0.0;
    double margin = 0.0;
    std::string note;

    std::string to_json() const;
};

/// Maximal runs of agents with consecutive gaps < tol become clusters at
/// their weighted mean. Classifications are left empty.
ClusterReport extract_clusters(const OpinionState& state, double tol);

/// d = 1 + min{wa, wb} / max{wa, wb}, in (1, 2].
double stability_threshold(double wa, double wb);

/// Theorem-style pairwise test with a symmetric numerical margin around the
/// threshold; exact equality is numerically indistinguishable from either
/// side and is reported as its own class.
PairClass classify_pair(const Cluster& a, const Cluster& b, double margin = 1e-9);

double center_of_mass(const Cluster& a, const Cluster& b);

/// Fills classifications/overall/near_unit on a report produced by
/// extract_clusters. `overall` checks every cluster pair, not only adjacent
/// ones.
void classify_report(ClusterReport& report, double margin = 1e-9);

struct ProbeResult {
    double max_displacement = 0.0;  // over original agents, all samples
    bool merged = false;
    int probes_run = 0;
    int probes_rejected = 0;  // probe insertion hit a non-generic boundary
};

/// Places perturbing agents of weight `delta` at each adjacent pair's center
/// of mass and just inside unit reach of each cluster, simulates each probe,
/// and aggregates the worst displacement of the original agents.
ProbeResult probe_stability(const OpinionState& equilibrium, double delta,
                            const SimOptions& opts = {});

struct AuditRecord {
    double average_drift_rel = 0.0;        // weighted mean, relative to scale
    double max_variance_increase = 0.0;    // between consecutive samples
    int order_violations = 0;
    double min_gap_bound_ratio = 0.0;      // gap / (initial gap * e^{-W t}), >= ~1
    std::size_t samples = 0;
    std::size_t events = 0;

    std::string to_json() const;
};

/// Conserved-quantity and monotonicity audit over a trajectory's samples.
AuditRecord audit(const Trajectory& trajectory, const SimOptions& opts = {});

}  // namespace optk
