#include "optk/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace optk {

namespace {
constexpr double kNearUnitBand = 1e-6;

nlohmann::ordered_json cluster_json(const Cluster& c) {
    return {{"position", c.position},
            {"weight", c.weight},
            {"member_first", c.member_first},
            {"member_last", c.member_last}};
}
}  // namespace

const char* to_string(PairClass c) {
    switch (c) {
        case PairClass::stable: return "stable";
        case PairClass::unstable: return "unstable";
        case PairClass::marginal: return "marginal";
    }
    return "?";
}

ClusterReport extract_clusters(const OpinionState& state, double tol) {
    state.validate();
    if (!(tol > 0.0)) throw InvalidArgument("cluster tolerance must be positive");
    ClusterReport report;
    report.cluster_tol = tol;
    const int n = static_cast<int>(state.size());
    int start = 0;
    double wsum = 0.0, wxsum = 0.0;
    for (int i = 0; i < n; ++i) {
        wsum += state.weights[i];
        wxsum += state.weights[i] * state.opinions[i];
        const bool last = i + 1 == n || state.opinions[i + 1] - state.opinions[i] >= tol;
        if (last) {
            Cluster c;
            c.position = wxsum / wsum;
            c.weight = wsum;
            c.member_first = start;
            c.member_last = i;
            report.clusters.push_back(c);
            start = i + 1;
            wsum = wxsum = 0.0;
        }
    }
    for (std::size_t k = 0; k + 1 < report.clusters.size(); ++k)
        report.separations.push_back(report.clusters[k + 1].position -
                                     report.clusters[k].position);
    return report;
}

double stability_threshold(double wa, double wb) {
    if (!(wa > 0.0) || !(wb > 0.0)) throw InvalidArgument("cluster weights must be positive");
    return 1.0 + std::min(wa, wb) / std::max(wa, wb);
}

PairClass classify_pair(const Cluster& a, const Cluster& b, double margin) {
    const double sep = std::abs(b.position - a.position);
    if (sep == 0.0) throw InvalidArgument("classify_pair requires distinct cluster positions");
    const double d = stability_threshold(a.weight, b.weight);
    if (sep > d + margin) return PairClass::stable;
    if (sep < d - margin) return PairClass::unstable;
    return PairClass::marginal;
}

double center_of_mass(const Cluster& a, const Cluster& b) {
    if (!(a.weight > 0.0) || !(b.weight > 0.0))
        throw InvalidArgument("cluster weights must be positive");
    return (a.weight * a.position + b.weight * b.position) / (a.weight + b.weight);
}

void classify_report(ClusterReport& report, double margin) {
    report.margin = margin;
    report.classifications.clear();
    report.near_unit.clear();
    const auto& cl = report.clusters;
    for (std::size_t k = 0; k + 1 < cl.size(); ++k) {
        report.classifications.push_back(classify_pair(cl[k], cl[k + 1], margin));
        const double sep = report.separations[k];
        report.near_unit.push_back(sep <= 1.0 + kNearUnitBand);
    }
    report.overall = PairClass::stable;
    for (std::size_t a = 0; a < cl.size(); ++a) {
        for (std::size_t b = a + 1; b < cl.size(); ++b) {
            const PairClass pc = classify_pair(cl[a], cl[b], margin);
            if (pc == PairClass::unstable) {
                report.overall = PairClass::unstable;
                return;
            }
            if (pc == PairClass::marginal) report.overall = PairClass::marginal;
        }
    }
}

std::string ClusterReport::to_json() const {
    nlohmann::ordered_json j;
    j["clusters"] = nlohmann::ordered_json::array();
    for (const auto& c : clusters) j["clusters"].push_back(cluster_json(c));
    j["separations"] = separations;
    j["classifications"] = nlohmann::ordered_json::array();
    for (auto c : classifications) j["classifications"].push_back(to_string(c));
    j["overall"] = to_string(overall);
    j["near_unit_separations"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < near_unit.size(); ++k)
        if (near_unit[k]) j["near_unit_separations"].push_back(k);
    j["tolerances"] = {{"cluster_tol", cluster_tol}, {"margin", margin}};
    if (!note.empty()) j["note"] = note;
    return j.dump(2);
}

ProbeResult probe_stability(const OpinionState& equilibrium, double delta,
                            const SimOptions& opts) {
    if (!(delta > 0.0)) throw InvalidArgument("probe weight must be positive");
    if (!is_equilibrium(equilibrium, opts))
        throw InvalidArgument("probe_stability requires an equilibrium state");

    ClusterReport eq_clusters = extract_clusters(equilibrium, 10.0 * opts.cluster_merge_tol);
    const auto& cl = eq_clusters.clusters;

    // Probe placements: adjacent centers of mass (the decisive location in
    // the threshold argument) plus just-inside-unit-reach positions.
    constexpr double kReachEps = 1e-3;
    std::vector<double> placements;
    for (std::size_t k = 0; k + 1 < cl.size(); ++k)
        placements.push_back(center_of_mass(cl[k], cl[k + 1]));
    for (const auto& c : cl) {
        placements.push_back(c.position - (1.0 - kReachEps));
        placements.push_back(c.position + (1.0 - kReachEps));
    }

    SimOptions popts = opts;
    popts.max_time = std::max(200.0, 2.0 / delta);
    popts.sample_interval = popts.max_time / 128.0;

    ProbeResult result;
    for (double x0 : placements) {
        OpinionState probe;
        try {
            probe = add_perturbing_agent(equilibrium, delta, x0, opts);
        } catch (const InvalidArgument&) {
            ++result.probes_rejected;
            continue;
        }
        // Index of the inserted probe agent in the sorted probe state.
        const int n_eq = static_cast<int>(equilibrium.size());
        int probe_idx = 0;
        while (probe_idx < n_eq && equilibrium.opinions[probe_idx] <= x0) ++probe_idx;

        Trajectory traj;
        try {
            traj = simulate(probe, popts);
        } catch (const InvalidArgument&) {
            ++result.probes_rejected;
            continue;
        }
        ++result.probes_run;

        for (const auto& sample : traj.samples) {
            for (int a = 0; a < n_eq; ++a) {
                const int pa = a < probe_idx ? a : a + 1;  // index in probe state
                const double now = sample.state.opinions[sample.owner[pa]];
                result.max_displacement =
                    std::max(result.max_displacement, std::abs(now - equilibrium.opinions[a]));
            }
        }
        // Count distinct terminal positions of the original agents.
        std::vector<double> finals;
        for (int a = 0; a < n_eq; ++a) {
            const int pa = a < probe_idx ? a : a + 1;
            finals.push_back(traj.terminal.opinions[traj.terminal_owner[pa]]);
        }
        std::sort(finals.begin(), finals.end());
        std::size_t terminal_clusters = finals.empty() ? 0 : 1;
        for (std::size_t k = 0; k + 1 < finals.size(); ++k)
            if (finals[k + 1] - finals[k] > 0.5) ++terminal_clusters;
        if (terminal_clusters < cl.size()) result.merged = true;
    }
    return result;
}

AuditRecord audit(const Trajectory& trajectory, const SimOptions& opts) {
    if (trajectory.samples.empty()) throw InvalidArgument("audit requires a non-empty trajectory");
    AuditRecord rec;
    rec.samples = trajectory.samples.size();
    rec.events = trajectory.events.size();

    const auto& first = trajectory.samples.front();
    const double mean0 = first.state.weighted_mean();
    const double scale = std::max(1.0, std::abs(mean0));
    const double total_weight = first.state.total_weight();

    double prev_var = first.state.weighted_variance();
    rec.min_gap_bound_ratio = 1e300;
    const int n0 = static_cast<int>(first.state.size());
    const double slack = 10.0 * opts.cluster_merge_tol;

    for (std::size_t s = 0; s < trajectory.samples.size(); ++s) {
        const auto& sample = trajectory.samples[s];
        rec.average_drift_rel = std::max(
            rec.average_drift_rel, std::abs(sample.state.weighted_mean() - mean0) / scale);
        const double var = sample.state.weighted_variance();
        if (s > 0) rec.max_variance_increase = std::max(rec.max_variance_increase, var - prev_var);
        prev_var = var;
        if (!sample.state.is_sorted()) ++rec.order_violations;

        // Gap floor: pairs still alive must satisfy
        // gap(t) >= gap(0) * exp(-W (t - t0)), up to the merge slack.
        if (static_cast<int>(sample.owner.size()) == n0 && n0 <= 512) {
            const double decay =
                std::exp(-total_weight * (sample.state.time - first.state.time));
            for (int a = 0; a < n0; ++a) {
                for (int b = a + 1; b < n0; ++b) {
                    if (sample.owner[a] == sample.owner[b]) continue;
                    const double gap0 = first.state.opinions[b] - first.state.opinions[a];
                    if (gap0 <= 0.0) continue;
                    const double gap = sample.state.opinions[sample.owner[b]] -
                                       sample.state.opinions[sample.owner[a]];
                    rec.min_gap_bound_ratio =
                        std::min(rec.min_gap_bound_ratio, (gap + slack) / (gap0 * decay));
                }
            }
        }
    }
    if (rec.min_gap_bound_ratio > 1e299) rec.min_gap_bound_ratio = 1.0;
    return rec;
}

std::string AuditRecord::to_json() const {
    nlohmann::ordered_json j;
    j["average_drift_rel"] = average_drift_rel;
    j["max_variance_increase"] = max_variance_increase;
    j["order_violations"] = order_violations;
    j["min_gap_bound_ratio"] = min_gap_bound_ratio;
    j["samples"] = samples;
    j["events"] = events;
    return j.dump(2);
}

}  // namespace optk
