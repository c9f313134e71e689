// optk: command-line driver for the opinion-dynamics toolkit, built purely
// on the C API of the shared library.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "optk/capi.h"
#include "svg.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace optkcli;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_status(optk_status st, const std::string& what) {
    if (st == OPTK_OK) return;
    const std::string msg = what + ": " + optk_last_error();
    if (st == OPTK_ERR_INVALID) throw UsageError(msg);
    throw NumericError(msg);
}

// JSON config file merged under the command-line flags: a flag that was not
// given on the command line takes its value from the file; unknown file keys
// are rejected.
class ConfigLayer {
public:
    ConfigLayer(CLI::App* sub, const std::string& path) : sub_(sub) {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file " + path);
        try {
            in >> cfg_;
        } catch (const std::exception& e) {
            throw UsageError("bad config JSON: " + std::string(e.what()));
        }
        if (!cfg_.is_object()) throw UsageError("config must be a JSON object");
    }

    template <typename T>
    void merge(const std::string& key, T& value) {
        known_.insert(key);
        if (!cfg_.contains(key)) return;
        if (sub_->count("--" + key) > 0) return;  // flags win
        try {
            value = cfg_.at(key).get<T>();
        } catch (const std::exception&) {
            throw UsageError("config key '" + key + "' has the wrong type");
        }
    }

    void finish() const {
        for (const auto& item : cfg_.items())
            if (!known_.count(item.key()))
                throw UsageError("unknown config key '" + item.key() + "'");
    }

private:
    CLI::App* sub_;
    nlohmann::json cfg_ = nlohmann::json::object();
    std::set<std::string> known_;
};

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& dir, const ordered_json& resolved) {
    ordered_json j = resolved;
    j["toolkit_version"] = optk_version();
    write_file((dir / "config.json").string(), j.dump(2) + "\n");
}

// ---- shared option blocks ----

struct SimFlags {
    double event_tol = 1e-10;
    double velocity_tol = 1e-9;
    double merge_tol = 1e-8;
    double max_time = 100.0;
    double sample_interval = 0.0;
    std::int64_t zeno = 0;
    std::string integrator = "auto";
    double degeneracy_tol = 1e-9;
    std::uint64_t jitter_seed = 12345;

    void add_to(CLI::App* sub) {
        sub->add_option("--event-tol", event_tol, "event location tolerance on |gap-1|");
        sub->add_option("--velocity-tol", velocity_tol, "equilibrium velocity tolerance");
        sub->add_option("--merge-tol", merge_tol, "coincident-agent merge tolerance");
        sub->add_option("--max-time", max_time, "integration horizon");
        sub->add_option("--sample-interval", sample_interval,
                        "trajectory sampling interval (0 = max_time/256)");
        sub->add_option("--zeno", zeno, "max transitions per unit time (0 = auto)");
        sub->add_option("--integrator", integrator, "auto | expm | rk");
        sub->add_option("--degeneracy-tol", degeneracy_tol, "boundary degeneracy tolerance");
        sub->add_option("--jitter-seed", jitter_seed, "seed for the problematic-boundary retry");
    }

    void merge(ConfigLayer& cfg) {
        cfg.merge("event-tol", event_tol);
        cfg.merge("velocity-tol", velocity_tol);
        cfg.merge("merge-tol", merge_tol);
        cfg.merge("max-time", max_time);
        cfg.merge("sample-interval", sample_interval);
        cfg.merge("zeno", zeno);
        cfg.merge("integrator", integrator);
        cfg.merge("degeneracy-tol", degeneracy_tol);
        cfg.merge("jitter-seed", jitter_seed);
    }

    optk_sim_options to_options() const {
        optk_sim_options o;
        optk_sim_options_init(&o);
        o.event_tolerance = event_tol;
        o.equilibrium_velocity_tol = velocity_tol;
        o.cluster_merge_tol = merge_tol;
        o.max_time = max_time;
        o.sample_interval = sample_interval;
        o.max_transitions_per_unit_time = zeno;
        if (integrator == "expm") o.integrator = 1;
        else if (integrator == "rk") o.integrator = 2;
        else if (integrator == "auto") o.integrator = 0;
        else throw UsageError("unknown integrator '" + integrator + "'");
        o.degeneracy_tol = degeneracy_tol;
        o.jitter_seed = jitter_seed;
        return o;
    }

    ordered_json resolved() const {
        return {{"event-tol", event_tol},       {"velocity-tol", velocity_tol},
                {"merge-tol", merge_tol},       {"max-time", max_time},
                {"sample-interval", sample_interval}, {"zeno", zeno},
                {"integrator", integrator},     {"degeneracy-tol", degeneracy_tol},
                {"jitter-seed", jitter_seed}};
    }
};

std::vector<double> parse_number_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split(s, ','))
        if (!tok.empty()) out.push_back(parse_double(tok));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split(s, ','))
        if (!tok.empty()) out.push_back(static_cast<int>(parse_double(tok)));
    return out;
}

// "value[,weight]" per line, '#' comments.
void load_init_file(const std::string& path, std::vector<double>& xs,
                    std::vector<double>& ws) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open init file " + path);
    std::string line;
    bool any_weight = false;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        auto parts = split(line, ',');
        xs.push_back(parse_double(parts[0]));
        if (parts.size() > 1 && !parts[1].empty()) {
            ws.push_back(parse_double(parts[1]));
            any_weight = true;
        } else {
            ws.push_back(1.0);
        }
    }
    if (xs.empty()) throw UsageError("init file " + path + " holds no agents");
    if (!any_weight) ws.clear();
}

// ---- simulate ----

struct SimulateCmd {
    std::string init = "uniform:0:10";
    std::string init_file;
    std::string weights;
    int n = 100;
    std::uint64_t seed = 1;
    bool plot = false;
    double cluster_tol = 1e-6;
    double margin = 1e-9;
    std::string out = "optk-simulate";
    std::string config;
    SimFlags sim;

    int run() {
        std::vector<double> xs, ws;
        if (!init_file.empty()) {
            load_init_file(init_file, xs, ws);
        } else {
            auto parts = split(init, ':');
            if (parts[0] == "uniform" && parts.size() == 3) {
                const double a = parse_double(parts[1]), b = parse_double(parts[2]);
                std::mt19937_64 rng(seed);
                std::uniform_real_distribution<double> dist(a, b);
                xs.resize(n);
                for (double& x : xs) x = dist(rng);
            } else if (parts[0] == "list" && parts.size() == 2) {
                xs = parse_number_list(parts[1]);
            } else {
                throw UsageError("unknown --init spec '" + init + "'");
            }
        }
        if (!weights.empty()) ws = parse_number_list(weights);
        if (!ws.empty() && ws.size() != xs.size())
            throw UsageError("weights length does not match agent count");

        const auto opts = sim.to_options();
        optk_sim* handle = nullptr;
        check_status(optk_simulate(xs.data(), ws.empty() ? nullptr : ws.data(),
                                   static_cast<int>(xs.size()), &opts, &handle),
                     "simulate");
        struct Guard {
            optk_sim* h;
            ~Guard() { optk_sim_free(h); }
        } guard{handle};

        const auto dir = prepare_out_dir(out);
        ordered_json resolved = sim.resolved();
        resolved["init"] = init_file.empty() ? init : ("file:" + init_file);
        resolved["n"] = static_cast<int>(xs.size());
        resolved["seed"] = seed;
        resolved["cluster-tol"] = cluster_tol;
        resolved["margin"] = margin;
        resolved["plot"] = plot;
        resolved["out"] = out;
        write_config(dir, resolved);

        const int n0 = optk_sim_agent_count(handle);
        const int samples = optk_sim_sample_count(handle);
        {
            std::ostringstream csv;
            csv << "t";
            for (int a = 0; a < n0; ++a) csv << ",x_" << a;
            csv << "\n";
            std::vector<double> row(n0);
            for (int k = 0; k < samples; ++k) {
                double t = 0;
                check_status(optk_sim_sample_expanded(handle, k, &t, row.data()), "sample");
                csv << fmt(t);
                for (int a = 0; a < n0; ++a) csv << "," << fmt(row[a]);
                csv << "\n";
            }
            write_file((dir / "trajectory.csv").string(), csv.str());
        }
        {
            std::ostringstream csv;
            csv << "t,i,j,kind\n";
            const int events = optk_sim_event_count(handle);
            for (int k = 0; k < events; ++k) {
                double t = 0, gap = 0;
                int i = 0, j = 0, kind = 0;
                check_status(optk_sim_event(handle, k, &t, &i, &j, &kind, &gap), "event");
                csv << fmt(t) << "," << i << "," << j << ","
                    << (kind == 0 ? "connect" : "disconnect") << "\n";
            }
            write_file((dir / "events.csv").string(), csv.str());
        }
        {
            char* json = nullptr;
            check_status(optk_sim_cluster_report_json(handle, cluster_tol, margin, &json),
                         "cluster report");
            write_file((dir / "clusters.json").string(), std::string(json) + "\n");
            optk_string_free(json);
        }
        {
            char* json = nullptr;
            check_status(optk_sim_audit_json(handle, &json), "audit");
            write_file((dir / "audit.json").string(), std::string(json) + "\n");
            optk_string_free(json);
        }
        if (plot) {
            std::vector<std::vector<std::pair<double, double>>> series(n0);
            std::vector<double> row(n0);
            for (int k = 0; k < samples; ++k) {
                double t = 0;
                check_status(optk_sim_sample_expanded(handle, k, &t, row.data()), "sample");
                for (int a = 0; a < n0; ++a) series[a].emplace_back(t, row[a]);
            }
            SvgPlotOptions po;
            po.title = "agent opinions";
            write_file((dir / "plot.svg").string(), svg_line_plot(series, po));
        }
        std::cout << "simulate: " << (optk_sim_converged(handle) ? "converged" : "horizon")
                  << ", samples=" << samples << ", events=" << optk_sim_event_count(handle)
                  << ", out=" << dir.string() << "\n";
        return 0;
    }
};

// ---- continuum ----

struct ContinuumCmd {
    std::string init = "linear:0:10";
    int K = 512;
    double T = 10.0;
    double store_interval = 0.0;
    double plateau_tol = 5e-3;
    double residual_tol = 1e-8;
    double fixed_point_tol = 1e-2;
    int max_picard_segments = 256;
    std::string out = "optk-continuum";
    std::string config;

    int run() {
        std::vector<double> knots(K + 1), values(K + 1);
        for (int k = 0; k <= K; ++k) knots[k] = static_cast<double>(k) / K;
        auto parts = split(init, ':');
        if (parts[0] == "linear" && parts.size() == 3) {
            const double a = parse_double(parts[1]), b = parse_double(parts[2]);
            for (int k = 0; k <= K; ++k) values[k] = a + (b - a) * knots[k];
        } else if (parts[0] == "const" && parts.size() == 2) {
            std::fill(values.begin(), values.end(), parse_double(parts[1]));
        } else if (parts[0] == "step") {
            throw UsageError(
                "step initial data are not regular (zero lower slope); embed the agents "
                "and run `optk simulate` instead");
        } else if (parts[0] == "file" && parts.size() == 2) {
            std::ifstream in(parts[1]);
            if (!in) throw UsageError("cannot open " + parts[1]);
            knots.clear();
            values.clear();
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#' || line.rfind("alpha", 0) == 0) continue;
                auto cols = split(line, ',');
                if (cols.size() < 2) throw UsageError("bad init csv line: " + line);
                knots.push_back(parse_double(cols[0]));
                values.push_back(parse_double(cols[1]));
            }
        } else {
            throw UsageError("unknown --init spec '" + init + "'");
        }

        optk_continuum_options copts;
        optk_continuum_options_init(&copts);
        copts.T = T;
        copts.store_interval = store_interval;
        copts.residual_tol = residual_tol;
        copts.fixed_point_tol = fixed_point_tol;
        copts.max_picard_segments = max_picard_segments;

        optk_continuum* handle = nullptr;
        check_status(optk_solve_continuum(knots.data(), values.data(),
                                          static_cast<int>(knots.size()), &copts, &handle),
                     "continuum solve");
        struct Guard {
            optk_continuum* h;
            ~Guard() { optk_continuum_free(h); }
        } guard{handle};

        const auto dir = prepare_out_dir(out);
        write_config(dir, ordered_json{{"init", init},
                                       {"K", K},
                                       {"T", T},
                                       {"store-interval", store_interval},
                                       {"plateau-tol", plateau_tol},
                                       {"residual-tol", residual_tol},
                                       {"fixed-point-tol", fixed_point_tol},
                                       {"max-picard-segments", max_picard_segments},
                                       {"out", out}});

        fs::create_directories(dir / "states");
        const int nk = optk_continuum_knot_count(handle);
        const int nt = optk_continuum_time_count(handle);
        std::vector<double> kn(nk), vals(nk);
        check_status(optk_continuum_knots(handle, kn.data()), "knots");

        ordered_json manifest;
        manifest["times"] = ordered_json::array();
        manifest["files"] = ordered_json::array();
        ordered_json bounds = ordered_json::array();
        for (int k = 0; k < nt; ++k) {
            double t = 0;
            check_status(optk_continuum_state(handle, k, &t, vals.data()), "state");
            std::ostringstream csv;
            csv << "alpha,value\n";
            for (int i = 0; i < nk; ++i) csv << fmt(kn[i]) << "," << fmt(vals[i]) << "\n";
            std::ostringstream name;
            name << "states/state_" << k << ".csv";
            write_file((dir / name.str()).string(), csv.str());
            manifest["times"].push_back(t);
            manifest["files"].push_back(name.str());
            double lo = 0, hi = 0;
            check_status(optk_continuum_certified_bounds(handle, k, &lo, &hi), "bounds");
            double smin = 1e300, smax = -1e300;
            for (int i = 0; i + 1 < nk; ++i) {
                const double s = (vals[i + 1] - vals[i]) / (kn[i + 1] - kn[i]);
                smin = std::min(smin, s);
                smax = std::max(smax, s);
            }
            bounds.push_back({{"t", t},
                              {"certified_lower", lo},
                              {"certified_upper", hi},
                              {"min_slope", smin},
                              {"max_slope", smax}});
        }
        const int segs = optk_continuum_segment_count(handle);
        manifest["segment_boundaries"] = ordered_json::array();
        manifest["contraction_factors"] = ordered_json::array();
        for (int k = 0; k < segs; ++k) {
            double te = 0, cf = 0;
            check_status(optk_continuum_segment(handle, k, &te, &cf), "segment");
            manifest["segment_boundaries"].push_back(te);
            manifest["contraction_factors"].push_back(cf);
        }
        manifest["picard_end_time"] = optk_continuum_picard_end_time(handle);
        manifest["final_residual"] = optk_continuum_final_residual(handle);
        manifest["residual_converged"] = optk_continuum_residual_converged(handle) != 0;
        write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
        write_file((dir / "bounds.json").string(), bounds.dump(2) + "\n");

        char* json = nullptr;
        check_status(optk_continuum_fixed_point_json(handle, fixed_point_tol, &json),
                     "fixed point");
        write_file((dir / "fixed_point.json").string(), std::string(json) + "\n");
        optk_string_free(json);

        json = nullptr;
        check_status(optk_continuum_cluster_report_json(handle, plateau_tol, &json),
                     "clusters");
        write_file((dir / "clusters.json").string(), std::string(json) + "\n");
        optk_string_free(json);

        std::cout << "continuum: stored " << nt << " states, residual "
                  << optk_continuum_final_residual(handle) << ", out=" << dir.string() << "\n";
        return 0;
    }
};

// ---- stability ----

struct StabilityCmd {
    std::string clusters;  // "pos:weight,pos:weight,..."
    double margin = 1e-9;
    bool probe = false;
    double delta = 1e-3;
    std::string out = "optk-stability";
    std::string config;
    SimFlags sim;

    int run() {
        std::vector<double> pos, w;
        for (const auto& tok : split(clusters, ',')) {
            if (tok.empty()) continue;
            auto pw = split(tok, ':');
            if (pw.size() != 2) throw UsageError("bad cluster spec '" + tok + "'");
            pos.push_back(parse_double(pw[0]));
            w.push_back(parse_double(pw[1]));
        }
        if (pos.size() < 1) throw UsageError("need at least one cluster");

        ordered_json report;
        report["clusters"] = ordered_json::array();
        for (std::size_t k = 0; k < pos.size(); ++k)
            report["clusters"].push_back({{"position", pos[k]}, {"weight", w[k]}});
        report["pairs"] = ordered_json::array();
        const char* names[] = {"stable", "unstable", "marginal"};
        std::string overall = "stable";
        for (std::size_t a = 0; a < pos.size(); ++a) {
            for (std::size_t b = a + 1; b < pos.size(); ++b) {
                double d = 0;
                check_status(optk_stability_threshold(w[a], w[b], &d), "threshold");
                int cls = 0;
                check_status(
                    optk_classify_pair(pos[a], w[a], pos[b], w[b], margin, &cls), "classify");
                report["pairs"].push_back({{"a", a},
                                           {"b", b},
                                           {"separation", std::abs(pos[b] - pos[a])},
                                           {"threshold", d},
                                           {"class", names[cls]}});
                if (cls == 1) overall = "unstable";
                else if (cls == 2 && overall == "stable") overall = "marginal";
            }
        }
        report["overall"] = overall;

        if (probe) {
            const auto opts = sim.to_options();
            double disp = 0;
            int merged = 0;
            check_status(optk_probe_stability(pos.data(), w.data(),
                                              static_cast<int>(pos.size()), delta, &opts,
                                              &disp, &merged),
                         "probe");
            report["probe"] = {{"delta", delta},
                               {"max_displacement", disp},
                               {"merged", merged != 0}};
        }

        const auto dir = prepare_out_dir(out);
        ordered_json resolved = sim.resolved();
        resolved["clusters"] = clusters;
        resolved["margin"] = margin;
        resolved["probe"] = probe;
        resolved["delta"] = delta;
        resolved["out"] = out;
        write_config(dir, resolved);
        write_file((dir / "stability.json").string(), report.dump(2) + "\n");
        std::cout << "stability: " << overall << ", out=" << dir.string() << "\n";
        return 0;
    }
};

// ---- compare ----

struct CompareCmd {
    std::string init = "linear:0:10";
    int K = 512;
    double T = 0.2;
    std::string ns = "50,100,200";
    std::string out = "optk-compare";
    std::string config;

    int run() {
        auto parts = split(init, ':');
        if (parts[0] != "linear" || parts.size() != 3)
            throw UsageError("compare supports --init linear:a:b");
        const double a = parse_double(parts[1]), b = parse_double(parts[2]);
        std::vector<double> knots(K + 1), values(K + 1);
        for (int k = 0; k <= K; ++k) {
            knots[k] = static_cast<double>(k) / K;
            values[k] = a + (b - a) * knots[k];
        }
        auto nlist = parse_int_list(ns);
        if (nlist.empty()) throw UsageError("empty --ns list");

        char* json = nullptr;
        check_status(optk_approximation_error_json(knots.data(), values.data(),
                                                   static_cast<int>(knots.size()),
                                                   nlist.data(),
                                                   static_cast<int>(nlist.size()), T, &json),
                     "approximation error");
        const std::string payload(json);
        optk_string_free(json);

        const auto dir = prepare_out_dir(out);
        write_config(dir, ordered_json{{"init", init},
                                       {"K", K},
                                       {"T", T},
                                       {"ns", ns},
                                       {"out", out}});
        write_file((dir / "compare.json").string(), payload + "\n");

        // Flat CSV: n,t,error.
        auto j = nlohmann::json::parse(payload);
        std::ostringstream csv;
        csv << "n,t,error\n";
        for (std::size_t row = 0; row < j["n"].size(); ++row)
            for (std::size_t k = 0; k < j["times"].size(); ++k)
                csv << j["n"][row].get<int>() << "," << fmt(j["times"][k].get<double>()) << ","
                    << fmt(j["errors"][row][k].get<double>()) << "\n";
        write_file((dir / "compare.csv").string(), csv.str());
        std::cout << "compare: out=" << dir.string() << "\n";
        return 0;
    }
};

// ---- montecarlo ----

struct MonteCarloCmd {
    std::string density = "uniform:0:10";
    std::string ns = "50,100,200";
    int trials = 100;
    std::uint64_t seed = 7;
    int threads = 0;
    std::string out = "optk-montecarlo";
    std::string config;

    int run() {
        optk_density d{};
        std::vector<double> bps, lvls;
        auto parts = split(density, ':');
        if (parts[0] == "uniform" && parts.size() == 3) {
            d.kind = 0;
            d.a = parse_double(parts[1]);
            d.b = parse_double(parts[2]);
        } else if (parts[0] == "pwc" && parts.size() == 2) {
            auto nums = parse_number_list(parts[1]);
            if (nums.size() < 3 || nums.size() % 2 == 0)
                throw UsageError("pwc density needs b0,l0,b1,l1,...,bk");
            for (std::size_t k = 0; k < nums.size(); ++k)
                (k % 2 == 0 ? bps : lvls).push_back(nums[k]);
            d.kind = 1;
            d.breakpoints = bps.data();
            d.levels = lvls.data();
            d.plateaus = static_cast<int>(lvls.size());
        } else {
            throw UsageError("unknown --density spec '" + density + "'");
        }
        auto nlist = parse_int_list(ns);
        if (nlist.empty()) throw UsageError("empty --ns list");

        char* report = nullptr;
        char* csv = nullptr;
        check_status(optk_monte_carlo(&d, nlist.data(), static_cast<int>(nlist.size()),
                                      trials, seed, threads, &report, &csv),
                     "monte carlo");
        const auto dir = prepare_out_dir(out);
        write_config(dir, ordered_json{{"density", density},
                                       {"ns", ns},
                                       {"trials", trials},
                                       {"seed", seed},
                                       {"threads", threads},
                                       {"out", out}});
        write_file((dir / "report.json").string(), std::string(report) + "\n");
        write_file((dir / "trials.csv").string(), csv);
        optk_string_free(report);
        optk_string_free(csv);
        std::cout << "montecarlo: out=" << dir.string() << "\n";
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"opinion-dynamics toolkit"};
    app.require_subcommand(1);

    SimulateCmd sim_cmd;
    auto* sim = app.add_subcommand("simulate", "event-driven discrete-agent run");
    sim->add_option("--init", sim_cmd.init, "uniform:a:b | list:v1,v2,...");
    sim->add_option("--init-file", sim_cmd.init_file, "CSV file: value[,weight] per line");
    sim->add_option("--weights", sim_cmd.weights, "comma-separated agent weights");
    sim->add_option("--n", sim_cmd.n, "agent count for sampled inits");
    sim->add_option("--seed", sim_cmd.seed, "RNG seed for sampled inits");
    sim->add_flag("--plot", sim_cmd.plot, "write plot.svg");
    sim->add_option("--cluster-tol", sim_cmd.cluster_tol, "terminal cluster tolerance");
    sim->add_option("--margin", sim_cmd.margin, "stability margin");
    sim->add_option("--out", sim_cmd.out, "output directory");
    sim->add_option("--config", sim_cmd.config, "JSON config file (flags override)");
    sim_cmd.sim.add_to(sim);

    ContinuumCmd cont_cmd;
    auto* cont = app.add_subcommand("continuum", "continuum-of-agents solver");
    cont->add_option("--init", cont_cmd.init, "linear:a:b | const:c | file:path");
    cont->add_option("--K", cont_cmd.K, "knot count");
    cont->add_option("--T", cont_cmd.T, "horizon");
    cont->add_option("--store-interval", cont_cmd.store_interval, "state storage interval");
    cont->add_option("--plateau-tol", cont_cmd.plateau_tol, "plateau extraction tolerance");
    cont->add_option("--residual-tol", cont_cmd.residual_tol, "fixed-point residual stop");
    cont->add_option("--fixed-point-tol", cont_cmd.fixed_point_tol, "F-membership tolerance");
    cont->add_option("--max-picard-segments", cont_cmd.max_picard_segments,
                     "certified segment budget");
    cont->add_option("--out", cont_cmd.out, "output directory");
    cont->add_option("--config", cont_cmd.config, "JSON config file (flags override)");

    StabilityCmd stab_cmd;
    auto* stab = app.add_subcommand("stability", "threshold classification and probes");
    stab->add_option("--clusters", stab_cmd.clusters, "pos:weight,pos:weight,...")
        ->required();
    stab->add_option("--margin", stab_cmd.margin, "marginal band half-width");
    stab->add_flag("--probe", stab_cmd.probe, "run perturbing-agent probes");
    stab->add_option("--delta", stab_cmd.delta, "probe agent weight");
    stab->add_option("--out", stab_cmd.out, "output directory");
    stab->add_option("--config", stab_cmd.config, "JSON config file (flags override)");
    stab_cmd.sim.add_to(stab);

    CompareCmd cmp_cmd;
    auto* cmp = app.add_subcommand("compare", "discrete-vs-continuum error ladder");
    cmp->add_option("--init", cmp_cmd.init, "linear:a:b");
    cmp->add_option("--K", cmp_cmd.K, "knot count");
    cmp->add_option("--T", cmp_cmd.T, "horizon");
    cmp->add_option("--ns", cmp_cmd.ns, "comma-separated agent counts");
    cmp->add_option("--out", cmp_cmd.out, "output directory");
    cmp->add_option("--config", cmp_cmd.config, "JSON config file (flags override)");

    MonteCarloCmd mc_cmd;
    auto* mc = app.add_subcommand("montecarlo", "random-initial-condition harness");
    mc->add_option("--density", mc_cmd.density, "uniform:a:b | pwc:b0,l0,...,bk");
    mc->add_option("--ns", mc_cmd.ns, "comma-separated agent counts");
    mc->add_option("--trials", mc_cmd.trials, "trials per n");
    mc->add_option("--seed", mc_cmd.seed, "master seed");
    mc->add_option("--threads", mc_cmd.threads, "worker threads (0 = hardware)");
    mc->add_option("--out", mc_cmd.out, "output directory");
    mc->add_option("--config", mc_cmd.config, "JSON config file (flags override)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (sim->parsed()) {
            ConfigLayer cfg(sim, sim_cmd.config);
            cfg.merge("init", sim_cmd.init);
            cfg.merge("init-file", sim_cmd.init_file);
            cfg.merge("weights", sim_cmd.weights);
            cfg.merge("n", sim_cmd.n);
            cfg.merge("seed", sim_cmd.seed);
            cfg.merge("plot", sim_cmd.plot);
            cfg.merge("cluster-tol", sim_cmd.cluster_tol);
            cfg.merge("margin", sim_cmd.margin);
            cfg.merge("out", sim_cmd.out);
            sim_cmd.sim.merge(cfg);
            cfg.finish();
            return sim_cmd.run();
        }
        if (cont->parsed()) {
            ConfigLayer cfg(cont, cont_cmd.config);
            cfg.merge("init", cont_cmd.init);
            cfg.merge("K", cont_cmd.K);
            cfg.merge("T", cont_cmd.T);
            cfg.merge("store-interval", cont_cmd.store_interval);
            cfg.merge("plateau-tol", cont_cmd.plateau_tol);
            cfg.merge("residual-tol", cont_cmd.residual_tol);
            cfg.merge("fixed-point-tol", cont_cmd.fixed_point_tol);
            cfg.merge("max-picard-segments", cont_cmd.max_picard_segments);
            cfg.merge("out", cont_cmd.out);
            cfg.finish();
            return cont_cmd.run();
        }
        if (stab->parsed()) {
            ConfigLayer cfg(stab, stab_cmd.config);
            cfg.merge("clusters", stab_cmd.clusters);
            cfg.merge("margin", stab_cmd.margin);
            cfg.merge("probe", stab_cmd.probe);
            cfg.merge("delta", stab_cmd.delta);
            cfg.merge("out", stab_cmd.out);
            stab_cmd.sim.merge(cfg);
            cfg.finish();
            return stab_cmd.run();
        }
        if (cmp->parsed()) {
            ConfigLayer cfg(cmp, cmp_cmd.config);
            cfg.merge("init", cmp_cmd.init);
            cfg.merge("K", cmp_cmd.K);
            cfg.merge("T", cmp_cmd.T);
            cfg.merge("ns", cmp_cmd.ns);
            cfg.merge("out", cmp_cmd.out);
            cfg.finish();
            return cmp_cmd.run();
        }
        if (mc->parsed()) {
            ConfigLayer cfg(mc, mc_cmd.config);
            cfg.merge("density", mc_cmd.density);
            cfg.merge("ns", mc_cmd.ns);
            cfg.merge("trials", mc_cmd.trials);
            cfg.merge("seed", mc_cmd.seed);
            cfg.merge("threads", mc_cmd.threads);
            cfg.merge("out", mc_cmd.out);
            cfg.finish();
            return mc_cmd.run();
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
