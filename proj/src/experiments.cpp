#include "odpa/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "odpa/dpa.hpp"
#include "odpa/io.hpp"
#include "odpa/metrics.hpp"
#include "odpa/transport.hpp"

namespace odpa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve_alias(const std::string& parameter) {
    static const char* run_keys[] = {"n_particles", "t_final", "dt", "snapshot_every", "min_gap", "early_stop"};
    for (const char* k : run_keys) {
        if (parameter == k) return std::string("run.") + k;
    }
    return parameter;
}

void assign(json& doc, const std::string& dotted, const json& value) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw SchemaError(dotted, "malformed sweep parameter");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
        node = &(*node)[key];
        start = dot + 1;
    }
}

json parse_json(const std::string& text, const std::string& field) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(field, std::string("malformed JSON: ") + e.what());
    }
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

SweepSpec load_sweep(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const json j = parse_json(text, "");
    if (!j.is_object()) throw SchemaError("", "sweep file must be an object");
    for (const auto& item : j.items()) {
        if (item.key() != "base" && item.key() != "axes" && item.key() != "seeds") {
            throw SchemaError(item.key(), "unknown key");
        }
    }
    SweepSpec spec;
    if (!j.contains("base")) throw SchemaError("base", "missing required key");
    const json& base = j.at("base");
    if (base.is_string()) {
        fs::path p = base.get<std::string>();
        if (p.is_relative()) p = path.parent_path() / p;
        spec.base = load_scenario(p);
    } else {
        spec.base = parse_scenario(base.dump());
    }
    if (j.contains("axes")) {
        const json& axes = j.at("axes");
        if (!axes.is_array()) throw SchemaError("axes", "expected an array");
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const std::string field = "axes[" + std::to_string(a) + "]";
            const json& ax = axes[a];
            if (!ax.is_object() || !ax.contains("parameter") || !ax.contains("values") ||
                !ax.at("parameter").is_string() || !ax.at("values").is_array() || ax.size() != 2) {
                throw SchemaError(field, "expected {\"parameter\": name, \"values\": [...]}");
            }
            SweepAxis axis;
            axis.parameter = ax.at("parameter").get<std::string>();
            for (const auto& v : ax.at("values")) axis.values.push_back(v.dump());
            if (axis.values.empty()) throw SchemaError(field + ".values", "axis needs at least one value");
            spec.axes.push_back(std::move(axis));
        }
    }
    if (j.contains("seeds")) {
        const json& seeds = j.at("seeds");
        if (!seeds.is_array()) throw SchemaError("seeds", "expected an array of unsigned integers");
        for (const auto& s : seeds) {
            if (!s.is_number_unsigned()) throw SchemaError("seeds", "expected an array of unsigned integers");
            spec.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    return spec;
}

SweepSpec normalized(const SweepSpec& spec) {
    SweepSpec out = spec;
    for (auto& axis : out.axes) {
        std::vector<std::string> unique;
        std::vector<json> seen;
        for (const auto& v : axis.values) {
            const json parsed = parse_json(v, axis.parameter);
            if (std::find(seen.begin(), seen.end(), parsed) != seen.end()) continue;
            seen.push_back(parsed);
            unique.push_back(parsed.dump());
        }
        axis.values = std::move(unique);
    }
    std::vector<std::uint64_t> seeds;
    for (auto s : out.seeds) {
        if (std::find(seeds.begin(), seeds.end(), s) == seeds.end()) seeds.push_back(s);
    }
    out.seeds = std::move(seeds);
    return out;
}

std::vector<SweepRun> enumerate_sweep(const SweepSpec& input) {
    const SweepSpec spec = normalized(input);
    const json base = parse_json(scenario_to_json(spec.base), "base");
    std::vector<std::uint64_t> seeds = spec.seeds;
    if (seeds.empty()) seeds.push_back(spec.base.seed);

    std::size_t combos = 1;
    for (const auto& axis : spec.axes) combos *= axis.values.size();

    std::vector<SweepRun> runs;
    std::vector<std::size_t> digit(spec.axes.size(), 0);
    for (std::size_t c = 0; c < combos; ++c) {
        // Mixed-radix counter, last axis fastest.
        std::size_t rem = c;
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            digit[a] = rem % spec.axes[a].values.size();
            rem /= spec.axes[a].values.size();
        }
        for (auto seed : seeds) {
            json doc = base;
            SweepRun run;
            for (std::size_t a = 0; a < spec.axes.size(); ++a) {
                const auto& value = spec.axes[a].values[digit[a]];
                assign(doc, resolve_alias(spec.axes[a].parameter), parse_json(value, spec.axes[a].parameter));
                run.assignment.emplace_back(spec.axes[a].parameter, value);
            }
            doc["seed"] = seed;
            run.index = runs.size();
            run.seed = seed;
            run.scenario = parse_scenario(doc.dump());
            auto violations = validate(run.scenario);
            if (!violations.empty()) throw ScenarioError(std::move(violations));
            runs.push_back(std::move(run));
        }
    }
    return runs;
}

std::vector<SweepResult> run_sweep(const SweepSpec& spec, int parallelism, const std::optional<fs::path>& out_dir) {
    const auto runs = enumerate_sweep(spec);
    std::vector<SweepResult> results(runs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        while (true) {
            const std::size_t n = next.fetch_add(1);
            if (n >= runs.size()) return;
            SweepResult& r = results[n];
            r.run = runs[n];
            const auto started = utc_now();
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const Trajectory traj = simulate(r.run.scenario);
                const auto& first = traj.snapshots.front();
                const auto& last = traj.snapshots.back();
                const double radius = traj.scenario.interaction_radius;
                const MetricsRecord m = compute_metrics(last, first, radius);
                r.t_final = last.t;
                r.polarization_index = m.polarization_index;
                r.bimodality_gap = m.bimodality_gap;
                r.n_clusters = m.n_clusters;
                r.cluster_opinion_spread = m.cluster_opinion_spread;
                const auto initial_means = mean_opinions(first);
                r.initial_bimodality_gap = initial_means.size() >= 2 ? bimodality_gap(initial_means) : 0.0;
                r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (out_dir) {
                    const fs::path dir = *out_dir / ("run_" + std::to_string(n));
                    fs::create_directories(dir);
                    write_metrics(traj, dir / "metrics.csv");
                    std::ofstream mf(dir / "manifest.json");
                    mf << manifest_to_json(make_manifest(traj, r.wall_clock_seconds, started)) << "\n";
                    if (!mf) throw IoError("write failed for " + (dir / "manifest.json").string());
                }
                r.ok = true;
            } catch (const std::exception& e) {
                r.ok = false;
                r.error = e.what();
                r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
        }
    };

    const std::size_t width = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), 1,
                                                      std::max<std::size_t>(runs.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < width; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    if (out_dir) {
        fs::create_directories(*out_dir);
        write_sweep_summary(results, *out_dir / "summary.csv");
    }
    return results;
}

void write_sweep_summary(const std::vector<SweepResult>& results, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    std::vector<std::string> params;
    if (!results.empty()) {
        for (const auto& [name, value] : results.front().run.assignment) params.push_back(name);
    }
    out << "run";
    for (const auto& p : params) out << "," << p;
    out << ",seed,status,t_final,polarization_index,bimodality_gap,initial_bimodality_gap,n_clusters,"
           "cluster_opinion_spread,wall_clock_seconds,error\n";
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c == '\n' ? ' ' : c;
        }
        return q + "\"";
    };
    for (const auto& r : results) {
        out << r.run.index;
        for (const auto& [name, value] : r.run.assignment) out << "," << quote(value);
        out << "," << r.run.seed << "," << (r.ok ? "ok" : "failed") << ",";
        if (r.ok) {
            out << format_time(r.t_final) << "," << r.polarization_index << "," << r.bimodality_gap << ","
                << r.initial_bimodality_gap << "," << r.n_clusters << "," << r.cluster_opinion_spread;
        } else {
            out << ",,,,,";
        }
        out << "," << r.wall_clock_seconds << "," << quote(r.error) << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

ConvergenceReport run_convergence(const Scenario& scenario, const std::vector<int>& levels) {
    if (levels.size() < 2) throw std::invalid_argument("run_convergence: need at least two levels");
    for (std::size_t n = 1; n < levels.size(); ++n) {
        if (levels[n] <= levels[n - 1]) throw std::invalid_argument("run_convergence: levels must be ascending");
    }
    const Scenario realized = realize(scenario);
    ConvergenceReport report;
    report.levels = levels;
    std::vector<ParticleState> finals;
    for (int N : levels) {
        Scenario s = realized;
        s.run.n_particles = N;
        const auto t0 = std::chrono::steady_clock::now();
        finals.push_back(simulate(s).snapshots.back());
        report.level_wall_clock.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    for (std::size_t n = 0; n + 1 < levels.size(); ++n) {
        const ParticleState& coarse = finals[n];
        const ParticleState& fine = finals[n + 1];
        ConvergenceRow row;
        row.n_coarse = levels[n];
        row.n_fine = levels[n + 1];
        for (std::size_t i = 0; i < coarse.n_agents; ++i) {
            const double w1 = wasserstein1(reconstruct(coarse.opinions(i), coarse.sigma_N[i]),
                                           reconstruct(fine.opinions(i), fine.sigma_N[i]));
            row.w1_per_agent.push_back(w1);
            row.max_w1 = std::max(row.max_w1, w1);
            double d2 = 0.0;
            for (std::size_t c = 0; c < coarse.dim; ++c) {
                const double diff = coarse.node(i)[c] - fine.node(i)[c];
                d2 += diff * diff;
            }
            row.max_node_discrepancy = std::max(row.max_node_discrepancy, std::sqrt(d2));
            const double gap = empirical_wasserstein_gap(coarse.opinions(i), coarse.sigma_N[i]);
            const double bound = coarse.sigma_N[i] * kOmegaLength / 2.0;
            row.max_empirical_gap = std::max(row.max_empirical_gap, gap);
            row.empirical_gap_bound = std::max(row.empirical_gap_bound, bound);
            if (!(gap <= bound)) row.empirical_gap_ok = false;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_convergence(const ConvergenceReport& report, const fs::path& dir) {
    fs::create_directories(dir);
    {
        const auto path = dir / "convergence.csv";
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path.string());
        out.precision(17);
        out << "n_coarse,n_fine,max_w1,w1_ratio,max_node_discrepancy,max_empirical_gap,empirical_gap_bound,"
               "empirical_gap_ok\n";
        for (std::size_t r = 0; r < report.rows.size(); ++r) {
            const auto& row = report.rows[r];
            out << row.n_coarse << "," << row.n_fine << "," << row.max_w1 << ",";
            if (r > 0 && report.rows[r - 1].max_w1 > 0.0) out << row.max_w1 / report.rows[r - 1].max_w1;
            out << "," << row.max_node_discrepancy << "," << row.max_empirical_gap << "," << row.empirical_gap_bound
                << "," << (row.empirical_gap_ok ? "true" : "false") << "\n";
        }
        if (!out) throw IoError("write failed for " + path.string());
    }
    {
        const auto path = dir / "convergence_agents.csv";
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path.string());
        out.precision(17);
        out << "n_coarse,n_fine,agent,w1\n";
        for (const auto& row : report.rows) {
            for (std::size_t i = 0; i < row.w1_per_agent.size(); ++i) {
                out << row.n_coarse << "," << row.n_fine << "," << i << "," << row.w1_per_agent[i] << "\n";
            }
        }
        if (!out) throw IoError("write failed for " + path.string());
    }
}

}  // namespace odpa
