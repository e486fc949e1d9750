#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "odpa/core.hpp"
#include "odpa/dpa.hpp"
#include "odpa/experiments.hpp"
#include "odpa/io.hpp"

namespace fs = std::filesystem;
using namespace odpa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> radius;
    bool no_diffusion = false;
    std::optional<int> particles;
    std::optional<double> dt;
    std::optional<double> t_final;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Seed for random initial conditions");
    cmd->add_option("--radius", o.radius, "Interaction radius (number or 'infinite')");
    cmd->add_flag("--no-diffusion", o.no_diffusion, "Disable the diffusion mobility");
    cmd->add_option("--particles", o.particles, "Number of opinion intervals N");
    cmd->add_option("--dt", o.dt, "Time step");
    cmd->add_option("--t-final", o.t_final, "Final time");
}

double parse_radius(const std::string& text) {
    if (text == "infinite" || text == "inf") return kInfiniteRadius;
    try {
        std::size_t used = 0;
        const double r = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return r;
    } catch (const std::exception&) {
        throw SchemaError("--radius", "expected a number or 'infinite', got '" + text + "'");
    }
}

Scenario apply(Scenario s, const Overrides& o) {
    if (o.seed) {
        if (!s.random_agents) {
            std::cerr << "warning: --seed has no effect; the scenario lists its agents explicitly\n";
        }
        s.seed = *o.seed;
    }
    if (o.radius) s.interaction_radius = parse_radius(*o.radius);
    if (o.no_diffusion) s.diffusion_enabled = false;
    if (o.particles) s.run.n_particles = *o.particles;
    if (o.dt) s.run.dt = *o.dt;
    if (o.t_final) s.run.t_final = *o.t_final;
    auto violations = validate(s);
    if (!violations.empty()) throw ScenarioError(std::move(violations));
    return s;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<int> parse_levels(const std::string& text) {
    std::vector<int> levels;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            const int n = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            levels.push_back(n);
        } catch (const std::exception&) {
            throw SchemaError("--levels", "expected a comma-separated list of integers, got '" + text + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (levels.size() < 2) throw SchemaError("--levels", "need at least two levels");
    for (std::size_t n = 1; n < levels.size(); ++n) {
        if (levels[n] <= levels[n - 1]) throw SchemaError("--levels", "levels must be strictly ascending");
    }
    if (levels.front() < 2) throw SchemaError("--levels", "levels must be at least 2");
    return levels;
}

int cmd_validate(const fs::path& path) {
    const Scenario s = parse_scenario([&] {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path.string());
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }());
    const auto violations = validate(s);
    if (violations.empty()) {
        std::cout << path.string() << ": valid\n";
        return kExitOk;
    }
    for (const auto& v : violations) std::cout << v.field << ": " << v.message << " [" << v.code << "]\n";
    return kExitInvalid;
}

int cmd_run(const fs::path& path, const fs::path& out, const Overrides& o, int bins) {
    const Scenario s = apply(load_scenario(path), o);
    const auto started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    const Trajectory traj = simulate(s);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const RunManifest manifest = make_manifest(traj, seconds, started);
    write_snapshots(traj, out, manifest, bins);
    write_plot_data(traj, out, bins);
    std::cout << "wrote " << traj.snapshots.size() << " snapshots to " << out.string() << " (" << traj.stats.steps
              << " steps, " << traj.stats.rejections << " rejections, " << seconds << " s)\n";
    return kExitOk;
}

int cmd_sweep(const fs::path& path, const fs::path& out, int jobs) {
    const SweepSpec spec = load_sweep(path);
    const auto results = run_sweep(spec, jobs, out);
    std::size_t failed = 0;
    for (const auto& r : results) {
        if (!r.ok) {
            ++failed;
            std::cerr << "run " << r.run.index << " failed: " << r.error << "\n";
        }
    }
    std::cout << results.size() << " runs, " << failed << " failed; summary in " << (out / "summary.csv").string()
              << "\n";
    return failed == 0 ? kExitOk : kExitRuntime;
}

int cmd_converge(const fs::path& path, const fs::path& out, const std::string& levels_text, const Overrides& o) {
    const auto levels = parse_levels(levels_text);
    const Scenario s = apply(load_scenario(path), o);
    const auto report = run_convergence(s, levels);
    write_convergence(report, out);
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
        const auto& row = report.rows[r];
        std::cout << "N=" << row.n_coarse << " vs " << row.n_fine << ": max W1 " << row.max_w1;
        if (r > 0 && report.rows[r - 1].max_w1 > 0.0) std::cout << " (ratio " << row.max_w1 / report.rows[r - 1].max_w1 << ")";
        std::cout << ", max node discrepancy " << row.max_node_discrepancy << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic particle approximation of opinion densities on a co-evolving network"};
    app.require_subcommand(1);

    fs::path scenario_path;
    std::string out_dir;
    std::string out_positional;
    Overrides overrides;
    int bins = kDefaultHistogramBins;

    auto* run = app.add_subcommand("run", "Simulate a scenario (or replay a manifest) and write outputs");
    run->add_option("scenario", scenario_path, "Scenario JSON or manifest.json")->required()->check(CLI::ExistingFile);
    run->add_option("out_dir", out_positional, "Output directory");
    run->add_option("--out", out_dir, "Output directory (default: out)");
    run->add_option("--bins", bins, "Histogram bins")->check(CLI::Range(2, 100000));
    add_override_flags(run, overrides);

    fs::path sweep_path;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid and write summary.csv");
    sweep->add_option("sweep", sweep_path, "Sweep JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("out_dir", out_positional, "Output directory");
    sweep->add_option("--out", out_dir, "Output directory (default: out)");
    sweep->add_option("-j,--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

    std::string levels = "50,100,200";
    auto* converge = app.add_subcommand("converge", "Self-convergence study across particle counts");
    converge->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    converge->add_option("out_dir", out_positional, "Output directory");
    converge->add_option("--out", out_dir, "Output directory (default: out)");
    converge->add_option("--levels", levels, "Ascending particle counts, comma separated");
    add_override_flags(converge, overrides);

    auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file and list violations");
    validate_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInvalid;
    }

    const fs::path out = !out_dir.empty() ? fs::path(out_dir) : !out_positional.empty() ? fs::path(out_positional)
                                                                                          : fs::path("out");
    try {
        if (*validate_cmd) return cmd_validate(scenario_path);
        if (*run) return cmd_run(scenario_path, out, overrides, bins);
        if (*sweep) return cmd_sweep(sweep_path, out, jobs);
        if (*converge) return cmd_converge(scenario_path, out, levels, overrides);
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
