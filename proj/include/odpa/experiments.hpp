#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "odpa/core.hpp"

namespace odpa {

/// One sweep dimension. `parameter` is a dotted key of the scenario
/// document (aliases: n_particles, t_final, dt, snapshot_every -> run.*);
/// values are JSON texts so presets like "\"blue\"" and objects work.
struct SweepAxis {
    std::string parameter;
    std::vector<std::string> values;
};

struct SweepSpec {
    Scenario base;
    std::vector<SweepAxis> axes;
    std::vector<std::uint64_t> seeds;  // empty: the base scenario's seed only
};

/// Reads a sweep file: {"base": path or inline scenario, "axes": [...], "seeds": [...]}.
/// Relative base paths resolve against the sweep file's directory.
SweepSpec load_sweep(const std::filesystem::path& path);

/// Axis values deduplicated (first occurrence kept, compared as parsed JSON).
SweepSpec normalized(const SweepSpec& spec);

struct SweepRun {
    std::size_t index = 0;
    std::vector<std::pair<std::string, std::string>> assignment;  // parameter -> canonical JSON value
    std::uint64_t seed = 0;
    Scenario scenario;
};

/// Cross product of axes (first axis slowest) times seeds (fastest).
/// Throws SchemaError / ScenarioError when an assignment produces an
/// invalid scenario.
std::vector<SweepRun> enumerate_sweep(const SweepSpec& spec);

struct SweepResult {
    SweepRun run;
    bool ok = false;
    std::string error;
    double t_final = 0.0;
    double polarization_index = 0.0;
    double bimodality_gap = 0.0;
    double initial_bimodality_gap = 0.0;
    std::size_t n_clusters = 0;
    double cluster_opinion_spread = 0.0;
    double wall_clock_seconds = 0.0;
};

/// Runs every grid point with up to `parallelism` worker threads. Failures
/// are recorded, not thrown. When `out_dir` is set, writes summary.csv and
/// per-run metrics/manifests under run_<index>/.
std::vector<SweepResult> run_sweep(const SweepSpec& spec, int parallelism,
                                   const std::optional<std::filesystem::path>& out_dir);

void write_sweep_summary(const std::vector<SweepResult>& results, const std::filesystem::path& path);

struct ConvergenceRow {
    int n_coarse = 0;
    int n_fine = 0;
    std::vector<double> w1_per_agent;  // W1(rho^{N}(T), rho^{fine}(T))
    double max_w1 = 0.0;
    double max_node_discrepancy = 0.0;
    // Empirical-measure gap at the coarse level, with its sigma_N |Omega| / 2 bound.
    double max_empirical_gap = 0.0;
    double empirical_gap_bound = 0.0;
    bool empirical_gap_ok = true;  // gap_i <= bound_i for every agent
};

struct ConvergenceReport {
    std::vector<int> levels;
    std::vector<ConvergenceRow> rows;  // one per consecutive pair of levels
    std::vector<double> level_wall_clock;
};

/// Simulates the scenario at each N (ascending, at least two) from the same
/// realized initial densities and compares consecutive levels at T.
ConvergenceReport run_convergence(const Scenario& scenario, const std::vector<int>& levels);

/// convergence.csv (summary per pair) and convergence_agents.csv (per agent).
void write_convergence(const ConvergenceReport& report, const std::filesystem::path& dir);

}  // namespace odpa
