#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "odpa/core.hpp"
#include "odpa/dpa.hpp"
#include "odpa/metrics.hpp"

namespace odpa {

inline constexpr const char* kToolName = "odpa";
inline constexpr const char* kToolVersion = "0.1.0";

/// Malformed scenario JSON: syntax errors, wrong types, unknown keys.
/// `field` is the dotted path of the offending entry ("" for syntax errors).
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string field, const std::string& message);
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Filesystem failure; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses a scenario document without validating it.
Scenario parse_scenario(const std::string& json_text);

/// Canonical JSON (sorted keys, round-trip precision).
std::string scenario_to_json(const Scenario& scenario);

/// Reads and parses a file, then validates: throws SchemaError for
/// malformed documents and ScenarioError for violated invariants. Run
/// manifests are accepted too; their realized scenario is loaded.
Scenario load_scenario(const std::filesystem::path& path);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// FNV-1a 64-bit hash of the canonical JSON, as 16 hex digits.
std::string scenario_digest(const Scenario& scenario);

/// %.9g, used for times in file names and tables.
std::string format_time(double t);

struct RunManifest {
    std::string tool = kToolName;
    std::string version = kToolVersion;
    std::string scenario_digest;
    std::uint64_t seed = 0;
    Scenario realized;
    double wall_clock_seconds = 0.0;
    std::string started_at;  // UTC, ISO 8601
    StepStats stats;
    bool stopped_early = false;
    std::vector<double> snapshot_times;
};

RunManifest make_manifest(const Trajectory& trajectory, double wall_clock_seconds, const std::string& started_at);
std::string manifest_to_json(const RunManifest& manifest);
RunManifest parse_manifest(const std::string& json_text);

/// Snapshot CSVs, metrics.csv and manifest.json.
void write_snapshots(const Trajectory& trajectory, const std::filesystem::path& dir, const RunManifest& manifest,
                     int bins = kDefaultHistogramBins);

/// metrics.csv only: one row per snapshot.
void write_metrics(const Trajectory& trajectory, const std::filesystem::path& path, int bins = kDefaultHistogramBins);

/// Plot-ready tables: density curves, initial/final histograms, node
/// scatter and connectivity edges.
void write_plot_data(const Trajectory& trajectory, const std::filesystem::path& dir, int bins = kDefaultHistogramBins);

/// Particles of one snapshot file, indexed [agent][k].
std::vector<std::vector<double>> read_particles_csv(const std::filesystem::path& path);

}  // namespace odpa
