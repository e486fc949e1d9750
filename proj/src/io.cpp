#include "odpa/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "odpa/kernels.hpp"
#include "odpa/transport.hpp"

namespace odpa {

using nlohmann::json;
namespace fs = std::filesystem;

SchemaError::SchemaError(std::string field, const std::string& message)
    : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

namespace {

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

// Walks one JSON object; every key must be consumed, otherwise the
// leftover keys are reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw SchemaError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string field(const std::string& key) const { return join(path_, key); }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number()) throw SchemaError(field(key), "expected a number");
        return v.get<double>();
    }

    // A number or the string "infinite".
    double extended(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (v.is_string() && v.get<std::string>() == "infinite") return kInfiniteRadius;
        if (!v.is_number()) throw SchemaError(field(key), "expected a number or \"infinite\"");
        return v.get<double>();
    }

    long long integer(const std::string& key, long long fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw SchemaError(field(key), "expected an integer");
        return v.get<long long>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw SchemaError(field(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw SchemaError(field(key), "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw SchemaError(field(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t n = 0; n < v.size(); ++n) {
            if (!v[n].is_number()) throw SchemaError(field(key) + "[" + std::to_string(n) + "]", "expected a number");
            out.push_back(v[n].get<double>());
        }
        return out;
    }

    std::pair<double, double> range(const std::string& key, std::pair<double, double> fallback) {
        if (!has(key)) return fallback;
        const auto v = numbers(key);
        if (v.size() != 2) throw SchemaError(field(key), "expected [low, high]");
        return {v[0], v[1]};
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw SchemaError(field(item.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

DensitySpec parse_density(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    const std::string type = r.has("type") ? r.string("type") : "gaussian";
    DensitySpec out;
    if (type == "gaussian") {
        GaussianDensity g;
        if (!r.has("mean")) throw SchemaError(r.field("mean"), "missing required key");
        if (!r.has("variance")) throw SchemaError(r.field("variance"), "missing required key");
        g.mean = r.number("mean", 0.0);
        g.variance = r.number("variance", 0.0);
        out = g;
    } else if (type == "tabulated") {
        TabulatedDensity t;
        if (!r.has("x") || !r.has("values")) throw SchemaError(path, "tabulated density needs x and values");
        t.x = r.numbers("x");
        t.values = r.numbers("values");
        out = t;
    } else {
        throw SchemaError(r.field("type"), "expected \"gaussian\" or \"tabulated\"");
    }
    r.finish();
    return out;
}

AgentInit parse_agent(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    AgentInit a;
    a.mass = r.number("mass", 1.0);
    if (!r.has("density")) throw SchemaError(r.field("density"), "missing required key");
    a.density = parse_density(r.raw("density"), r.field("density"));
    if (!r.has("position")) throw SchemaError(r.field("position"), "missing required key");
    a.position = r.numbers("position");
    r.finish();
    return a;
}

RandomAgentsSpec parse_random(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    RandomAgentsSpec s;
    s.count = static_cast<int>(r.integer("count", s.count));
    std::tie(s.box_min, s.box_max) = r.range("box", {s.box_min, s.box_max});
    std::tie(s.mean_min, s.mean_max) = r.range("mean_range", {s.mean_min, s.mean_max});
    std::tie(s.variance_min, s.variance_max) = r.range("variance_range", {s.variance_min, s.variance_max});
    s.mass = r.number("mass", s.mass);
    s.mass_jitter = r.number("mass_jitter", s.mass_jitter);
    r.finish();
    return s;
}

AttitudeParams parse_attitude(const json& j, const std::string& path) {
    if (j.is_string()) {
        const auto p = AttitudeParams::preset(j.get<std::string>());
        if (!p) throw SchemaError(path, "unknown attitude preset \"" + j.get<std::string>() + "\"");
        return *p;
    }
    ObjectReader r(j, path);
    AttitudeParams p;
    for (const char* key : {"r_f", "r_a", "r_r", "r_l"}) {
        if (!r.has(key)) throw SchemaError(r.field(key), "missing required key");
    }
    p.r_f = r.number("r_f", 0.0);
    p.r_a = r.number("r_a", 0.0);
    p.r_r = r.number("r_r", 0.0);
    p.r_l = r.number("r_l", 0.0);
    r.finish();
    return p;
}

PhiSpec parse_phi(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    PhiSpec phi;
    const std::string kind = r.has("kind") ? r.string("kind") : "linear";
    if (kind == "linear") {
        phi.kind = PhiSpec::Kind::Linear;
    } else if (kind == "power") {
        phi.kind = PhiSpec::Kind::Power;
        phi.exponent = r.number("exponent", 2.0);
        phi.rho_max = r.extended("rho_max", phi.rho_max);
    } else {
        throw SchemaError(r.field("kind"), "expected \"linear\" or \"power\"");
    }
    r.finish();
    return phi;
}

RunParams parse_run(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    RunParams p;
    p.n_particles = static_cast<int>(r.integer("n_particles", p.n_particles));
    p.t_final = r.number("t_final", p.t_final);
    p.dt = r.number("dt", p.dt);
    p.snapshot_every = r.number("snapshot_every", p.snapshot_every);
    p.min_gap = r.number("min_gap", p.min_gap);
    p.max_halvings = static_cast<int>(r.integer("max_halvings", p.max_halvings));
    p.stability_cap = r.boolean("stability_cap", p.stability_cap);
    p.stability_safety = r.number("stability_safety", p.stability_safety);
    p.early_stop = r.boolean("early_stop", p.early_stop);
    p.stop_speed = r.number("stop_speed", p.stop_speed);
    p.stop_steps = static_cast<int>(r.integer("stop_steps", p.stop_steps));
    r.finish();
    return p;
}

Scenario scenario_from_json(const json& j) {
    ObjectReader r(j, "");
    Scenario s;
    if (r.has("agents")) {
        const json& agents = r.raw("agents");
        if (!agents.is_array()) throw SchemaError("agents", "expected an array");
        for (std::size_t i = 0; i < agents.size(); ++i) {
            s.agents.push_back(parse_agent(agents[i], "agents[" + std::to_string(i) + "]"));
        }
    }
    if (r.has("random_agents")) s.random_agents = parse_random(r.raw("random_agents"), "random_agents");
    if (r.has("attitude")) s.attitude = parse_attitude(r.raw("attitude"), "attitude");
    s.interaction_radius = r.extended("interaction_radius", s.interaction_radius);
    s.diffusion_enabled = r.boolean("diffusion_enabled", s.diffusion_enabled);
    if (r.has("phi")) s.phi = parse_phi(r.raw("phi"), "phi");
    s.network_dim = static_cast<int>(r.integer("network_dim", s.network_dim));
    if (r.has("run")) s.run = parse_run(r.raw("run"), "run");
    const long long seed = r.integer("seed", 0);
    if (seed < 0) throw SchemaError("seed", "expected an unsigned integer");
    s.seed = static_cast<std::uint64_t>(seed);
    s.network_velocity_sign = static_cast<int>(r.integer("network_velocity_sign", s.network_velocity_sign));
    r.finish();
    return s;
}

json extended_to_json(double v) {
    if (std::isinf(v) && v > 0) return "infinite";
    return v;
}

json scenario_json(const Scenario& s) {
    json j;
    json agents = json::array();
    for (const auto& a : s.agents) {
        json ja;
        ja["mass"] = a.mass;
        if (const auto* g = std::get_if<GaussianDensity>(&a.density)) {
            ja["density"] = {{"type", "gaussian"}, {"mean", g->mean}, {"variance", g->variance}};
        } else {
            const auto& t = std::get<TabulatedDensity>(a.density);
            ja["density"] = {{"type", "tabulated"}, {"x", t.x}, {"values", t.values}};
        }
        ja["position"] = a.position;
        agents.push_back(ja);
    }
    j["agents"] = agents;
    if (s.random_agents) {
        const auto& r = *s.random_agents;
        j["random_agents"] = {{"count", r.count},
                              {"box", {r.box_min, r.box_max}},
                              {"mean_range", {r.mean_min, r.mean_max}},
                              {"variance_range", {r.variance_min, r.variance_max}},
                              {"mass", r.mass},
                              {"mass_jitter", r.mass_jitter}};
    }
    j["attitude"] = {{"r_f", s.attitude.r_f}, {"r_a", s.attitude.r_a}, {"r_r", s.attitude.r_r}, {"r_l", s.attitude.r_l}};
    j["interaction_radius"] = extended_to_json(s.interaction_radius);
    j["diffusion_enabled"] = s.diffusion_enabled;
    if (s.phi.kind == PhiSpec::Kind::Linear) {
        j["phi"] = {{"kind", "linear"}};
    } else {
        j["phi"] = {{"kind", "power"}, {"exponent", s.phi.exponent}, {"rho_max", extended_to_json(s.phi.rho_max)}};
    }
    j["network_dim"] = s.network_dim;
    j["network_velocity_sign"] = s.network_velocity_sign;
    const auto& r = s.run;
    j["run"] = {{"n_particles", r.n_particles},       {"t_final", r.t_final},
                {"dt", r.dt},                         {"snapshot_every", r.snapshot_every},
                {"min_gap", r.min_gap},               {"max_halvings", r.max_halvings},
                {"stability_cap", r.stability_cap},   {"stability_safety", r.stability_safety},
                {"early_stop", r.early_stop},         {"stop_speed", r.stop_speed},
                {"stop_steps", r.stop_steps}};
    j["seed"] = s.seed;
    return j;
}

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("malformed JSON: ") + e.what());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string metrics_header(std::size_t agents, int bins) {
    std::ostringstream os;
    os << "t,n_clusters,cluster_opinion_spread,polarization_index,bimodality_gap";
    for (std::size_t i = 0; i < agents; ++i) os << ",mean_" << i;
    for (std::size_t i = 0; i < agents; ++i) os << ",tv_" << i;
    for (std::size_t i = 0; i < agents; ++i) os << ",w1_initial_" << i;
    for (int b = 0; b < bins; ++b) os << ",hist_" << b;
    return os.str();
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) { return scenario_from_json(parse_text(json_text)); }

std::string scenario_to_json(const Scenario& scenario) { return scenario_json(scenario).dump(2); }

Scenario load_scenario(const fs::path& path) {
    const json j = parse_text(read_file(path));
    Scenario s;
    if (j.is_object() && j.contains("realized_scenario")) {
        s = parse_manifest(j.dump()).realized;
    } else {
        s = scenario_from_json(j);
    }
    auto violations = validate(s);
    if (!violations.empty()) throw ScenarioError(std::move(violations));
    return s;
}

void save_scenario(const Scenario& scenario, const fs::path& path) {
    write_file(path, scenario_to_json(scenario) + "\n");
}

std::string scenario_digest(const Scenario& scenario) {
    const std::string text = scenario_json(scenario).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string format_time(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", t);
    return buf;
}

RunManifest make_manifest(const Trajectory& trajectory, double wall_clock_seconds, const std::string& started_at) {
    RunManifest m;
    m.realized = trajectory.scenario;
    m.scenario_digest = scenario_digest(trajectory.scenario);
    m.seed = trajectory.scenario.seed;
    m.wall_clock_seconds = wall_clock_seconds;
    m.started_at = started_at;
    m.stats = trajectory.stats;
    m.stopped_early = trajectory.stopped_early;
    for (const auto& s : trajectory.snapshots) m.snapshot_times.push_back(s.t);
    return m;
}

std::string manifest_to_json(const RunManifest& m) {
    json j;
    j["tool"] = m.tool;
    j["version"] = m.version;
    j["scenario_digest"] = m.scenario_digest;
    j["seed"] = m.seed;
    j["realized_scenario"] = scenario_json(m.realized);
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    j["started_at"] = m.started_at;
    j["integrator"] = {{"method", "rk4"},
                       {"steps", m.stats.steps},
                       {"rejections", m.stats.rejections},
                       {"rhs_evaluations", m.stats.rhs_evaluations},
                       {"stopped_early", m.stopped_early}};
    j["snapshot_times"] = m.snapshot_times;
    return j.dump(2);
}

RunManifest parse_manifest(const std::string& json_text) {
    const json j = parse_text(json_text);
    if (!j.is_object() || !j.contains("realized_scenario")) {
        throw SchemaError("realized_scenario", "manifest lacks the realized scenario");
    }
    RunManifest m;
    m.realized = scenario_from_json(j.at("realized_scenario"));
    m.tool = j.value("tool", m.tool);
    m.version = j.value("version", m.version);
    m.scenario_digest = j.value("scenario_digest", std::string());
    m.seed = j.value("seed", m.realized.seed);
    m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    m.started_at = j.value("started_at", std::string());
    if (j.contains("integrator")) {
        const json& s = j.at("integrator");
        m.stats.steps = s.value("steps", std::uint64_t{0});
        m.stats.rejections = s.value("rejections", std::uint64_t{0});
        m.stats.rhs_evaluations = s.value("rhs_evaluations", std::uint64_t{0});
        m.stopped_early = s.value("stopped_early", false);
    }
    if (j.contains("snapshot_times")) m.snapshot_times = j.at("snapshot_times").get<std::vector<double>>();
    return m;
}

void write_metrics(const Trajectory& trajectory, const fs::path& path, int bins) {
    const auto& initial = trajectory.snapshots.front();
    const double radius = trajectory.scenario.interaction_radius;
    auto out = open_csv(path);
    out << metrics_header(initial.n_agents, bins) << "\n";
    for (const auto& s : trajectory.snapshots) {
        const MetricsRecord r = compute_metrics(s, initial, radius, bins);
        out << format_time(r.t) << "," << r.n_clusters << "," << r.cluster_opinion_spread << ","
            << r.polarization_index << "," << r.bimodality_gap;
        for (double v : r.mean_opinions) out << "," << v;
        for (double v : r.total_variation) out << "," << v;
        for (double v : r.w1_to_initial) out << "," << v;
        for (auto c : r.histogram.counts) out << "," << c;
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void write_snapshots(const Trajectory& trajectory, const fs::path& dir, const RunManifest& manifest, int bins) {
    if (trajectory.snapshots.empty()) throw std::invalid_argument("write_snapshots: trajectory has no snapshots");
    ensure_dir(dir);
    for (const auto& s : trajectory.snapshots) {
        const std::string stamp = format_time(s.t);
        {
            const auto path = dir / ("particles_t" + stamp + ".csv");
            auto out = open_csv(path);
            out << "agent,k,x\n";
            for (std::size_t i = 0; i < s.n_agents; ++i) {
                const auto x = s.opinions(i);
                for (std::size_t k = 0; k < x.size(); ++k) out << i << "," << k << "," << x[k] << "\n";
            }
            if (!out) throw IoError("write failed for " + path.string());
        }
        {
            const auto path = dir / ("nodes_t" + stamp + ".csv");
            auto out = open_csv(path);
            out << "agent,dim,value\n";
            for (std::size_t i = 0; i < s.n_agents; ++i) {
                const auto a = s.node(i);
                for (std::size_t d = 0; d < a.size(); ++d) out << i << "," << d << "," << a[d] << "\n";
            }
            if (!out) throw IoError("write failed for " + path.string());
        }
    }
    write_metrics(trajectory, dir / "metrics.csv", bins);
    write_file(dir / "manifest.json", manifest_to_json(manifest) + "\n");
}

void write_plot_data(const Trajectory& trajectory, const fs::path& dir, int bins) {
    if (trajectory.snapshots.empty()) throw std::invalid_argument("write_plot_data: trajectory has no snapshots");
    ensure_dir(dir);
    const auto& first = trajectory.snapshots.front();
    const auto& last = trajectory.snapshots.back();
    const Scenario& sc = trajectory.scenario;
    const std::pair<const char*, const ParticleState*> stages[] = {{"initial", &first}, {"final", &last}};

    {
        const auto path = dir / "plot_density.csv";
        auto out = open_csv(path);
        out << "stage,t,agent,k,x_left,x_right,density\n";
        for (const auto& [name, s] : stages) {
            for (std::size_t i = 0; i < s->n_agents; ++i) {
                const auto d = reconstruct(s->opinions(i), s->sigma_N[i]);
                for (std::size_t k = 0; k < d.size(); ++k) {
                    out << name << "," << format_time(s->t) << "," << i << "," << k << "," << d.breakpoints[k] << ","
                        << d.breakpoints[k + 1] << "," << d.values[k] << "\n";
                }
            }
        }
    }
    {
        const auto path = dir / "plot_histogram.csv";
        auto out = open_csv(path);
        const auto h0 = mean_opinion_histogram(first, bins);
        const auto h1 = mean_opinion_histogram(last, bins);
        out << "bin,left,right,initial_count,final_count\n";
        for (std::size_t b = 0; b < h0.counts.size(); ++b) {
            out << b << "," << h0.edges[b] << "," << h0.edges[b + 1] << "," << h0.counts[b] << "," << h1.counts[b]
                << "\n";
        }
    }
    {
        const auto path = dir / "plot_nodes.csv";
        auto out = open_csv(path);
        out << "stage,t,agent";
        for (std::size_t d = 0; d < first.dim; ++d) out << ",a" << d;
        out << ",mean_opinion,cluster\n";
        for (const auto& [name, s] : stages) {
            const auto mu = mean_opinions(*s);
            const auto clusters = network_clusters(*s, sc.interaction_radius);
            for (std::size_t i = 0; i < s->n_agents; ++i) {
                out << name << "," << format_time(s->t) << "," << i;
                for (double c : s->node(i)) out << "," << c;
                out << "," << mu[i] << "," << clusters.label[i] << "\n";
            }
        }
    }
    {
        const auto path = dir / "plot_edges.csv";
        auto out = open_csv(path);
        out << "stage,t,i,j,distance,zeta\n";
        for (const auto& [name, s] : stages) {
            const auto mu = mean_opinions(*s);
            for (std::size_t i = 0; i < s->n_agents; ++i) {
                for (std::size_t j = i + 1; j < s->n_agents; ++j) {
                    const double d = s->node_distance(i, j);
                    if (omega(d, sc.interaction_radius) == 0) continue;
                    out << name << "," << format_time(s->t) << "," << i << "," << j << "," << d << ","
                        << attitude_zeta(mu[i] - mu[j], sc.attitude) << "\n";
                }
            }
        }
    }
}

std::vector<std::vector<double>> read_particles_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "agent,k,x") throw IoError("unexpected header in " + path.string());
    std::vector<std::vector<double>> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t agent = 0, k = 0;
        double x = 0.0;
        if (std::sscanf(line.c_str(), "%zu,%zu,%lf", &agent, &k, &x) != 3) {
            throw IoError("malformed row in " + path.string() + ": " + line);
        }
        if (agent >= out.size()) out.resize(agent + 1);
        if (k != out[agent].size()) throw IoError("rows out of order in " + path.string());
        out[agent].push_back(x);
    }
    return out;
}

}  // namespace odpa
