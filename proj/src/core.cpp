#include "odpa/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace odpa {

namespace {

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void add(std::vector<Violation>& out, std::string code, std::string field, std::string message) {
    out.push_back({std::move(code), std::move(field), std::move(message)});
}

std::string agent_field(std::size_t i, const char* leaf) {
    std::ostringstream os;
    os << "agents[" << i << "]." << leaf;
    return os.str();
}

void validate_density(const DensitySpec& spec, std::size_t i, std::vector<Violation>& out) {
    if (const auto* g = std::get_if<GaussianDensity>(&spec)) {
        if (!(g->mean > kOmegaMin && g->mean < kOmegaMax)) {
            add(out, "density_mean_out_of_range", agent_field(i, "density.mean"),
                "gaussian mean must lie in (-1, 1)");
        }
        if (!(g->variance > 0.0) || !std::isfinite(g->variance)) {
            add(out, "nonpositive_variance", agent_field(i, "density.variance"),
                "gaussian variance must be positive and finite");
        }
        return;
    }
    const auto& tab = std::get<TabulatedDensity>(spec);
    if (tab.x.size() < 2 || tab.x.size() != tab.values.size()) {
        add(out, "malformed_table", agent_field(i, "density"),
            "tabulated density needs at least two samples and matching x/values lengths");
        return;
    }
    for (std::size_t k = 1; k < tab.x.size(); ++k) {
        if (!(tab.x[k] > tab.x[k - 1])) {
            add(out, "table_not_increasing", agent_field(i, "density.x"),
                "tabulated sample positions must be strictly increasing");
            break;
        }
    }
    if (tab.x.front() > kOmegaMin || tab.x.back() < kOmegaMax) {
        add(out, "table_does_not_cover_domain", agent_field(i, "density.x"),
            "tabulated samples must cover [-1, 1]");
    }
    const bool positive = std::all_of(tab.values.begin(), tab.values.end(),
                                      [](double v) { return v > 0.0 && std::isfinite(v); });
    if (!positive) {
        add(out, "density_lower_bound", agent_field(i, "density.values"),
            "density must be bounded below by a positive constant");
    }
}

}  // namespace

std::optional<AttitudeParams> AttitudeParams::preset(const std::string& name) {
    if (name == "blue") return blue();
    if (name == "black") return black();
    if (name == "red") return red();
    if (name == "olive") return olive();
    return std::nullopt;
}

double Scenario::total_mass() const {
    return std::accumulate(agents.begin(), agents.end(), 0.0,
                           [](double s, const AgentInit& a) { return s + a.mass; });
}

ScenarioError::ScenarioError(std::vector<Violation> violations)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "invalid scenario:";
          for (const auto& v : violations) os << "\n  " << v.field << ": " << v.message << " [" << v.code << "]";
          return os.str();
      }()),
      violations_(std::move(violations)) {}

std::vector<Violation> validate(const Scenario& s) {
    std::vector<Violation> out;

    if (s.agents.empty() && !s.random_agents) {
        add(out, "no_agents", "agents", "at least one agent is required");
    }
    if (!s.agents.empty() && s.random_agents) {
        add(out, "ambiguous_agents", "random_agents",
            "give either an explicit agent list or a random generator, not both");
    }
    if (s.network_dim < 1) {
        add(out, "nonpositive_dimension", "network_dim", "network dimension must be at least 1");
    }
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        const auto& agent = s.agents[i];
        if (!(agent.mass > 0.0) || !std::isfinite(agent.mass)) {
            add(out, "nonpositive_mass", agent_field(i, "mass"), "agent mass must be positive");
        }
        if (s.network_dim >= 1 && agent.position.size() != static_cast<std::size_t>(s.network_dim)) {
            add(out, "position_dimension", agent_field(i, "position"),
                "node position length must equal network_dim");
        }
        if (!std::all_of(agent.position.begin(), agent.position.end(),
                         [](double v) { return std::isfinite(v); })) {
            add(out, "nonfinite_position", agent_field(i, "position"), "node position must be finite");
        }
        validate_density(agent.density, i, out);
    }

    if (const auto& r = s.random_agents) {
        if (r->count < 1) add(out, "no_agents", "random_agents.count", "at least one agent is required");
        if (!(r->box_min < r->box_max)) {
            add(out, "empty_box", "random_agents.box", "box_min must be below box_max");
        }
        if (!(r->mean_min <= r->mean_max) || r->mean_min <= kOmegaMin || r->mean_max >= kOmegaMax) {
            add(out, "density_mean_out_of_range", "random_agents.mean_range",
                "mean range must be ordered and inside (-1, 1)");
        }
        if (!(r->variance_min > 0.0) || !(r->variance_min <= r->variance_max)) {
            add(out, "nonpositive_variance", "random_agents.variance_range",
                "variance range must be positive and ordered");
        }
        if (!(r->mass > 0.0)) add(out, "nonpositive_mass", "random_agents.mass", "agent mass must be positive");
        if (!(r->mass_jitter >= 0.0 && r->mass_jitter < 1.0)) {
            add(out, "mass_jitter_out_of_range", "random_agents.mass_jitter", "mass jitter must lie in [0, 1)");
        }
    }

    const auto& p = s.attitude;
    if (!(p.r_f < p.r_a && p.r_a < p.r_r && p.r_r < p.r_l)) {
        add(out, "attitude_not_increasing", "attitude", "attitude radii not increasing");
    }
    if (!(p.r_f > 0.0) || !(p.r_l <= kOmegaLength)) {
        add(out, "attitude_out_of_range", "attitude", "attitude radii must lie in (0, 2]");
    }

    if (!(s.interaction_radius > 0.0)) {
        add(out, "nonpositive_radius", "interaction_radius", "interaction radius must be positive or infinite");
    }

    if (s.phi.kind == PhiSpec::Kind::Power) {
        if (!(s.phi.exponent >= 1.0) || !std::isfinite(s.phi.exponent)) {
            add(out, "phi_exponent", "phi.exponent", "power diffusion needs exponent >= 1");
        }
        if (!(s.phi.rho_max > 0.0) || (s.phi.exponent > 1.0 && !std::isfinite(s.phi.rho_max))) {
            add(out, "phi_not_lipschitz", "phi.rho_max",
                "power diffusion with exponent > 1 needs a finite positive clamp");
        }
    }

    if (s.network_velocity_sign != 1 && s.network_velocity_sign != -1) {
        add(out, "velocity_sign", "network_velocity_sign", "network velocity sign must be +1 or -1");
    }

    const auto& run = s.run;
    if (run.n_particles < 2) add(out, "too_few_particles", "run.n_particles", "need at least two intervals");
    if (!(run.dt > 0.0)) add(out, "nonpositive_dt", "run.dt", "time step must be positive");
    if (!(run.snapshot_every > 0.0)) {
        add(out, "nonpositive_snapshot_interval", "run.snapshot_every", "snapshot interval must be positive");
    }
    if (!(run.t_final >= 0.0) || !std::isfinite(run.t_final)) {
        add(out, "negative_final_time", "run.t_final", "final time must be finite and nonnegative");
    } else if (run.t_final > 0.0 && !(run.dt <= run.snapshot_every && run.snapshot_every <= run.t_final)) {
        add(out, "time_controls_unordered", "run", "need dt <= snapshot_every <= t_final");
    }
    if (!(run.min_gap > 0.0)) add(out, "nonpositive_min_gap", "run.min_gap", "minimum gap must be positive");
    if (run.max_halvings < 0) add(out, "negative_halvings", "run.max_halvings", "halving limit must be >= 0");
    if (!(run.stability_safety > 0.0 && run.stability_safety <= 1.0)) {
        add(out, "stability_safety", "run.stability_safety", "stability safety factor must lie in (0, 1]");
    }
    if (run.early_stop && (!(run.stop_speed > 0.0) || run.stop_steps < 1)) {
        add(out, "early_stop", "run.stop_speed", "early stop needs a positive speed and step count");
    }
    return out;
}

std::vector<AgentInit> sample_initial_conditions(const Scenario& scenario, std::uint64_t seed) {
    if (!scenario.random_agents) {
        throw std::invalid_argument("sample_initial_conditions: scenario has no random_agents generator");
    }
    const auto& spec = *scenario.random_agents;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> position(spec.box_min, spec.box_max);
    std::uniform_real_distribution<double> mean(spec.mean_min, spec.mean_max);
    std::uniform_real_distribution<double> variance(spec.variance_min, spec.variance_max);
    std::uniform_real_distribution<double> jitter(-spec.mass_jitter, spec.mass_jitter);

    std::vector<AgentInit> agents(static_cast<std::size_t>(spec.count));
    for (auto& agent : agents) {
        agent.position.resize(static_cast<std::size_t>(scenario.network_dim));
        for (auto& c : agent.position) c = position(rng);
        GaussianDensity g;
        g.mean = mean(rng);
        g.variance = variance(rng);
        agent.density = g;
        agent.mass = spec.mass;
        if (spec.mass_jitter > 0.0) agent.mass *= 1.0 + jitter(rng);
    }
    return agents;
}

Scenario realize(const Scenario& scenario) {
    if (!scenario.random_agents) return scenario;
    Scenario out = scenario;
    out.agents = sample_initial_conditions(scenario, scenario.seed);
    out.random_agents.reset();
    return out;
}

InitialDensity::InitialDensity(const DensitySpec& spec, double mass) : spec_(spec), mass_(mass) {
    if (!(mass > 0.0)) throw std::invalid_argument("InitialDensity: mass must be positive");
    if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
        if (!(g->variance > 0.0)) throw std::invalid_argument("InitialDensity: variance must be positive");
        sd_ = std::sqrt(g->variance);
        cdf_lo_ = standard_normal_cdf((kOmegaMin - g->mean) / sd_);
        cdf_hi_ = standard_normal_cdf((kOmegaMax - g->mean) / sd_);
        // Normalized pdf: exp(-z^2/2) / (sd sqrt(2 pi) (cdf_hi - cdf_lo)).
        scale_ = mass_ / (sd_ * std::sqrt(2.0 * M_PI) * (cdf_hi_ - cdf_lo_));
        return;
    }
    const auto& tab = std::get<TabulatedDensity>(spec_);
    if (tab.x.size() < 2 || tab.x.size() != tab.values.size()) {
        throw std::invalid_argument("InitialDensity: malformed table");
    }
    cum_.assign(tab.x.size(), 0.0);
    for (std::size_t k = 1; k < tab.x.size(); ++k) {
        cum_[k] = cum_[k - 1] + 0.5 * (tab.values[k] + tab.values[k - 1]) * (tab.x[k] - tab.x[k - 1]);
    }
    offset_ = raw_cumulative(kOmegaMin);
    scale_ = mass_ / (raw_cumulative(kOmegaMax) - offset_);
}

double InitialDensity::raw_cumulative(double x) const {
    const auto& tab = std::get<TabulatedDensity>(spec_);
    const auto it = std::upper_bound(tab.x.begin(), tab.x.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - tab.x.begin());
    if (k == 0) return 0.0;
    if (k >= tab.x.size()) return cum_.back();
    const double h = x - tab.x[k - 1];
    const double slope = (tab.values[k] - tab.values[k - 1]) / (tab.x[k] - tab.x[k - 1]);
    return cum_[k - 1] + tab.values[k - 1] * h + 0.5 * slope * h * h;
}

double InitialDensity::value(double x) const {
    if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
        const double z = (x - g->mean) / sd_;
        return scale_ * std::exp(-0.5 * z * z);
    }
    const auto& tab = std::get<TabulatedDensity>(spec_);
    if (x <= tab.x.front()) return scale_ * tab.values.front();
    if (x >= tab.x.back()) return scale_ * tab.values.back();
    const auto it = std::upper_bound(tab.x.begin(), tab.x.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - tab.x.begin());
    const double w = (x - tab.x[k - 1]) / (tab.x[k] - tab.x[k - 1]);
    return scale_ * (tab.values[k - 1] + w * (tab.values[k] - tab.values[k - 1]));
}

double InitialDensity::cumulative(double x) const {
    x = std::clamp(x, kOmegaMin, kOmegaMax);
    if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
        const double c = standard_normal_cdf((x - g->mean) / sd_);
        return mass_ * (c - cdf_lo_) / (cdf_hi_ - cdf_lo_);
    }
    return scale_ * (raw_cumulative(x) - offset_);
}

double InitialDensity::lower_bound() const {
    if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
        const double far = std::abs(kOmegaMin - g->mean) > std::abs(kOmegaMax - g->mean) ? kOmegaMin : kOmegaMax;
        return value(far);
    }
    double lo = std::min(value(kOmegaMin), value(kOmegaMax));
    const auto& tab = std::get<TabulatedDensity>(spec_);
    for (std::size_t k = 0; k < tab.x.size(); ++k) {
        if (tab.x[k] > kOmegaMin && tab.x[k] < kOmegaMax) lo = std::min(lo, scale_ * tab.values[k]);
    }
    return lo;
}

double InitialDensity::upper_bound() const {
    if (const auto* g = std::get_if<GaussianDensity>(&spec_)) {
        return value(std::clamp(g->mean, kOmegaMin, kOmegaMax));
    }
    double hi = std::max(value(kOmegaMin), value(kOmegaMax));
    const auto& tab = std::get<TabulatedDensity>(spec_);
    for (std::size_t k = 0; k < tab.x.size(); ++k) {
        if (tab.x[k] > kOmegaMin && tab.x[k] < kOmegaMax) hi = std::max(hi, scale_ * tab.values[k]);
    }
    return hi;
}

ParticleState::ParticleState(std::size_t agents, std::size_t intervals, std::size_t dimension)
    : n_agents(agents),
      n_intervals(intervals),
      dim(dimension),
      x(agents * (intervals + 1), 0.0),
      a(agents * dimension, 0.0),
      masses(agents, 0.0),
      sigma_N(agents, 0.0) {}

double ParticleState::node_distance(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = a[i * dim + d] - a[j * dim + d];
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace odpa
