#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace odpa {

// The opinion space is fixed to [-1, 1].
inline constexpr double kOmegaMin = -1.0;
inline constexpr double kOmegaMax = 1.0;
inline constexpr double kOmegaLength = kOmegaMax - kOmegaMin;

inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

/// Radii delimiting the five attitude areas (homophilia, curiosity,
/// indifference, mistrust, heterophobia) as functions of opinion distance.
struct AttitudeParams {
    double r_f = 0.25;
    double r_a = 0.34;
    double r_r = 0.36;
    double r_l = 0.65;

    bool operator==(const AttitudeParams&) const = default;

    static AttitudeParams blue() { return {0.15, 0.20, 0.30, 0.40}; }
    static AttitudeParams black() { return {0.25, 0.34, 0.36, 0.65}; }
    static AttitudeParams red() { return {0.30, 0.45, 0.55, 0.70}; }
    static AttitudeParams olive() { return {0.40, 0.80, 1.20, 1.60}; }

    /// Looks up one of the four named presets; returns nullopt for unknown names.
    static std::optional<AttitudeParams> preset(const std::string& name);
};

/// Gaussian restricted to [-1, 1] and renormalized to the agent mass.
/// `variance` is the variance of the untruncated Gaussian.
struct GaussianDensity {
    double mean = 0.0;
    double variance = 0.1;
    bool operator==(const GaussianDensity&) const = default;
};

/// Samples (x, value) interpolated linearly; must cover [-1, 1].
/// Values are rescaled so the integral equals the agent mass.
struct TabulatedDensity {
    std::vector<double> x;
    std::vector<double> values;
    bool operator==(const TabulatedDensity&) const = default;
};

using DensitySpec = std::variant<GaussianDensity, TabulatedDensity>;

struct AgentInit {
    double mass = 1.0;
    DensitySpec density = GaussianDensity{};
    std::vector<double> position;
    bool operator==(const AgentInit&) const = default;
};

/// Nonlinear diffusion map. `Power` evaluates min(rho, rho_max)^exponent.
struct PhiSpec {
    enum class Kind { Linear, Power };
    Kind kind = Kind::Linear;
    double exponent = 1.0;
    double rho_max = std::numeric_limits<double>::infinity();
    bool operator==(const PhiSpec&) const = default;
};

struct RunParams {
    int n_particles = 100;
    double t_final = 1.0;
    double dt = 1e-3;
    double snapshot_every = 0.1;
    double min_gap = 1e-12;
    int max_halvings = 20;
    // Sub-step below `dt` when explicit RK4 would be unstable for the
    // current diffusion stiffness.
    bool stability_cap = true;
    double stability_safety = 0.8;
    // Quasi-stationary stop: max opinion-particle speed below
    // `stop_speed` for `stop_steps` consecutive steps.
    bool early_stop = false;
    double stop_speed = 1e-4;
    int stop_steps = 100;
    bool operator==(const RunParams&) const = default;
};

/// Generator for random initial conditions: uniform node positions in a
/// box, Gaussian means and variances uniform in the given ranges.
struct RandomAgentsSpec {
    int count = 40;
    double box_min = 0.0;
    double box_max = 10.0;
    double mean_min = -0.7;
    double mean_max = 0.7;
    double variance_min = 0.07;
    double variance_max = 0.15;
    double mass = 1.0;
    // Masses are drawn as mass * (1 + U[-jitter, jitter]).
    double mass_jitter = 0.0;
    bool operator==(const RandomAgentsSpec&) const = default;
};

struct Scenario {
    std::vector<AgentInit> agents;
    std::optional<RandomAgentsSpec> random_agents;
    AttitudeParams attitude;
    double interaction_radius = kInfiniteRadius;
    bool diffusion_enabled = true;
    PhiSpec phi;
    int network_dim = 2;
    RunParams run;
    std::uint64_t seed = 0;
    // +1: positive attitude attracts nodes (a_j - a_i); -1 uses the
    // printed (a_i - a_j) orientation.
    int network_velocity_sign = 1;
    bool operator==(const Scenario&) const = default;

    std::size_t n_agents() const { return agents.size(); }
    double total_mass() const;
};

struct Violation {
    std::string code;
    std::string field;
    std::string message;
    bool operator==(const Violation&) const = default;
};

/// Every violated invariant of the scenario; empty when valid.
std::vector<Violation> validate(const Scenario& scenario);

/// Raised when an operation receives a scenario that fails validation.
class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Draws agents from `scenario.random_agents` with a seeded generator.
/// Deterministic for a fixed seed within one build.
std::vector<AgentInit> sample_initial_conditions(const Scenario& scenario, std::uint64_t seed);

/// Returns a copy whose `agents` list is explicit: random agents are drawn
/// with `scenario.seed` and the generator spec is dropped. Scenarios that
/// already list agents are returned unchanged.
Scenario realize(const Scenario& scenario);

/// Normalized initial density on [-1, 1] with mass sigma.
class InitialDensity {
public:
    InitialDensity(const DensitySpec& spec, double mass);

    double mass() const { return mass_; }
    double value(double x) const;
    /// Mass of [-1, x].
    double cumulative(double x) const;
    /// Realized m^i and M^i over [-1, 1].
    double lower_bound() const;
    double upper_bound() const;

private:
    DensitySpec spec_;
    double mass_;
    double scale_ = 1.0;
    // Gaussian: standard deviation and standard-normal CDF at -1 and 1.
    double sd_ = 1.0;
    double cdf_lo_ = 0.0;
    double cdf_hi_ = 1.0;
    // Tabulated: unscaled cumulative mass at each sample, and at -1.
    std::vector<double> cum_;
    double offset_ = 0.0;

    double raw_cumulative(double x) const;
};

/// Opinion particles x[i][0..N] and node positions a[i] at time t.
/// Both arrays are stored row-major.
struct ParticleState {
    double t = 0.0;
    std::size_t n_agents = 0;
    std::size_t n_intervals = 0;  // N
    std::size_t dim = 0;
    std::vector<double> x;        // n_agents * (N + 1)
    std::vector<double> a;        // n_agents * dim
    std::vector<double> masses;   // sigma^i
    std::vector<double> sigma_N;  // sigma^i / N

    ParticleState() = default;
    ParticleState(std::size_t agents, std::size_t intervals, std::size_t dimension);

    std::size_t n_points() const { return n_intervals + 1; }

    std::span<double> opinions(std::size_t i) {
        return {x.data() + i * n_points(), n_points()};
    }
    std::span<const double> opinions(std::size_t i) const {
        return {x.data() + i * n_points(), n_points()};
    }
    std::span<double> node(std::size_t i) { return {a.data() + i * dim, dim}; }
    std::span<const double> node(std::size_t i) const { return {a.data() + i * dim, dim}; }

    double node_distance(std::size_t i, std::size_t j) const;
};

}  // namespace odpa
