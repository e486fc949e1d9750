#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "odpa/core.hpp"
#include "odpa/kernels.hpp"

namespace odpa {

/// Velocities of the particle system. Boundary opinion particles have
/// exactly zero velocity.
struct Derivative {
    std::size_t n_agents = 0;
    std::size_t n_points = 0;
    std::size_t dim = 0;
    std::vector<double> dx;
    std::vector<double> da;
    // Gershgorin bound on the spectral radius of the opinion Jacobian.
    double stiffness = 0.0;

    std::span<const double> opinion_velocity(std::size_t i) const {
        return {dx.data() + i * n_points, n_points};
    }
    double max_opinion_speed() const;
};

/// The step guard could not keep every gap above the minimum even after
/// the allowed number of halvings.
class StepCollapse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Quantile points x_0 = -1 < x_1 < ... < x_N = 1 carrying mass sigma/N each.
std::vector<double> quantile_partition(const InitialDensity& density, int n_intervals);
std::vector<double> quantile_partition(const DensitySpec& density, double mass, int n_intervals);

/// (1 / (N + 1)) * sum_k x_k.
double discrete_mean(std::span<const double> x);

/// Discrete diffusion mobility of particle k of agent i.
double beta_k(const ParticleState& state, const KernelSet& kernels, std::size_t i, std::size_t k);

/// Discrete transport of particle k of agent i.
double theta_k(const ParticleState& state, const KernelSet& kernels, std::size_t i, std::size_t k);

/// Right-hand side of the coupled opinion / network system. Throws
/// std::domain_error when particles are not strictly ordered.
Derivative rhs(const ParticleState& state, const KernelSet& kernels);

/// Largest RK4 step that keeps the explicit scheme stable for `d.stiffness`.
double rk4_stable_step(const Derivative& d);

/// Initial particles from the quantile partition of each agent's density
/// and the agents' node positions. The scenario must list agents explicitly.
ParticleState initial_state(const Scenario& scenario);

struct StepStats {
    std::uint64_t steps = 0;
    std::uint64_t rejections = 0;
    std::uint64_t rhs_evaluations = 0;
};

/// Guard applied after every step: all gaps must stay >= min_gap.
struct GapGuard {
    double min_gap = 1e-12;
    int max_halvings = 20;
};

/// One classical RK4 step. When a resulting gap falls below the guard the
/// step is retried with half the step size; the returned state's `t` shows
/// how far it advanced.
ParticleState step_rk4(const ParticleState& state, double dt, const KernelSet& kernels,
                       const GapGuard& guard = {}, StepStats* stats = nullptr);

/// Forward Euler with the same guard; used as a reference integrator.
ParticleState step_euler(const ParticleState& state, double dt, const KernelSet& kernels,
                         const GapGuard& guard = {}, StepStats* stats = nullptr);

struct Trajectory {
    Scenario scenario;  // realized: explicit agents
    std::vector<ParticleState> snapshots;
    // For snapshot s > 0: the largest opinion-particle speed seen over the
    // steps between snapshots s-1 and s (0 for the first snapshot).
    std::vector<double> interval_max_speed;
    StepStats stats;
    bool stopped_early = false;
};

/// Integrates from t = 0 to run.t_final with the model kernels.
Trajectory simulate(const Scenario& scenario);

/// Same with caller-supplied kernels.
Trajectory simulate(const Scenario& scenario, const KernelSet& kernels);

}  // namespace odpa
