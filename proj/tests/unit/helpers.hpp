#pragma once

#include <random>
#include <vector>

#include "odpa/core.hpp"

namespace testing_helpers {

// The random 40-agent setting with the black attitude.
inline odpa::Scenario black_scenario(double radius = 5.0, std::uint64_t seed = 1) {
    odpa::Scenario s;
    s.random_agents = odpa::RandomAgentsSpec{};
    s.attitude = odpa::AttitudeParams::black();
    s.interaction_radius = radius;
    s.seed = seed;
    return s;
}

inline odpa::Scenario two_agent_scenario(int n_particles) {
    odpa::Scenario s;
    odpa::AgentInit a;
    a.mass = 1.0;
    a.density = odpa::GaussianDensity{-0.2, 0.1};
    a.position = {0.0, 0.0};
    odpa::AgentInit b;
    b.mass = 0.7;
    b.density = odpa::GaussianDensity{0.35, 0.08};
    b.position = {1.0, 0.5};
    s.agents = {a, b};
    s.attitude = odpa::AttitudeParams::black();
    s.interaction_radius = 5.0;
    s.run.n_particles = n_particles;
    return s;
}

// Strictly increasing points from -1 to 1 with random spacing.
inline std::vector<double> random_partition(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) total += (v = u(rng));
    std::vector<double> x(n + 1);
    x[0] = -1.0;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        acc += w[k];
        x[k + 1] = -1.0 + 2.0 * acc / total;
    }
    x[n] = 1.0;
    return x;
}

}  // namespace testing_helpers
