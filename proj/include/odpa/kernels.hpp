#pragma once

#include <functional>
#include <span>
#include <vector>

#include "odpa/core.hpp"

namespace odpa {

/// Attitude function zeta: five-branch piecewise-linear profile of the
/// opinion distance |s|. Positive values attract, negative values repel.
double attitude_zeta(double s, const AttitudeParams& p);

/// sup over |s| in [0, 2] of |zeta(s)|; the Lipschitz constant of the
/// model transport kernel in its opinion arguments.
double attitude_sup(const AttitudeParams& p);

/// Local-interaction cutoff: 1 when a_dist <= radius (always for infinite radius).
int omega(double a_dist, double radius);

/// omega(a_dist) * zeta(mu_i - mu_j) * (v - w).
double kernel_K_model(double w, double v, double mu_i, double mu_j, double a_dist,
                      const AttitudeParams& p, double radius);

/// (mu_j - w)^2; not filtered by the network and independent of attitude.
double mobility_A_model(double w, double mu_j);

/// Pairwise node velocity sign * zeta(|mu_i - mu_j|) * omega(|a_i - a_j|) * (a_j - a_i).
/// With sign = +1 positive attitude pulls node i toward node j.
void network_velocity_model(double mu_i, double mu_j, std::span<const double> a_i,
                            std::span<const double> a_j, const AttitudeParams& p, double radius,
                            std::span<double> out, int sign = 1);

std::vector<double> network_velocity_model(double mu_i, double mu_j, std::span<const double> a_i,
                                           std::span<const double> a_j, const AttitudeParams& p,
                                           double radius, int sign = 1);

double phi_eval(double rho, const PhiSpec& spec);

/// Derivative of Phi at rho (right derivative at the clamp).
double phi_derivative(double rho, const PhiSpec& spec);

/// Lipschitz constant of Phi on [0, rho_bound].
double phi_lipschitz(const PhiSpec& spec, double rho_bound);

/// Interaction functions driving the particle system. Kernels take
/// (w, v, mu_i, mu_j, a_dist) where w is the moving particle of agent i
/// and v a particle of agent j.
struct KernelSet {
    using PairKernel = std::function<double(double w, double v, double mu_i, double mu_j, double a_dist)>;
    using NodeVelocity = std::function<void(double mu_i, double mu_j, std::span<const double> a_i,
                                            std::span<const double> a_j, double a_dist, std::span<double> out)>;

    PairKernel K;
    PairKernel A;
    NodeVelocity V;
    PhiSpec phi;

    // Declared constants; metadata for invariant checks only.
    double c_K = 0.0;
    double c_A = 0.0;
    double c_1A = 0.0;

    // Set for the attitude-area model: enables the closed-form O(M N)
    // evaluation of the transport and mobility sums.
    bool is_model = false;
    AttitudeParams attitude;
    double radius = kInfiniteRadius;
    bool diffusion_enabled = true;
    int velocity_sign = 1;
};

/// The attitude-area model kernels configured from a scenario.
KernelSet model_kernels(const Scenario& scenario);

/// The same model expressed through the generic callables only, so the
/// particle system evaluates the full double sums.
KernelSet model_kernels_generic(const Scenario& scenario);

/// K = A = V = 0.
KernelSet zero_kernels(const PhiSpec& phi = {});

}  // namespace odpa
