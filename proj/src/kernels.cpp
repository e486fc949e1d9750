#include "odpa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odpa {

double attitude_zeta(double s, const AttitudeParams& p) {
    const double d = std::abs(s);
    if (d < p.r_f) return 1.0 - 0.1 * d / p.r_f;
    if (d < p.r_a) return 0.1 + 0.8 * (1.0 - (d - p.r_f) / (p.r_a - p.r_f));
    if (d < p.r_r) return -0.1 + 0.2 * (1.0 - (d - p.r_a) / (p.r_r - p.r_a));
    if (d < p.r_l) return -0.9 + 0.8 * (1.0 - (d - p.r_r) / (p.r_l - p.r_r));
    return -0.9 - 0.1 * (d - p.r_l);
}

double attitude_sup(const AttitudeParams& p) {
    // zeta decreases monotonically in |s|; the extremes are zeta(0) = 1 and
    // the tail value at the diameter of the opinion space.
    return std::max(1.0, std::abs(attitude_zeta(kOmegaLength, p)));
}

int omega(double a_dist, double radius) {
    if (std::isinf(radius)) return 1;
    return a_dist <= radius ? 1 : 0;
}

double kernel_K_model(double w, double v, double mu_i, double mu_j, double a_dist,
                      const AttitudeParams& p, double radius) {
    if (omega(a_dist, radius) == 0) return 0.0;
    return attitude_zeta(mu_i - mu_j, p) * (v - w);
}

double mobility_A_model(double w, double mu_j) {
    const double d = mu_j - w;
    return d * d;
}

void network_velocity_model(double mu_i, double mu_j, std::span<const double> a_i,
                            std::span<const double> a_j, const AttitudeParams& p, double radius,
                            std::span<double> out, int sign) {
    if (a_i.size() != a_j.size() || out.size() != a_i.size()) {
        throw std::invalid_argument("network_velocity_model: dimension mismatch");
    }
    double dist2 = 0.0;
    for (std::size_t d = 0; d < a_i.size(); ++d) dist2 += (a_j[d] - a_i[d]) * (a_j[d] - a_i[d]);
    if (omega(std::sqrt(dist2), radius) == 0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const double z = sign * attitude_zeta(std::abs(mu_i - mu_j), p);
    for (std::size_t d = 0; d < a_i.size(); ++d) out[d] = z * (a_j[d] - a_i[d]);
}

std::vector<double> network_velocity_model(double mu_i, double mu_j, std::span<const double> a_i,
                                           std::span<const double> a_j, const AttitudeParams& p,
                                           double radius, int sign) {
    std::vector<double> out(a_i.size());
    network_velocity_model(mu_i, mu_j, a_i, a_j, p, radius, out, sign);
    return out;
}

double phi_eval(double rho, const PhiSpec& spec) {
    if (spec.kind == PhiSpec::Kind::Linear) return rho;
    return std::pow(std::min(rho, spec.rho_max), spec.exponent);
}

double phi_derivative(double rho, const PhiSpec& spec) {
    if (spec.kind == PhiSpec::Kind::Linear) return 1.0;
    if (rho >= spec.rho_max) return 0.0;
    return spec.exponent * std::pow(rho, spec.exponent - 1.0);
}

double phi_lipschitz(const PhiSpec& spec, double rho_bound) {
    if (spec.kind == PhiSpec::Kind::Linear) return 1.0;
    const double r = std::min(rho_bound, spec.rho_max);
    return spec.exponent * std::pow(r, spec.exponent - 1.0);
}

KernelSet model_kernels(const Scenario& scenario) {
    KernelSet k = model_kernels_generic(scenario);
    k.is_model = true;
    return k;
}

KernelSet model_kernels_generic(const Scenario& scenario) {
    KernelSet k;
    const AttitudeParams p = scenario.attitude;
    const double radius = scenario.interaction_radius;
    const int sign = scenario.network_velocity_sign;

    k.K = [p, radius](double w, double v, double mu_i, double mu_j, double a_dist) {
        return kernel_K_model(w, v, mu_i, mu_j, a_dist, p, radius);
    };
    if (scenario.diffusion_enabled) {
        k.A = [](double w, double, double, double mu_j, double) { return mobility_A_model(w, mu_j); };
    } else {
        k.A = [](double, double, double, double, double) { return 0.0; };
    }
    k.V = [p, radius, sign](double mu_i, double mu_j, std::span<const double> a_i, std::span<const double> a_j,
                            double, std::span<double> out) {
        network_velocity_model(mu_i, mu_j, a_i, a_j, p, radius, out, sign);
    };
    k.phi = scenario.phi;
    k.c_K = attitude_sup(p);
    // |d/dw (mu - w)^2| <= 2 |Omega| on [-1, 1]^2; the first derivative is
    // independent of the second particle.
    k.c_A = scenario.diffusion_enabled ? 2.0 * kOmegaLength : 0.0;
    k.c_1A = 0.0;
    k.attitude = p;
    k.radius = radius;
    k.diffusion_enabled = scenario.diffusion_enabled;
    k.velocity_sign = sign;
    return k;
}

KernelSet zero_kernels(const PhiSpec& phi) {
    KernelSet k;
    k.K = [](double, double, double, double, double) { return 0.0; };
    k.A = [](double, double, double, double, double) { return 0.0; };
    k.V = [](double, double, std::span<const double>, std::span<const double>, double, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    k.phi = phi;
    return k;
}

}  // namespace odpa
