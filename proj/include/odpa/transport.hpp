#pragma once

#include <span>
#include <vector>

namespace odpa {

/// Piecewise-constant density: values[k] on [breakpoints[k], breakpoints[k+1]).
struct DensityView {
    std::vector<double> breakpoints;
    std::vector<double> values;
    double mass = 0.0;

    std::size_t size() const { return values.size(); }
    /// sum_k values[k] * |I_k|.
    double integral() const;
};

/// Piecewise-affine map on [0, mass]: on [mass_breaks[k], mass_breaks[k+1])
/// it equals start[k] + slope[k] * (m - mass_breaks[k]).
struct PseudoInverse {
    std::vector<double> mass_breaks;
    std::vector<double> start;
    std::vector<double> slope;

    double total_mass() const { return mass_breaks.empty() ? 0.0 : mass_breaks.back(); }
    double operator()(double m) const;
};

/// rho_k = sigma_N / (x_{k+1} - x_k). Throws on nonincreasing input.
std::vector<double> discrete_densities(std::span<const double> x, double sigma_N);

/// Piecewise-constant reconstruction of one agent's particles.
DensityView reconstruct(std::span<const double> x, double sigma_N);

/// X(m) = x_k + (m - k sigma_N) / rho_k on each mass cell.
PseudoInverse pseudo_inverse(const DensityView& d);

/// Pseudo-inverse of the empirical measure sigma_N * sum_k delta_{x_k},
/// restricted to [0, N sigma_N]: the step function X(m) = x_k on the k-th cell.
PseudoInverse empirical_pseudo_inverse(std::span<const double> x, double sigma_N);

/// Exact integral of |X1 - X2| over the merged mass grid. Both maps must
/// cover the same mass interval.
double l1_distance(const PseudoInverse& X1, const PseudoInverse& X2);

/// Scaled 1-Wasserstein distance between equal-mass views (relative mass
/// tolerance 1e-10); throws std::invalid_argument on mismatch.
double wasserstein1(const DensityView& d1, const DensityView& d2);

/// Mass-normalized mean of the reconstruction: (1/sigma) sum_k rho_k (x_{k+1}^2 - x_k^2) / 2.
double first_moment(const DensityView& d);

/// rho_0 + sum_k |rho_k - rho_{k-1}| + rho_{N-1}.
double total_variation(const DensityView& d);

/// W1 distance between the empirical measure of the particles and their
/// piecewise-constant reconstruction.
double empirical_wasserstein_gap(std::span<const double> x, double sigma_N);

}  // namespace odpa
