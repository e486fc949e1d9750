#include "odpa/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odpa {

namespace {

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

void require_increasing(std::span<const double> x, const char* who) {
    if (x.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least two points");
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        if (!(x[k + 1] > x[k])) {
            throw std::invalid_argument(std::string(who) + ": particles must be strictly increasing");
        }
    }
}

// Integral over [0, h] of |f0 + (f1 - f0) s / h|.
double abs_affine_integral(double f0, double f1, double h) {
    if ((f0 >= 0.0 && f1 >= 0.0) || (f0 <= 0.0 && f1 <= 0.0)) {
        return 0.5 * (std::abs(f0) + std::abs(f1)) * h;
    }
    const double a = std::abs(f0);
    const double b = std::abs(f1);
    return 0.5 * (a * a + b * b) / (a + b) * h;
}

}  // namespace

double DensityView::integral() const {
    CompensatedSum s;
    for (std::size_t k = 0; k < values.size(); ++k) s.add(values[k] * (breakpoints[k + 1] - breakpoints[k]));
    return s.value();
}

double PseudoInverse::operator()(double m) const {
    if (start.empty()) throw std::logic_error("PseudoInverse: empty map");
    auto it = std::upper_bound(mass_breaks.begin(), mass_breaks.end(), m);
    std::size_t k = it == mass_breaks.begin() ? 0 : static_cast<std::size_t>(it - mass_breaks.begin()) - 1;
    k = std::min(k, start.size() - 1);
    return start[k] + slope[k] * (m - mass_breaks[k]);
}

std::vector<double> discrete_densities(std::span<const double> x, double sigma_N) {
    require_increasing(x, "discrete_densities");
    std::vector<double> rho(x.size() - 1);
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = sigma_N / (x[k + 1] - x[k]);
    return rho;
}

DensityView reconstruct(std::span<const double> x, double sigma_N) {
    DensityView d;
    d.values = discrete_densities(x, sigma_N);
    d.breakpoints.assign(x.begin(), x.end());
    d.mass = sigma_N * static_cast<double>(d.values.size());
    return d;
}

PseudoInverse pseudo_inverse(const DensityView& d) {
    if (d.breakpoints.size() != d.values.size() + 1 || d.values.empty()) {
        throw std::invalid_argument("pseudo_inverse: malformed density view");
    }
    PseudoInverse X;
    X.mass_breaks.push_back(0.0);
    double cumulative = 0.0;
    for (std::size_t k = 0; k < d.values.size(); ++k) {
        const double width = d.breakpoints[k + 1] - d.breakpoints[k];
        const double cell = d.values[k] * width;
        if (!(cell > 0.0)) continue;  // massless cells are jumps of X
        X.start.push_back(d.breakpoints[k]);
        X.slope.push_back(1.0 / d.values[k]);
        cumulative += cell;
        X.mass_breaks.push_back(cumulative);
    }
    if (X.start.empty()) throw std::invalid_argument("pseudo_inverse: density view has no mass");
    return X;
}

PseudoInverse empirical_pseudo_inverse(std::span<const double> x, double sigma_N) {
    require_increasing(x, "empirical_pseudo_inverse");
    const std::size_t n = x.size() - 1;
    PseudoInverse X;
    X.mass_breaks.resize(n + 1);
    X.start.resize(n);
    X.slope.assign(n, 0.0);
    for (std::size_t k = 0; k <= n; ++k) X.mass_breaks[k] = sigma_N * static_cast<double>(k);
    for (std::size_t k = 0; k < n; ++k) X.start[k] = x[k];
    return X;
}

double l1_distance(const PseudoInverse& X1, const PseudoInverse& X2) {
    if (X1.start.empty() || X2.start.empty()) throw std::invalid_argument("l1_distance: empty map");
    const double end = std::min(X1.total_mass(), X2.total_mass());
    CompensatedSum total;
    std::size_t p = 0;
    std::size_t q = 0;
    double m = 0.0;
    while (m < end) {
        while (p + 1 < X1.start.size() && X1.mass_breaks[p + 1] <= m) ++p;
        while (q + 1 < X2.start.size() && X2.mass_breaks[q + 1] <= m) ++q;
        const double next1 = p + 1 < X1.start.size() ? X1.mass_breaks[p + 1] : end;
        const double next2 = q + 1 < X2.start.size() ? X2.mass_breaks[q + 1] : end;
        const double m1 = std::min({next1, next2, end});
        const double h = m1 - m;
        if (h > 0.0) {
            const double f0 = (X1.start[p] + X1.slope[p] * (m - X1.mass_breaks[p])) -
                              (X2.start[q] + X2.slope[q] * (m - X2.mass_breaks[q]));
            const double f1 = (X1.start[p] + X1.slope[p] * (m1 - X1.mass_breaks[p])) -
                              (X2.start[q] + X2.slope[q] * (m1 - X2.mass_breaks[q]));
            total.add(abs_affine_integral(f0, f1, h));
        }
        m = m1;
    }
    return total.value();
}

double wasserstein1(const DensityView& d1, const DensityView& d2) {
    const double scale = std::max({std::abs(d1.mass), std::abs(d2.mass), 1e-300});
    if (std::abs(d1.mass - d2.mass) > 1e-10 * scale) {
        throw std::invalid_argument("wasserstein1: densities carry different masses");
    }
    return l1_distance(pseudo_inverse(d1), pseudo_inverse(d2));
}

double first_moment(const DensityView& d) {
    CompensatedSum s;
    for (std::size_t k = 0; k < d.values.size(); ++k) {
        const double lo = d.breakpoints[k];
        const double hi = d.breakpoints[k + 1];
        s.add(d.values[k] * (hi - lo) * (hi + lo) * 0.5);
    }
    return s.value() / d.mass;
}

double total_variation(const DensityView& d) {
    if (d.values.empty()) return 0.0;
    CompensatedSum s;
    s.add(d.values.front());
    for (std::size_t k = 1; k < d.values.size(); ++k) s.add(std::abs(d.values[k] - d.values[k - 1]));
    s.add(d.values.back());
    return s.value();
}

double empirical_wasserstein_gap(std::span<const double> x, double sigma_N) {
    require_increasing(x, "empirical_wasserstein_gap");
    // Both pseudo-inverses live on the mass grid k sigma_N. On cell k the
    // reconstruction exceeds the step function by (m - k sigma_N) / rho_k,
    // which integrates to sigma_N * (x_{k+1} - x_k) / 2. Each gap is split
    // into its rounded value and exact rounding error so the telescoping
    // sum is not inflated by cancellation.
    CompensatedSum gaps;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        // TwoSum of x_{k+1} and -x_k.
        const double d = x[k + 1] - x[k];
        const double a = d + x[k];
        const double b = d - a;
        const double err = (x[k + 1] - a) + (-x[k] - b);
        gaps.add(d);
        gaps.add(err);
    }
    return 0.5 * sigma_N * gaps.value();
}

}  // namespace odpa
