// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,2,...] [--known-failure N]... [--report FILE]
//
// Exit status is 0 when the set of failing criteria equals the set passed
// with --known-failure (empty by default), 1 otherwise.

#include <algorithm>
#include <cfloat>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odpa/core.hpp"
#include "odpa/dpa.hpp"
#include "odpa/experiments.hpp"
#include "odpa/io.hpp"
#include "odpa/kernels.hpp"
#include "odpa/metrics.hpp"
#include "odpa/transport.hpp"

using namespace odpa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Scenario golden() { return load_scenario(fs::path(ODPA_SOURCE_DIR) / "scenarios" / "black_r5.json"); }

// The black reference run shared by criteria 1 to 6.
const Trajectory& black_run() {
    static const Trajectory traj = [] {
        const auto t0 = std::chrono::steady_clock::now();
        Trajectory t = simulate(golden());
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "  (black reference run: M = 40, N = 100, T = 2, dt = 1e-3; " << t.stats.steps << " steps, "
                  << fmt(s) << " s)\n";
        return t;
    }();
    return traj;
}

Outcome mass_conservation() {
    const auto& traj = black_run();
    double worst = 0.0;
    for (const auto& s : traj.snapshots) {
        for (std::size_t i = 0; i < s.n_agents; ++i) {
            const double m = reconstruct(s.opinions(i), s.sigma_N[i]).integral();
            worst = std::max(worst, std::abs(m - s.masses[i]) / s.masses[i]);
        }
    }
    return {worst <= 1e-10, "max relative mass error " + fmt(worst) + " over " +
                                std::to_string(traj.snapshots.size()) + " snapshots (tol 1e-10)"};
}

double growth_rate(const Trajectory& traj) {
    const KernelSet k = model_kernels(traj.scenario);
    return k.c_K * traj.scenario.total_mass();
}

Outcome ordering_and_gaps() {
    const auto& traj = black_run();
    const double mu = growth_rate(traj);
    const auto& first = traj.snapshots.front();
    double g0_min = INFINITY, g0_max = 0.0;
    for (std::size_t n = 0; n + 1 < first.x.size(); ++n) {
        if ((n + 1) % first.n_points() == 0) continue;
        g0_min = std::min(g0_min, first.x[n + 1] - first.x[n]);
        g0_max = std::max(g0_max, first.x[n + 1] - first.x[n]);
    }
    bool ordered = true, lower = true, upper = true;
    double tightest_lower = INFINITY, tightest_upper = INFINITY;
    for (const auto& s : traj.snapshots) {
        double gmin = INFINITY, gmax = 0.0;
        for (std::size_t i = 0; i < s.n_agents; ++i) {
            const auto x = s.opinions(i);
            for (std::size_t k = 0; k + 1 < x.size(); ++k) {
                const double g = x[k + 1] - x[k];
                if (!(g > 0.0)) ordered = false;
                gmin = std::min(gmin, g);
                gmax = std::max(gmax, g);
            }
        }
        const double lo = 0.99 * g0_min * std::exp(-mu * s.t);
        const double hi = 1.01 * g0_max * std::exp(mu * s.t);
        lower = lower && gmin >= lo;
        upper = upper && gmax <= hi;
        tightest_lower = std::min(tightest_lower, gmin / lo);
        tightest_upper = std::min(tightest_upper, hi / gmax);
    }
    return {ordered && lower && upper,
            std::string(ordered ? "strictly ordered" : "ORDERING VIOLATED") + "; min gap / lower bound >= " +
                fmt(tightest_lower) + ", upper bound / max gap >= " + fmt(tightest_upper) + " (rate " + fmt(mu) +
                ", 1% slack)"};
}

Outcome density_bounds() {
    const auto& traj = black_run();
    const double mu = growth_rate(traj);
    std::vector<double> m_lo, m_hi;
    for (const auto& a : traj.scenario.agents) {
        const InitialDensity d(a.density, a.mass);
        m_lo.push_back(d.lower_bound());
        m_hi.push_back(d.upper_bound());
    }
    bool ok = true;
    double margin_lo = INFINITY, margin_hi = INFINITY;
    for (const auto& s : traj.snapshots) {
        for (std::size_t i = 0; i < s.n_agents; ++i) {
            const double lo = 0.99 * m_lo[i] * std::exp(-mu * s.t);
            const double hi = 1.01 * m_hi[i] * std::exp(mu * s.t);
            for (double rho : discrete_densities(s.opinions(i), s.sigma_N[i])) {
                ok = ok && rho >= lo && rho <= hi;
                margin_lo = std::min(margin_lo, rho / lo);
                margin_hi = std::min(margin_hi, hi / rho);
            }
        }
    }
    return {ok, "rho / lower bound >= " + fmt(margin_lo) + ", upper bound / rho >= " + fmt(margin_hi) +
                    " (1% slack)"};
}

Outcome momenta_identity() {
    const auto& traj = black_run();
    double worst = 0.0;
    for (const auto& s : traj.snapshots) {
        const double N = static_cast<double>(s.n_intervals);
        for (std::size_t i = 0; i < s.n_agents; ++i) {
            const double lhs = discrete_mean(s.opinions(i));
            const double rhs = N / (N + 1.0) * first_moment(reconstruct(s.opinions(i), s.sigma_N[i]));
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return {worst <= 1e-10, "max |discrete mean - N/(N+1) first moment| = " + fmt(worst) + " (tol 1e-10)"};
}

Outcome empirical_gap() {
    const auto& traj = black_run();
    bool ok = true;
    double worst = 0.0;
    for (const auto& s : traj.snapshots) {
        for (std::size_t i = 0; i < s.n_agents; ++i) {
            const double gap = empirical_wasserstein_gap(s.opinions(i), s.sigma_N[i]);
            const double bound = s.sigma_N[i] * kOmegaLength / 2.0;
            ok = ok && gap <= bound;
            worst = std::max(worst, gap / bound);
        }
    }
    return {ok, "max gap / bound = " + fmt(worst) + " (exact inequality)"};
}

Outcome time_lipschitz() {
    const auto& traj = black_run();
    bool ok = true;
    double worst = 0.0;
    for (std::size_t n = 1; n < traj.snapshots.size(); ++n) {
        const auto& a = traj.snapshots[n - 1];
        const auto& b = traj.snapshots[n];
        const double speed = traj.interval_max_speed[n];
        for (std::size_t i = 0; i < a.n_agents; ++i) {
            const double w = wasserstein1(reconstruct(a.opinions(i), a.sigma_N[i]),
                                          reconstruct(b.opinions(i), b.sigma_N[i]));
            const double bound = 3.0 * a.masses[i] * speed * (b.t - a.t);
            ok = ok && w <= 1.05 * bound;
            if (bound > 0.0) worst = std::max(worst, w / bound);
        }
    }
    return {ok, "max W1 / (3 sigma v |t - s|) = " + fmt(worst) + " (5% slack)"};
}

Outcome oracle_equivalence() {
    Scenario s;
    AgentInit a;
    a.mass = 1.0;
    a.density = GaussianDensity{-0.3, 0.08};
    a.position = {0.0, 0.0};
    AgentInit b;
    b.mass = 0.8;
    b.density = GaussianDensity{0.25, 0.12};
    b.position = {1.5, 0.5};
    s.agents = {a, b};
    s.attitude = AttitudeParams::black();
    s.interaction_radius = 5.0;
    s.run.n_particles = 8;
    const KernelSet k = model_kernels(s);
    const ParticleState init = initial_state(s);
    const double T = 0.5;
    std::vector<double> disc;
    for (double dt : {1e-2, 5e-3, 2.5e-3}) {
        ParticleState r = init, e = init;
        const int steps = static_cast<int>(std::lround(T / dt));
        for (int n = 0; n < steps; ++n) {
            r = step_rk4(r, dt, k);
            e = step_euler(e, dt, k);
        }
        double d = 0.0;
        for (std::size_t n = 0; n < r.x.size(); ++n) d = std::max(d, std::abs(r.x[n] - e.x[n]));
        for (std::size_t n = 0; n < r.a.size(); ++n) d = std::max(d, std::abs(r.a[n] - e.a[n]));
        disc.push_back(d);
    }
    const double r1 = disc[0] / disc[1], r2 = disc[1] / disc[2], total = disc[0] / disc[2];
    const bool ok = total >= 3.5 && r1 >= 1.75 && r2 >= 1.75;
    return {ok, "discrepancies " + fmt(disc[0]) + ", " + fmt(disc[1]) + ", " + fmt(disc[2]) +
                    "; per-halving ratios " + fmt(r1) + ", " + fmt(r2) + "; overall " + fmt(total) +
                    " (need >= 3.5 overall, >= 1.75 per halving)"};
}

Outcome self_convergence() {
    Scenario s = golden();
    s.run.t_final = 0.3;
    s.run.snapshot_every = 0.3;
    const auto report = run_convergence(s, {50, 100, 200});
    const auto& r0 = report.rows[0];
    const auto& r1 = report.rows[1];
    const double ratio = r1.max_w1 / r0.max_w1;
    const bool ok = ratio <= 0.75 && r1.max_node_discrepancy < r0.max_node_discrepancy && r0.empirical_gap_ok &&
                    r1.empirical_gap_ok;
    // Per-agent view: which agents keep the worst-case ratio up.
    std::vector<double> per_agent;
    std::size_t slow = 0;
    for (std::size_t i = 0; i < r0.w1_per_agent.size(); ++i) {
        per_agent.push_back(r1.w1_per_agent[i] / r0.w1_per_agent[i]);
        if (per_agent.back() > 0.75) ++slow;
    }
    return {ok, "T = 0.3; max W1 " + fmt(r0.max_w1) + " (50 vs 100), " + fmt(r1.max_w1) + " (100 vs 200), ratio " +
                    fmt(ratio) + " (need <= 0.75); node discrepancy " + fmt(r0.max_node_discrepancy) + " -> " +
                    fmt(r1.max_node_discrepancy) + "; per-agent ratio median " + fmt(median(per_agent)) + ", " +
                    std::to_string(slow) + " of " + std::to_string(per_agent.size()) + " agents above 0.75"};
}

struct TrendData {
    std::map<double, std::vector<SweepResult>> by_radius;
    std::size_t failures = 0;
    std::string first_error;
};

TrendData radius_sweep(Scenario base) {
    SweepSpec spec;
    spec.base = std::move(base);
    spec.axes = {{"interaction_radius", {"3.5", "5.0", "10.0"}}};
    spec.seeds = {1, 2, 3, 4, 5};
    TrendData data;
    for (auto& r : run_sweep(spec, 1, std::nullopt)) {
        if (!r.ok) {
            ++data.failures;
            if (data.first_error.empty()) data.first_error = r.error;
        }
        data.by_radius[r.run.scenario.interaction_radius].push_back(std::move(r));
    }
    return data;
}

template <typename Get>
std::vector<double> medians(const TrendData& d, Get get) {
    std::vector<double> out;
    for (const auto& [radius, runs] : d.by_radius) {
        std::vector<double> v;
        for (const auto& r : runs) v.push_back(get(r));
        out.push_back(median(v));
    }
    return out;
}

std::string list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t n = 0; n < v.size(); ++n) s += (n ? ", " : "") + fmt(v[n]);
    return s;
}

Outcome radicalization_trend() {
    Scenario s = golden();
    s.run.n_particles = 40;
    s.run.snapshot_every = s.run.t_final;
    const auto data = radius_sweep(s);
    if (data.failures > 0) return {false, std::to_string(data.failures) + " of 15 runs failed: " + data.first_error};
    const auto gap = medians(data, [](const SweepResult& r) { return r.bimodality_gap; });
    const auto initial = medians(data, [](const SweepResult& r) { return r.initial_bimodality_gap; });
    const bool ok = gap[0] <= gap[1] && gap[1] <= gap[2] && gap[2] > initial[2];
    return {ok, "N = 40, T = 2, 5 seeds; median final bimodality gap at radii 3.5/5/10: " + list(gap) +
                    "; median initial gap at radius 10: " + fmt(initial[2])};
}

Outcome polarization_trend() {
    Scenario s = golden();
    s.attitude = AttitudeParams::blue();
    s.diffusion_enabled = false;
    s.run.snapshot_every = s.run.t_final;
    const auto data = radius_sweep(s);
    if (data.failures > 0) {
        return {false, std::to_string(data.failures) + " of 15 runs stopped before T: " + data.first_error};
    }
    const auto pol = medians(data, [](const SweepResult& r) { return r.polarization_index; });
    const auto spread = medians(data, [](const SweepResult& r) { return r.cluster_opinion_spread; });
    const bool ok = pol[0] <= pol[1] && pol[1] <= pol[2] && spread[0] >= spread[1] && spread[1] >= spread[2];
    return {ok, "median polarization at radii 3.5/5/10: " + list(pol) + "; median cluster spread: " + list(spread)};
}

Outcome kernel_suite() {
    const AttitudeParams presets[] = {AttitudeParams::blue(), AttitudeParams::black(), AttitudeParams::red(),
                                      AttitudeParams::olive()};
    double worst_jump = 0.0;
    for (const auto& p : presets) {
        // Left-branch formulas evaluated exactly at each breakpoint.
        const double left[] = {1.0 - 0.1 * p.r_f / p.r_f, 0.1 + 0.8 * (1.0 - (p.r_a - p.r_f) / (p.r_a - p.r_f)),
                               -0.1 + 0.2 * (1.0 - (p.r_r - p.r_a) / (p.r_r - p.r_a)),
                               -0.9 + 0.8 * (1.0 - (p.r_l - p.r_r) / (p.r_l - p.r_r))};
        const double at[] = {p.r_f, p.r_a, p.r_r, p.r_l};
        for (int b = 0; b < 4; ++b) worst_jump = std::max(worst_jump, std::abs(attitude_zeta(at[b], p) - left[b]));
    }
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.0, 10.0);
    bool k_zero = true, a_zero = true, v_zero = true;
    const auto p = AttitudeParams::black();
    for (int n = 0; n < 10000; ++n) {
        const double w = u(rng), mi = u(rng), mj = u(rng), dist = pos(rng);
        k_zero = k_zero && kernel_K_model(w, w, mi, mj, dist, p, 5.0) == 0.0;
        a_zero = a_zero && mobility_A_model(mi, mi) == 0.0;
        const std::vector<double> ai{pos(rng), pos(rng)};
        std::vector<double> aj{pos(rng), pos(rng)};
        for (double v : network_velocity_model(mi, mj, ai, ai, p, 5.0)) v_zero = v_zero && v == 0.0;
        if (std::hypot(ai[0] - aj[0], ai[1] - aj[1]) > 5.0) {
            for (double v : network_velocity_model(mi, mj, ai, aj, p, 5.0)) v_zero = v_zero && v == 0.0;
        }
    }
    const bool ok = worst_jump <= 4 * DBL_EPSILON && k_zero && a_zero && v_zero;
    return {ok, "max zeta breakpoint jump " + fmt(worst_jump) + " (tol 4 eps); K(w,w) = 0: " +
                    (k_zero ? "yes" : "no") + "; A(mu,mu) = 0: " + (a_zero ? "yes" : "no") +
                    "; V = 0 at coincident nodes and beyond cutoff: " + (v_zero ? "yes" : "no")};
}

DensityView random_view(std::mt19937_64& rng, double mass) {
    std::uniform_int_distribution<int> cells(1, 30);
    std::uniform_real_distribution<double> unit(0.05, 1.0), value(0.05, 3.0);
    const int n = cells(rng);
    DensityView d;
    std::vector<double> w(n);
    double total_w = 0.0;
    for (double& v : w) total_w += (v = unit(rng));
    d.breakpoints.push_back(-1.0);
    double acc = 0.0;
    for (int k = 0; k + 1 < n; ++k) d.breakpoints.push_back(-1.0 + 2.0 * (acc += w[k]) / total_w);
    d.breakpoints.push_back(1.0);
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
        d.values.push_back(value(rng));
        total += d.values.back() * (d.breakpoints[k + 1] - d.breakpoints[k]);
    }
    for (double& v : d.values) v *= mass / total;
    d.mass = mass;
    return d;
}

double cdf(const DensityView& d, double x) {
    double c = 0.0;
    for (std::size_t k = 0; k < d.values.size() && x > d.breakpoints[k]; ++k) {
        c += d.values[k] * (std::min(x, d.breakpoints[k + 1]) - d.breakpoints[k]);
    }
    return c;
}

Outcome transport_suite() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> mass(0.2, 3.0);
    int violations = 0;
    // Identity of indiscernibles up to the rounding of the inputs: distinct
    // measures have positive distance, equal ones a distance at round-off level.
    auto same_measure = [](const DensityView& a, const DensityView& b) {
        for (int g = 0; g <= 1000; ++g) {
            const double x = -1.0 + 0.002 * g;
            if (std::abs(cdf(a, x) - cdf(b, x)) > 1e-12) return false;
        }
        return true;
    };
    for (int n = 0; n < 1000; ++n) {
        const double m = mass(rng);
        const auto a = random_view(rng, m), b = random_view(rng, m), c = random_view(rng, m);
        const double ab = wasserstein1(a, b), ba = wasserstein1(b, a), ac = wasserstein1(a, c),
                     bc = wasserstein1(b, c);
        const bool identity = wasserstein1(a, a) == 0.0 && (same_measure(a, b) ? ab <= 1e-12 * m : ab > 0.0);
        const bool symmetry = std::abs(ab - ba) <= 1e-12 * std::max(1.0, ab);
        const bool triangle = ac <= ab + bc + 1e-12;
        if (!(identity && symmetry && triangle)) ++violations;
    }
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
        const double m = mass(rng);
        const auto a = random_view(rng, m), b = random_view(rng, m);
        const int G = 100000;
        const double h = 2.0 / G;
        double q = 0.0;
        for (int g = 0; g < G; ++g) {
            const double x = -1.0 + (g + 0.5) * h;
            q += std::abs(cdf(a, x) - cdf(b, x));
        }
        worst = std::max(worst, std::abs(wasserstein1(a, b) - q * h));
    }
    return {violations == 0 && worst <= 1e-6, std::to_string(violations) +
                                                  " axiom violations on 1000 triples; max |W1 - quadrature| = " +
                                                  fmt(worst) + " on 20 pairs (tol 1e-6)"};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    std::vector<int> known;
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--known-failure", known, "Criterion expected to fail (repeatable)");
    std::string report_path;
    app.add_option("--report", report_path, "Also write the PASS/FAIL lines to this file");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "mass conservation", mass_conservation},
        {2, "ordering and gap bounds", ordering_and_gaps},
        {3, "density bounds", density_bounds},
        {4, "momenta identity", momenta_identity},
        {5, "empirical gap bound", empirical_gap},
        {6, "time-Lipschitz W1", time_lipschitz},
        {7, "RK4 vs Euler oracle equivalence", oracle_equivalence},
        {8, "self-convergence in N", self_convergence},
        {9, "radicalization trend in radius", radicalization_trend},
        {10, "polarization trend without diffusion", polarization_trend},
        {11, "kernel unit suite", kernel_suite},
        {12, "transport metric suite", transport_suite},
    };

    std::ofstream report;
    if (!report_path.empty()) {
        report.open(report_path);
        if (!report) {
            std::cerr << "cannot write " << report_path << "\n";
            return 2;
        }
    }

    std::set<int> failed;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) failed.insert(c.id);
        std::ostringstream line;
        line << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.name << ": " << o.detail << " ["
             << fmt(s) << " s]";
        std::cout << line.str() << std::endl;
        if (report) report << line.str() << std::endl;
    }

    std::set<int> expected;
    for (int k : known) {
        if (only.empty() || std::find(only.begin(), only.end(), k) != only.end()) expected.insert(k);
    }
    if (failed == expected) {
        if (!expected.empty()) std::cout << "failures match the documented known set\n";
        return 0;
    }
    std::cout << "failures differ from the documented known set\n";
    return 1;
}
