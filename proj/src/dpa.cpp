#include "odpa/dpa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "odpa/transport.hpp"

namespace odpa {

namespace {

constexpr double kRk4RealStability = 2.785;

bool gaps_ok(const ParticleState& state, double min_gap) {
    for (double v : state.a) {
        if (!std::isfinite(v)) return false;
    }
    for (std::size_t i = 0; i < state.n_agents; ++i) {
        const auto x = state.opinions(i);
        for (std::size_t k = 0; k + 1 < x.size(); ++k) {
            if (!(x[k + 1] - x[k] >= min_gap)) return false;
        }
    }
    return true;
}

void rhs_into(const ParticleState& state, const KernelSet& kernels, Derivative& d);

// out = state + h * d; boundary particles have zero velocity and stay put.
void axpy_into(const ParticleState& state, double h, const Derivative& d, ParticleState& out) {
    out = state;
    for (std::size_t n = 0; n < out.x.size(); ++n) out.x[n] += h * d.dx[n];
    for (std::size_t n = 0; n < out.a.size(); ++n) out.a[n] += h * d.da[n];
    out.t = state.t + h;
}

ParticleState axpy(const ParticleState& state, double h, const Derivative& d) {
    ParticleState out;
    axpy_into(state, h, d, out);
    return out;
}

// Stage storage reused across the steps of one integration.
struct Rk4Work {
    ParticleState stage;
    Derivative k2, k3, k4;
};

ParticleState rk4_attempt(const ParticleState& s, const Derivative& k1, double h, const KernelSet& kernels,
                          StepStats* stats, Rk4Work& w) {
    axpy_into(s, 0.5 * h, k1, w.stage);
    rhs_into(w.stage, kernels, w.k2);
    axpy_into(s, 0.5 * h, w.k2, w.stage);
    rhs_into(w.stage, kernels, w.k3);
    axpy_into(s, h, w.k3, w.stage);
    rhs_into(w.stage, kernels, w.k4);
    if (stats) stats->rhs_evaluations += 3;
    ParticleState out = s;
    const double c = h / 6.0;
    for (std::size_t n = 0; n < out.x.size(); ++n) {
        out.x[n] += c * (k1.dx[n] + 2.0 * w.k2.dx[n] + 2.0 * w.k3.dx[n] + w.k4.dx[n]);
    }
    for (std::size_t n = 0; n < out.a.size(); ++n) {
        out.a[n] += c * (k1.da[n] + 2.0 * w.k2.da[n] + 2.0 * w.k3.da[n] + w.k4.da[n]);
    }
    out.t = s.t + h;
    return out;
}

template <typename Attempt>
ParticleState guarded_step(const ParticleState& state, double dt, const GapGuard& guard, StepStats* stats,
                           Attempt&& attempt) {
    double h = dt;
    for (int halving = 0; halving <= guard.max_halvings; ++halving) {
        try {
            ParticleState next = attempt(h);
            if (gaps_ok(next, guard.min_gap)) {
                if (stats) ++stats->steps;
                return next;
            }
        } catch (const std::domain_error&) {
            // an intermediate stage lost its ordering; treat as a rejection
        }
        if (stats) ++stats->rejections;
        h *= 0.5;
    }
    std::ostringstream os;
    os << "step collapse at t = " << state.t << ": gaps fell below " << guard.min_gap << " after "
       << guard.max_halvings << " halvings of dt = " << dt;
    throw StepCollapse(os.str());
}

std::vector<double> snapshot_times(const RunParams& run) {
    std::vector<double> times;
    const double eps = 1e-12 * std::max(1.0, run.t_final);
    for (long s = 1;; ++s) {
        const double t = static_cast<double>(s) * run.snapshot_every;
        if (t >= run.t_final - eps) break;
        times.push_back(t);
    }
    times.push_back(run.t_final);
    return times;
}

}  // namespace

double Derivative::max_opinion_speed() const {
    double m = 0.0;
    for (double v : dx) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> quantile_partition(const InitialDensity& density, int n_intervals) {
    if (n_intervals < 2) throw std::invalid_argument("quantile_partition: need N >= 2");
    if (!(density.lower_bound() > 0.0)) {
        throw std::invalid_argument("quantile_partition: density lower bound is zero; quantiles are ill-defined");
    }
    const std::size_t n = static_cast<std::size_t>(n_intervals);
    std::vector<double> x(n + 1);
    x.front() = kOmegaMin;
    x.back() = kOmegaMax;
    for (std::size_t k = 1; k < n; ++k) {
        const double target = density.mass() * static_cast<double>(k) / static_cast<double>(n);
        double lo = x[k - 1];
        double hi = kOmegaMax;
        // Bisect to machine resolution in x; the cumulative mass error is
        // then far below 1e-12.
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (density.cumulative(mid) < target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x[k] = hi;
        if (!(x[k] > x[k - 1])) {
            throw std::invalid_argument("quantile_partition: partition is not strictly increasing");
        }
    }
    if (!(x[n - 1] < x[n])) throw std::invalid_argument("quantile_partition: last interval collapsed");
    return x;
}

std::vector<double> quantile_partition(const DensitySpec& density, double mass, int n_intervals) {
    return quantile_partition(InitialDensity(density, mass), n_intervals);
}

double discrete_mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("discrete_mean: empty particle set");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double beta_k(const ParticleState& state, const KernelSet& kernels, std::size_t i, std::size_t k) {
    if (!kernels.diffusion_enabled) return 0.0;
    const double w = state.opinions(i)[k];
    const double mu_i = discrete_mean(state.opinions(i));
    double sum = 0.0;
    for (std::size_t j = 0; j < state.n_agents; ++j) {
        const auto xj = state.opinions(j);
        const double mu_j = discrete_mean(xj);
        const double dist = state.node_distance(i, j);
        double inner = 0.0;
        for (double v : xj) inner += kernels.A(w, v, mu_i, mu_j, dist);
        sum += state.sigma_N[j] * inner;
    }
    return sum;
}

double theta_k(const ParticleState& state, const KernelSet& kernels, std::size_t i, std::size_t k) {
    const double w = state.opinions(i)[k];
    const double mu_i = discrete_mean(state.opinions(i));
    double sum = 0.0;
    for (std::size_t j = 0; j < state.n_agents; ++j) {
        const auto xj = state.opinions(j);
        const double mu_j = discrete_mean(xj);
        const double dist = state.node_distance(i, j);
        double inner = 0.0;
        for (double v : xj) inner += kernels.K(w, v, mu_i, mu_j, dist);
        sum += state.sigma_N[j] * inner;
    }
    return sum;
}

namespace {

// Scratch buffers reused across right-hand-side evaluations of one thread.
struct RhsScratch {
    std::vector<double> mu, dist, link, p_coef, q_coef, transport_stiff, weight, sums;
    std::vector<double> rho, phi, dphi, beta, theta, v;
};

RhsScratch& scratch() {
    thread_local RhsScratch s;
    return s;
}

void rhs_into(const ParticleState& state, const KernelSet& kernels, Derivative& d) {
    const std::size_t M = state.n_agents;
    const std::size_t P = state.n_points();
    const std::size_t N = state.n_intervals;
    const std::size_t dim = state.dim;
    const double points = static_cast<double>(P);
    RhsScratch& w = scratch();

    d.n_agents = M;
    d.n_points = P;
    d.dim = dim;
    d.dx.assign(M * P, 0.0);
    d.da.assign(M * dim, 0.0);

    w.mu.resize(M);
    w.sums.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
        const double* x = state.x.data() + i * P;
        double sum = x[0];
        for (std::size_t k = 0; k < N; ++k) {
            if (!(x[k + 1] > x[k])) {
                std::ostringstream os;
                os << "particle ordering violated for agent " << i << " at k = " << k;
                throw std::domain_error(os.str());
            }
            sum += x[k + 1];
        }
        w.sums[i] = sum;
        w.mu[i] = sum / points;
    }
    const std::vector<double>& mu = w.mu;

    w.dist.assign(M * M, 0.0);
    std::vector<double>& dist = w.dist;
    if (!(kernels.is_model && std::isinf(kernels.radius))) {
        for (std::size_t i = 0; i < M; ++i) {
            for (std::size_t j = i + 1; j < M; ++j) dist[i * M + j] = dist[j * M + i] = state.node_distance(i, j);
        }
    }

    w.p_coef.assign(M, 0.0);
    w.q_coef.assign(M, 0.0);
    w.transport_stiff.assign(M, 0.0);
    double c2 = 0.0, m_bar = 0.0, spread = 0.0;
    double node_stiff = 0.0;

    if (kernels.is_model) {
        // zeta(mu_i - mu_j) masked by the cutoff; shared by transport and nodes.
        w.link.assign(M * M, 0.0);
        std::vector<double>& link = w.link;
        for (std::size_t i = 0; i < M; ++i) {
            for (std::size_t j = i; j < M; ++j) {
                if (omega(dist[i * M + j], kernels.radius) == 0) continue;
                link[i * M + j] = link[j * M + i] = attitude_zeta(mu[i] - mu[j], kernels.attitude);
            }
        }
        const double sign = kernels.velocity_sign;
        for (std::size_t i = 0; i < M; ++i) {
            const double* ai = state.a.data() + i * dim;
            double* out = d.da.data() + i * dim;
            for (std::size_t j = 0; j < M; ++j) {
                const double z = sign * link[i * M + j];
                if (z == 0.0) continue;
                const double* aj = state.a.data() + j * dim;
                for (std::size_t c = 0; c < dim; ++c) out[c] += z * (aj[c] - ai[c]);
            }
        }

        // Transport has the closed form theta = p_i - q_i x; the mobility
        // beta = c2 (x - m)^2 + spread is shared by all agents.
        w.weight.resize(M);
        for (std::size_t j = 0; j < M; ++j) {
            w.weight[j] = state.sigma_N[j] * points;
            c2 += w.weight[j];
        }
        for (std::size_t j = 0; j < M; ++j) m_bar += w.weight[j] * mu[j];
        m_bar /= c2;
        for (std::size_t j = 0; j < M; ++j) spread += w.weight[j] * (mu[j] - m_bar) * (mu[j] - m_bar);
        for (std::size_t i = 0; i < M; ++i) {
            double zeta_abs = 0.0;
            for (std::size_t j = 0; j < M; ++j) {
                const double z = link[i * M + j];
                if (z == 0.0) continue;
                w.p_coef[i] += z * state.sigma_N[j] * w.sums[j];
                w.q_coef[i] += z * w.weight[j];
                w.transport_stiff[i] += 2.0 * std::abs(z) * w.weight[j];
                zeta_abs += std::abs(z);
            }
            node_stiff = std::max(node_stiff, 2.0 * zeta_abs);
        }
    } else {
        w.v.resize(dim);
        for (std::size_t i = 0; i < M; ++i) {
            for (std::size_t j = 0; j < M; ++j) {
                kernels.V(mu[i], mu[j], state.node(i), state.node(j), dist[i * M + j], w.v);
                for (std::size_t c = 0; c < dim; ++c) d.da[i * dim + c] += w.v[c];
            }
        }
        const double sigma_total = std::accumulate(state.masses.begin(), state.masses.end(), 0.0);
        const double bound = 2.0 * kernels.c_K * sigma_total * points / static_cast<double>(N);
        std::fill(w.transport_stiff.begin(), w.transport_stiff.end(), bound);
        node_stiff = 2.0 * static_cast<double>(M) * kernels.c_K;
    }

    double stiffness = node_stiff;
    const bool linear_phi = kernels.phi.kind == PhiSpec::Kind::Linear;
    w.rho.resize(N);
    w.phi.resize(N);
    w.dphi.resize(N);
    w.beta.assign(P, 0.0);
    w.theta.assign(P, 0.0);
    double* rho = w.rho.data();
    double* phi = w.phi.data();
    double* dphi = w.dphi.data();
    double* beta = w.beta.data();
    double* theta = w.theta.data();
    for (std::size_t i = 0; i < M; ++i) {
        const double* x = state.x.data() + i * P;
        const double sN = state.sigma_N[i];
        const double inv_sN = 1.0 / sN;
        for (std::size_t k = 0; k < N; ++k) rho[k] = sN / (x[k + 1] - x[k]);
        if (linear_phi) {
            std::copy(rho, rho + N, phi);
            std::fill(dphi, dphi + N, 1.0);
        } else {
            for (std::size_t k = 0; k < N; ++k) {
                phi[k] = phi_eval(rho[k], kernels.phi);
                dphi[k] = phi_derivative(rho[k], kernels.phi);
            }
        }
        if (kernels.is_model) {
            const double p = w.p_coef[i];
            const double q = w.q_coef[i];
            const double on = kernels.diffusion_enabled ? 1.0 : 0.0;
            for (std::size_t k = 1; k < N; ++k) {
                const double off = x[k] - m_bar;
                beta[k] = on * (c2 * off * off + spread);
                theta[k] = p - q * x[k];
            }
        } else {
            for (std::size_t k = 1; k < N; ++k) {
                beta[k] = beta_k(state, kernels, i, k);
                theta[k] = theta_k(state, kernels, i, k);
            }
        }
        double row_max = 0.0;
        double* out = d.dx.data() + i * P;
        for (std::size_t k = 1; k < N; ++k) {
            out[k] = beta[k] * inv_sN * (phi[k - 1] - phi[k]) + theta[k];
            const double row = beta[k] * (dphi[k - 1] * rho[k - 1] * rho[k - 1] + dphi[k] * rho[k] * rho[k]);
            row_max = std::max(row_max, row);
        }
        stiffness = std::max(stiffness, 2.0 * row_max * inv_sN * inv_sN + w.transport_stiff[i]);
    }
    d.stiffness = stiffness;
}

}  // namespace

Derivative rhs(const ParticleState& state, const KernelSet& kernels) {
    Derivative d;
    rhs_into(state, kernels, d);
    return d;
}

double rk4_stable_step(const Derivative& d) {
    if (!(d.stiffness > 0.0)) return std::numeric_limits<double>::infinity();
    return kRk4RealStability / d.stiffness;
}

ParticleState initial_state(const Scenario& scenario) {
    if (scenario.agents.empty()) throw std::invalid_argument("initial_state: scenario lists no agents");
    const std::size_t M = scenario.agents.size();
    const std::size_t N = static_cast<std::size_t>(scenario.run.n_particles);
    const std::size_t dim = static_cast<std::size_t>(scenario.network_dim);
    ParticleState state(M, N, dim);
    for (std::size_t i = 0; i < M; ++i) {
        const auto& agent = scenario.agents[i];
        if (agent.position.size() != dim) throw std::invalid_argument("initial_state: position dimension mismatch");
        const auto x = quantile_partition(agent.density, agent.mass, static_cast<int>(N));
        std::copy(x.begin(), x.end(), state.opinions(i).begin());
        std::copy(agent.position.begin(), agent.position.end(), state.node(i).begin());
        state.masses[i] = agent.mass;
        state.sigma_N[i] = agent.mass / static_cast<double>(N);
    }
    return state;
}

ParticleState step_rk4(const ParticleState& state, double dt, const KernelSet& kernels, const GapGuard& guard,
                       StepStats* stats) {
    const Derivative k1 = rhs(state, kernels);
    if (stats) ++stats->rhs_evaluations;
    Rk4Work work;
    return guarded_step(state, dt, guard, stats,
                        [&](double h) { return rk4_attempt(state, k1, h, kernels, stats, work); });
}

ParticleState step_euler(const ParticleState& state, double dt, const KernelSet& kernels, const GapGuard& guard,
                         StepStats* stats) {
    const Derivative k1 = rhs(state, kernels);
    if (stats) ++stats->rhs_evaluations;
    return guarded_step(state, dt, guard, stats, [&](double h) { return axpy(state, h, k1); });
}

Trajectory simulate(const Scenario& scenario) {
    const Scenario realized = realize(scenario);
    return simulate(realized, model_kernels(realized));
}

Trajectory simulate(const Scenario& input, const KernelSet& kernels) {
    auto violations = validate(input);
    if (!violations.empty()) throw ScenarioError(std::move(violations));

    Trajectory traj;
    traj.scenario = realize(input);
    const RunParams& run = traj.scenario.run;
    const GapGuard guard{run.min_gap, run.max_halvings};

    ParticleState state = initial_state(traj.scenario);
    traj.snapshots.push_back(state);
    traj.interval_max_speed.push_back(0.0);
    if (run.t_final <= 0.0) return traj;

    const std::vector<double> targets = snapshot_times(run);
    std::size_t next = 0;
    double interval_speed = 0.0;
    Rk4Work work;
    Derivative k1;
    int slow_steps = 0;

    while (next < targets.size()) {
        const double target = targets[next];
        rhs_into(state, kernels, k1);
        ++traj.stats.rhs_evaluations;
        const double speed = k1.max_opinion_speed();

        double h = std::min(run.dt, target - state.t);
        if (run.stability_cap) h = std::min(h, run.stability_safety * rk4_stable_step(k1));
        const bool aims_at_target = h >= target - state.t;

        ParticleState after = guarded_step(state, h, guard, &traj.stats, [&](double step) {
            return rk4_attempt(state, k1, step, kernels, &traj.stats, work);
        });
        const double advanced = after.t - state.t;
        double moved = 0.0;
        for (std::size_t n = 0; n < after.x.size(); ++n) moved = std::max(moved, std::abs(after.x[n] - state.x[n]));
        interval_speed = std::max({interval_speed, speed, moved / advanced});

        // Land exactly on the snapshot time when the full step was accepted.
        if (aims_at_target && advanced == h) after.t = target;
        state = std::move(after);

        slow_steps = speed < run.stop_speed ? slow_steps + 1 : 0;
        const bool stop_now = run.early_stop && slow_steps >= run.stop_steps;

        if (state.t >= target) {
            traj.snapshots.push_back(state);
            traj.interval_max_speed.push_back(interval_speed);
            interval_speed = 0.0;
            ++next;
            if (stop_now) {
                traj.stopped_early = next < targets.size();
                break;
            }
        } else if (stop_now) {
            traj.snapshots.push_back(state);
            traj.interval_max_speed.push_back(interval_speed);
            traj.stopped_early = true;
            break;
        }
    }
    return traj;
}

}  // namespace odpa
