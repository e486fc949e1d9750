#include "odpa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "odpa/dpa.hpp"
#include "odpa/transport.hpp"

namespace odpa {

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t v) {
    std::size_t root = v;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[v] != root) {
        const std::size_t next = parent_[v];
        parent_[v] = root;
        v = next;
    }
    return root;
}

void UnionFind::unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
}

std::vector<double> mean_opinions(const ParticleState& state) {
    std::vector<double> mu(state.n_agents);
    for (std::size_t i = 0; i < state.n_agents; ++i) mu[i] = discrete_mean(state.opinions(i));
    return mu;
}

Histogram histogram(std::span<const double> values, int bins) {
    if (bins < 2) throw std::invalid_argument("histogram: need at least two bins");
    const auto nb = static_cast<std::size_t>(bins);
    Histogram h;
    h.edges.resize(nb + 1);
    for (std::size_t b = 0; b <= nb; ++b) {
        h.edges[b] = kOmegaMin + kOmegaLength * static_cast<double>(b) / static_cast<double>(nb);
    }
    h.counts.assign(nb, 0);
    for (double v : values) {
        const double u = (v - kOmegaMin) / kOmegaLength * static_cast<double>(nb);
        const auto b = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(nb - 1)));
        ++h.counts[b];
    }
    return h;
}

Histogram mean_opinion_histogram(const ParticleState& state, int bins) {
    const auto mu = mean_opinions(state);
    return histogram(mu, bins);
}

ClusterPartition network_clusters(const ParticleState& state, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("network_clusters: radius must be positive");
    const std::size_t M = state.n_agents;
    UnionFind uf(M);
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = i + 1; j < M; ++j) {
            if (std::isinf(radius) || state.node_distance(i, j) <= radius) uf.unite(i, j);
        }
    }
    ClusterPartition p;
    p.label.resize(M);
    std::vector<std::size_t> root_label(M, M);
    for (std::size_t i = 0; i < M; ++i) {
        const std::size_t r = uf.find(i);
        if (root_label[r] == M) {
            root_label[r] = i;
            p.members.emplace_back();
        }
        p.label[i] = root_label[r];
    }
    // Labels appear in increasing order, so component c has label = first member.
    std::vector<std::size_t> slot(M, 0);
    std::size_t next = 0;
    for (std::size_t i = 0; i < M; ++i) {
        if (p.label[i] == i) slot[i] = next++;
        p.members[slot[p.label[i]]].push_back(i);
    }
    return p;
}

double polarization_index(const ParticleState& state, double threshold) {
    double extreme = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < state.n_agents; ++i) {
        const auto x = state.opinions(i);
        const double sN = state.sigma_N[i];
        for (std::size_t k = 0; k + 1 < x.size(); ++k) {
            const double rho = sN / (x[k + 1] - x[k]);
            const double low = std::max(0.0, std::min(x[k + 1], -threshold) - x[k]);
            const double high = std::max(0.0, x[k + 1] - std::max(x[k], threshold));
            extreme += rho * (low + high);
        }
        total += state.masses[i];
    }
    return total > 0.0 ? std::clamp(extreme / total, 0.0, 1.0) : 0.0;
}

double bimodality_gap(std::span<const double> means) {
    if (means.size() < 2) throw std::invalid_argument("bimodality_gap: need at least two agents");
    std::vector<double> v(means.begin(), means.end());
    std::sort(v.begin(), v.end());
    const std::size_t M = v.size();
    std::vector<double> gaps(M - 1);
    for (std::size_t k = 0; k + 1 < M; ++k) gaps[k] = v[k + 1] - v[k];

    std::vector<double> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    const double min_side = 0.2 * static_cast<double>(M);
    double best = 0.0;
    for (std::size_t k = 0; k + 1 < M; ++k) {
        const double left = static_cast<double>(k + 1);
        const double right = static_cast<double>(M - k - 1);
        if (left >= min_side && right >= min_side) best = std::max(best, gaps[k]);
    }
    // Equal spacing must not register as a separating gap.
    if (best <= median * (1.0 + 1e-9)) return 0.0;
    return best;
}

double cluster_opinion_spread(std::span<const double> means, const ClusterPartition& clusters) {
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& members : clusters.members) {
        if (members.size() < 2) continue;
        double mean = 0.0;
        for (std::size_t i : members) mean += means[i];
        mean /= static_cast<double>(members.size());
        double ss = 0.0;
        for (std::size_t i : members) ss += (means[i] - mean) * (means[i] - mean);
        sum += std::sqrt(ss / static_cast<double>(members.size() - 1));
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

double cluster_opinion_spread(const ParticleState& state, const ClusterPartition& clusters) {
    const auto mu = mean_opinions(state);
    return cluster_opinion_spread(mu, clusters);
}

MetricsRecord compute_metrics(const ParticleState& state, const ParticleState& initial, double radius, int bins) {
    MetricsRecord r;
    r.t = state.t;
    r.mean_opinions = mean_opinions(state);
    r.histogram = histogram(r.mean_opinions, bins);
    const auto clusters = network_clusters(state, radius);
    r.n_clusters = clusters.size();
    r.cluster_opinion_spread = cluster_opinion_spread(r.mean_opinions, clusters);
    r.polarization_index = polarization_index(state);
    r.bimodality_gap = state.n_agents >= 2 ? bimodality_gap(r.mean_opinions) : 0.0;
    r.total_variation.resize(state.n_agents);
    r.w1_to_initial.resize(state.n_agents);
    for (std::size_t i = 0; i < state.n_agents; ++i) {
        const auto now = reconstruct(state.opinions(i), state.sigma_N[i]);
        r.total_variation[i] = total_variation(now);
        r.w1_to_initial[i] = wasserstein1(now, reconstruct(initial.opinions(i), initial.sigma_N[i]));
    }
    return r;
}

}  // namespace odpa
