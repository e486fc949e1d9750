#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "odpa/core.hpp"

namespace odpa {

/// Uniform bins on [-1, 1]; the last bin is closed.
struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;

    std::size_t total() const;
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n);

    std::size_t find(std::size_t v);
    void unite(std::size_t a, std::size_t b);

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_;
};

/// Connected components; label[i] is the smallest agent index in i's
/// component and `members` is ordered by that label.
struct ClusterPartition {
    std::vector<std::size_t> label;
    std::vector<std::vector<std::size_t>> members;

    std::size_t size() const { return members.size(); }
};

std::vector<double> mean_opinions(const ParticleState& state);

Histogram histogram(std::span<const double> values, int bins);
Histogram mean_opinion_histogram(const ParticleState& state, int bins);

/// Components of the graph with an edge (i, j) iff |a_i - a_j| <= radius.
ClusterPartition network_clusters(const ParticleState& state, double radius);

/// Fraction of the total opinion mass of the reconstructions lying in
/// [-1, -threshold] U [threshold, 1].
double polarization_index(const ParticleState& state, double threshold = 0.75);

/// Largest gap between consecutive sorted means that leaves at least 20%
/// of the agents on each side. Zero when that gap does not exceed the
/// median consecutive gap.
double bimodality_gap(std::span<const double> means);

/// Mean over clusters with at least two members of the sample standard
/// deviation of their mean opinions; 0 when every cluster is a singleton.
double cluster_opinion_spread(std::span<const double> means, const ClusterPartition& clusters);
double cluster_opinion_spread(const ParticleState& state, const ClusterPartition& clusters);

struct MetricsRecord {
    double t = 0.0;
    std::vector<double> mean_opinions;
    Histogram histogram;
    std::size_t n_clusters = 0;
    double cluster_opinion_spread = 0.0;
    double polarization_index = 0.0;
    double bimodality_gap = 0.0;
    std::vector<double> total_variation;
    std::vector<double> w1_to_initial;
};

inline constexpr int kDefaultHistogramBins = 20;

MetricsRecord compute_metrics(const ParticleState& state, const ParticleState& initial, double radius,
                              int bins = kDefaultHistogramBins);

}  // namespace odpa
