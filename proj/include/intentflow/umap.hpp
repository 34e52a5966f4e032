#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "intentflow/kernels.hpp"
#include "intentflow/matrix.hpp"

namespace intentflow::umap {

struct ReductionParams {
  std::size_t target_dim = 5;
  std::size_t n_neighbors = 15;
  double min_dist = 0.1;
  std::size_t n_epochs = 200;
  std::uint64_t seed = 42;
  Metric metric = Metric::cosine;
};

// Throws ParameterError for target_dim < 1, n_neighbors < 2, min_dist < 0,
// n_epochs < 1, or (when n is given) n_neighbors >= n.
void validate(const ReductionParams& p, std::size_t n);

// Exact k-NN graph. Throws ParameterError when k >= n or k == 0.
NeighborGraph knn_graph(const Matrix& points, std::size_t k, Metric metric);

struct FuzzyEdge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double weight = 0.0;
};

// Symmetric graph: every undirected edge appears in both directions, edges
// sorted by (i, j).
struct FuzzyGraph {
  std::size_t n = 0;
  std::vector<double> rho;
  std::vector<double> sigma;
  std::vector<FuzzyEdge> edges;
};

inline constexpr double kBandwidthFloor = 1e-3;
inline constexpr double kBandwidthTolerance = 1e-5;
inline constexpr int kBandwidthIterations = 64;

// Solves sum_j exp(-max(0, d_j - rho) / sigma) = log2(k) by bisection.
double solve_bandwidth(std::span<const double> distances, double rho);

FuzzyGraph fit_fuzzy_graph(const NeighborGraph& g);

// (a, b) of the curve 1 / (1 + a x^(2b)) fitted by least squares to the
// offset exponential defined by min_dist and spread.
std::pair<double, double> fit_ab(double min_dist, double spread = 1.0);

inline constexpr std::size_t kNegativeSampleRate = 5;

Matrix reduce(const Matrix& points, const ReductionParams& params);

// Initial layout for a fuzzy graph: spectral per connected component, small
// components seeded uniformly. Exposed for testing.
Matrix initial_layout(const FuzzyGraph& graph, std::size_t dim, std::uint64_t seed);

}  // namespace intentflow::umap
