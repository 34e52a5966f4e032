#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "intentflow/matrix.hpp"

// Data-parallel inner loops. Each kernel has an OpenMP implementation in
// `intentflow::kernels` and a plain serial reference in
// `intentflow::kernels::serial`; the two must agree bit for bit (every
// parallel loop writes disjoint outputs, reductions are min-with-index).

namespace intentflow {

enum class Metric { euclidean, cosine };

// Exact k nearest neighbours of every point, self excluded, ascending by
// (distance, index).
struct NeighborGraph {
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;  // n * k
  std::vector<double> distances;       // n * k

  std::size_t size() const noexcept { return k == 0 ? 0 : indices.size() / k; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const noexcept {
    return {indices.data() + i * k, k};
  }
  std::span<const double> dists(std::size_t i) const noexcept {
    return {distances.data() + i * k, k};
  }
};

struct MstEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double weight = 0.0;
};

// 1 - cosine similarity; a zero-norm row is at distance 1 from everything.
double cosine_distance(std::span<const double> a, std::span<const double> b) noexcept;
double distance(Metric m, std::span<const double> a, std::span<const double> b) noexcept;

namespace kernels {

NeighborGraph knn(const Matrix& points, std::size_t k, Metric metric);

// Euclidean distance to the k-th nearest neighbour (self excluded).
std::vector<double> kth_neighbor_distance(const Matrix& points, std::size_t k);

// Prim's algorithm over the dense mutual-reachability graph
// max(d(a,b), core[a], core[b]). Edges are returned in insertion order.
std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, std::span<const double> core);

// sep[i*k + j] = min mutual-reachability distance between a point labelled
// i and a point labelled j (labels in [0,k); negative labels ignored).
// Diagonal entries are +inf.
std::vector<double> cluster_separation(const Matrix& points, std::span<const int> labels,
                                       std::span<const double> core, std::size_t k);

// Parameter-free density-based core distance of every point relative to the
// rest of the set: (mean_j (1/d_ij)^D)^(-1/D) with D = cols(). Evaluated in
// log space; a duplicate point gives 0.
std::vector<double> all_points_core_distance(const Matrix& points);

namespace serial {

NeighborGraph knn(const Matrix& points, std::size_t k, Metric metric);
std::vector<double> kth_neighbor_distance(const Matrix& points, std::size_t k);
std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, std::span<const double> core);
std::vector<double> cluster_separation(const Matrix& points, std::span<const int> labels,
                                       std::span<const double> core, std::size_t k);
std::vector<double> all_points_core_distance(const Matrix& points);

}  // namespace serial
}  // namespace kernels
}  // namespace intentflow
