#include <limits>

#include "intentflow/kernels.hpp"
#include "kernels_detail.hpp"

namespace intentflow::kernels::serial {

NeighborGraph knn(const Matrix& points, std::size_t k, Metric metric) {
  const std::size_t n = points.rows();
  NeighborGraph g;
  g.k = k;
  g.indices.resize(n * k);
  g.distances.resize(n * k);
  std::vector<std::pair<double, std::uint32_t>> scratch;
  scratch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) detail::knn_row(points, i, k, metric, scratch, g);
  return g;
}

std::vector<double> kth_neighbor_distance(const Matrix& points, std::size_t k) {
  std::vector<double> out(points.rows());
  std::vector<double> scratch;
  for (std::size_t i = 0; i < points.rows(); ++i) out[i] = detail::kth_distance_row(points, i, k, scratch);
  return out;
}

std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, std::span<const double> core) {
  const std::size_t n = points.rows();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> parent(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    detail::Candidate winner;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      detail::relax(points, core, current, j, best, parent);
      const detail::Candidate c{best[j], j};
      if (c.better_than(winner)) winner = c;
    }
    const std::size_t next = winner.index;
    edges.push_back({parent[next], static_cast<std::uint32_t>(next), best[next]});
    in_tree[next] = 1;
    current = next;
  }
  return edges;
}

std::vector<double> cluster_separation(const Matrix& points, std::span<const int> labels,
                                       std::span<const double> core, std::size_t k) {
  std::vector<double> sep(k * k, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < points.rows(); ++a) detail::separation_row(points, labels, core, k, a, sep);
  return sep;
}

}  // namespace intentflow::kernels::serial

namespace intentflow::kernels::serial {

std::vector<double> all_points_core_distance(const Matrix& points) {
  std::vector<double> out(points.rows());
  std::vector<double> scratch;
  for (std::size_t a = 0; a < points.rows(); ++a) out[a] = detail::all_points_core_row(points, a, scratch);
  return out;
}

}  // namespace intentflow::kernels::serial
