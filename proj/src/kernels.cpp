#include "intentflow/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

#include "kernels_detail.hpp"

namespace intentflow {

double cosine_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double c = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return 1.0 - c;
}

double distance(Metric m, std::span<const double> a, std::span<const double> b) noexcept {
  return m == Metric::euclidean ? euclidean_distance(a, b) : cosine_distance(a, b);
}

namespace kernels {

NeighborGraph knn(const Matrix& points, std::size_t k, Metric metric) {
  const std::size_t n = points.rows();
  NeighborGraph g;
  g.k = k;
  g.indices.resize(n * k);
  g.distances.resize(n * k);
#pragma omp parallel
  {
    std::vector<std::pair<double, std::uint32_t>> scratch;
    scratch.reserve(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
      detail::knn_row(points, static_cast<std::size_t>(i), k, metric, scratch, g);
  }
  return g;
}

std::vector<double> kth_neighbor_distance(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  std::vector<double> out(n);
#pragma omp parallel
  {
    std::vector<double> scratch;
    scratch.reserve(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
      out[static_cast<std::size_t>(i)] = detail::kth_distance_row(points, static_cast<std::size_t>(i), k, scratch);
  }
  return out;
}

std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, std::span<const double> core) {
  const std::size_t n = points.rows();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> parent(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    detail::Candidate winner;
#pragma omp parallel
    {
      detail::Candidate local;
#pragma omp for schedule(static)
      for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(n); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        if (in_tree[j]) continue;
        detail::relax(points, core, current, j, best, parent);
        const detail::Candidate c{best[j], j};
        if (c.better_than(local)) local = c;
      }
#pragma omp critical(intentflow_prim_argmin)
      if (local.better_than(winner)) winner = local;
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
  const std::size_t n = points.rows();
  std::vector<double> sep(k * k, std::numeric_limits<double>::infinity());
#pragma omp parallel
  {
    std::vector<double> local(k * k, std::numeric_limits<double>::infinity());
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(n); ++a)
      detail::separation_row(points, labels, core, k, static_cast<std::size_t>(a), local);
#pragma omp critical(intentflow_separation_merge)
    for (std::size_t i = 0; i < sep.size(); ++i)
      if (local[i] < sep[i]) sep[i] = local[i];
  }
  return sep;
}

}  // namespace kernels
}  // namespace intentflow

namespace intentflow::kernels {

std::vector<double> all_points_core_distance(const Matrix& points) {
  const std::size_t n = points.rows();
  std::vector<double> out(n);
#pragma omp parallel
  {
    std::vector<double> scratch;
    scratch.reserve(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(n); ++a)
      out[static_cast<std::size_t>(a)] = detail::all_points_core_row(points, static_cast<std::size_t>(a), scratch);
  }
  return out;
}

}  // namespace intentflow::kernels
