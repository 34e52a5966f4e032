#pragma once

// Per-point bodies shared by the OpenMP and serial kernel translation units.
// Keeping a single definition is what makes the two agree bit for bit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "intentflow/hdbscan.hpp"
#include "intentflow/kernels.hpp"

namespace intentflow::kernels::detail {

inline void knn_row(const Matrix& points, std::size_t i, std::size_t k, Metric metric,
                    std::vector<std::pair<double, std::uint32_t>>& scratch, NeighborGraph& out) {
  const std::size_t n = points.rows();
  scratch.clear();
  const auto pi = points.row(i);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    scratch.emplace_back(distance(metric, pi, points.row(j)), static_cast<std::uint32_t>(j));
  }
  auto kth = scratch.begin() + static_cast<std::ptrdiff_t>(k);
  std::nth_element(scratch.begin(), kth - 1, scratch.end());
  std::sort(scratch.begin(), kth);
  for (std::size_t r = 0; r < k; ++r) {
    out.distances[i * k + r] = scratch[r].first;
    out.indices[i * k + r] = scratch[r].second;
  }
}

inline double kth_distance_row(const Matrix& points, std::size_t i, std::size_t k, std::vector<double>& scratch) {
  const std::size_t n = points.rows();
  scratch.clear();
  const auto pi = points.row(i);
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) scratch.push_back(euclidean_distance(pi, points.row(j)));
  auto kth = scratch.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(scratch.begin(), kth, scratch.end());
  return *kth;
}

// Candidate for the next Prim vertex; ordered by (weight, index).
struct Candidate {
  double weight = std::numeric_limits<double>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();

  bool better_than(const Candidate& o) const noexcept {
    return weight < o.weight || (weight == o.weight && index < o.index);
  }
};

inline void relax(const Matrix& points, std::span<const double> core, std::size_t current, std::size_t j,
                  std::vector<double>& best, std::vector<std::uint32_t>& parent) {
  const double d = hdbscan::mutual_reachability(euclidean_distance(points.row(current), points.row(j)),
                                                core[current], core[j]);
  if (d < best[j]) {
    best[j] = d;
    parent[j] = static_cast<std::uint32_t>(current);
  }
}

inline void separation_row(const Matrix& points, std::span<const int> labels, std::span<const double> core,
                           std::size_t k, std::size_t a, std::vector<double>& sep) {
  const int la = labels[a];
  if (la < 0) return;
  const auto pa = points.row(a);
  const std::size_t n = points.rows();
  for (std::size_t b = 0; b < n; ++b) {
    const int lb = labels[b];
    if (lb < 0 || lb == la) continue;
    const double d = hdbscan::mutual_reachability(euclidean_distance(pa, points.row(b)), core[a], core[b]);
    double& slot = sep[static_cast<std::size_t>(la) * k + static_cast<std::size_t>(lb)];
    if (d < slot) slot = d;
  }
}

}  // namespace intentflow::kernels::detail

namespace intentflow::kernels::detail {

inline double all_points_core_row(const Matrix& points, std::size_t a, std::vector<double>& scratch) {
  const std::size_t n = points.rows();
  if (n < 2) return 0.0;
  const double dim = static_cast<double>(points.cols());
  scratch.clear();
  double peak = -std::numeric_limits<double>::infinity();
  const auto pa = points.row(a);
  for (std::size_t b = 0; b < n; ++b) {
    if (b == a) continue;
    const double d = euclidean_distance(pa, points.row(b));
    if (d == 0.0) return 0.0;
    const double t = -dim * std::log(d);
    scratch.push_back(t);
    peak = std::max(peak, t);
  }
  double sum = 0.0;
  for (double t : scratch) sum += std::exp(t - peak);
  const double log_mean = peak + std::log(sum) - std::log(static_cast<double>(n - 1));
  return std::exp(-log_mean / dim);
}

}  // namespace intentflow::kernels::detail
