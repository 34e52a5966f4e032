#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "intentflow/kernels.hpp"
#include "intentflow/matrix.hpp"

namespace intentflow::hdbscan {

struct ClusterParams {
  std::size_t min_cluster_size = 5;
  // Defaults to min_cluster_size when unset.
  std::optional<std::size_t> min_samples;

  std::size_t effective_min_samples() const noexcept {
    return min_samples.value_or(min_cluster_size);
  }
};

// One merge of the single-linkage dendrogram. Node ids below n are points;
// merge i creates node n + i.
struct LinkageStep {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

struct CondensedNode {
  int parent = -1;
  double lambda_birth = 0.0;
  double lambda_death = 0.0;
  std::size_t size = 0;
  std::vector<int> children;
};

struct PointExit {
  std::size_t point = 0;
  int node = 0;
  double lambda = 0.0;
};

// Node 0 is the root. Children always have larger ids than their parent.
struct CondensedTree {
  std::vector<CondensedNode> nodes;
  std::vector<PointExit> exits;  // indexed by point
  std::vector<double> stability;
  // Lambda assigned to zero-length merges (duplicate points).
  double lambda_cap = 1.0;
};

struct ClusterResult {
  std::size_t k = 0;
  std::vector<int> labels;
  std::vector<double> probabilities;
  std::vector<std::vector<double>> memberships;
  std::vector<double> outlier_scores;
  std::vector<double> persistence;
  // Absent when every point is noise.
  std::optional<double> relative_validity;

  CondensedTree tree;
  std::vector<int> selected_nodes;  // condensed node id per label

  std::vector<int> soft_labels() const;  // argmax membership, lowest id on ties
};

std::vector<double> core_distances(const Matrix& points, std::size_t min_samples);

inline double mutual_reachability(double d_ab, double core_a, double core_b) noexcept {
  double m = d_ab > core_a ? d_ab : core_a;
  return m > core_b ? m : core_b;
}

std::vector<LinkageStep> single_linkage(std::vector<MstEdge> mst, std::size_t n);
CondensedTree condense(const std::vector<LinkageStep>& linkage, std::size_t n,
                       std::size_t min_cluster_size);
// Excess-of-mass selection; the root is never selected.
std::vector<int> select_clusters(const CondensedTree& tree);

ClusterResult cluster(const Matrix& points, const ClusterParams& params);

// Rows of the n x k membership matrix, computed from the exemplars of each
// selected cluster. Empty when k == 0.
std::vector<std::vector<double>> soft_memberships(const CondensedTree& tree,
                                                  std::span<const int> selected,
                                                  std::span<const double> outlier_scores,
                                                  const Matrix& points);

// Density-based validity in [-1, 1]. Throws UndefinedError when every label
// is noise; a single cluster scores 0.
double relative_validity(const Matrix& points, std::span<const int> labels);

// Throws std::logic_error naming the violated invariant.
void check_invariants(const ClusterResult& r, std::size_t min_cluster_size);

}  // namespace intentflow::hdbscan
