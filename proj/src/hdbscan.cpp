#include "intentflow/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "intentflow/error.hpp"

namespace intentflow::hdbscan {

std::vector<int> ClusterResult::soft_labels() const {
  std::vector<int> out(labels.size(), -1);
  if (k == 0) return out;
  for (std::size_t i = 0; i < memberships.size(); ++i) {
    const auto& m = memberships[i];
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.size(); ++c)
      if (m[c] > m[best]) best = c;
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<double> core_distances(const Matrix& points, std::size_t min_samples) {
  if (min_samples < 1 || min_samples >= points.rows())
    throw ParameterError("min_samples must be in [1, n); got " + std::to_string(min_samples) + " with n = " +
                         std::to_string(points.rows()));
  return kernels::kth_neighbor_distance(points, min_samples);
}

std::vector<LinkageStep> single_linkage(std::vector<MstEdge> mst, std::size_t n) {
  std::stable_sort(mst.begin(), mst.end(), [](const MstEdge& a, const MstEdge& b) { return a.weight < b.weight; });
  const std::size_t total = n == 0 ? 0 : 2 * n - 1;
  std::vector<std::size_t> parent(total);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::size_t> size(total, 1);
  auto find = [&](std::size_t x) {
    std::size_t root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      const std::size_t next = parent[x];
      parent[x] = root;
      x = next;
    }
    return root;
  };
  std::vector<LinkageStep> steps;
  steps.reserve(mst.size());
  std::size_t next = n;
  for (const auto& e : mst) {
    const std::size_t ra = find(e.a);
    const std::size_t rb = find(e.b);
    if (ra == rb) throw std::logic_error("single_linkage: input is not a spanning tree");
    size[next] = size[ra] + size[rb];
    steps.push_back({ra, rb, e.weight, size[next]});
    parent[ra] = next;
    parent[rb] = next;
    ++next;
  }
  return steps;
}

CondensedTree condense(const std::vector<LinkageStep>& linkage, std::size_t n, std::size_t min_cluster_size) {
  CondensedTree tree;
  tree.exits.resize(n);
  for (std::size_t p = 0; p < n; ++p) tree.exits[p].point = p;

  double max_lambda = 0.0;
  for (const auto& s : linkage)
    if (s.distance > 0.0) max_lambda = std::max(max_lambda, 1.0 / s.distance);
  tree.lambda_cap = max_lambda > 0.0 ? 2.0 * max_lambda : 1.0;
  auto lambda_of = [&](double d) { return d > 0.0 ? 1.0 / d : tree.lambda_cap; };
  auto size_of = [&](std::size_t node) { return node < n ? std::size_t{1} : linkage[node - n].size; };

  tree.nodes.push_back({-1, 0.0, 0.0, n, {}});
  if (n == 0) return tree;
  if (n == 1) {
    tree.exits[0] = {0, 0, tree.lambda_cap};
  }

  std::vector<std::size_t> leaf_stack;
  auto fall_out = [&](std::size_t dendro, int cluster, double lambda) {
    leaf_stack.assign(1, dendro);
    while (!leaf_stack.empty()) {
      const std::size_t x = leaf_stack.back();
      leaf_stack.pop_back();
      if (x < n) {
        tree.exits[x] = {x, cluster, lambda};
      } else {
        leaf_stack.push_back(linkage[x - n].right);
        leaf_stack.push_back(linkage[x - n].left);
      }
    }
  };

  std::vector<std::pair<std::size_t, int>> stack;
  if (n >= 2) stack.emplace_back(2 * n - 2, 0);
  while (!stack.empty()) {
    const auto [x, c] = stack.back();
    stack.pop_back();
    const LinkageStep& s = linkage[x - n];
    const double lambda = lambda_of(s.distance);
    const std::size_t sl = size_of(s.left);
    const std::size_t sr = size_of(s.right);
    if (sl >= min_cluster_size && sr >= min_cluster_size) {
      const int cl = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({c, lambda, 0.0, sl, {}});
      const int cr = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({c, lambda, 0.0, sr, {}});
      tree.nodes[static_cast<std::size_t>(c)].children = {cl, cr};
      // Right is pushed first so the left subtree is numbered first.
      stack.emplace_back(s.right, cr);
      stack.emplace_back(s.left, cl);
    } else {
      for (const std::size_t child : {s.right, s.left}) {
        if (size_of(child) < min_cluster_size) fall_out(child, c, lambda);
        else stack.emplace_back(child, c);
      }
    }
  }

  tree.stability.assign(tree.nodes.size(), 0.0);
  for (const auto& e : tree.exits) {
    auto& node = tree.nodes[static_cast<std::size_t>(e.node)];
    node.lambda_death = std::max(node.lambda_death, e.lambda);
    tree.stability[static_cast<std::size_t>(e.node)] += e.lambda - node.lambda_birth;
  }
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    const auto& node = tree.nodes[i];
    auto& parent = tree.nodes[static_cast<std::size_t>(node.parent)];
    parent.lambda_death = std::max(parent.lambda_death, node.lambda_birth);
    tree.stability[static_cast<std::size_t>(node.parent)] +=
        (node.lambda_birth - parent.lambda_birth) * static_cast<double>(node.size);
  }
  return tree;
}

std::vector<int> select_clusters(const CondensedTree& tree) {
  const std::size_t m = tree.nodes.size();
  std::vector<char> selected(m, 0);
  std::vector<double> best(tree.stability);
  for (std::size_t i = m; i-- > 1;) {
    double children = 0.0;
    for (int c : tree.nodes[i].children) children += best[static_cast<std::size_t>(c)];
    if (!tree.nodes[i].children.empty() && children > tree.stability[i]) {
      best[i] = children;
    } else {
      selected[i] = 1;
    }
  }
  // Ancestors come first in id order, so one forward pass deselects every
  // descendant of a selected node.
  std::vector<char> blocked(m, 0);
  std::vector<int> out;
  for (std::size_t i = 1; i < m; ++i) {
    const int p = tree.nodes[i].parent;
    if (p > 0 && (blocked[static_cast<std::size_t>(p)] || selected[static_cast<std::size_t>(p)])) blocked[i] = 1;
    if (selected[i] && !blocked[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<std::vector<double>> soft_memberships(const CondensedTree& tree, std::span<const int> selected,
                                                  std::span<const double> outlier_scores, const Matrix& points) {
  const std::size_t n = points.rows();
  const std::size_t k = selected.size();
  std::vector<std::vector<double>> out(n);
  if (k == 0) return out;

  std::vector<std::vector<std::size_t>> direct(tree.nodes.size());
  for (const auto& e : tree.exits) direct[static_cast<std::size_t>(e.node)].push_back(e.point);

  std::vector<std::vector<std::size_t>> exemplars(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<int> stack{selected[c]};
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
      if (!nd.children.empty()) {
        for (int ch : nd.children) stack.push_back(ch);
        continue;
      }
      double top = 0.0;
      for (std::size_t p : direct[static_cast<std::size_t>(node)]) top = std::max(top, tree.exits[p].lambda);
      for (std::size_t p : direct[static_cast<std::size_t>(node)])
        if (tree.exits[p].lambda == top) exemplars[c].push_back(p);
    }
    std::sort(exemplars[c].begin(), exemplars[c].end());
  }

#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(n); ++pi) {
    const auto p = static_cast<std::size_t>(pi);
    std::vector<double> affinity(k);
    for (std::size_t c = 0; c < k; ++c) {
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t e : exemplars[c]) dmin = std::min(dmin, euclidean_distance(points.row(p), points.row(e)));
      affinity[c] = 1.0 / (1.0 + dmin);
    }
    const double weight = 1.0 - outlier_scores[p];
    double total = 0.0;
    for (double a : affinity) total += a * weight;
    std::vector<double> row(k);
    if (total > 0.0) {
      for (std::size_t c = 0; c < k; ++c) row[c] = affinity[c] * weight / total;
    } else {
      const double plain = std::accumulate(affinity.begin(), affinity.end(), 0.0);
      for (std::size_t c = 0; c < k; ++c) row[c] = affinity[c] / plain;
    }
    out[p] = std::move(row);
  }
  return out;
}

double relative_validity(const Matrix& points, std::span<const int> labels) {
  if (labels.size() != points.rows()) throw ParameterError("relative_validity: one label per point required");
  std::map<int, int> remap;
  for (int l : labels)
    if (l >= 0) remap.emplace(l, 0);
  if (remap.empty()) throw UndefinedError("relative validity is undefined when every point is noise");
  if (remap.size() == 1) return 0.0;
  int next = 0;
  for (auto& [l, id] : remap) id = next++;
  const std::size_t m = remap.size();

  std::vector<int> dense(labels.size(), -1);
  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    dense[i] = remap.at(labels[i]);
    members[static_cast<std::size_t>(dense[i])].push_back(i);
  }

  std::vector<double> core(points.rows(), 0.0);
  std::vector<double> sparseness(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    const Matrix sub = points.select_rows(members[c]);
    const std::vector<double> sub_core = kernels::all_points_core_distance(sub);
    for (std::size_t r = 0; r < members[c].size(); ++r) core[members[c][r]] = sub_core[r];
    for (const auto& e : kernels::mutual_reachability_mst(sub, sub_core))
      sparseness[c] = std::max(sparseness[c], e.weight);
  }
  const std::vector<double> sep = kernels::cluster_separation(points, dense, core, m);

  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    double separation = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < m; ++o)
      if (o != c) separation = std::min(separation, sep[c * m + o]);
    const double denom = std::max(separation, sparseness[c]);
    const double v = denom > 0.0 ? (separation - sparseness[c]) / denom : 0.0;
    const double size = static_cast<double>(members[c].size());
    weighted += size * v;
    total += size;
  }
  return std::clamp(weighted / total, -1.0, 1.0);
}

ClusterResult cluster(const Matrix& points, const ClusterParams& params) {
  const std::size_t n = points.rows();
  const std::size_t min_samples = params.effective_min_samples();
  if (params.min_cluster_size < 2)
    throw ParameterError("min_cluster_size must be at least 2; got " + std::to_string(params.min_cluster_size));

  ClusterResult r;
  if (params.min_cluster_size > n) {
    // No cluster can ever reach the minimum size: everything is noise.
    r.tree.nodes.push_back({-1, 0.0, 0.0, n, {}});
    r.tree.stability.assign(1, 0.0);
    for (std::size_t p = 0; p < n; ++p) r.tree.exits.push_back({p, 0, 0.0});
    r.labels.assign(n, -1);
    r.probabilities.assign(n, 0.0);
    r.outlier_scores.assign(n, 0.0);
    r.memberships.assign(n, {});
    check_invariants(r, params.min_cluster_size);
    return r;
  }
  if (min_samples < 1 || min_samples >= n)
    throw ParameterError("min_samples must be in [1, n); got " + std::to_string(min_samples) + " with n = " +
                         std::to_string(n));

  const std::vector<double> core = core_distances(points, min_samples);
  const std::vector<LinkageStep> linkage = single_linkage(kernels::mutual_reachability_mst(points, core), n);

  r.tree = condense(linkage, n, params.min_cluster_size);
  r.selected_nodes = select_clusters(r.tree);
  r.k = r.selected_nodes.size();
  const auto& tree = r.tree;
  const std::size_t nodes = tree.nodes.size();

  std::vector<int> node_label(nodes, -1);
  for (std::size_t c = 0; c < r.k; ++c) node_label[static_cast<std::size_t>(r.selected_nodes[c])] = static_cast<int>(c);
  for (std::size_t i = 1; i < nodes; ++i)
    if (node_label[i] < 0) node_label[i] = node_label[static_cast<std::size_t>(tree.nodes[i].parent)];

  r.labels.resize(n);
  std::vector<double> label_max(r.k, 0.0);
  std::vector<std::size_t> label_size(r.k, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const int l = node_label[static_cast<std::size_t>(tree.exits[p].node)];
    r.labels[p] = l;
    if (l >= 0) {
      label_max[static_cast<std::size_t>(l)] = std::max(label_max[static_cast<std::size_t>(l)], tree.exits[p].lambda);
      ++label_size[static_cast<std::size_t>(l)];
    }
  }

  r.probabilities.assign(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const int l = r.labels[p];
    if (l < 0) continue;
    const double top = label_max[static_cast<std::size_t>(l)];
    r.probabilities[p] = top > 0.0 ? std::clamp(tree.exits[p].lambda / top, 0.0, 1.0) : 1.0;
  }

  // Highest exit lambda anywhere below each node.
  std::vector<double> deaths(nodes, 0.0);
  for (const auto& e : tree.exits)
    deaths[static_cast<std::size_t>(e.node)] = std::max(deaths[static_cast<std::size_t>(e.node)], e.lambda);
  for (std::size_t i = nodes; i-- > 1;) {
    auto& parent = deaths[static_cast<std::size_t>(tree.nodes[i].parent)];
    parent = std::max(parent, deaths[i]);
  }
  r.outlier_scores.assign(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const double top = deaths[static_cast<std::size_t>(tree.exits[p].node)];
    if (top > 0.0) r.outlier_scores[p] = std::clamp((top - tree.exits[p].lambda) / top, 0.0, 1.0);
  }

  r.persistence.assign(r.k, 0.0);
  for (std::size_t c = 0; c < r.k; ++c) {
    const double denom = label_max[c] * static_cast<double>(label_size[c]);
    if (denom > 0.0)
      r.persistence[c] = std::clamp(tree.stability[static_cast<std::size_t>(r.selected_nodes[c])] / denom, 0.0, 1.0);
  }

  r.memberships = soft_memberships(tree, r.selected_nodes, r.outlier_scores, points);
  if (r.k > 0) r.relative_validity = relative_validity(points, r.labels);
  check_invariants(r, params.min_cluster_size);
  return r;
}

void check_invariants(const ClusterResult& r, std::size_t min_cluster_size) {
  auto fail = [](const std::string& what) { throw std::logic_error("ClusterResult invariant violated: " + what); };
  const std::size_t n = r.labels.size();
  if (r.probabilities.size() != n || r.outlier_scores.size() != n || r.memberships.size() != n)
    fail("per-point arrays differ in length");
  if (r.persistence.size() != r.k || r.selected_nodes.size() != r.k) fail("per-cluster arrays differ from k");
  std::vector<std::size_t> counts(r.k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int l = r.labels[i];
    if (l < -1 || l >= static_cast<int>(r.k)) fail("label out of range at point " + std::to_string(i));
    if (l >= 0) ++counts[static_cast<std::size_t>(l)];
    if (!(r.probabilities[i] >= 0.0 && r.probabilities[i] <= 1.0)) fail("probability outside [0,1]");
    if (l < 0 && r.probabilities[i] != 0.0) fail("noise point with non-zero probability");
    if (!(r.outlier_scores[i] >= 0.0 && r.outlier_scores[i] <= 1.0)) fail("outlier score outside [0,1]");
    const auto& m = r.memberships[i];
    if (m.size() != r.k) fail("membership vector length differs from k");
    if (r.k > 0) {
      double s = 0.0;
      for (double v : m) {
        if (!(v >= 0.0 && v <= 1.0)) fail("membership outside [0,1]");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-6) fail("membership vector of point " + std::to_string(i) + " does not sum to 1");
    }
  }
  for (std::size_t c = 0; c < r.k; ++c) {
    if (counts[c] == 0) fail("label " + std::to_string(c) + " is unused");
    if (counts[c] < min_cluster_size) fail("cluster " + std::to_string(c) + " smaller than min_cluster_size");
    if (!(r.persistence[c] >= 0.0 && r.persistence[c] <= 1.0)) fail("persistence outside [0,1]");
  }
  if (r.k > 0 && !r.relative_validity) fail("missing relative validity");
  if (r.relative_validity && !(*r.relative_validity >= -1.0 && *r.relative_validity <= 1.0))
    fail("relative validity outside [-1,1]");
}

}  // namespace intentflow::hdbscan
