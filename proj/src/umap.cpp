#include "intentflow/umap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "intentflow/error.hpp"
#include "intentflow/random.hpp"

namespace intentflow::umap {

namespace {

constexpr double kGradientClip = 4.0;
constexpr double kLayoutExtent = 10.0;
constexpr double kLayoutJitter = 1e-4;
constexpr int kSubspaceIterations = 400;
constexpr double kSubspaceTolerance = 1e-8;

double clip(double v) { return std::clamp(v, -kGradientClip, kGradientClip); }

}  // namespace

void validate(const ReductionParams& p, std::size_t n) {
  if (p.target_dim < 1) throw ParameterError("target_dim must be at least 1");
  if (p.n_neighbors < 2) throw ParameterError("n_neighbors must be at least 2");
  if (!(p.min_dist >= 0.0)) throw ParameterError("min_dist must be non-negative");
  if (p.n_epochs < 1) throw ParameterError("n_epochs must be at least 1");
  if (n > 0 && p.n_neighbors >= n)
    throw ParameterError("n_neighbors (" + std::to_string(p.n_neighbors) + ") must be smaller than the number of points (" +
                         std::to_string(n) + ")");
}

NeighborGraph knn_graph(const Matrix& points, std::size_t k, Metric metric) {
  if (k == 0) throw ParameterError("k must be positive");
  if (k >= points.rows())
    throw ParameterError("k (" + std::to_string(k) + ") must be smaller than the number of points (" +
                         std::to_string(points.rows()) + ")");
  return kernels::knn(points, k, metric);
}

double solve_bandwidth(std::span<const double> distances, double rho) {
  const double target = std::log2(static_cast<double>(distances.size()));
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double mid = 1.0;
  for (int it = 0; it < kBandwidthIterations; ++it) {
    double psum = 0.0;
    for (double d : distances) psum += std::exp(-std::max(0.0, d - rho) / mid);
    if (std::abs(psum - target) < kBandwidthTolerance) break;
    if (psum > target) {
      hi = mid;
      mid = (lo + hi) / 2.0;
    } else {
      lo = mid;
      mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
    }
  }
  return std::max(mid, kBandwidthFloor);
}

FuzzyGraph fit_fuzzy_graph(const NeighborGraph& g) {
  const std::size_t n = g.size();
  FuzzyGraph out;
  out.n = n;
  out.rho.assign(n, 0.0);
  out.sigma.assign(n, 0.0);

  std::vector<FuzzyEdge> directed;
  directed.reserve(n * g.k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = g.dists(i);
    const auto nb = g.neighbors(i);
    out.rho[i] = g.k > 0 ? d[0] : 0.0;
    out.sigma[i] = solve_bandwidth(d, out.rho[i]);
    for (std::size_t r = 0; r < g.k; ++r) {
      const double w = std::exp(-std::max(0.0, d[r] - out.rho[i]) / out.sigma[i]);
      directed.push_back({static_cast<std::uint32_t>(i), nb[r], w});
    }
  }

  // Mirror every edge, then fold (i,j) and (j,i) with the probabilistic union.
  std::vector<FuzzyEdge> both;
  both.reserve(directed.size() * 2);
  for (const auto& e : directed) {
    both.push_back({e.i, e.j, e.weight});
    both.push_back({e.j, e.i, -1.0});
  }
  std::sort(both.begin(), both.end(), [](const FuzzyEdge& a, const FuzzyEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  auto directed_weight = [&](std::uint32_t i, std::uint32_t j) {
    for (std::size_t r = 0; r < g.k; ++r)
      if (g.neighbors(i)[r] == j) return directed[i * g.k + r].weight;
    return 0.0;
  };
  for (std::size_t s = 0; s < both.size();) {
    std::size_t e = s;
    while (e < both.size() && both[e].i == both[s].i && both[e].j == both[s].j) ++e;
    const std::uint32_t i = both[s].i;
    const std::uint32_t j = both[s].j;
    const double a = directed_weight(i, j);
    const double b = directed_weight(j, i);
    const double w = a + b - a * b;
    if (w > 0.0) out.edges.push_back({i, j, w});
    s = e;
  }
  return out;
}

std::pair<double, double> fit_ab(double min_dist, double spread) {
  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples);
  std::vector<double> ys(kSamples);
  for (int s = 0; s < kSamples; ++s) {
    xs[s] = 3.0 * spread * s / (kSamples - 1);
    ys[s] = xs[s] < min_dist ? 1.0 : std::exp(-(xs[s] - min_dist) / spread);
  }
  auto residual_sum = [&](double a, double b) {
    double r = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      const double f = 1.0 / (1.0 + a * std::pow(xs[s], 2.0 * b));
      r += (f - ys[s]) * (f - ys[s]);
    }
    return r;
  };

  // Levenberg-Marquardt on two parameters.
  double a = 1.0;
  double b = 1.0;
  double lambda = 1e-3;
  double cost = residual_sum(a, b);
  for (int it = 0; it < 500; ++it) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, g0 = 0, g1 = 0;
    for (int s = 0; s < kSamples; ++s) {
      const double x = xs[s];
      if (x <= 0.0) continue;
      const double p = std::pow(x, 2.0 * b);
      const double denom = 1.0 + a * p;
      const double f = 1.0 / denom;
      const double r = f - ys[s];
      const double da = -p / (denom * denom);
      const double db = -a * p * 2.0 * std::log(x) / (denom * denom);
      jtj00 += da * da;
      jtj01 += da * db;
      jtj11 += db * db;
      g0 += da * r;
      g1 += db * r;
    }
    const double m00 = jtj00 * (1.0 + lambda);
    const double m11 = jtj11 * (1.0 + lambda);
    const double det = m00 * m11 - jtj01 * jtj01;
    if (det == 0.0) break;
    const double step_a = -(m11 * g0 - jtj01 * g1) / det;
    const double step_b = -(m00 * g1 - jtj01 * g0) / det;
    const double na = a + step_a;
    const double nb = b + step_b;
    const double ncost = na > 0.0 && nb > 0.0 ? residual_sum(na, nb) : std::numeric_limits<double>::infinity();
    if (ncost < cost) {
      const bool done = cost - ncost < 1e-14 * std::max(1.0, cost);
      a = na;
      b = nb;
      cost = ncost;
      lambda *= 0.3;
      if (done) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

namespace {

std::vector<std::vector<std::size_t>> connected_components(const FuzzyGraph& graph) {
  std::vector<int> comp(graph.n, -1);
  std::vector<std::size_t> offsets(graph.n + 1, 0);
  for (const auto& e : graph.edges) ++offsets[e.i + 1];
  for (std::size_t i = 0; i < graph.n; ++i) offsets[i + 1] += offsets[i];

  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < graph.n; ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    comp[s] = id;
    stack.assign(1, s);
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      out.back().push_back(x);
      for (std::size_t e = offsets[x]; e < offsets[x + 1]; ++e) {
        const std::size_t y = graph.edges[e].j;
        if (comp[y] < 0) {
          comp[y] = id;
          stack.push_back(y);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

void orthonormalize(std::vector<std::vector<double>>& basis) {
  for (std::size_t c = 0; c < basis.size(); ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double dot = 0.0;
      for (std::size_t i = 0; i < basis[c].size(); ++i) dot += basis[c][i] * basis[p][i];
      for (std::size_t i = 0; i < basis[c].size(); ++i) basis[c][i] -= dot * basis[p][i];
    }
    double norm = 0.0;
    for (double v : basis[c]) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& v : basis[c]) v /= norm;
  }
}

// Leading non-trivial eigenvectors of the normalized adjacency of one
// component, by subspace iteration on (I + D^-1/2 W D^-1/2) / 2. The trivial
// eigenvector D^1/2 1 is held fixed as the first basis vector.
bool spectral_component(const FuzzyGraph& graph, const std::vector<std::size_t>& members, std::size_t dim, Rng& rng,
                        std::vector<std::vector<double>>& coords) {
  const std::size_t s = members.size();
  std::vector<std::size_t> local(graph.n, 0);
  for (std::size_t r = 0; r < s; ++r) local[members[r]] = r;

  struct Entry {
    std::size_t row, col;
    double w;
  };
  std::vector<Entry> entries;
  std::vector<double> degree(s, 0.0);
  for (std::size_t r = 0; r < s; ++r) {
    const auto it = std::lower_bound(graph.edges.begin(), graph.edges.end(), members[r],
                                     [](const FuzzyEdge& e, std::size_t v) { return e.i < v; });
    for (auto e = it; e != graph.edges.end() && e->i == members[r]; ++e) {
      entries.push_back({r, local[e->j], e->weight});
      degree[r] += e->weight;
    }
  }
  for (double d : degree)
    if (!(d > 0.0)) return false;
  for (auto& e : entries) e.w /= std::sqrt(degree[e.row] * degree[e.col]);

  std::vector<std::vector<double>> basis(dim + 1, std::vector<double>(s));
  for (std::size_t i = 0; i < s; ++i) basis[0][i] = std::sqrt(degree[i]);
  for (std::size_t c = 1; c <= dim; ++c)
    for (double& v : basis[c]) v = standard_normal(rng);
  orthonormalize(basis);

  std::vector<double> next(s);
  for (int it = 0; it < kSubspaceIterations; ++it) {
    double change = 0.0;
    for (std::size_t c = 1; c <= dim; ++c) {
      std::fill(next.begin(), next.end(), 0.0);
      for (const auto& e : entries) next[e.row] += e.w * basis[c][e.col];
      for (std::size_t i = 0; i < s; ++i) next[i] = 0.5 * (basis[c][i] + next[i]);
      basis[c].swap(next);
    }
    std::vector<std::vector<double>> previous(basis.begin() + 1, basis.end());
    orthonormalize(basis);
    for (std::size_t c = 1; c <= dim; ++c) {
      double dot = 0.0;
      for (std::size_t i = 0; i < s; ++i) dot += basis[c][i] * previous[c - 1][i];
      // previous is unnormalized; compare directions only.
      double norm = 0.0;
      for (double v : previous[c - 1]) norm += v * v;
      change = std::max(change, 1.0 - std::abs(dot) / std::sqrt(norm));
    }
    if (change < kSubspaceTolerance) break;
  }

  for (std::size_t c = 1; c <= dim; ++c) {
    double norm = 0.0;
    for (double v : basis[c]) {
      if (!std::isfinite(v)) return false;
      norm += v * v;
    }
    if (!(norm > 0.5)) return false;
  }
  coords.assign(s, std::vector<double>(dim));
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t c = 0; c < dim; ++c) coords[i][c] = basis[c + 1][i];
  return true;
}

void assert_finite(const Matrix& layout, std::size_t epoch) {
  for (double v : layout.data())
    if (!std::isfinite(v))
      throw std::logic_error("non-finite layout coordinate after epoch " + std::to_string(epoch));
}

}  // namespace

Matrix initial_layout(const FuzzyGraph& graph, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix layout(graph.n, dim);
  const auto components = connected_components(graph);
  const bool several = components.size() > 1;

  for (const auto& members : components) {
    std::vector<std::vector<double>> coords;
    const bool spectral = members.size() > 2 * (dim + 1) && spectral_component(graph, members, dim, rng, coords);
    if (!spectral) {
      coords.assign(members.size(), std::vector<double>(dim));
      for (auto& row : coords)
        for (double& v : row) v = 2.0 * uniform01(rng) - 1.0;
    }
    double extent = 0.0;
    for (const auto& row : coords)
      for (double v : row) extent = std::max(extent, std::abs(v));
    std::vector<double> centre(dim, 0.0);
    if (several)
      for (double& v : centre) v = 10.0 * (2.0 * uniform01(rng) - 1.0);
    for (std::size_t r = 0; r < members.size(); ++r)
      for (std::size_t c = 0; c < dim; ++c)
        layout(members[r], c) = centre[c] + (extent > 0.0 ? coords[r][c] / extent : 0.0);
  }

  double extent = 0.0;
  for (double v : layout.data()) extent = std::max(extent, std::abs(v));
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    for (std::size_t i = 0; i < graph.n; ++i)
      for (std::size_t c = 0; c < dim; ++c) layout(i, c) = kLayoutExtent * (2.0 * uniform01(rng) - 1.0);
    return layout;
  }
  const double expansion = kLayoutExtent / extent;
  for (std::size_t i = 0; i < graph.n; ++i)
    for (std::size_t c = 0; c < dim; ++c) layout(i, c) = layout(i, c) * expansion + kLayoutJitter * standard_normal(rng);
  return layout;
}

Matrix reduce(const Matrix& points, const ReductionParams& params) {
  const std::size_t n = points.rows();
  validate(params, n);
  const FuzzyGraph graph = fit_fuzzy_graph(knn_graph(points, params.n_neighbors, params.metric));
  const auto [a, b] = fit_ab(params.min_dist);
  const std::size_t dim = params.target_dim;
  Matrix layout = initial_layout(graph, dim, params.seed);
  Rng rng(params.seed ^ 0x9e3779b97f4a7c15ULL);

  const double n_epochs = static_cast<double>(params.n_epochs);
  double max_weight = 0.0;
  for (const auto& e : graph.edges) max_weight = std::max(max_weight, e.weight);

  // Edges too weak to be sampled even once over the whole run are dropped.
  std::vector<FuzzyEdge> edges;
  for (const auto& e : graph.edges)
    if (e.weight >= max_weight / n_epochs) edges.push_back(e);
  std::vector<double> per_sample(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) per_sample[e] = max_weight / edges[e].weight;
  std::vector<double> next_sample(per_sample);
  std::vector<double> per_negative(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e)
    per_negative[e] = per_sample[e] / static_cast<double>(kNegativeSampleRate);
  std::vector<double> next_negative(per_negative);

  for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
    const double alpha = 1.0 - static_cast<double>(epoch) / n_epochs;
    const double now = static_cast<double>(epoch);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (next_sample[e] > now) continue;
      auto current = layout.row(edges[e].i);
      auto other = layout.row(edges[e].j);

      double d2 = 0.0;
      for (std::size_t c = 0; c < dim; ++c) d2 += (current[c] - other[c]) * (current[c] - other[c]);
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        for (std::size_t c = 0; c < dim; ++c) {
          const double g = clip(coeff * (current[c] - other[c]));
          current[c] += g * alpha;
          other[c] -= g * alpha;
        }
      }
      next_sample[e] += per_sample[e];

      const auto negatives = static_cast<std::size_t>((now - next_negative[e]) / per_negative[e]);
      for (std::size_t s = 0; s < negatives; ++s) {
        const std::size_t k = uniform_below(rng, n);
        if (k == edges[e].i) continue;
        auto sample = layout.row(k);
        double nd2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) nd2 += (current[c] - sample[c]) * (current[c] - sample[c]);
        if (nd2 > 0.0) {
          const double coeff = 2.0 * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
          for (std::size_t c = 0; c < dim; ++c) current[c] += clip(coeff * (current[c] - sample[c])) * alpha;
        } else {
          for (std::size_t c = 0; c < dim; ++c) current[c] += kGradientClip * alpha;
        }
      }
      next_negative[e] += static_cast<double>(negatives) * per_negative[e];
    }
#ifndef NDEBUG
    assert_finite(layout, epoch);
#endif
  }
  assert_finite(layout, params.n_epochs);
  return layout;
}

}  // namespace intentflow::umap
