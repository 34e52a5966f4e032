#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <functional>
#include <tuple>

namespace oracle {

Points to_points(const intentflow::Matrix& m) {
  Points p(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) p[i][j] = m(i, j);
  return p;
}

intentflow::Matrix to_matrix(const Points& p) {
  const std::size_t d = p.empty() ? 0 : p[0].size();
  std::vector<double> flat;
  for (const auto& r : p) flat.insert(flat.end(), r.begin(), r.end());
  return intentflow::Matrix(p.size(), d, std::move(flat));
}

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double cosine_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 1.0;
  return 1.0 - std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::vector<std::pair<double, std::size_t>> ranked_neighbors(const Points& p, std::size_t i, bool cosine) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (j != i) all.emplace_back(cosine ? cosine_dist(p[i], p[j]) : euclid(p[i], p[j]), j);
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<double> core_distances(const Points& p, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.push_back(ranked_neighbors(p, i, false)[k - 1].first);
  return out;
}

double mst_weight(const Points& p, const std::vector<double>& core) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      edges.emplace_back(std::max({euclid(p[i], p[j]), core[i], core[j]}), i, j);
  std::sort(edges.begin(), edges.end());
  std::vector<std::size_t> parent(p.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  double total = 0;
  for (const auto& [w, a, b] : edges) {
    const auto ra = find(a), rb = find(b);
    if (ra == rb) continue;
    parent[ra] = rb;
    total += w;
  }
  return total;
}

double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : table) index += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double maximum = (sa + sb) / 2;
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, back;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    auto [f, fi] = fwd.emplace(a[i], b[i]);
    auto [g, gi] = back.emplace(b[i], a[i]);
    if (f->second != b[i] || g->second != a[i]) return false;
  }
  return true;
}

double trustworthiness(const Points& high, const Points& low, std::size_t k) {
  const std::size_t n = high.size();
  double penalty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto hi = ranked_neighbors(high, i, false);
    std::vector<std::size_t> rank(n, 0);
    for (std::size_t r = 0; r < hi.size(); ++r) rank[hi[r].second] = r + 1;
    std::set<std::size_t> hi_k;
    for (std::size_t r = 0; r < k; ++r) hi_k.insert(hi[r].second);
    const auto lo = ranked_neighbors(low, i, false);
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = lo[r].second;
      if (!hi_k.count(j)) penalty += static_cast<double>(rank[j]) - static_cast<double>(k);
    }
  }
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * penalty;
}

Scores bcubed_pairwise(const std::vector<int>& clusters, const std::vector<std::set<std::string>>& labels) {
  const std::size_t n = clusters.size();
  double p = 0, r = 0;
  for (std::size_t e = 0; e < n; ++e) {
    double pe = 0, re = 0;
    std::size_t same_cluster = 0, sharing = 0;
    for (std::size_t f = 0; f < n; ++f) {
      std::size_t common = 0;
      for (const auto& l : labels[e]) common += labels[f].count(l);
      const std::size_t c = clusters[e] == clusters[f] ? 1 : 0;  // |C ∩ C'| for singleton memberships
      const double m = static_cast<double>(std::min(c, common));
      if (c) {
        ++same_cluster;
        pe += m / static_cast<double>(c);
      }
      if (common) {
        ++sharing;
        re += m / static_cast<double>(common);
      }
    }
    p += pe / static_cast<double>(same_cluster);
    r += re / static_cast<double>(sharing);
  }
  return {p / static_cast<double>(n), r / static_cast<double>(n)};
}

Scores bcubed_classic(const std::vector<int>& clusters, const std::vector<std::string>& labels) {
  const std::size_t n = clusters.size();
  double p = 0, r = 0;
  for (std::size_t e = 0; e < n; ++e) {
    double both = 0, cl = 0, ca = 0;
    for (std::size_t f = 0; f < n; ++f) {
      const bool sc = clusters[e] == clusters[f];
      const bool sl = labels[e] == labels[f];
      both += sc && sl;
      cl += sc;
      ca += sl;
    }
    p += both / cl;
    r += both / ca;
  }
  return {p / static_cast<double>(n), r / static_cast<double>(n)};
}

std::map<Seq, std::size_t> enumerate_patterns(const std::vector<Seq>& db, std::size_t min_len, std::size_t max_len) {
  std::map<Seq, std::size_t> support;
  for (const auto& s : db) {
    std::set<Seq> seen;
    const std::size_t m = s.size();
    // Every index subset, as a bitmask.
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
      const auto len = static_cast<std::size_t>(__builtin_popcount(mask));
      if (len < min_len || len > max_len) continue;
      Seq sub;
      for (std::size_t i = 0; i < m; ++i)
        if (mask & (1u << i)) sub.push_back(s[i]);
      seen.insert(sub);
    }
    for (const auto& sub : seen) ++support[sub];
  }
  return support;
}

std::size_t occurrences(const Seq& s, const Seq& p) {
  std::size_t count = 0, start = 0;
  while (true) {
    std::size_t j = 0, i = start;
    for (; i < s.size() && j < p.size(); ++i)
      if (s[i] == p[j]) ++j;
    if (j < p.size()) return count;
    ++count;
    start = i;
  }
}

}  // namespace oracle
