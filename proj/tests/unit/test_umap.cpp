#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "intentflow/error.hpp"
#include "intentflow/umap.hpp"
#include "oracles.hpp"

using namespace intentflow;

namespace {

umap::ReductionParams params_2d(Metric m = Metric::euclidean) {
  umap::ReductionParams p;
  p.target_dim = 2;
  p.metric = m;
  return p;
}

}  // namespace

TEST(Umap, ValidateRejectsBadParams) {
  umap::ReductionParams p;
  EXPECT_NO_THROW(umap::validate(p, 100));
  p.n_neighbors = 100;
  EXPECT_THROW(umap::validate(p, 100), ParameterError);
  p = {};
  p.target_dim = 0;
  EXPECT_THROW(umap::validate(p, 100), ParameterError);
  p = {};
  p.n_neighbors = 1;
  EXPECT_THROW(umap::validate(p, 100), ParameterError);
  p = {};
  p.min_dist = -0.1;
  EXPECT_THROW(umap::validate(p, 100), ParameterError);
  p = {};
  p.n_epochs = 0;
  EXPECT_THROW(umap::validate(p, 100), ParameterError);
}

TEST(Umap, KnnGraphRejectsKAtLeastN) {
  const Matrix m = fixture::uniform_points(5, 2, 1.0, 1);
  EXPECT_THROW(umap::knn_graph(m, 5, Metric::euclidean), ParameterError);
  EXPECT_THROW(umap::knn_graph(m, 0, Metric::euclidean), ParameterError);
  EXPECT_NO_THROW(umap::knn_graph(m, 4, Metric::euclidean));
}

TEST(Umap, KnnGraphMatchesBruteForce) {
  for (const Metric metric : {Metric::euclidean, Metric::cosine}) {
    const auto blobs = fixture::gaussian_blobs(3, 60, 6, 6.0, 11);
    const auto pts = oracle::to_points(blobs.points);
    const auto g = umap::knn_graph(blobs.points, 15, metric);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto ranked = oracle::ranked_neighbors(pts, i, metric == Metric::cosine);
      for (std::size_t r = 0; r < 15; ++r) {
        ASSERT_EQ(g.neighbors(i)[r], ranked[r].second) << "point " << i << " rank " << r;
        ASSERT_NEAR(g.dists(i)[r], ranked[r].first, 1e-12);
      }
    }
  }
}

TEST(Umap, BandwidthSatisfiesTargetEquation) {
  const std::vector<double> d{1, 2, 3, 4};
  const double rho = 1.0;
  const double sigma = umap::solve_bandwidth(d, rho);
  double sum = 0.0;
  for (double x : d) sum += std::exp(-std::max(0.0, x - rho) / sigma);
  EXPECT_NEAR(sum, std::log2(4.0), 1e-5);
}

TEST(Umap, BandwidthFloorsWhenDistancesAreEqual) {
  // Every term is exp(0) = 1 whatever sigma is, so no sigma hits log2(k).
  const std::vector<double> d{2, 2, 2, 2};
  EXPECT_GE(umap::solve_bandwidth(d, 2.0), umap::kBandwidthFloor);
}

TEST(Umap, NearestNeighbourGetsWeightOne) {
  const auto blobs = fixture::gaussian_blobs(2, 30, 3, 5.0, 3);
  const auto g = umap::knn_graph(blobs.points, 10, Metric::euclidean);
  const auto fg = umap::fit_fuzzy_graph(g);
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> w;
  for (const auto& e : fg.edges) w[{e.i, e.j}] = e.weight;
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_DOUBLE_EQ(fg.rho[i], g.dists(i)[0]);
    // Directed weight 1 means the union is 1 regardless of the reverse side.
    const auto key = std::make_pair(static_cast<std::uint32_t>(i), g.neighbors(i)[0]);
    ASSERT_TRUE(w.count(key));
    EXPECT_DOUBLE_EQ(w[key], 1.0);
  }
}

TEST(Umap, FuzzyGraphIsSymmetricWithWeightsInUnitInterval) {
  const Matrix m = fixture::uniform_points(80, 4, 1.0, 9);
  const auto fg = umap::fit_fuzzy_graph(umap::knn_graph(m, 12, Metric::euclidean));
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> w;
  for (const auto& e : fg.edges) {
    EXPECT_GE(e.weight, 0.0);
    EXPECT_LE(e.weight, 1.0);
    EXPECT_NE(e.i, e.j);
    w[{e.i, e.j}] = e.weight;
  }
  for (const auto& [key, weight] : w) {
    const auto it = w.find({key.second, key.first});
    ASSERT_NE(it, w.end());
    EXPECT_EQ(it->second, weight);
  }
  for (std::size_t e = 1; e < fg.edges.size(); ++e) {
    const auto& a = fg.edges[e - 1];
    const auto& b = fg.edges[e];
    EXPECT_TRUE(a.i < b.i || (a.i == b.i && a.j < b.j));
  }
}

TEST(Umap, FitAbMatchesConventionalCurve) {
  // The usual values for min_dist = 0.1, spread = 1.
  const auto [a, b] = umap::fit_ab(0.1, 1.0);
  EXPECT_NEAR(a, 1.577, 0.02);
  EXPECT_NEAR(b, 0.895, 0.01);
}

TEST(Umap, InitialLayoutIsFiniteAndScaled) {
  const auto blobs = fixture::gaussian_blobs(3, 40, 5, 8.0, 5);
  const auto fg = umap::fit_fuzzy_graph(umap::knn_graph(blobs.points, 10, Metric::euclidean));
  const Matrix init = umap::initial_layout(fg, 2, 42);
  ASSERT_EQ(init.rows(), 120u);
  ASSERT_EQ(init.cols(), 2u);
  double top = 0.0;
  for (double v : init.data()) {
    ASSERT_TRUE(std::isfinite(v));
    top = std::max(top, std::abs(v));
  }
  EXPECT_NEAR(top, 10.0, 0.01);
}

TEST(Umap, ReduceOutputShapeAndFinite) {
  const auto blobs = fixture::gaussian_blobs(2, 50, 6, 6.0, 21);
  umap::ReductionParams p;
  p.target_dim = 3;
  p.n_epochs = 50;
  const Matrix out = umap::reduce(blobs.points, p);
  EXPECT_EQ(out.rows(), 100u);
  EXPECT_EQ(out.cols(), 3u);
  for (double v : out.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Umap, DuplicateRowsLandClose) {
  auto blobs = fixture::gaussian_blobs(2, 50, 6, 6.0, 22);
  for (std::size_t j = 0; j < 6; ++j) blobs.points(1, j) = blobs.points(0, j);
  const Matrix out = umap::reduce(blobs.points, params_2d());
  EXPECT_LT(euclidean_distance(out.row(0), out.row(1)), 1.0);
}

TEST(Umap, BlobTrustworthiness) {
  const auto blobs = fixture::gaussian_blobs(3, 100, 10, 10.0, 2024);
  const Matrix out = umap::reduce(blobs.points, params_2d());
  const double t = oracle::trustworthiness(oracle::to_points(blobs.points), oracle::to_points(out), 15);
  EXPECT_GE(t, 0.90);
}

TEST(Umap, DeterministicForEqualSeeds) {
  const auto blobs = fixture::gaussian_blobs(3, 40, 8, 6.0, 77);
  auto p = params_2d(Metric::cosine);
  p.n_epochs = 80;
  const Matrix a = umap::reduce(blobs.points, p);
  const Matrix b = umap::reduce(blobs.points, p);
  EXPECT_EQ(a, b);
  p.seed = 43;
  EXPECT_FALSE(umap::reduce(blobs.points, p) == a);
}

TEST(Umap, DisconnectedComponentsStayFinite) {
  // Two far clusters with k small enough that the graph splits.
  auto blobs = fixture::gaussian_blobs(2, 20, 3, 1000.0, 8);
  umap::ReductionParams p = params_2d();
  p.n_neighbors = 4;
  p.n_epochs = 60;
  const Matrix out = umap::reduce(blobs.points, p);
  for (double v : out.data()) EXPECT_TRUE(std::isfinite(v));
}
