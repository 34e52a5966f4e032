#pragma once

// Seeded synthetic datasets shared by unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "intentflow/matrix.hpp"
#include "intentflow/random.hpp"

namespace fixture {

struct Labeled {
  intentflow::Matrix points;
  std::vector<int> truth;
};

// `blobs` isotropic Gaussian clusters of `per_blob` points with unit sigma,
// centres on a simplex-like layout `separation` sigmas apart.
inline Labeled gaussian_blobs(std::size_t blobs, std::size_t per_blob, std::size_t dim, double separation,
                              std::uint64_t seed) {
  intentflow::Rng rng(seed);
  std::vector<double> flat;
  std::vector<int> truth;
  for (std::size_t b = 0; b < blobs; ++b) {
    std::vector<double> centre(dim, 0.0);
    // Centre b sits at separation/sqrt(2) along axis b (mod dim), so every
    // pair of centres is exactly `separation` apart when blobs <= dim.
    centre[b % dim] = separation / std::sqrt(2.0);
    if (b >= dim) centre[(b + 1) % dim] = -separation / std::sqrt(2.0);
    for (std::size_t i = 0; i < per_blob; ++i) {
      for (std::size_t j = 0; j < dim; ++j) flat.push_back(centre[j] + intentflow::standard_normal(rng));
      truth.push_back(static_cast<int>(b));
    }
  }
  return {intentflow::Matrix(blobs * per_blob, dim, std::move(flat)), std::move(truth)};
}

inline intentflow::Matrix uniform_points(std::size_t n, std::size_t dim, double extent, std::uint64_t seed) {
  intentflow::Rng rng(seed);
  std::vector<double> flat(n * dim);
  for (double& v : flat) v = extent * (2.0 * intentflow::uniform01(rng) - 1.0);
  return intentflow::Matrix(n, dim, std::move(flat));
}

inline std::string data_dir() { return INTENTFLOW_DATA_DIR; }
inline std::string test_data_dir() { return INTENTFLOW_TEST_DATA_DIR; }

}  // namespace fixture
