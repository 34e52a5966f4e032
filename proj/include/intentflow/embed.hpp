#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "intentflow/matrix.hpp"

namespace intentflow {

// Dense utterance embeddings, one row per canonical UtteranceKey string.
class EmbeddingMatrix {
 public:
  static constexpr char kMagic[9] = "UTTEMB01";
  static constexpr std::size_t kHeaderSize = 24;

  EmbeddingMatrix() = default;
  // Throws ValidationError on duplicate keys, size mismatch or non-finite values.
  EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<float> values,
                  std::vector<std::string> keys);

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  const std::vector<float>& values() const noexcept { return values_; }
  const std::vector<std::string>& keys() const noexcept { return keys_; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * d_, d_};
  }
  std::optional<std::size_t> find(const std::string& key) const;

  Matrix to_matrix() const;
  // Matrix of the given keys in order; throws ValidationError for a missing key.
  Matrix select(std::span<const std::string> keys) const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.n_ == b.n_ && a.d_ == b.d_ && a.keys_ == b.keys_ && a.values_ == b.values_;
  }

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<float> values_;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingMatrix load_embedding_file(const std::filesystem::path& matrix_path,
                                    const std::filesystem::path& keys_path);
void write_embedding_file(const EmbeddingMatrix& emb, const std::filesystem::path& matrix_path,
                          const std::filesystem::path& keys_path);

// Both inputs must have equal length and non-zero norm. Accumulates in double
// and clamps to [-1, 1].
double cosine_similarity(std::span<const float> a, std::span<const float> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace intentflow
