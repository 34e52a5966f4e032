#include "intentflow/embed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "intentflow/corpus.hpp"
#include "intentflow/error.hpp"

namespace intentflow {

EmbeddingMatrix::EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<float> values,
                                 std::vector<std::string> keys)
    : n_(n), d_(d), values_(std::move(values)), keys_(std::move(keys)) {
  if (keys_.size() != n_)
    throw ValidationError("embedding key count " + std::to_string(keys_.size()) +
                          " does not match row count " + std::to_string(n_));
  if (values_.size() != n_ * d_) throw ValidationError("embedding payload does not match n * d");
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw ValidationError("non-finite embedding value at row " + std::to_string(i / d_) + " column " +
                            std::to_string(i % d_));
  index_.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i)
    if (!index_.emplace(keys_[i], i).second) throw ValidationError("duplicate embedding key '" + keys_[i] + "'");
}

std::optional<std::size_t> EmbeddingMatrix::find(const std::string& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Matrix EmbeddingMatrix::to_matrix() const {
  return Matrix(n_, d_, std::vector<double>(values_.begin(), values_.end()));
}

Matrix EmbeddingMatrix::select(std::span<const std::string> keys) const {
  Matrix out(keys.size(), d_);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    const auto idx = find(keys[r]);
    if (!idx) throw ValidationError("no embedding row for utterance '" + keys[r] + "'");
    auto src = row(*idx);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < d_; ++c) dst[c] = src[c];
  }
  return out;
}

namespace {


std::uint64_t read_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

EmbeddingMatrix load_embedding_file(const std::filesystem::path& matrix_path,
                                    const std::filesystem::path& keys_path) {
  std::ifstream in(matrix_path, std::ios::binary);
  if (!in) throw IoError("cannot read " + matrix_path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < EmbeddingMatrix::kHeaderSize)
    throw FormatError(matrix_path.string() + ": truncated header");
  if (std::memcmp(bytes.data(), EmbeddingMatrix::kMagic, 8) != 0)
    throw FormatError(matrix_path.string() + ": bad magic (expected UTTEMB01)");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t n = read_u64_le(p + 8);
  const std::uint64_t d = read_u64_le(p + 16);
  if (d != 0 && n > (bytes.size() / 4) / d + 1)
    throw FormatError(matrix_path.string() + ": truncated payload");
  const std::uint64_t expected = EmbeddingMatrix::kHeaderSize + n * d * 4;
  if (bytes.size() < expected)
    throw FormatError(matrix_path.string() + ": truncated payload (" + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected) + ")");
  if (bytes.size() > expected) throw FormatError(matrix_path.string() + ": trailing bytes after payload");

  std::vector<float> values(n * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    const unsigned char* q = p + EmbeddingMatrix::kHeaderSize + 4 * i;
    bits = static_cast<std::uint32_t>(q[0]) | static_cast<std::uint32_t>(q[1]) << 8 |
           static_cast<std::uint32_t>(q[2]) << 16 | static_cast<std::uint32_t>(q[3]) << 24;
    values[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(values[i]))
      throw FormatError(matrix_path.string() + ": non-finite value at row " + std::to_string(i / d));
  }

  std::ifstream kin(keys_path, std::ios::binary);
  if (!kin) throw IoError("cannot read " + keys_path.string());
  std::vector<std::string> keys;
  std::string line;
  while (std::getline(kin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    UtteranceKey::parse(line);
    keys.push_back(line);
  }
  if (keys.size() != n)
    throw FormatError(keys_path.string() + ": " + std::to_string(keys.size()) + " keys but header n = " +
                      std::to_string(n));
  return EmbeddingMatrix(n, d, std::move(values), std::move(keys));
}

void write_embedding_file(const EmbeddingMatrix& emb, const std::filesystem::path& matrix_path,
                          const std::filesystem::path& keys_path) {
  std::string bytes(EmbeddingMatrix::kMagic, 8);
  put_u64_le(bytes, emb.n());
  put_u64_le(bytes, emb.d());
  bytes.reserve(bytes.size() + 4 * emb.values().size());
  for (float v : emb.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  {
    std::ofstream out(matrix_path, std::ios::binary);
    if (!out) throw IoError("cannot open " + matrix_path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + matrix_path.string());
  }
  std::ofstream kout(keys_path, std::ios::binary);
  if (!kout) throw IoError("cannot open " + keys_path.string() + " for writing");
  for (const auto& k : emb.keys()) kout << k << '\n';
  if (!kout) throw IoError("failed writing " + keys_path.string());
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size())
    throw ParameterError("cosine similarity of vectors with different lengths " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw UndefinedError("cosine similarity is undefined for a zero-norm vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }
double cosine_similarity(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }

}  // namespace intentflow
