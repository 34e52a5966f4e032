#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "intentflow/corpus.hpp"
#include "intentflow/embed.hpp"

namespace intentflow {

// Surface forms (lowercased) mapped to tags of the form "[TAG_NAME]".
class Gazetteer {
 public:
  Gazetteer() = default;

  // Throws ValidationError if the surface form is empty after trimming, has
  // square brackets, or the tag is not of the form "[A-Z0-9_]+".
  void add(std::string_view surface, std::string_view tag);

  // Tokens consisting only of ASCII digits map to [CARDINAL] when enabled.
  void set_mask_digits(bool on) noexcept { mask_digits_ = on; }
  bool mask_digits() const noexcept { return mask_digits_; }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty() && !mask_digits_; }
  std::size_t longest() const noexcept { return longest_; }
  const std::unordered_map<std::string, std::string>& entries() const noexcept { return entries_; }
  const std::string* lookup(std::string_view lowered) const;

  // Tag -> sorted surface forms.
  std::map<std::string, std::vector<std::string>> by_tag() const;
  bool is_tag(std::string_view s) const;

 private:
  std::unordered_map<std::string, std::string> entries_;
  std::map<std::string, std::size_t, std::less<>> tags_;
  std::size_t longest_ = 0;
  bool mask_digits_ = false;
};

inline constexpr std::string_view kCardinalTag = "[CARDINAL]";
inline constexpr std::string_view kPlaceTag = "[GPE]";

// One entity database (a JSON array of objects). `fields` maps a string
// field name to its tag; when empty, "name" maps to "[<DOMAIN>_NAME]" with
// the domain taken from the file stem minus a trailing "_db".
struct DbSource {
  std::filesystem::path path;
  std::map<std::string, std::string> fields;
};

struct GazetteerOptions {
  bool numerals = true;  // one ... hundred
  bool digits = true;    // digit-only tokens
  bool places = true;    // built-in place names
};

Gazetteer build_gazetteer(const std::vector<DbSource>& db_files,
                          const std::vector<std::pair<std::string, std::vector<std::string>>>& extra_lexicons,
                          const GazetteerOptions& options = {});

Gazetteer load_gazetteer(const std::filesystem::path& path);
void write_gazetteer(const Gazetteer& g, const std::filesystem::path& path);

// Case-insensitive, token-aligned, longest-match-first replacement scanning
// left to right. Existing tag strings are skipped as atomic units.
std::string mask_text(std::string_view text, const Gazetteer& gazetteer);

Corpus mask_corpus(const Corpus& corpus, const Gazetteer& gazetteer);

enum class PairCategory { domain, domain_intent, followed, random };
inline constexpr PairCategory kPairCategories[] = {PairCategory::domain, PairCategory::domain_intent,
                                                   PairCategory::followed, PairCategory::random};
std::string_view to_string(PairCategory c) noexcept;

// identical: annotation sets must be equal; intersecting: share >= 1 label.
enum class LabelMatch { identical, intersecting };

struct CategorySample {
  std::size_t eligible_pairs = 0;
  std::vector<double> similarities;
  double mean = 0.0;
  double stddev = 0.0;
};

struct SimilarityStudyReport {
  std::size_t requested_pairs = 0;
  std::uint64_t seed = 0;
  LabelMatch match = LabelMatch::identical;
  std::map<PairCategory, CategorySample> categories;
};

SimilarityStudyReport pair_similarity_study(const Corpus& corpus, const EmbeddingMatrix& emb,
                                            std::size_t n_pairs, std::uint64_t seed,
                                            LabelMatch match = LabelMatch::identical);

void write_study_csv(const SimilarityStudyReport& r, const std::filesystem::path& path);
void write_study_summary(const SimilarityStudyReport& r, const std::filesystem::path& path);

}  // namespace intentflow
