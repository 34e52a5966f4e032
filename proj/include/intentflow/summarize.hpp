#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "intentflow/corpus.hpp"

namespace intentflow::summarize {

using WordScores = std::vector<std::pair<std::string, double>>;

// The bundled 50-word English stopword list.
const std::vector<std::string>& stopwords();

// Tokens kept for term counting: lowercased, at least two code points, not a
// stopword.
std::vector<std::string> document_tokens(std::string_view text);

// Class-based TF-IDF over one concatenated document per cluster:
// tf(w, c) * log(1 + A / f(w)), with A the mean document token count.
// Ties are broken by word ascending.
std::map<int, WordScores> top_words(const std::map<int, std::vector<std::string>>& cluster_texts,
                                    std::size_t n_words);

inline constexpr std::string_view kNoneLabel = "(none)";

// Most frequent annotation set, labels joined by a space; ties broken by the
// joined string ascending. Empty sets count as "(none)".
std::string reference_label(const std::vector<LabelSet>& member_annotations);

struct ClusterSummary {
  int cluster = 0;
  std::size_t length = 0;
  double persistence = 0.0;
  WordScores top_words;
  std::string reference_label;
};

void write_summary_csv(const std::vector<ClusterSummary>& rows, const std::filesystem::path& path);

}  // namespace intentflow::summarize
