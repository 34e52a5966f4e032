#include "intentflow/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "intentflow/csv.hpp"
#include "intentflow/text.hpp"
#include "stopwords_data.hpp"

namespace intentflow::summarize {

const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> words(std::begin(detail::kStopwords), std::end(detail::kStopwords));
  return words;
}

std::vector<std::string> document_tokens(std::string_view text) {
  static const std::unordered_set<std::string> stop(stopwords().begin(), stopwords().end());
  std::vector<std::string> out;
  for (auto& tok : text::tokenize(text)) {
    if (text::codepoint_count(tok) < 2 || stop.count(tok)) continue;
    out.push_back(std::move(tok));
  }
  return out;
}

std::map<int, WordScores> top_words(const std::map<int, std::vector<std::string>>& cluster_texts,
                                    std::size_t n_words) {
  std::map<int, std::unordered_map<std::string, std::size_t>> tf;
  std::unordered_map<std::string, std::size_t> total;
  std::size_t tokens = 0;
  for (const auto& [cluster, texts] : cluster_texts) {
    auto& counts = tf[cluster];
    for (const auto& t : texts)
      for (auto& tok : document_tokens(t)) {
        ++counts[tok];
        ++total[tok];
        ++tokens;
      }
  }
  const double mean_tokens =
      cluster_texts.empty() ? 0.0 : static_cast<double>(tokens) / static_cast<double>(cluster_texts.size());

  std::map<int, WordScores> out;
  for (const auto& [cluster, counts] : tf) {
    WordScores scores;
    scores.reserve(counts.size());
    for (const auto& [word, count] : counts)
      scores.emplace_back(word, static_cast<double>(count) *
                                    std::log(1.0 + mean_tokens / static_cast<double>(total.at(word))));
    std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (scores.size() > n_words) scores.resize(n_words);
    out.emplace(cluster, std::move(scores));
  }
  return out;
}

std::string reference_label(const std::vector<LabelSet>& member_annotations) {
  std::map<std::string, std::size_t> counts;
  for (const auto& labels : member_annotations) {
    std::string joined;
    for (const auto& l : labels) {
      if (!joined.empty()) joined += ' ';
      joined += l;
    }
    ++counts[labels.empty() ? std::string(kNoneLabel) : joined];
  }
  std::string best;
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts)
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  return best_count == 0 ? std::string(kNoneLabel) : best;
}

void write_summary_csv(const std::vector<ClusterSummary>& rows, const std::filesystem::path& path) {
  csv::Writer w(path);
  w.row({"cluster", "length", "persistence", "top_words", "label"});
  for (const auto& r : rows) {
    std::string words;
    for (const auto& [word, score] : r.top_words) {
      if (!words.empty()) words += ';';
      words += word;
    }
    w.row({std::to_string(r.cluster), std::to_string(r.length), csv::format_double(r.persistence), words,
           r.reference_label});
  }
  w.close();
}

}  // namespace intentflow::summarize
