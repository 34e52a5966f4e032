#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "intentflow/corpus.hpp"

namespace intentflow::flows {

using Sequence = std::vector<int>;

struct SequenceDB {
  std::vector<std::string> dialogue_ids;
  std::vector<Sequence> sequences;
};

struct SequentialPattern {
  Sequence pattern;
  std::size_t support = 0;

  friend bool operator==(const SequentialPattern&, const SequentialPattern&) = default;
};

enum class CountMode { sequences, occurrences };
std::string_view to_string(CountMode m) noexcept;
CountMode parse_count_mode(std::string_view s);

struct SequenceOptions {
  bool include_noise = false;
  bool collapse_repeats = false;
  // When false, an utterance without an assignment is an error.
  bool skip_unassigned = false;
};

// assignment maps canonical utterance keys to cluster ids (-1 for noise).
SequenceDB build_sequence_db(const Corpus& corpus,
                             const std::unordered_map<std::string, int>& assignment,
                             const SequenceOptions& options = {});

struct MiningOptions {
  std::size_t min_len = 1;
  std::size_t max_len = 2;
  CountMode count = CountMode::sequences;
};

// Sorted by support descending, length ascending, then lexicographically.
std::vector<SequentialPattern> frequent(const SequenceDB& db, std::size_t min_support,
                                        const MiningOptions& options);
std::vector<SequentialPattern> topk(const SequenceDB& db, std::size_t k,
                                    const MiningOptions& options);

bool pattern_order(const SequentialPattern& a, const SequentialPattern& b) noexcept;

bool contains_subsequence(const Sequence& seq, const Sequence& pattern) noexcept;
// Greedy count of non-overlapping successive matches.
std::size_t count_occurrences(const Sequence& seq, const Sequence& pattern) noexcept;

std::string arrow_join(const Sequence& s);
void write_flows_csv(const std::vector<SequentialPattern>& patterns, CountMode count,
                     const std::filesystem::path& path);

}  // namespace intentflow::flows
