#include "intentflow/flows.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "intentflow/csv.hpp"
#include "intentflow/error.hpp"

namespace intentflow::flows {

std::string_view to_string(CountMode m) noexcept { return m == CountMode::sequences ? "sequences" : "occurrences"; }

CountMode parse_count_mode(std::string_view s) {
  if (s == "sequences") return CountMode::sequences;
  if (s == "occurrences") return CountMode::occurrences;
  throw UsageError("unknown count mode '" + std::string(s) + "' (expected sequences or occurrences)");
}

SequenceDB build_sequence_db(const Corpus& corpus, const std::unordered_map<std::string, int>& assignment,
                             const SequenceOptions& options) {
  SequenceDB db;
  for (const auto& d : corpus.dialogues()) {
    Sequence seq;
    for (const auto& u : d.turns) {
      const std::string key = UtteranceKey{d.id, u.turn_index}.str();
      const auto it = assignment.find(key);
      if (it == assignment.end()) {
        if (options.skip_unassigned) continue;
        throw ValidationError("utterance " + key + " has no cluster assignment");
      }
      if (it->second < -1) throw ValidationError("utterance " + key + " has invalid cluster id " + std::to_string(it->second));
      if (it->second == -1 && !options.include_noise) continue;
      if (options.collapse_repeats && !seq.empty() && seq.back() == it->second) continue;
      seq.push_back(it->second);
    }
    db.dialogue_ids.push_back(d.id);
    db.sequences.push_back(std::move(seq));
  }
  return db;
}

bool pattern_order(const SequentialPattern& a, const SequentialPattern& b) noexcept {
  if (a.support != b.support) return a.support > b.support;
  if (a.pattern.size() != b.pattern.size()) return a.pattern.size() < b.pattern.size();
  return a.pattern < b.pattern;
}

bool contains_subsequence(const Sequence& seq, const Sequence& pattern) noexcept {
  std::size_t p = 0;
  for (std::size_t i = 0; i < seq.size() && p < pattern.size(); ++i)
    if (seq[i] == pattern[p]) ++p;
  return p == pattern.size();
}

std::size_t count_occurrences(const Sequence& seq, const Sequence& pattern) noexcept {
  if (pattern.empty()) return 0;
  std::size_t count = 0;
  std::size_t p = 0;
  for (int item : seq) {
    if (item != pattern[p]) continue;
    if (++p == pattern.size()) {
      ++count;
      p = 0;
    }
  }
  return count;
}

namespace {

struct Projection {
  std::size_t sid;
  std::size_t pos;  // first index after the earliest match of the prefix
};

// Depth-first prefix growth. `emit` receives every frequent pattern with its
// support and returns the current pruning threshold.
template <class Emit>
void grow(const SequenceDB& db, const MiningOptions& opts, Sequence& prefix, const std::vector<Projection>& projected,
          std::size_t& threshold, Emit&& emit) {
  if (prefix.size() >= opts.max_len) return;

  std::map<int, std::vector<Projection>> extensions;
  for (const auto& pr : projected) {
    const auto& seq = db.sequences[pr.sid];
    std::set<int> seen;
    for (std::size_t i = pr.pos; i < seq.size(); ++i)
      if (seen.insert(seq[i]).second) extensions[seq[i]].push_back({pr.sid, i + 1});
  }

  for (auto& [item, next] : extensions) {
    prefix.push_back(item);
    std::size_t support = next.size();
    if (opts.count == CountMode::occurrences) {
      support = 0;
      for (const auto& pr : next) support += count_occurrences(db.sequences[pr.sid], prefix);
    }
    if (support >= threshold) {
      if (prefix.size() >= opts.min_len) threshold = emit(prefix, support);
      grow(db, opts, prefix, next, threshold, emit);
    }
    prefix.pop_back();
  }
}

void check_lengths(const MiningOptions& o) {
  if (o.min_len < 1 || o.min_len > o.max_len)
    throw ParameterError("pattern lengths must satisfy 1 <= min_len <= max_len");
}

std::vector<Projection> full_projection(const SequenceDB& db) {
  std::vector<Projection> out;
  for (std::size_t s = 0; s < db.sequences.size(); ++s) out.push_back({s, 0});
  return out;
}

}  // namespace

std::vector<SequentialPattern> frequent(const SequenceDB& db, std::size_t min_support, const MiningOptions& options) {
  check_lengths(options);
  if (min_support < 1) throw ParameterError("min_support must be at least 1");
  std::vector<SequentialPattern> out;
  Sequence prefix;
  std::size_t threshold = min_support;
  grow(db, options, prefix, full_projection(db), threshold, [&](const Sequence& p, std::size_t support) {
    out.push_back({p, support});
    return min_support;
  });
  std::sort(out.begin(), out.end(), pattern_order);
  return out;
}

std::vector<SequentialPattern> topk(const SequenceDB& db, std::size_t k, const MiningOptions& options) {
  check_lengths(options);
  if (k < 1) throw ParameterError("k must be at least 1");
  std::set<SequentialPattern, decltype(&pattern_order)> best(&pattern_order);
  Sequence prefix;
  std::size_t threshold = 1;
  grow(db, options, prefix, full_projection(db), threshold, [&](const Sequence& p, std::size_t support) {
    best.insert({p, support});
    if (best.size() > k) best.erase(std::prev(best.end()));
    return best.size() == k ? std::prev(best.end())->support : std::size_t{1};
  });
  return {best.begin(), best.end()};
}

std::string arrow_join(const Sequence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += " -> ";
    out += std::to_string(s[i]);
  }
  return out;
}

void write_flows_csv(const std::vector<SequentialPattern>& patterns, CountMode count,
                     const std::filesystem::path& path) {
  csv::Writer w(path);
  w.row({"n", "sequence", "frequency", "semantics"});
  for (const auto& p : patterns)
    w.row({std::to_string(p.pattern.size()), arrow_join(p.pattern), std::to_string(p.support),
           std::string(to_string(count))});
  w.close();
}

}  // namespace intentflow::flows
