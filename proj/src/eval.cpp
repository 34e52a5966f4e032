#include "intentflow/eval.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "intentflow/error.hpp"

namespace intentflow::eval {

std::string_view to_string(NoisePolicy p) noexcept { return p == NoisePolicy::exclude ? "exclude" : "singletons"; }
std::string_view to_string(BCubedVariant v) noexcept {
  return v == BCubedVariant::extended ? "extended" : "classic-first-label";
}
std::string_view to_string(Level l) noexcept { return l == Level::domain ? "domain" : "intent"; }
std::string_view to_string(Mode m) noexcept { return m == Mode::hard ? "hard" : "soft"; }

NoisePolicy parse_noise_policy(std::string_view s) {
  if (s == "exclude") return NoisePolicy::exclude;
  if (s == "singletons") return NoisePolicy::singletons;
  throw UsageError("unknown noise policy '" + std::string(s) + "' (expected exclude or singletons)");
}

BCubedVariant parse_bcubed_variant(std::string_view s) {
  if (s == "extended") return BCubedVariant::extended;
  if (s == "classic-first-label" || s == "classic_first_label") return BCubedVariant::classic_first_label;
  throw UsageError("unknown BCubed variant '" + std::string(s) + "' (expected extended or classic-first-label)");
}

Level parse_level(std::string_view s) {
  if (s == "domain") return Level::domain;
  if (s == "intent") return Level::intent;
  throw UsageError("unknown level '" + std::string(s) + "' (expected domain or intent)");
}

Mode parse_mode(std::string_view s) {
  if (s == "hard") return Mode::hard;
  if (s == "soft" || s == "soft_argmax" || s == "soft-argmax") return Mode::soft_argmax;
  throw UsageError("unknown mode '" + std::string(s) + "' (expected hard or soft)");
}

namespace {

std::size_t intersection_size(const LabelSet& a, const LabelSet& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace

BCubedScores bcubed(const std::vector<LabeledItem>& items, NoisePolicy noise_policy, BCubedVariant variant) {
  // Items are reduced to (cluster, label set) groups; every score only
  // depends on those, which keeps the cost quadratic in distinct groups.
  std::vector<LabelSet> set_ids;
  std::map<LabelSet, std::size_t> set_index;
  std::map<std::pair<long long, std::size_t>, std::size_t> groups;
  long long next_singleton = -1;
  std::size_t survivors = 0;
  for (const auto& item : items) {
    if (item.categories.empty())
      throw ValidationError("item '" + item.id + "' has no categories at the evaluated level");
    long long cluster = item.cluster;
    if (item.cluster < 0) {
      if (noise_policy == NoisePolicy::exclude) continue;
      cluster = next_singleton--;
    }
    LabelSet labels = item.categories;
    if (variant == BCubedVariant::classic_first_label) labels = LabelSet{*item.categories.begin()};
    const auto [it, inserted] = set_index.emplace(labels, set_ids.size());
    if (inserted) set_ids.push_back(labels);
    ++groups[{cluster, it->second}];
    ++survivors;
  }
  if (survivors == 0) throw UndefinedError("BCubed is undefined: no items remain after the noise policy");

  const std::size_t m = set_ids.size();
  std::vector<std::size_t> overlap(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) overlap[a * m + b] = intersection_size(set_ids[a], set_ids[b]);

  std::vector<std::size_t> set_total(m, 0);
  for (const auto& [key, count] : groups) set_total[key.second] += count;
  std::vector<std::size_t> sharing_total(m, 0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (overlap[a * m + b] > 0) sharing_total[a] += set_total[b];

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  for (auto first = groups.begin(); first != groups.end();) {
    auto last = first;
    std::size_t cluster_size = 0;
    while (last != groups.end() && last->first.first == first->first.first) {
      cluster_size += last->second;
      ++last;
    }
    for (auto g = first; g != last; ++g) {
      const std::size_t a = g->first.second;
      std::size_t sharing = 0;
      double recall = 0.0;
      for (auto h = first; h != last; ++h) {
        const std::size_t common = overlap[a * m + h->first.second];
        if (common == 0) continue;
        sharing += h->second;
        recall += static_cast<double>(h->second) / static_cast<double>(common);
      }
      const double count = static_cast<double>(g->second);
      precision_sum += count * static_cast<double>(sharing) / static_cast<double>(cluster_size);
      recall_sum += count * recall / static_cast<double>(sharing_total[a]);
    }
    first = last;
  }

  BCubedScores s;
  s.items = survivors;
  s.precision = precision_sum / static_cast<double>(survivors);
  s.recall = recall_sum / static_cast<double>(survivors);
  s.harmonic_mean = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

BCubedScores evaluate_clustering(const hdbscan::ClusterResult& result, const std::vector<LabelSet>& annotations,
                                 Mode mode, NoisePolicy noise_policy, BCubedVariant variant) {
  if (annotations.size() != result.labels.size())
    throw ParameterError("expected " + std::to_string(result.labels.size()) + " annotations, got " +
                         std::to_string(annotations.size()));
  if (mode == Mode::soft_argmax && result.k == 0)
    throw UndefinedError("soft evaluation is undefined when no cluster was found");
  const std::vector<int> labels = mode == Mode::hard ? result.labels : result.soft_labels();
  std::vector<LabeledItem> items(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) items[i] = {std::to_string(i), labels[i], annotations[i]};
  return bcubed(items, noise_policy, variant);
}

const LabelSet& labels_at(const Utterance& u, Level level) noexcept {
  return level == Level::domain ? u.domains : u.intents;
}

}  // namespace intentflow::eval
