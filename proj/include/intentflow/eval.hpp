#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "intentflow/corpus.hpp"
#include "intentflow/hdbscan.hpp"

namespace intentflow::eval {

struct LabeledItem {
  std::string id;
  int cluster = -1;
  LabelSet categories;
};

struct BCubedScores {
  double precision = 0.0;
  double recall = 0.0;
  double harmonic_mean = 0.0;
  std::size_t items = 0;
};

enum class NoisePolicy { exclude, singletons };
// extended: multiplicity-aware multi-label form.
// classic_first_label: every category set reduced to its first label.
enum class BCubedVariant { extended, classic_first_label };
enum class Level { domain, intent };
enum class Mode { hard, soft_argmax };

std::string_view to_string(NoisePolicy p) noexcept;
std::string_view to_string(BCubedVariant v) noexcept;
std::string_view to_string(Level l) noexcept;
std::string_view to_string(Mode m) noexcept;
NoisePolicy parse_noise_policy(std::string_view s);
BCubedVariant parse_bcubed_variant(std::string_view s);
Level parse_level(std::string_view s);
Mode parse_mode(std::string_view s);

BCubedScores bcubed(const std::vector<LabeledItem>& items, NoisePolicy noise_policy,
                    BCubedVariant variant = BCubedVariant::extended);

// annotations[i] belongs to point i of the result.
BCubedScores evaluate_clustering(const hdbscan::ClusterResult& result,
                                 const std::vector<LabelSet>& annotations, Mode mode,
                                 NoisePolicy noise_policy,
                                 BCubedVariant variant = BCubedVariant::extended);

const LabelSet& labels_at(const Utterance& u, Level level) noexcept;

}  // namespace intentflow::eval
