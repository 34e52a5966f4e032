#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace intentflow {

enum class Speaker { user, system, unknown };

std::string_view to_string(Speaker s) noexcept;
Speaker parse_speaker(std::string_view s);

using LabelSet = std::set<std::string>;

struct Utterance {
  std::string dialogue_id;
  std::size_t turn_index = 0;
  Speaker speaker = Speaker::unknown;
  std::string text;
  LabelSet domains;
  LabelSet intents;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> turns;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

// Identifies one utterance as "<dialogue_id>:<turn_index>". The turn index is
// taken after the last colon, so dialogue ids may themselves contain colons.
struct UtteranceKey {
  std::string dialogue_id;
  std::size_t turn_index = 0;

  std::string str() const;
  static UtteranceKey parse(std::string_view canonical);

  friend auto operator<=>(const UtteranceKey&, const UtteranceKey&) = default;
};

class Corpus {
 public:
  Corpus() = default;
  // Validates every invariant; throws ValidationError on violation.
  explicit Corpus(std::vector<Dialogue> dialogues);

  const std::vector<Dialogue>& dialogues() const noexcept { return dialogues_; }
  std::size_t size() const noexcept { return dialogues_.size(); }
  std::size_t utterance_count() const noexcept;

  const Dialogue* find(std::string_view id) const;
  const Utterance* find(const UtteranceKey& key) const;

  // Every utterance in corpus order.
  std::vector<std::pair<UtteranceKey, const Utterance*>> utterances() const;

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.dialogues_ == b.dialogues_; }

 private:
  std::vector<Dialogue> dialogues_;
  std::unordered_map<std::string, std::size_t> index_;
};

Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view json_text);
std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct CorpusStats {
  std::size_t n_dialogues = 0;
  std::size_t n_utterances = 0;
  std::size_t n_single_domain = 0;
  std::size_t n_multi_domain = 0;
  std::optional<double> mean_turns_single_domain;
  std::optional<double> mean_turns_multi_domain;
};

// Domains ignored when deciding whether a dialogue is single-domain.
inline const LabelSet kBroadDomains{"booking", "general"};

bool is_single_domain(const Dialogue& d);
CorpusStats corpus_stats(const Corpus& corpus);

std::vector<std::pair<UtteranceKey, Utterance>> filter_utterances(
    const Corpus& corpus, const std::optional<LabelSet>& keep_domains,
    const std::optional<LabelSet>& drop_domains);

using DomainHistogram = std::vector<std::pair<std::vector<std::string>, std::size_t>>;

// Sorted by count descending, then by combination ascending.
DomainHistogram domain_combination_histogram(const Corpus& corpus, std::size_t min_count);

// MultiWOZ 2.0/2.1 `data.json` (object keyed by "<ID>.json" with a "log"
// array) or 2.2-style dialogue lists. Dialogue acts come from the turns
// themselves or from an optional separate acts file.
struct ConvertReport {
  std::size_t dialogues = 0;
  std::size_t turns = 0;
  std::size_t dropped_empty_turns = 0;
};

Corpus convert_multiwoz(const std::filesystem::path& data_path,
                        const std::optional<std::filesystem::path>& acts_path,
                        ConvertReport* report = nullptr);

// "Hotel-Inform" -> {"hotel", "inform"}. Splits on the first '-'.
std::pair<std::string, std::string> split_dialogue_act(std::string_view act);

}  // namespace intentflow
