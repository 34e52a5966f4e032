#include "intentflow/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_set>

#include "intentflow/error.hpp"
#include "intentflow/text.hpp"
#include "json.hpp"

namespace intentflow {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Speaker s) noexcept {
  switch (s) {
    case Speaker::user: return "user";
    case Speaker::system: return "system";
    case Speaker::unknown: break;
  }
  return "unknown";
}

Speaker parse_speaker(std::string_view s) {
  const std::string lower = text::ascii_lower(s);
  if (lower == "user") return Speaker::user;
  if (lower == "system") return Speaker::system;
  if (lower == "unknown") return Speaker::unknown;
  throw ParseError("unknown speaker '" + std::string(s) + "'");
}

std::string UtteranceKey::str() const { return dialogue_id + ":" + std::to_string(turn_index); }

UtteranceKey UtteranceKey::parse(std::string_view canonical) {
  const auto colon = canonical.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == canonical.size())
    throw ParseError("malformed utterance key '" + std::string(canonical) + "'");
  const auto digits = canonical.substr(colon + 1);
  std::size_t turn = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), turn);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() ||
      (digits.size() > 1 && digits.front() == '0'))
    throw ParseError("malformed turn index in utterance key '" + std::string(canonical) + "'");
  return {std::string(canonical.substr(0, colon)), turn};
}

Corpus::Corpus(std::vector<Dialogue> dialogues) : dialogues_(std::move(dialogues)) {
  index_.reserve(dialogues_.size());
  for (std::size_t i = 0; i < dialogues_.size(); ++i) {
    const Dialogue& d = dialogues_[i];
    if (d.id.empty()) throw ValidationError("dialogue with empty id");
    if (!index_.emplace(d.id, i).second) throw ValidationError("duplicate dialogue id '" + d.id + "'");
    if (d.turns.empty()) throw ValidationError("dialogue '" + d.id + "' has no turns");
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const Utterance& u = d.turns[t];
      const std::string where = "dialogue '" + d.id + "' turn " + std::to_string(t);
      if (u.dialogue_id != d.id) throw ValidationError(where + ": dialogue id mismatch");
      if (u.turn_index != t) throw ValidationError(where + ": turns must be contiguous from 0");
      if (text::trim(u.text).empty()) throw ValidationError(where + ": empty text");
    }
  }
}

std::size_t Corpus::utterance_count() const noexcept {
  std::size_t n = 0;
  for (const auto& d : dialogues_) n += d.turns.size();
  return n;
}

const Dialogue* Corpus::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &dialogues_[it->second];
}

const Utterance* Corpus::find(const UtteranceKey& key) const {
  const Dialogue* d = find(key.dialogue_id);
  if (!d || key.turn_index >= d->turns.size()) return nullptr;
  return &d->turns[key.turn_index];
}

std::vector<std::pair<UtteranceKey, const Utterance*>> Corpus::utterances() const {
  std::vector<std::pair<UtteranceKey, const Utterance*>> out;
  out.reserve(utterance_count());
  for (const auto& d : dialogues_)
    for (const auto& u : d.turns) out.emplace_back(UtteranceKey{d.id, u.turn_index}, &u);
  return out;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

LabelSet parse_label_array(const ojson& j, const std::string& where, const char* field) {
  LabelSet out;
  if (!j.contains(field) || j.at(field).is_null()) return out;
  const ojson& arr = j.at(field);
  if (!arr.is_array()) throw ParseError(where + ": '" + field + "' must be an array of strings");
  for (const auto& v : arr) {
    if (!v.is_string()) throw ParseError(where + ": '" + field + "' must be an array of strings");
    out.insert(v.get<std::string>());
  }
  return out;
}

// Parses while recording top-level keys, since the DOM silently keeps only
// the last of duplicated keys.
ojson parse_checked(std::string_view json_text, std::vector<std::string>* duplicate_keys) {
  std::unordered_set<std::string> seen;
  auto cb = [&](int depth, ojson::parse_event_t event, ojson& parsed) {
    if (event == ojson::parse_event_t::key && depth == 1) {
      const auto& key = parsed.get_ref<const std::string&>();
      if (!seen.insert(key).second) duplicate_keys->push_back(key);
    }
    return true;
  };
  try {
    return ojson::parse(json_text.begin(), json_text.end(), cb);
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("corpus is not valid JSON: ") + e.what());
  }
}

}  // namespace

Corpus parse_corpus(std::string_view json_text) {
  std::vector<std::string> duplicates;
  const ojson root = parse_checked(json_text, &duplicates);
  if (!duplicates.empty()) throw ValidationError("duplicate dialogue id '" + duplicates.front() + "'");
  if (!root.is_object()) throw ParseError("corpus must be a JSON object keyed by dialogue id");

  std::vector<Dialogue> dialogues;
  dialogues.reserve(root.size());
  for (const auto& [id, body] : root.items()) {
    const std::string where = "dialogue '" + id + "'";
    if (!body.is_object() || !body.contains("turns") || !body.at("turns").is_array())
      throw ParseError(where + ": expected an object with a 'turns' array");
    Dialogue d;
    d.id = id;
    std::size_t t = 0;
    for (const auto& turn : body.at("turns")) {
      const std::string twhere = where + " turn " + std::to_string(t);
      if (!turn.is_object()) throw ParseError(twhere + ": expected an object");
      if (!turn.contains("text") || !turn.at("text").is_string())
        throw ParseError(twhere + ": missing string field 'text'");
      Utterance u;
      u.dialogue_id = id;
      u.turn_index = t;
      u.text = turn.at("text").get<std::string>();
      if (turn.contains("speaker")) {
        if (!turn.at("speaker").is_string()) throw ParseError(twhere + ": 'speaker' must be a string");
        try {
          u.speaker = parse_speaker(turn.at("speaker").get<std::string>());
        } catch (const ParseError& e) {
          throw ParseError(twhere + ": " + e.what());
        }
      }
      u.domains = parse_label_array(turn, twhere, "domains");
      u.intents = parse_label_array(turn, twhere, "intents");
      if (text::trim(u.text).empty()) throw ParseError(twhere + ": empty text");
      d.turns.push_back(std::move(u));
      ++t;
    }
    dialogues.push_back(std::move(d));
  }
  return Corpus(std::move(dialogues));
}

Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

std::string serialize_corpus(const Corpus& corpus) {
  ojson root = ojson::object();
  for (const auto& d : corpus.dialogues()) {
    ojson turns = ojson::array();
    for (const auto& u : d.turns) {
      ojson t;
      t["speaker"] = std::string(to_string(u.speaker));
      t["text"] = u.text;
      t["domains"] = ojson(std::vector<std::string>(u.domains.begin(), u.domains.end()));
      t["intents"] = ojson(std::vector<std::string>(u.intents.begin(), u.intents.end()));
      turns.push_back(std::move(t));
    }
    root[d.id] = ojson{{"turns", std::move(turns)}};
  }
  return root.dump(2) + "\n";
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << serialize_corpus(corpus);
  if (!out) throw IoError("failed writing " + path.string());
}

bool is_single_domain(const Dialogue& d) {
  LabelSet task;
  for (const auto& u : d.turns)
    for (const auto& dom : u.domains)
      if (!kBroadDomains.contains(dom)) task.insert(dom);
  return task.size() <= 1;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.n_dialogues = corpus.size();
  std::size_t single_turns = 0;
  std::size_t multi_turns = 0;
  for (const auto& d : corpus.dialogues()) {
    s.n_utterances += d.turns.size();
    if (is_single_domain(d)) {
      ++s.n_single_domain;
      single_turns += d.turns.size();
    } else {
      ++s.n_multi_domain;
      multi_turns += d.turns.size();
    }
  }
  if (s.n_single_domain)
    s.mean_turns_single_domain = static_cast<double>(single_turns) / static_cast<double>(s.n_single_domain);
  if (s.n_multi_domain)
    s.mean_turns_multi_domain = static_cast<double>(multi_turns) / static_cast<double>(s.n_multi_domain);
  return s;
}

namespace {

bool intersects(const LabelSet& a, const LabelSet& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) return true;
    if (*ia < *ib) ++ia;
    else ++ib;
  }
  return false;
}

}  // namespace

std::vector<std::pair<UtteranceKey, Utterance>> filter_utterances(
    const Corpus& corpus, const std::optional<LabelSet>& keep_domains,
    const std::optional<LabelSet>& drop_domains) {
  if (keep_domains && drop_domains)
    throw UsageError("keep_domains and drop_domains are mutually exclusive");
  std::vector<std::pair<UtteranceKey, Utterance>> out;
  for (const auto& d : corpus.dialogues()) {
    for (const auto& u : d.turns) {
      bool keep = true;
      if (keep_domains) keep = intersects(u.domains, *keep_domains);
      if (drop_domains) keep = !intersects(u.domains, *drop_domains);
      if (keep) out.emplace_back(UtteranceKey{d.id, u.turn_index}, u);
    }
  }
  return out;
}

DomainHistogram domain_combination_histogram(const Corpus& corpus, std::size_t min_count) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (const auto& d : corpus.dialogues())
    for (const auto& u : d.turns) ++counts[std::vector<std::string>(u.domains.begin(), u.domains.end())];
  DomainHistogram out;
  for (auto& [combo, n] : counts)
    if (n >= min_count) out.emplace_back(combo, n);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::pair<std::string, std::string> split_dialogue_act(std::string_view act) {
  const std::string lower = text::ascii_lower(act);
  const auto dash = lower.find('-');
  if (dash == std::string::npos) return {lower, std::string()};
  return {lower.substr(0, dash), lower.substr(dash + 1)};
}

namespace {

void apply_acts(const ojson& acts, Utterance& u) {
  if (!acts.is_object()) return;  // "No Annotation" and similar placeholders
  for (const auto& [name, slots] : acts.items()) {
    (void)slots;
    auto [domain, intent] = split_dialogue_act(name);
    if (!domain.empty()) u.domains.insert(domain);
    if (!intent.empty()) u.intents.insert(intent);
  }
}

std::string strip_json_suffix(std::string id) {
  if (id.size() > 5 && id.ends_with(".json")) id.resize(id.size() - 5);
  return id;
}

const ojson* find_dialogue_acts(const ojson* acts, const std::string& id) {
  if (!acts) return nullptr;
  if (acts->contains(id)) return &acts->at(id);
  if (acts->contains(id + ".json")) return &acts->at(id + ".json");
  return nullptr;
}

}  // namespace

Corpus convert_multiwoz(const std::filesystem::path& data_path,
                        const std::optional<std::filesystem::path>& acts_path, ConvertReport* report) {
  auto parse = [](const std::filesystem::path& p) {
    try {
      return ojson::parse(read_file(p));
    } catch (const ojson::parse_error& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  };
  const ojson data = parse(data_path);
  std::optional<ojson> acts_doc;
  if (acts_path) acts_doc = parse(*acts_path);
  const ojson* acts = acts_doc ? &*acts_doc : nullptr;

  ConvertReport rep;
  std::vector<Dialogue> dialogues;

  auto finish_turn = [&](Dialogue& d, Utterance u) {
    if (text::trim(u.text).empty()) {
      ++rep.dropped_empty_turns;
      return;
    }
    u.dialogue_id = d.id;
    u.turn_index = d.turns.size();
    d.turns.push_back(std::move(u));
    ++rep.turns;
  };

  if (data.is_object()) {
    // 2.0 / 2.1: {"SNG0001.json": {"goal": ..., "log": [...]}}
    for (const auto& [raw_id, body] : data.items()) {
      if (!body.is_object() || !body.contains("log") || !body.at("log").is_array())
        throw ParseError("dialogue '" + raw_id + "': missing 'log' array");
      Dialogue d;
      d.id = strip_json_suffix(raw_id);
      const ojson* dial_acts = find_dialogue_acts(acts, d.id);
      const auto& log = body.at("log");
      for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& t = log[i];
        if (!t.is_object() || !t.contains("text") || !t.at("text").is_string())
          throw ParseError("dialogue '" + raw_id + "' turn " + std::to_string(i) + ": missing 'text'");
        Utterance u;
        u.text = t.at("text").get<std::string>();
        if (t.contains("metadata") && t.at("metadata").is_object())
          u.speaker = t.at("metadata").empty() ? Speaker::user : Speaker::system;
        if (t.contains("dialog_act")) {
          apply_acts(t.at("dialog_act"), u);
        } else if (dial_acts && i % 2 == 1) {
          // 2.0 acts file: key k annotates system turn k, i.e. log entry 2k-1.
          const std::string key = std::to_string((i + 1) / 2);
          if (dial_acts->contains(key)) apply_acts(dial_acts->at(key), u);
        }
        finish_turn(d, std::move(u));
      }
      if (!d.turns.empty()) dialogues.push_back(std::move(d));
    }
  } else if (data.is_array()) {
    // 2.2: [{"dialogue_id": ..., "turns": [{"speaker", "turn_id", "utterance"}]}]
    for (const auto& body : data) {
      if (!body.is_object() || !body.contains("dialogue_id") || !body.contains("turns"))
        throw ParseError("expected dialogue objects with 'dialogue_id' and 'turns'");
      Dialogue d;
      d.id = strip_json_suffix(body.at("dialogue_id").get<std::string>());
      const ojson* dial_acts = find_dialogue_acts(acts, d.id);
      for (const auto& t : body.at("turns")) {
        Utterance u;
        if (!t.contains("utterance") || !t.at("utterance").is_string())
          throw ParseError("dialogue '" + d.id + "': turn without 'utterance'");
        u.text = t.at("utterance").get<std::string>();
        if (t.contains("speaker") && t.at("speaker").is_string()) {
          const std::string sp = text::ascii_lower(t.at("speaker").get<std::string>());
          u.speaker = sp == "user" ? Speaker::user : sp == "system" ? Speaker::system : Speaker::unknown;
        }
        if (t.contains("dialog_act")) {
          apply_acts(t.at("dialog_act"), u);
        } else if (dial_acts && t.contains("turn_id")) {
          const std::string key =
              t.at("turn_id").is_string() ? t.at("turn_id").get<std::string>() : t.at("turn_id").dump();
          if (dial_acts->contains(key)) {
            const auto& entry = dial_acts->at(key);
            apply_acts(entry.contains("dialog_act") ? entry.at("dialog_act") : entry, u);
          }
        }
        finish_turn(d, std::move(u));
      }
      if (!d.turns.empty()) dialogues.push_back(std::move(d));
    }
  } else {
    throw ParseError(data_path.string() + ": unrecognised MultiWOZ layout");
  }
  rep.dialogues = dialogues.size();
  if (report) *report = rep;
  return Corpus(std::move(dialogues));
}

}  // namespace intentflow
