#include "intentflow/mask.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "intentflow/csv.hpp"
#include "intentflow/error.hpp"
#include "intentflow/log.hpp"
#include "intentflow/random.hpp"
#include "intentflow/text.hpp"
#include "json.hpp"

namespace intentflow {

using ojson = nlohmann::ordered_json;

namespace {

bool valid_tag(std::string_view tag) {
  if (tag.size() < 3 || tag.front() != '[' || tag.back() != ']') return false;
  for (char c : tag.substr(1, tag.size() - 2))
    if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_')) return false;
  return true;
}

}  // namespace

void Gazetteer::add(std::string_view surface, std::string_view tag) {
  if (!valid_tag(tag)) throw ValidationError("invalid tag '" + std::string(tag) + "' (expected [TAG_NAME])");
  std::string form = text::ascii_lower(text::trim(surface));
  if (form.empty()) throw ValidationError("empty surface form for tag " + std::string(tag));
  if (form.find_first_of("[]") != std::string::npos)
    throw ValidationError("surface form '" + form + "' contains a square bracket");
  const auto [it, inserted] = entries_.emplace(form, std::string(tag));
  if (!inserted) return;  // first registration wins
  longest_ = std::max(longest_, form.size());
  ++tags_[std::string(tag)];
}

const std::string* Gazetteer::lookup(std::string_view lowered) const {
  const auto it = entries_.find(std::string(lowered));
  return it == entries_.end() ? nullptr : &it->second;
}

std::map<std::string, std::vector<std::string>> Gazetteer::by_tag() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [form, tag] : entries_) out[tag].push_back(form);
  for (auto& [tag, forms] : out) std::sort(forms.begin(), forms.end());
  return out;
}

bool Gazetteer::is_tag(std::string_view s) const {
  if (tags_.find(s) != tags_.end()) return true;
  return mask_digits_ && s == kCardinalTag;
}

namespace {

const std::vector<std::string>& numeral_words() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w = {"one",      "two",     "three",    "four",     "five",
                                  "six",      "seven",   "eight",    "nine",     "ten",
                                  "eleven",   "twelve",  "thirteen", "fourteen", "fifteen",
                                  "sixteen",  "seventeen", "eighteen", "nineteen", "hundred"};
    const char* tens[] = {"twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};
    for (const char* t : tens) {
      w.emplace_back(t);
      for (int u = 0; u < 9; ++u) w.push_back(std::string(t) + "-" + w[static_cast<std::size_t>(u)]);
    }
    return w;
  }();
  return words;
}

const std::vector<std::string>& place_words() {
  static const std::vector<std::string> words = {
      "cambridge",        "london",           "london kings cross", "london liverpool street",
      "kings cross",      "liverpool street", "stansted airport",   "stansted",
      "birmingham",       "birmingham new street", "norwich",       "ely",
      "stevenage",        "peterborough",     "broxbourne",         "bishops stortford",
      "leicester",        "kings lynn",       "england",            "uk"};
  return words;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read entity database " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

Gazetteer build_gazetteer(const std::vector<DbSource>& db_files,
                          const std::vector<std::pair<std::string, std::vector<std::string>>>& extra_lexicons,
                          const GazetteerOptions& options) {
  Gazetteer g;
  std::size_t skipped = 0;
  auto add = [&](std::string_view surface, std::string_view tag) {
    try {
      g.add(surface, tag);
    } catch (const ValidationError&) {
      if (!valid_tag(tag)) throw;
      ++skipped;
    }
  };

  for (const auto& src : db_files) {
    ojson doc;
    try {
      doc = ojson::parse(read_file(src.path));
    } catch (const ojson::parse_error& e) {
      throw ParseError("entity database " + src.path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw ParseError("entity database " + src.path.string() + " is not a JSON array");
    std::map<std::string, std::string> fields = src.fields;
    if (fields.empty()) {
      std::string domain = src.path.stem().string();
      if (domain.ends_with("_db")) domain.resize(domain.size() - 3);
      fields["name"] = "[" + text::ascii_upper(domain) + "_NAME]";
    }
    for (const auto& obj : doc) {
      if (!obj.is_object()) continue;
      for (const auto& [field, tag] : fields) {
        if (obj.contains(field) && obj.at(field).is_string()) add(obj.at(field).get<std::string>(), tag);
      }
    }
  }
  for (const auto& [tag, words] : extra_lexicons)
    for (const auto& w : words) add(w, tag);
  if (options.numerals)
    for (const auto& w : numeral_words()) add(w, kCardinalTag);
  if (options.places)
    for (const auto& w : place_words()) add(w, kPlaceTag);
  g.set_mask_digits(options.digits);

  if (skipped) log::warn("gazetteer: skipped " + std::to_string(skipped) + " unusable surface forms");
  if (g.size() == 0) log::warn("gazetteer is empty; masking will only affect digit tokens (if enabled)");
  return g;
}

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  ojson doc;
  try {
    doc = ojson::parse(read_file(path));
  } catch (const ojson::parse_error& e) {
    throw ParseError("gazetteer " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("gazetteer " + path.string() + " must map tag to surface forms");
  Gazetteer g;
  for (const auto& [tag, forms] : doc.items()) {
    if (!forms.is_array()) throw ParseError("gazetteer " + path.string() + ": '" + tag + "' is not an array");
    for (const auto& f : forms) {
      if (!f.is_string()) throw ParseError("gazetteer " + path.string() + ": non-string surface form");
      g.add(f.get<std::string>(), tag);
    }
  }
  return g;
}

void write_gazetteer(const Gazetteer& g, const std::filesystem::path& path) {
  ojson doc = ojson::object();
  for (const auto& [tag, forms] : g.by_tag()) doc[tag] = forms;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::string mask_text(std::string_view input, const Gazetteer& g) {
  const std::string lower = text::ascii_lower(input);
  const std::vector<bool> boundary = text::token_boundaries(input);
  std::vector<std::size_t> boundary_pos;
  for (std::size_t p = 0; p < boundary.size(); ++p)
    if (boundary[p]) boundary_pos.push_back(p);

  constexpr std::size_t kMaxTagLength = 64;
  std::string out;
  out.reserve(input.size());
  std::size_t i = 0;
  while (i < input.size()) {
    if (input[i] == '[') {
      const auto close = input.find(']', i);
      if (close != std::string_view::npos && close - i < kMaxTagLength && g.is_tag(input.substr(i, close - i + 1))) {
        out.append(input.substr(i, close - i + 1));
        i = close + 1;
        continue;
      }
    }
    if (boundary[i]) {
      const std::string* tag = nullptr;
      std::size_t match_end = 0;
      // Candidate ends are boundary offsets, tried longest first.
      auto first_after = std::upper_bound(boundary_pos.begin(), boundary_pos.end(), i);
      auto last = std::upper_bound(boundary_pos.begin(), boundary_pos.end(), i + g.longest());
      for (auto it = last; it != first_after;) {
        --it;
        if (const std::string* t = g.lookup(std::string_view(lower).substr(i, *it - i))) {
          tag = t;
          match_end = *it;
          break;
        }
      }
      if (g.mask_digits() && first_after != boundary_pos.end()) {
        const std::size_t token_end = *first_after;
        const auto token = input.substr(i, token_end - i);
        const bool digits = std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; });
        if (digits && token_end > match_end) {
          static const std::string cardinal(kCardinalTag);
          tag = &cardinal;
          match_end = token_end;
        }
      }
      if (tag) {
        out += *tag;
        i = match_end;
        continue;
      }
    }
    std::size_t len = 0;
    text::decode_utf8(input, i, len);
    out.append(input.substr(i, len));
    i += len;
  }
  return out;
}

Corpus mask_corpus(const Corpus& corpus, const Gazetteer& g) {
  std::vector<Dialogue> dialogues = corpus.dialogues();
  for (auto& d : dialogues)
    for (auto& u : d.turns) u.text = mask_text(u.text, g);
  return Corpus(std::move(dialogues));
}

std::string_view to_string(PairCategory c) noexcept {
  switch (c) {
    case PairCategory::domain: return "domain";
    case PairCategory::domain_intent: return "domain_intent";
    case PairCategory::followed: return "followed";
    case PairCategory::random: break;
  }
  return "random";
}

namespace {

bool intersects(const LabelSet& a, const LabelSet& b) {
  return std::any_of(a.begin(), a.end(), [&](const std::string& x) { return b.contains(x); });
}

using Pair = std::pair<std::size_t, std::size_t>;

// Pairs drawn from a weighted set of (group, group) blocks. A block with
// g == h yields unordered pairs of distinct members; otherwise one member
// from each side.
struct Block {
  std::size_t g = 0;
  std::size_t h = 0;
  std::uint64_t weight = 0;
};

std::vector<Pair> sample_blocks(const std::vector<std::vector<std::size_t>>& groups,
                                const std::vector<Block>& blocks, std::size_t n_pairs, Rng& rng,
                                std::size_t& eligible) {
  std::uint64_t total = 0;
  for (const auto& b : blocks) total += b.weight;
  eligible = static_cast<std::size_t>(total);
  std::vector<Pair> pairs;
  if (total == 0 || n_pairs == 0) return pairs;
  if (total <= n_pairs) {
    for (const auto& b : blocks) {
      const auto& G = groups[b.g];
      const auto& H = groups[b.h];
      if (b.g == b.h) {
        for (std::size_t x = 0; x < G.size(); ++x)
          for (std::size_t y = x + 1; y < G.size(); ++y) pairs.emplace_back(G[x], G[y]);
      } else {
        for (std::size_t x : G)
          for (std::size_t y : H) pairs.emplace_back(x, y);
      }
    }
    return pairs;
  }
  std::vector<std::uint64_t> cumulative(blocks.size());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) cumulative[i] = (acc += blocks[i].weight);
  pairs.reserve(n_pairs);
  for (std::size_t s = 0; s < n_pairs; ++s) {
    const std::uint64_t r = uniform_below(rng, total);
    const auto bi = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    const auto& b = blocks[bi];
    const auto& G = groups[b.g];
    if (b.g == b.h) {
      const auto a = uniform_below(rng, G.size());
      auto c = uniform_below(rng, G.size() - 1);
      if (c >= a) ++c;
      pairs.emplace_back(G[a], G[c]);
    } else {
      const auto& H = groups[b.h];
      pairs.emplace_back(G[uniform_below(rng, G.size())], H[uniform_below(rng, H.size())]);
    }
  }
  return pairs;
}

template <typename Key, typename KeyFn, typename Compatible>
std::vector<Pair> sample_grouped(std::size_t n_items, KeyFn key_of, Compatible compatible, bool cross_groups,
                                 std::size_t n_pairs, Rng& rng, std::size_t& eligible) {
  std::map<Key, std::size_t> group_index;
  std::vector<Key> group_keys;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n_items; ++i) {
    auto key = key_of(i);
    if (!key) continue;
    auto [it, inserted] = group_index.emplace(*key, groups.size());
    if (inserted) {
      group_keys.push_back(*key);
      groups.emplace_back();
    }
    groups[it->second].push_back(i);
  }
  std::vector<Block> blocks;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::uint64_t m = groups[g].size();
    if (m >= 2) blocks.push_back({g, g, m * (m - 1) / 2});
    if (!cross_groups) continue;
    for (std::size_t h = g + 1; h < groups.size(); ++h)
      if (compatible(group_keys[g], group_keys[h]))
        blocks.push_back({g, h, m * static_cast<std::uint64_t>(groups[h].size())});
  }
  return sample_blocks(groups, blocks, n_pairs, rng, eligible);
}

CategorySample summarize(std::vector<double> sims, std::size_t eligible) {
  CategorySample c;
  c.eligible_pairs = eligible;
  c.similarities = std::move(sims);
  if (!c.similarities.empty()) {
    const double n = static_cast<double>(c.similarities.size());
    c.mean = std::accumulate(c.similarities.begin(), c.similarities.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : c.similarities) ss += (s - c.mean) * (s - c.mean);
    c.stddev = std::sqrt(ss / n);
  }
  return c;
}

}  // namespace

SimilarityStudyReport pair_similarity_study(const Corpus& corpus, const EmbeddingMatrix& emb, std::size_t n_pairs,
                                            std::uint64_t seed, LabelMatch match) {
  const auto utts = corpus.utterances();
  SimilarityStudyReport report;
  report.requested_pairs = n_pairs;
  report.seed = seed;
  report.match = match;
  const bool cross = match == LabelMatch::intersecting;

  std::vector<std::optional<std::size_t>> rows(utts.size());
  auto row_of = [&](std::size_t i) {
    if (!rows[i]) {
      const std::string key = utts[i].first.str();
      rows[i] = emb.find(key);
      if (!rows[i]) throw ValidationError("no embedding row for utterance '" + key + "'");
    }
    return *rows[i];
  };
  auto similarities = [&](const std::vector<Pair>& pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) out.push_back(cosine_similarity(emb.row(row_of(a)), emb.row(row_of(b))));
    return out;
  };

  // One generator per category, derived from the seed, so that adding or
  // skipping a category never shifts the samples of another.
  auto rng_for = [&](PairCategory c) { return Rng(seed * 4 + static_cast<std::uint64_t>(c)); };

  {
    Rng rng = rng_for(PairCategory::domain);
    std::size_t eligible = 0;
    auto pairs = sample_grouped<LabelSet>(
        utts.size(),
        [&](std::size_t i) -> std::optional<LabelSet> {
          const auto& d = utts[i].second->domains;
          if (d.empty()) return std::nullopt;
          return d;
        },
        [](const LabelSet& a, const LabelSet& b) { return intersects(a, b); }, cross, n_pairs, rng, eligible);
    report.categories[PairCategory::domain] = summarize(similarities(pairs), eligible);
  }
  {
    Rng rng = rng_for(PairCategory::domain_intent);
    std::size_t eligible = 0;
    using Key = std::pair<LabelSet, LabelSet>;
    auto pairs = sample_grouped<Key>(
        utts.size(),
        [&](std::size_t i) -> std::optional<Key> {
          const auto* u = utts[i].second;
          if (u->domains.empty() || u->intents.empty()) return std::nullopt;
          return Key{u->domains, u->intents};
        },
        [](const Key& a, const Key& b) { return intersects(a.first, b.first) && intersects(a.second, b.second); },
        cross, n_pairs, rng, eligible);
    report.categories[PairCategory::domain_intent] = summarize(similarities(pairs), eligible);
  }
  {
    Rng rng = rng_for(PairCategory::followed);
    std::vector<Pair> adjacent;
    for (std::size_t i = 0; i + 1 < utts.size(); ++i)
      if (utts[i].first.dialogue_id == utts[i + 1].first.dialogue_id) adjacent.emplace_back(i, i + 1);
    std::vector<Pair> pairs;
    if (adjacent.size() <= n_pairs) {
      pairs = adjacent;
    } else {
      for (std::size_t s = 0; s < n_pairs; ++s) pairs.push_back(adjacent[uniform_below(rng, adjacent.size())]);
    }
    report.categories[PairCategory::followed] = summarize(similarities(pairs), adjacent.size());
  }
  {
    Rng rng = rng_for(PairCategory::random);
    std::size_t eligible = 0;
    auto pairs = sample_grouped<int>(
        utts.size(), [](std::size_t) -> std::optional<int> { return 0; },
        [](int, int) { return true; }, false, n_pairs, rng, eligible);
    report.categories[PairCategory::random] = summarize(similarities(pairs), eligible);
  }
  return report;
}

void write_study_csv(const SimilarityStudyReport& r, const std::filesystem::path& path) {
  csv::Writer w(path);
  w.row({"category", "similarity"});
  for (const auto& [cat, sample] : r.categories)
    for (double s : sample.similarities) w.row({std::string(to_string(cat)), csv::format_double(s)});
  w.close();
}

void write_study_summary(const SimilarityStudyReport& r, const std::filesystem::path& path) {
  ojson doc;
  doc["requested_pairs"] = r.requested_pairs;
  doc["seed"] = r.seed;
  doc["match"] = r.match == LabelMatch::identical ? "identical" : "intersecting";
  ojson cats = ojson::object();
  for (const auto& [cat, sample] : r.categories) {
    cats[std::string(to_string(cat))] = ojson{{"eligible_pairs", sample.eligible_pairs},
                                            {"count", sample.similarities.size()},
                                            {"mean", sample.mean},
                                            {"std", sample.stddev}};
  }
  doc["categories"] = std::move(cats);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace intentflow
