// Writes the bundled mini corpus: ~220 templated MultiWOZ-style utterances,
// two entity databases, synthetic embeddings with one centroid per
// (domains, intents) combination, and a pipeline config.
//
//   make_mini_corpus [output_dir]

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "intentflow/corpus.hpp"
#include "intentflow/embed.hpp"
#include "intentflow/random.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace intentflow;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::size_t kDim = 32;
constexpr double kNoise = 0.12;

const std::vector<std::string> kHotels = {"acorn guest house", "alexander bed and breakfast", "ashley hotel",
                                          "city centre north b and b", "the lensfield hotel", "hamilton lodge"};
const std::vector<std::string> kRestaurants = {"the golden curry", "pizza hut city centre", "curry garden",
                                               "the nirala", "saint johns chop house", "la margherita"};
const std::vector<std::string> kAreas = {"north", "south", "east", "west", "centre"};
const std::vector<std::string> kPrices = {"cheap", "moderate", "expensive"};
const std::vector<std::string> kCounts = {"two", "three", "four", "five", "2", "3", "4"};
const std::vector<std::string> kDays = {"monday", "tuesday", "friday", "saturday", "sunday"};
const std::vector<std::string> kStations = {"cambridge", "london kings cross", "ely", "norwich", "stansted airport"};

struct Maker {
  Rng rng{20240521};

  const std::string& pick(const std::vector<std::string>& v) { return v[uniform_below(rng, v.size())]; }
  template <class... S>
  std::string variant(S... s) {
    const std::vector<std::string> v{s...};
    return pick(v);
  }
};

Utterance turn(Speaker speaker, std::string text, LabelSet domains, LabelSet intents) {
  Utterance u;
  u.speaker = speaker;
  u.text = std::move(text);
  u.domains = std::move(domains);
  u.intents = std::move(intents);
  return u;
}

void lodging(Maker& m, std::vector<Utterance>& t, const std::string& domain) {
  const bool hotel = domain == "hotel";
  const std::string noun = hotel ? m.variant("hotel", "guest house", "place to stay") : m.variant("restaurant", "place to eat");
  const std::string name = m.pick(hotel ? kHotels : kRestaurants);
  const std::string area = m.pick(kAreas);
  t.push_back(turn(Speaker::user,
                   m.variant("i am looking for a " + noun + " in the " + area + ".",
                             "can you help me find a " + noun + " in the " + area + " of town?",
                             "i need a " + noun + " on the " + area + " side."),
                   {domain}, {"inform"}));
  t.push_back(turn(Speaker::system,
                   m.variant("what price range would you like?", "do you have a price range in mind?",
                             "sure, what price range are you looking for?"),
                   {domain}, {"request"}));
  t.push_back(turn(Speaker::user,
                   m.variant("something " + m.pick(kPrices) + " please.", "i would prefer " + m.pick(kPrices) + ".",
                             m.pick(kPrices) + " would be great, for " + m.pick(kCounts) + " people."),
                   {domain}, {"inform"}));
  t.push_back(turn(Speaker::system,
                   m.variant("how about " + name + "? it is in the " + area + ".",
                             "i would recommend " + name + ".", name + " is a nice option in the " + area + "."),
                   {domain}, {"recommend"}));
  t.push_back(turn(Speaker::user,
                   hotel ? m.variant("yes, please book it for " + m.pick(kCounts) + " nights starting " + m.pick(kDays) + ".",
                                     "please book it for " + m.pick(kCounts) + " people.")
                         : m.variant("book a table for " + m.pick(kCounts) + " on " + m.pick(kDays) + ".",
                                     "great, please reserve it for " + m.pick(kCounts) + " people."),
                   {"booking"}, {"inform"}));
  t.push_back(turn(Speaker::system,
                   m.variant("booking was successful. your reference number is " + std::to_string(10000 + uniform_below(m.rng, 90000)) + ".",
                             "you are all set, the reference is " + std::to_string(10000 + uniform_below(m.rng, 90000)) + "."),
                   {"booking"}, {"book"}));
}

void travel(Maker& m, std::vector<Utterance>& t) {
  const std::string from = m.pick(kStations);
  std::string to = m.pick(kStations);
  while (to == from) to = m.pick(kStations);
  t.push_back(turn(Speaker::user,
                   m.variant("i need a train from " + from + " to " + to + ".",
                             "are there any trains leaving " + from + " for " + to + "?"),
                   {"train"}, {"inform"}));
  t.push_back(turn(Speaker::system, m.variant("what day will you travel?", "which day would you like to leave?"),
                   {"train"}, {"request"}));
  t.push_back(turn(Speaker::user,
                   m.variant("on " + m.pick(kDays) + ", after " + m.pick(kCounts) + " pm.",
                             "i will leave on " + m.pick(kDays) + "."),
                   {"train"}, {"inform"}));
  t.push_back(turn(Speaker::system,
                   m.variant("there is a train leaving at " + std::to_string(5 + uniform_below(m.rng, 12)) + ":15.",
                             "the earliest train departs at " + std::to_string(5 + uniform_below(m.rng, 12)) + ":00."),
                   {"train"}, {"offer"}));
}

void closing(Maker& m, std::vector<Utterance>& t) {
  t.push_back(turn(Speaker::user, m.variant("thank you, that is all i need.", "thanks a lot, goodbye.", "that is all, thanks."),
                   {"general"}, {"thank"}));
  t.push_back(turn(Speaker::system,
                   m.variant("you are welcome, have a nice day.", "goodbye and enjoy your stay.", "glad i could help, bye."),
                   {"general"}, {"bye"}));
}

std::string combo_key(const Utterance& u) {
  std::string k;
  for (const auto& d : u.domains) k += d + ",";
  k += "|";
  for (const auto& i : u.intents) k += i + ",";
  return k;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("data/mini");
  fs::create_directories(dir);
  Maker m;

  std::vector<Dialogue> dialogues;
  const char* plans[] = {"hotel", "restaurant", "train", "hotel+train", "restaurant+hotel"};
  for (int d = 0; d < 22; ++d) {
    Dialogue dlg;
    char id[32];
    std::snprintf(id, sizeof id, "MINI%03d", d);
    dlg.id = id;
    const std::string plan = plans[d % 5];
    std::vector<Utterance> t;
    if (plan == "hotel" || plan == "hotel+train") lodging(m, t, "hotel");
    if (plan == "restaurant" || plan == "restaurant+hotel") lodging(m, t, "restaurant");
    if (plan == "restaurant+hotel") lodging(m, t, "hotel");
    if (plan == "train" || plan == "hotel+train") travel(m, t);
    closing(m, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i].dialogue_id = dlg.id;
      t[i].turn_index = i;
    }
    dlg.turns = std::move(t);
    dialogues.push_back(std::move(dlg));
  }
  const Corpus corpus(std::move(dialogues));
  write_corpus(corpus, dir / "corpus.json");

  // Entity databases in the MultiWOZ db layout.
  for (const auto& [file, names] : {std::pair{"hotel_db.json", kHotels}, std::pair{"restaurant_db.json", kRestaurants}}) {
    ojson db = ojson::array();
    for (std::size_t i = 0; i < names.size(); ++i)
      db.push_back({{"name", names[i]}, {"area", kAreas[i % kAreas.size()]}, {"pricerange", kPrices[i % kPrices.size()]}});
    write_text(dir / file, db.dump(2) + "\n");
  }

  // One random centroid per annotation combination plus isotropic noise.
  Rng rng(7);
  std::map<std::string, std::vector<double>> centroids;
  std::vector<float> values;
  std::vector<std::string> keys;
  for (const auto& [key, u] : corpus.utterances()) {
    auto& c = centroids[combo_key(*u)];
    if (c.empty()) {
      c.resize(kDim);
      double norm = 0.0;
      for (double& v : c) {
        v = standard_normal(rng);
        norm += v * v;
      }
      for (double& v : c) v /= std::sqrt(norm);
    }
    for (std::size_t j = 0; j < kDim; ++j) values.push_back(static_cast<float>(c[j] + kNoise * standard_normal(rng) / std::sqrt(double(kDim))));
    keys.push_back(key.str());
  }
  const std::size_t n = keys.size();
  write_embedding_file(EmbeddingMatrix(n, kDim, std::move(values), std::move(keys)), dir / "embeddings.bin",
                       dir / "embeddings.keys");

  ojson config;
  config["corpus"] = "corpus.json";
  config["embeddings"] = "embeddings.bin";
  config["keys"] = "embeddings.keys";
  config["output_dir"] = "report";
  config["mask"] = {{"enabled", true}, {"db_files", {"hotel_db.json", "restaurant_db.json"}}};
  config["reduce"] = {{"enabled", true}, {"target_dim", 5}, {"n_neighbors", 15}, {"min_dist", 0.1},
                      {"n_epochs", 200}, {"seed", 42}, {"metric", "cosine"}};
  config["plot"] = {{"n_neighbors", 15}, {"seed", 42}, {"label", "cluster"}};
  config["cluster"] = {{"min_cluster_size", 8}, {"min_samples", 5}};
  config["grid"] = {{"min_samples", {3, 5, 8}}, {"min_cluster_size", {5, 8, 12}}};
  config["eval"] = {{"levels", {"domain", "intent"}}, {"modes", {"hard", "soft"}}, {"noise_policy", "exclude"},
                    {"bcubed", "extended"}};
  config["summary"] = {{"words", 5}, {"level", "domain"}};
  config["flows"] = {{"source", "soft"}, {"min_support", 2}, {"topk", 10}, {"min_len", 2}, {"max_len", 2},
                     {"count", "sequences"}};
  config["study"] = {{"enabled", true}, {"n_pairs", 200}, {"seed", 7}, {"match", "identical"}};
  config["histogram_min_count"] = 1;
  write_text(dir / "config.json", config.dump(2) + "\n");

  std::cout << "wrote " << corpus.size() << " dialogues, " << corpus.utterance_count() << " utterances to "
            << dir.string() << "\n";
  return 0;
}
