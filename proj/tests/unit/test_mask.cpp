#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "intentflow/corpus.hpp"
#include "intentflow/error.hpp"
#include "intentflow/log.hpp"
#include "intentflow/mask.hpp"
#include "intentflow/random.hpp"

using namespace intentflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& contents) {
  // The file stem matters: entity tags are derived from it.
  const fs::path dir = fs::temp_directory_path() / "intentflow_mask";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << contents;
  return p;
}

Gazetteer hotel_gazetteer() {
  Gazetteer g;
  g.add("acorn guest house", "[HOTEL_NAME]");
  return g;
}

GazetteerOptions none() { return {false, false, false}; }

}  // namespace

TEST(Gazetteer, HarvestsNamesFromEntityDatabase) {
  const auto db = temp_file("hotel_db.json", R"([{"name": "Acorn Guest House", "area": "north"}, {"area": "x"}])");
  const Gazetteer g = build_gazetteer({DbSource{db, {}}}, {}, none());
  ASSERT_NE(g.lookup("acorn guest house"), nullptr);
  EXPECT_EQ(*g.lookup("acorn guest house"), "[HOTEL_NAME]");
  EXPECT_EQ(g.size(), 1u);
}

TEST(Gazetteer, ConfiguredFieldsAndExtraLexicons) {
  const auto db = temp_file("places.json", R"([{"name": "a", "area": "North"}])");
  const Gazetteer g = build_gazetteer({DbSource{db, {{"area", "[AREA]"}}}}, {{"[CARDINAL]", {"one", "two"}}}, none());
  EXPECT_EQ(*g.lookup("north"), "[AREA]");
  EXPECT_EQ(*g.lookup("two"), "[CARDINAL]");
  EXPECT_EQ(g.lookup("a"), nullptr);
}

TEST(Gazetteer, NumeralsOnlyHoldsOnlyCardinalEntries) {
  const Gazetteer g = build_gazetteer({}, {}, {true, true, false});
  ASSERT_GT(g.size(), 0u);
  for (const auto& [form, tag] : g.entries()) EXPECT_EQ(tag, "[CARDINAL]") << form;
  EXPECT_EQ(*g.lookup("twenty-one"), "[CARDINAL]");
  EXPECT_EQ(*g.lookup("hundred"), "[CARDINAL]");
}

TEST(Gazetteer, Errors) {
  EXPECT_THROW(build_gazetteer({DbSource{"/nonexistent/db.json", {}}}, {}, none()), IoError);
  EXPECT_THROW(build_gazetteer({DbSource{temp_file("bad_db.json", "{"), {}}}, {}, none()), ParseError);
  Gazetteer g;
  EXPECT_THROW(g.add("x", "HOTEL"), ValidationError);
  EXPECT_THROW(g.add("x", "[hotel]"), ValidationError);
  EXPECT_THROW(g.add("  ", "[A]"), ValidationError);
  EXPECT_THROW(g.add("[A]", "[A]"), ValidationError);
  log::set_quiet(true);
  EXPECT_EQ(build_gazetteer({}, {}, none()).size(), 0u);  // warning only
  log::set_quiet(false);
}

TEST(Gazetteer, FileRoundTrip) {
  Gazetteer g = hotel_gazetteer();
  g.add("two", "[CARDINAL]");
  const auto p = temp_file("gaz.json", "");
  write_gazetteer(g, p);
  const Gazetteer back = load_gazetteer(p);
  EXPECT_EQ(back.entries(), g.entries());
}

TEST(Mask, ReplacesSingleEntityCaseInsensitively) {
  EXPECT_EQ(mask_text("I want the Acorn Guest House", hotel_gazetteer()), "I want the [HOTEL_NAME]");
}

TEST(Mask, ReplacesRepeatedMatches) {
  Gazetteer g;
  g.add("two", "[CARDINAL]");
  EXPECT_EQ(mask_text("two of two", g), "[CARDINAL] of [CARDINAL]");
}

TEST(Mask, OnlyWholeTokensMatch) {
  Gazetteer g;
  g.add("ely", "[GPE]");
  EXPECT_EQ(mask_text("Ely, not belying nor ely_x", g), "[GPE], not belying nor ely_x");
}

TEST(Mask, LongestMatchWinsThenLeftmost) {
  Gazetteer g;
  g.add("london", "[GPE]");
  g.add("london kings cross", "[STATION]");
  g.add("kings cross", "[AREA]");
  EXPECT_EQ(mask_text("from London Kings Cross to london", g), "from [STATION] to [GPE]");
  Gazetteer h;
  h.add("a b", "[X]");
  h.add("b c", "[Y]");
  EXPECT_EQ(mask_text("a b c", h), "[X] c");
}

TEST(Mask, DigitTokensBecomeCardinal) {
  Gazetteer g;
  g.set_mask_digits(true);
  EXPECT_EQ(mask_text("for 3 people at 12:30, ref 4b", g), "for [CARDINAL] people at [CARDINAL]:[CARDINAL], ref 4b");
}

TEST(Mask, TextWithoutSurfaceFormsIsUnchanged) {
  EXPECT_EQ(mask_text("caf\xc3\xa9 near the river!", hotel_gazetteer()), "caf\xc3\xa9 near the river!");
}

TEST(Mask, ExistingTagsAreAtomic) {
  Gazetteer g = hotel_gazetteer();
  g.add("hotel", "[TYPE]");
  g.add("name", "[FIELD]");
  const std::string once = mask_text("the acorn guest house hotel", g);
  EXPECT_EQ(once, "the [HOTEL_NAME] [TYPE]");
  EXPECT_EQ(mask_text(once, g), once);
}

TEST(Mask, IdempotentOnRandomUtterances) {
  Gazetteer g = build_gazetteer({DbSource{fixture::data_dir() + "/mini/hotel_db.json", {}},
                                 DbSource{fixture::data_dir() + "/mini/restaurant_db.json", {}}},
                                {{"[AREA]", {"north", "south", "centre"}}, {"[NAME]", {"name", "hotel name"}}});
  const Corpus c = load_corpus(fixture::data_dir() + "/mini/corpus.json");
  const auto utts = c.utterances();
  Rng rng(99);
  for (int t = 0; t < 300; ++t) {
    const auto& u = *utts[uniform_below(rng, utts.size())].second;
    const std::string once = mask_text(u.text, g);
    EXPECT_EQ(mask_text(once, g), once) << u.text;
  }
}

TEST(Mask, CorpusMaskingKeepsStructure) {
  const Corpus c = load_corpus(fixture::data_dir() + "/mini/corpus.json");
  const Corpus m = mask_corpus(c, hotel_gazetteer());
  ASSERT_EQ(m.size(), c.size());
  EXPECT_EQ(m.utterance_count(), c.utterance_count());
}

namespace {

Corpus study_corpus() {
  std::vector<Dialogue> ds;
  const char* doms[] = {"hotel", "train", "taxi"};
  const char* ints[] = {"inform", "request"};
  for (int d = 0; d < 6; ++d) {
    Dialogue dlg{"D" + std::to_string(d), {}};
    for (int t = 0; t < 6; ++t) {
      Utterance u;
      u.dialogue_id = dlg.id;
      u.turn_index = static_cast<std::size_t>(t);
      u.text = "x";
      u.domains = {doms[(d + t) % 3]};
      u.intents = {ints[t % 2]};
      dlg.turns.push_back(u);
    }
    ds.push_back(dlg);
  }
  return Corpus(ds);
}

// Same (domain, intent) share one vector; different combinations are random.
EmbeddingMatrix structured_embeddings(const Corpus& c, bool per_domain_only) {
  Rng rng(5);
  std::map<std::string, std::vector<float>> proto;
  std::vector<float> values;
  std::vector<std::string> keys;
  for (const auto& [k, u] : c.utterances()) {
    const std::string combo = *u->domains.begin() + (per_domain_only ? "" : "|" + *u->intents.begin());
    auto& p = proto[combo];
    if (p.empty())
      for (int i = 0; i < 8; ++i) p.push_back(static_cast<float>(standard_normal(rng)));
    values.insert(values.end(), p.begin(), p.end());
    keys.push_back(k.str());
  }
  return EmbeddingMatrix(keys.size(), 8, values, keys);
}

}  // namespace

TEST(Study, FollowedPairsExhaustInTwoTurnDialogue) {
  Utterance a, b;
  a.dialogue_id = b.dialogue_id = "D";
  a.text = "hi";
  b.text = "there";
  b.turn_index = 1;
  const Corpus c({Dialogue{"D", {a, b}}});
  const EmbeddingMatrix emb(2, 2, {1, 0, 0, 1}, {"D:0", "D:1"});
  const auto r = pair_similarity_study(c, emb, 1000, 1);
  EXPECT_EQ(r.categories.at(PairCategory::followed).eligible_pairs, 1u);
  EXPECT_EQ(r.categories.at(PairCategory::followed).similarities.size(), 1u);
  EXPECT_TRUE(r.categories.at(PairCategory::domain).similarities.empty());
  EXPECT_EQ(r.categories.at(PairCategory::random).similarities.size(), 1u);
}

TEST(Study, DuplicatedCombinationVectorsGiveUnitSimilarity) {
  const Corpus c = study_corpus();
  const auto r = pair_similarity_study(c, structured_embeddings(c, false), 200, 3);
  const auto& di = r.categories.at(PairCategory::domain_intent);
  const auto& rnd = r.categories.at(PairCategory::random);
  ASSERT_GT(di.eligible_pairs, 0u);
  EXPECT_EQ(di.similarities.size(), std::min<std::size_t>(200, di.eligible_pairs));
  EXPECT_NEAR(di.mean, 1.0, 1e-6);
  EXPECT_GT(di.mean, rnd.mean);
  EXPECT_GE(r.categories.at(PairCategory::domain).mean, rnd.mean);
  for (const auto& [cat, s] : r.categories)
    for (double v : s.similarities) EXPECT_LE(std::abs(v), 1.0 + 1e-6);
}

TEST(Study, OrderingOnStructuredFixture) {
  const Corpus c = study_corpus();
  const auto r = pair_similarity_study(c, structured_embeddings(c, false), 300, 8);
  EXPECT_GE(r.categories.at(PairCategory::domain_intent).mean, r.categories.at(PairCategory::domain).mean);
  EXPECT_GE(r.categories.at(PairCategory::domain).mean, r.categories.at(PairCategory::random).mean);
}

TEST(Study, DeterministicForSeedAndSensitiveToIt) {
  const Corpus c = study_corpus();
  const auto emb = structured_embeddings(c, true);
  const auto a = pair_similarity_study(c, emb, 50, 17);
  const auto b = pair_similarity_study(c, emb, 50, 17);
  const auto d = pair_similarity_study(c, emb, 50, 18);
  for (auto cat : kPairCategories) EXPECT_EQ(a.categories.at(cat).similarities, b.categories.at(cat).similarities);
  EXPECT_NE(a.categories.at(PairCategory::random).similarities, d.categories.at(PairCategory::random).similarities);
}

TEST(Study, IntersectingMatchAdmitsMorePairs) {
  const Corpus c = study_corpus();
  const auto emb = structured_embeddings(c, true);
  const auto id = pair_similarity_study(c, emb, 10, 1, LabelMatch::identical);
  const auto in = pair_similarity_study(c, emb, 10, 1, LabelMatch::intersecting);
  EXPECT_GE(in.categories.at(PairCategory::domain).eligible_pairs, id.categories.at(PairCategory::domain).eligible_pairs);
}

TEST(Study, MissingEmbeddingRowIsError) {
  const Corpus c = study_corpus();
  const EmbeddingMatrix emb(1, 1, {1}, {"D0:0"});
  EXPECT_THROW(pair_similarity_study(c, emb, 10, 1), ValidationError);
}
