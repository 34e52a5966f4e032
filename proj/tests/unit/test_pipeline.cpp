#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "intentflow/csv.hpp"
#include "intentflow/log.hpp"
#include "intentflow/pipeline.hpp"

using namespace intentflow;
using namespace intentflow::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("intentflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// 30 four-turn dialogues; each turn belongs to one of three intents and its
// embedding is drawn from that intent's blob.
void write_inputs(const fs::path& dir, bool annotated) {
  const auto blobs = fixture::gaussian_blobs(3, 40, 8, 12.0, 99);
  std::vector<std::vector<std::size_t>> by_blob(3);
  for (std::size_t i = 0; i < blobs.truth.size(); ++i) by_blob[static_cast<std::size_t>(blobs.truth[i])].push_back(i);
  const char* domains[] = {"hotel", "train", "general"};
  const char* intents[] = {"inform", "request", "thank"};
  const char* texts[] = {"i need a room with wifi", "when does the train leave", "thanks that is all"};

  std::vector<Dialogue> ds;
  std::vector<std::string> keys;
  std::vector<float> values;
  std::vector<std::size_t> cursor(3, 0);
  for (std::size_t d = 0; d < 30; ++d) {
    Dialogue dia{"dlg" + std::to_string(d), {}};
    const std::size_t plan[] = {0, 1, 2, d % 2};
    for (std::size_t t = 0; t < 4; ++t) {
      const std::size_t b = plan[t];
      Utterance u{dia.id, t, t % 2 ? Speaker::system : Speaker::user, texts[b], {}, {}};
      if (annotated) {
        u.domains = {domains[b]};
        u.intents = {intents[b]};
      }
      dia.turns.push_back(u);
      const std::size_t row = by_blob[b][cursor[b]++ % by_blob[b].size()];
      for (std::size_t j = 0; j < 8; ++j) values.push_back(static_cast<float>(blobs.points(row, j)));
      keys.push_back(UtteranceKey{dia.id, t}.str());
    }
    ds.push_back(dia);
  }
  write_corpus(Corpus(ds), dir / "corpus.json");
  write_embedding_file(EmbeddingMatrix(keys.size(), 8, values, keys), dir / "emb.bin", dir / "emb.keys");
}

json base_config() {
  return json{{"corpus", "corpus.json"},
              {"embeddings", "emb.bin"},
              {"keys", "emb.keys"},
              {"output_dir", "out"},
              {"reduce", {{"target_dim", 3}, {"n_epochs", 60}, {"n_neighbors", 10}}},
              {"plot", {{"n_epochs", 40}, {"n_neighbors", 10}}},
              {"grid", {{"min_samples", {3, 5}}, {"min_cluster_size", {8, 15}}}},
              {"study", {{"n_pairs", 50}}},
              {"histogram_min_count", 1}};
}

Config config_in(const fs::path& dir, json j = base_config()) { return parse_config(j, dir); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Quiet : public ::testing::Environment {
 public:
  void SetUp() override { log::set_quiet(true); }
};
const auto* const quiet_env = ::testing::AddGlobalTestEnvironment(new Quiet);

}  // namespace

TEST(Pipeline, ConfigDefaults) {
  const Config c = parse_config(json::object(), "/base");
  EXPECT_EQ(c.reduce.target_dim, 5u);
  EXPECT_EQ(c.reduce.metric, Metric::cosine);
  EXPECT_EQ(c.plot.target_dim, 2u);
  EXPECT_EQ(c.cluster.min_cluster_size, 10u);
  EXPECT_EQ(c.eval.noise_policy, eval::NoisePolicy::exclude);
  EXPECT_EQ(c.flows.count, flows::CountMode::sequences);
  EXPECT_EQ(c.output_dir, fs::path("/base/report"));
}

TEST(Pipeline, ConfigResolvesPathsAndRanges) {
  const Config c = parse_config(json{{"corpus", "a/c.json"},
                                     {"embeddings", "/abs/e.bin"},
                                     {"grid", {{"min_samples", {{"first", 25}, {"last", 300}, {"step", 25}}},
                                               {"min_cluster_size", {{"first", 5}, {"last", 50}, {"step", 5}}}}},
                                     {"flows", {{"count", "occurrences"}, {"topk", 0}}},
                                     {"eval", {{"modes", {"soft"}}, {"bcubed", "classic-first-label"}}}},
                                "/base");
  EXPECT_EQ(c.corpus, fs::path("/base/a/c.json"));
  EXPECT_EQ(c.embeddings, fs::path("/abs/e.bin"));
  EXPECT_EQ(c.grid.min_samples.size(), 12u);
  EXPECT_EQ(c.grid.min_cluster_size.size(), 10u);
  EXPECT_EQ(c.grid.cells(), 120u);
  EXPECT_EQ(c.flows.count, flows::CountMode::occurrences);
  EXPECT_EQ(c.eval.modes, std::vector<eval::Mode>{eval::Mode::soft_argmax});
  EXPECT_EQ(c.eval.variant, eval::BCubedVariant::classic_first_label);
}

TEST(Pipeline, ConfigRejectsBadInput) {
  EXPECT_THROW(parse_config(json{{"corpuz", "x"}}, "/"), ParseError);
  EXPECT_THROW(parse_config(json{{"reduce", {{"epochs", 3}}}}, "/"), ParseError);
  EXPECT_THROW(parse_config(json{{"keep_domains", {"hotel"}}, {"drop_domains", {"train"}}}, "/"), UsageError);
  EXPECT_THROW(parse_config(json{{"plot", {{"target_dim", 3}}}}, "/"), ValidationError);
  EXPECT_THROW(parse_config(json{{"grid", {{"min_samples", {5, 5}}, {"min_cluster_size", {10}}}}}, "/"),
               ValidationError);
  EXPECT_THROW(parse_config(json{{"grid", {{"min_samples", {5}}, {"min_cluster_size", {1}}}}}, "/"), ValidationError);
  EXPECT_THROW(parse_config(json{{"eval", {{"levels", {"topic"}}}}}, "/"), UsageError);
  EXPECT_THROW(parse_config(json{{"reduce", {{"n_neighbors", 1}}}}, "/"), ParameterError);
  EXPECT_THROW(parse_config(json::array(), "/"), ParseError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Pipeline, ConfigJsonRoundTrip) {
  const Config c = config_in("/base");
  const auto j = to_json(c);
  const Config again = parse_config(json::parse(j.dump()), "/elsewhere");
  EXPECT_EQ(to_json(again).dump(), j.dump());
}

TEST(Pipeline, GridSpecRanges) {
  EXPECT_EQ(GridSpec::range(5, 50, 5).size(), 10u);
  EXPECT_EQ(GridSpec::range(25, 300, 25).back(), 300u);
  EXPECT_EQ(GridSpec::range(3, 3, 1), std::vector<std::size_t>{3});
  EXPECT_THROW(GridSpec::range(5, 4, 1), ValidationError);
  EXPECT_THROW(GridSpec::range(1, 4, 0), ValidationError);
  EXPECT_THROW((GridSpec{{}, {5}}.validate()), ValidationError);
  EXPECT_EQ((GridSpec{GridSpec::range(25, 300, 25), GridSpec::range(5, 50, 5)}.cells()), 120u);
}

TEST(Pipeline, GridFindsTwoBlobs) {
  const auto f = fixture::gaussian_blobs(2, 80, 4, 12.0, 61);
  const auto g = grid_search(f.points, {{2, 5, 10}, {5, 10, 20, 40}});
  ASSERT_EQ(g.cells.size(), 12u);
  const auto best = g.best();
  ASSERT_TRUE(best);
  EXPECT_EQ(g.cells[*best].k, 2u);
  for (std::size_t row = 0; row < 3; ++row) {
    int optimal = 0;
    for (std::size_t col = 0; col < 4; ++col) optimal += g.cells[row * 4 + col].optimal;
    EXPECT_EQ(optimal, 1);
  }
}

TEST(Pipeline, GridCellsMatchIsolatedRuns) {
  const auto f = fixture::gaussian_blobs(3, 40, 4, 8.0, 62);
  const GridSpec spec{{3, 6}, {5, 12, 200}};
  const auto g = grid_search(f.points, spec);
  for (const auto& cell : g.cells) {
    const auto r = hdbscan::cluster(f.points, {cell.min_cluster_size, cell.min_samples});
    EXPECT_EQ(cell.k, r.k);
    EXPECT_EQ(cell.validity, r.relative_validity);
    if (!r.relative_validity) EXPECT_FALSE(cell.error.empty());
  }
  // A one-cell grid is the direct call.
  const auto one = grid_search(f.points, {{6}, {12}});
  const auto direct = hdbscan::cluster(f.points, {12, 6});
  ASSERT_EQ(one.cells.size(), 1u);
  EXPECT_EQ(one.cells[0].validity, direct.relative_validity);
  EXPECT_TRUE(one.cells[0].optimal);
  // min_samples above n fails in-cell rather than aborting the grid.
  const auto bad = grid_search(f.points, {{500}, {5}});
  EXPECT_FALSE(bad.cells[0].error.empty());
  EXPECT_FALSE(bad.best());
}

TEST(Pipeline, EvaluateCellScoresOnlyAnnotatedPoints) {
  const auto f = fixture::gaussian_blobs(2, 40, 3, 12.0, 63);
  const auto r = hdbscan::cluster(f.points, {10, 5});
  EvalInputs in;
  std::vector<LabelSet> ann;
  for (std::size_t i = 0; i < 80; ++i) ann.push_back(i % 4 == 0 ? LabelSet{} : LabelSet{f.truth[i] ? "b" : "a"});
  in.annotations[eval::Level::domain] = ann;
  const auto rows = evaluate_cell(r, in, 5, 10);
  ASSERT_EQ(rows.size(), 2u);  // intent level absent
  for (const auto& row : rows) {
    ASSERT_TRUE(row.scores) << row.error;
    EXPECT_LE(row.scores->items, 60u);
  }
}

TEST(Pipeline, PlotData) {
  const fs::path dir = fresh_dir("plot");
  const Matrix coords(3, 2, std::vector<double>{0.1, -2.5, 3.14159265358979, 1e-7, -4, 5});
  const std::vector<std::string> labels{"a", "b", "-1"};
  const std::vector<std::string> keys{"d:0", "d:1", "d:2"};
  emit_plot_data(coords, labels, keys, dir / "p.csv");
  std::ifstream in(dir / "p.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,label,key");
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_TRUE(std::getline(in, line));
    const auto f = csv::split_record(line);
    ASSERT_EQ(f.size(), 4u);
    EXPECT_NEAR(std::stod(f[0]), coords(i, 0), 1e-6);
    EXPECT_NEAR(std::stod(f[1]), coords(i, 1), 1e-6);
    EXPECT_EQ(f[2], labels[i]);
    EXPECT_EQ(f[3], keys[i]);
  }
  EXPECT_FALSE(std::getline(in, line));
  EXPECT_THROW(emit_plot_data(Matrix(3, 3), labels, keys, dir / "q.csv"), ParameterError);
  fs::remove_all(dir);
}

TEST(Pipeline, EndToEndOnSyntheticCorpus) {
  const fs::path dir = fresh_dir("e2e");
  write_inputs(dir, true);
  const auto report = run_pipeline(config_in(dir));
  for (const char* name : {"grid.csv", "eval.csv", "clusters.csv", "summary.csv", "flows.csv", "plot2d.csv",
                           "stats.json", "study.csv", "study.json"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / name)) << name;
    EXPECT_TRUE(report.artifacts.count(name)) << name;
  }
  ASSERT_TRUE(report.best_cell);
  EXPECT_EQ(report.grid.cells[*report.best_cell].k, 3u);
  const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["artifacts"].size(), report.artifacts.size());
  EXPECT_EQ(manifest["best"]["k"], 3);
  fs::remove_all(dir);
}

TEST(Pipeline, UnannotatedCorpusSkipsEvaluation) {
  const fs::path dir = fresh_dir("unannotated");
  write_inputs(dir, false);
  auto j = base_config();
  j["study"]["enabled"] = false;
  const auto report = run_pipeline(config_in(dir, j));
  EXPECT_FALSE(fs::exists(dir / "out" / "eval.csv"));
  for (const char* name : {"grid.csv", "clusters.csv", "summary.csv", "flows.csv", "plot2d.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "out" / name)) << name;
  ASSERT_EQ(report.notices.size(), 2u);
  EXPECT_NE(report.notices[0].find("skipped"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Pipeline, FailingStageIsNamedInManifest) {
  const fs::path dir = fresh_dir("failing");
  write_inputs(dir, true);
  auto j = base_config();
  j["keys"] = "missing.keys";
  try {
    run_pipeline(config_in(dir, j));
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "prepare");
  }
  const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["status"], "partial");
  EXPECT_EQ(manifest["failed_stage"], "prepare");
  fs::remove_all(dir);
}

TEST(Pipeline, RepeatedRunsAreByteIdentical) {
  const fs::path dir = fresh_dir("repeat");
  write_inputs(dir, true);
  const auto a = run_pipeline(config_in(dir));
  const std::string manifest = slurp(dir / "out" / "manifest.json");
  const auto b = run_pipeline(config_in(dir));
  EXPECT_EQ(a.artifacts, b.artifacts);
  EXPECT_EQ(manifest, slurp(dir / "out" / "manifest.json"));
  fs::remove_all(dir);
}
