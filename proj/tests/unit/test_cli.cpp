#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "intentflow/corpus.hpp"
#include "intentflow/mask.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + INTENTFLOW_CLI + "\" -q " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("intentflow_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string mini_config() { return fixture::data_dir() + "/mini/config.json"; }

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("cluster"), 1);  // --config is required
  EXPECT_EQ(run("cluster --config /nonexistent.json"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, ParameterErrorExitsOne) {
  const fs::path dir = fresh_dir("param");
  EXPECT_EQ(run("cluster --config " + mini_config() + " --min-samples 5000 --out " + (dir / "c.csv").string()), 1);
  EXPECT_EQ(run("eval --config " + mini_config() + " --level topic --out " + (dir / "e.csv").string()), 1);
  fs::remove_all(dir);
}

TEST(Cli, RuntimeErrorExitsTwo) {
  const fs::path dir = fresh_dir("runtime");
  std::ofstream(dir / "config.json") << R"({"corpus": "missing.json", "embeddings": "e.bin", "keys": "e.keys"})";
  EXPECT_EQ(run("cluster --config " + (dir / "config.json").string() + " --out " + (dir / "c.csv").string()), 2);
  fs::remove_all(dir);
}

TEST(Cli, ClusterVerbWritesAssignments) {
  const fs::path dir = fresh_dir("cluster");
  ASSERT_EQ(run("cluster --config " + mini_config() + " --out " + (dir / "c.csv").string()), 0);
  std::ifstream in(dir / "c.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "key,cluster,probability,outlier_score,soft_cluster,soft_probability");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, intentflow::load_corpus(fixture::data_dir() + "/mini/corpus.json").utterance_count());
  fs::remove_all(dir);
}

TEST(Cli, MaskVerb) {
  const fs::path dir = fresh_dir("mask");
  const fs::path out = dir / "masked.json";
  const fs::path gaz = dir / "gazetteer.json";
  ASSERT_EQ(run("mask --config " + mini_config() + " --gazetteer-out " + gaz.string() + " --out " + out.string()), 0);
  const auto original = intentflow::load_corpus(fixture::data_dir() + "/mini/corpus.json");
  const auto masked = intentflow::load_corpus(out);
  ASSERT_EQ(masked.utterance_count(), original.utterance_count());
  auto g = intentflow::load_gazetteer(gaz);
  g.set_mask_digits(true);  // the mini config keeps the default digit rule
  std::size_t changed = 0;
  const auto a = original.utterances();
  const auto b = masked.utterances();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(b[i].second->text, intentflow::mask_text(a[i].second->text, g));
    changed += a[i].second->text != b[i].second->text;
  }
  EXPECT_GT(changed, 0u);
  // Masking a masked corpus is a no-op.
  ASSERT_EQ(run("mask --config " + mini_config() + " --corpus " + out.string() + " --out " + (dir / "again.json").string()),
            0);
  EXPECT_EQ(intentflow::load_corpus(dir / "again.json"), masked);
  fs::remove_all(dir);
}

TEST(Cli, StatsVerb) {
  const fs::path dir = fresh_dir("stats");
  ASSERT_EQ(run("stats --config " + mini_config() + " --out " + (dir / "s.json").string()), 0);
  EXPECT_TRUE(fs::file_size(dir / "s.json") > 0);
  fs::remove_all(dir);
}
