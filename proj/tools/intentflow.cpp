// Command-line front end. Every verb reads the experiment config and accepts
// a few overrides; exit code 0 on success, 1 on invalid input, 2 otherwise.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "intentflow/corpus.hpp"
#include "intentflow/error.hpp"
#include "intentflow/log.hpp"
#include "intentflow/mask.hpp"
#include "intentflow/pipeline.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace intentflow;
using ojson = nlohmann::ordered_json;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::size_t> min_samples;
  std::optional<std::size_t> min_cluster_size;
  std::optional<std::string> level;
  std::optional<std::string> mode;
  std::optional<std::size_t> topk;
  std::optional<std::size_t> min_support;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_config(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
}
void add_cluster_params(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--min-samples", o.min_samples, "HDBSCAN min_samples");
  cmd->add_option("--min-cluster-size", o.min_cluster_size, "HDBSCAN min_cluster_size");
}
void add_seed(CLI::App* cmd, Overrides& o) { cmd->add_option("--seed", o.seed, "Seed for reduction and sampling"); }

pipeline::Config config_with(const Overrides& o) {
  pipeline::Config c = pipeline::load_config(o.config);
  if (o.min_cluster_size) c.cluster.min_cluster_size = *o.min_cluster_size;
  if (o.min_samples) c.cluster.min_samples = *o.min_samples;
  if (o.level) {
    const auto level = eval::parse_level(*o.level);
    c.eval.levels = {level};
    c.summary_level = level;
  }
  if (o.mode) {
    const auto mode = eval::parse_mode(*o.mode);
    c.eval.modes = {mode};
    c.flows.source = mode;
  }
  if (o.topk) c.flows.topk = *o.topk;
  if (o.min_support) c.flows.min_support = *o.min_support;
  if (o.seed) {
    c.reduce.seed = *o.seed;
    c.plot.seed = *o.seed;
    c.study.seed = *o.seed;
  }
  return c;
}

fs::path output_path(const Overrides& o, const pipeline::Config& c, const char* name) {
  if (!o.out.empty()) return o.out;
  fs::create_directories(c.output_dir);
  return c.output_dir / name;
}

hdbscan::ClusterResult cluster_once(const pipeline::Workspace& ws, const Matrix& space) {
  const auto& p = ws.config.cluster;
  return pipeline::run_cell(space, p.effective_min_samples(), p.min_cluster_size);
}

void print_json(const ojson& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw IoError("cannot write " + out);
  f << j.dump(2) << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Intent induction and intent-flow analysis for dialogue corpora"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  Overrides o;

  auto* convert = app.add_subcommand("convert", "Convert MultiWOZ files to the corpus schema");
  std::string data_path;
  std::optional<std::string> acts_path;
  convert->add_option("--data", data_path, "MultiWOZ data file")->required()->check(CLI::ExistingFile);
  convert->add_option("--acts", acts_path, "Separate dialogue acts file")->check(CLI::ExistingFile);
  convert->add_option("--out", o.out, "Output corpus path")->required();

  auto* mask = app.add_subcommand("mask", "Mask gazetteer entities in a corpus");
  std::optional<std::string> mask_config;
  std::string corpus_in;
  std::optional<std::string> gazetteer_out;
  mask->add_option("--config", mask_config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  mask->add_option("--corpus", corpus_in, "Input corpus (defaults to the config's corpus)");
  mask->add_option("--gazetteer-out", gazetteer_out, "Also write the gazetteer used");
  mask->add_option("--out", o.out, "Masked corpus path")->required();

  auto* stats = app.add_subcommand("stats", "Corpus statistics and domain-combination histogram");
  std::optional<std::string> stats_config;
  std::string stats_corpus;
  std::size_t min_count = 10;
  stats->add_option("--config", stats_config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  stats->add_option("--corpus", stats_corpus, "Corpus file");
  stats->add_option("--min-count", min_count, "Drop combinations seen fewer times");
  stats->add_option("--out", o.out, "Write JSON here instead of stdout");

  auto* cluster = app.add_subcommand("cluster", "Cluster once with the configured parameters");
  auto* grid = app.add_subcommand("grid", "Grid search over min_samples x min_cluster_size");
  auto* evalc = app.add_subcommand("eval", "BCubed evaluation of one clustering");
  auto* summ = app.add_subcommand("summarize", "Top words and reference label per cluster");
  auto* flowc = app.add_subcommand("flows", "Frequent cluster-id subsequences across dialogues");
  auto* plot = app.add_subcommand("plot", "2-D coordinates for plotting");
  auto* study = app.add_subcommand("study", "Embedding similarity of sampled utterance pairs");
  auto* pipe = app.add_subcommand("pipeline", "Run every stage and write a report directory");
  for (auto* cmd : {cluster, grid, evalc, summ, flowc, plot, study, pipe}) {
    add_config(cmd, o);
    add_seed(cmd, o);
    cmd->add_option("--out", o.out, cmd == pipe || cmd == study ? "Output directory" : "Output file");
  }
  for (auto* cmd : {cluster, evalc, summ, flowc, plot}) add_cluster_params(cmd, o);
  evalc->add_option("--level", o.level, "domain or intent");
  evalc->add_option("--mode", o.mode, "hard or soft");
  summ->add_option("--level", o.level, "domain or intent");
  flowc->add_option("--mode", o.mode, "Cluster source: hard or soft");
  flowc->add_option("--topk", o.topk, "Keep the K most frequent patterns (0 = all)");
  flowc->add_option("--min-support", o.min_support, "Minimum support");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  log::set_quiet(quiet);

  if (convert->parsed()) {
    ConvertReport rep;
    std::optional<fs::path> acts;
    if (acts_path) acts = *acts_path;
    write_corpus(convert_multiwoz(data_path, acts, &rep), o.out);
    std::cerr << "converted " << rep.dialogues << " dialogues, " << rep.turns << " turns (" << rep.dropped_empty_turns
              << " empty turns dropped)\n";
    return 0;
  }
  if (mask->parsed()) {
    pipeline::Config c;
    if (mask_config) c = pipeline::load_config(*mask_config);
    const fs::path in = corpus_in.empty() ? c.corpus : fs::path(corpus_in);
    if (in.empty()) throw UsageError("mask needs --corpus or a config with a corpus");
    const Gazetteer g = pipeline::gazetteer_for(c.mask);
    if (gazetteer_out) write_gazetteer(g, *gazetteer_out);
    write_corpus(mask_corpus(load_corpus(in), g), o.out);
    return 0;
  }
  if (stats->parsed()) {
    fs::path in = stats_corpus;
    std::size_t mc = min_count;
    if (stats_config) {
      const auto c = pipeline::load_config(*stats_config);
      if (in.empty()) in = c.corpus;
      if (stats->count("--min-count") == 0) mc = c.histogram_min_count;
    }
    if (in.empty()) throw UsageError("stats needs --corpus or --config");
    const Corpus corpus = load_corpus(in);
    const CorpusStats s = corpus_stats(corpus);
    ojson j;
    j["n_dialogues"] = s.n_dialogues;
    j["n_utterances"] = s.n_utterances;
    j["mean_turns_single_domain"] = s.mean_turns_single_domain ? ojson(*s.mean_turns_single_domain) : ojson(nullptr);
    j["mean_turns_multi_domain"] = s.mean_turns_multi_domain ? ojson(*s.mean_turns_multi_domain) : ojson(nullptr);
    j["domain_histogram"] = ojson::array();
    for (const auto& [combo, count] : domain_combination_histogram(corpus, mc))
      j["domain_histogram"].push_back({{"domains", combo}, {"count", count}});
    print_json(j, o.out);
    return 0;
  }

  pipeline::Config c = config_with(o);
  if (pipe->parsed()) {
    if (!o.out.empty()) c.output_dir = o.out;
    const auto report = pipeline::run_pipeline(c);
    for (const auto& [name, hash] : report.artifacts) std::cout << name << "  " << hash << "\n";
    return 0;
  }

  const pipeline::Workspace ws = pipeline::prepare(c);
  if (study->parsed()) {
    const fs::path dir = o.out.empty() ? c.output_dir : fs::path(o.out);
    fs::create_directories(dir);
    const auto r = pair_similarity_study(ws.corpus, ws.embeddings, c.study.n_pairs, c.study.seed, c.study.match);
    write_study_csv(r, dir / "study.csv");
    write_study_summary(r, dir / "study.json");
    return 0;
  }
  if (plot->parsed()) {
    const Matrix coords = umap::reduce(ws.points, c.plot);
    std::vector<std::string> labels;
    if (c.plot_label == "cluster") {
      const auto r = cluster_once(ws, pipeline::clustering_space(ws));
      for (int l : r.labels) labels.push_back(std::to_string(l));
    } else {
      const auto level = c.plot_label == "domain" ? eval::Level::domain : eval::Level::intent;
      for (const auto& u : ws.utterances) {
        const LabelSet& s = eval::labels_at(u, level);
        std::string joined;
        for (const auto& l : s) joined += (joined.empty() ? "" : " ") + l;
        labels.push_back(s.empty() ? std::string(summarize::kNoneLabel) : joined);
      }
    }
    pipeline::emit_plot_data(coords, labels, ws.key_strings(), output_path(o, c, "plot2d.csv"));
    return 0;
  }

  const Matrix space = pipeline::clustering_space(ws);
  if (grid->parsed()) {
    pipeline::write_grid_csv(pipeline::grid_search(space, c.grid), output_path(o, c, "grid.csv"));
    return 0;
  }
  const auto result = cluster_once(ws, space);
  if (cluster->parsed()) {
    pipeline::write_clusters_csv(result, ws.key_strings(), output_path(o, c, "clusters.csv"));
  } else if (evalc->parsed()) {
    pipeline::EvalInputs inputs{c.eval, ws.annotations(c.eval.levels)};
    const auto& p = c.cluster;
    pipeline::write_eval_csv(pipeline::evaluate_cell(result, inputs, p.effective_min_samples(), p.min_cluster_size),
                             output_path(o, c, "eval.csv"));
  } else if (summ->parsed()) {
    summarize::write_summary_csv(pipeline::summarize_clusters(result, ws, c.summary_words, c.summary_level),
                                 output_path(o, c, "summary.csv"));
  } else if (flowc->parsed()) {
    flows::write_flows_csv(pipeline::mine_flows(result, ws, c.flows), c.flows.count, output_path(o, c, "flows.csv"));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
