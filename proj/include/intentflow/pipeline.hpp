#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "intentflow/corpus.hpp"
#include "intentflow/embed.hpp"
#include "intentflow/error.hpp"
#include "intentflow/eval.hpp"
#include "intentflow/flows.hpp"
#include "intentflow/hdbscan.hpp"
#include "intentflow/mask.hpp"
#include "intentflow/matrix.hpp"
#include "intentflow/summarize.hpp"
#include "intentflow/umap.hpp"

#include "json.hpp"

namespace intentflow::pipeline {

struct GridSpec {
  std::vector<std::size_t> min_samples;
  std::vector<std::size_t> min_cluster_size;

  // Non-empty, strictly increasing lists; throws ValidationError otherwise.
  void validate() const;
  std::size_t cells() const noexcept { return min_samples.size() * min_cluster_size.size(); }
  // Inclusive arithmetic range helper.
  static std::vector<std::size_t> range(std::size_t first, std::size_t last, std::size_t step);
};

struct MaskConfig {
  bool enabled = false;
  std::vector<DbSource> db_files;
  std::optional<std::filesystem::path> gazetteer;  // cache file; used when it exists
  GazetteerOptions options;
  std::vector<std::pair<std::string, std::vector<std::string>>> extra_lexicons;
};

struct EvalConfig {
  std::vector<eval::Level> levels{eval::Level::domain, eval::Level::intent};
  std::vector<eval::Mode> modes{eval::Mode::hard, eval::Mode::soft_argmax};
  eval::NoisePolicy noise_policy = eval::NoisePolicy::exclude;
  eval::BCubedVariant variant = eval::BCubedVariant::extended;
};

struct FlowConfig {
  eval::Mode source = eval::Mode::soft_argmax;
  bool include_noise = false;
  bool collapse_repeats = false;
  std::size_t min_support = 2;
  std::size_t topk = 10;  // 0 mines every pattern with min_support
  std::size_t min_len = 2;
  std::size_t max_len = 2;
  flows::CountMode count = flows::CountMode::sequences;
};

struct StudyConfig {
  bool enabled = true;
  std::size_t n_pairs = 1000;
  std::uint64_t seed = 7;
  LabelMatch match = LabelMatch::identical;
};

struct Config {
  std::filesystem::path corpus;
  std::filesystem::path embeddings;
  std::filesystem::path keys;
  std::filesystem::path output_dir = "report";

  MaskConfig mask;
  std::optional<LabelSet> keep_domains;
  std::optional<LabelSet> drop_domains;

  bool reduce_enabled = true;
  umap::ReductionParams reduce;
  umap::ReductionParams plot{2, 15, 0.1, 200, 42, Metric::cosine};
  std::string plot_label = "cluster";  // cluster | domain | intent

  hdbscan::ClusterParams cluster{10, std::nullopt};
  GridSpec grid{{5, 10}, {10, 20}};

  EvalConfig eval;
  std::size_t summary_words = 5;
  eval::Level summary_level = eval::Level::domain;
  FlowConfig flows;
  StudyConfig study;
  std::size_t histogram_min_count = 10;
};

// Relative paths are resolved against `base_dir`. Unknown keys are rejected.
Config parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const Config& c);

struct EvalRow {
  eval::Level level = eval::Level::domain;
  eval::Mode mode = eval::Mode::hard;
  std::size_t min_samples = 0;
  std::size_t min_cluster_size = 0;
  std::optional<eval::BCubedScores> scores;
  std::string error;
  std::size_t k = 0;
};

struct GridCell {
  std::size_t min_samples = 0;
  std::size_t min_cluster_size = 0;
  std::optional<double> validity;
  std::size_t k = 0;
  std::string error;  // non-empty when the cell failed
  bool optimal = false;  // best validity for its min_samples
  std::vector<EvalRow> eval;
};

struct GridResult {
  std::vector<GridCell> cells;  // min_samples major order
  // Highest validity overall (first in grid order on ties).
  std::optional<std::size_t> best() const;
};

// Annotations per evaluated level, aligned with the points.
struct EvalInputs {
  EvalConfig config;
  std::map<eval::Level, std::vector<LabelSet>> annotations;
};

hdbscan::ClusterResult run_cell(const Matrix& points, std::size_t min_samples,
                                std::size_t min_cluster_size);
std::vector<EvalRow> evaluate_cell(const hdbscan::ClusterResult& r, const EvalInputs& inputs,
                                   std::size_t min_samples, std::size_t min_cluster_size);

GridResult grid_search(const Matrix& points, const GridSpec& grid, const EvalInputs* eval = nullptr);

// Loaded and prepared inputs shared by the CLI verbs.
struct Workspace {
  Config config;
  Corpus corpus;  // masked when masking is enabled
  std::vector<UtteranceKey> keys;  // utterances kept by the domain filter
  std::vector<Utterance> utterances;
  EmbeddingMatrix embeddings;
  Matrix points;  // filtered embedding rows
  std::vector<std::string> notices;

  std::vector<std::string> key_strings() const;
  std::map<eval::Level, std::vector<LabelSet>> annotations(std::span<const eval::Level> levels) const;
};

Gazetteer gazetteer_for(const MaskConfig& m);
Workspace prepare(const Config& config);
Matrix clustering_space(const Workspace& ws);

void write_grid_csv(const GridResult& g, const std::filesystem::path& path);
void write_eval_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path);
void write_clusters_csv(const hdbscan::ClusterResult& r, std::span<const std::string> keys,
                        const std::filesystem::path& path);
std::vector<summarize::ClusterSummary> summarize_clusters(const hdbscan::ClusterResult& r,
                                                          const Workspace& ws,
                                                          std::size_t n_words, eval::Level level);
std::vector<flows::SequentialPattern> mine_flows(const hdbscan::ClusterResult& r,
                                                 const Workspace& ws, const FlowConfig& f);

// Rows x,y,label,key. Throws ParameterError unless coordinates are n x 2.
void emit_plot_data(const Matrix& coords, std::span<const std::string> labels,
                    std::span<const std::string> keys, const std::filesystem::path& path);

struct PipelineReport {
  std::filesystem::path output_dir;
  std::map<std::string, std::string> artifacts;  // file name -> sha256
  std::vector<std::string> notices;
  std::optional<std::size_t> best_cell;
  GridResult grid;
  std::optional<SimilarityStudyReport> study;
};

// Raises StageError if any stage fails; the manifest is still written with
// the failing stage and the artifacts produced so far.
PipelineReport run_pipeline(const Config& config);
PipelineReport run_pipeline(const std::filesystem::path& config_path);

class StageError : public Error {
 public:
  StageError(std::string stage, const std::exception& cause, bool validation);
  const std::string& stage() const noexcept { return stage_; }
  bool is_validation() const noexcept override { return validation_; }

 private:
  std::string stage_;
  bool validation_;
};

}  // namespace intentflow::pipeline
