#include "intentflow/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "intentflow/csv.hpp"
#include "intentflow/hash.hpp"
#include "intentflow/log.hpp"

namespace intentflow::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Grid

void GridSpec::validate() const {
  auto check = [](const std::vector<std::size_t>& v, const char* name, std::size_t minimum) {
    if (v.empty()) throw ValidationError(std::string("grid.") + name + " must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] < minimum)
        throw ValidationError(std::string("grid.") + name + " values must be at least " + std::to_string(minimum));
      if (i > 0 && v[i] <= v[i - 1]) throw ValidationError(std::string("grid.") + name + " must be strictly increasing");
    }
  };
  check(min_samples, "min_samples", 1);
  check(min_cluster_size, "min_cluster_size", 2);
}

std::vector<std::size_t> GridSpec::range(std::size_t first, std::size_t last, std::size_t step) {
  if (step == 0) throw ValidationError("grid range step must be positive");
  if (first > last) throw ValidationError("grid range must have first <= last");
  std::vector<std::size_t> out;
  for (std::size_t v = first; v <= last; v += step) out.push_back(v);
  return out;
}

std::optional<std::size_t> GridResult::best() const {
  std::optional<std::size_t> out;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].validity && (!out || *cells[i].validity > *cells[*out].validity)) out = i;
  return out;
}

hdbscan::ClusterResult run_cell(const Matrix& points, std::size_t min_samples, std::size_t min_cluster_size) {
  return hdbscan::cluster(points, {min_cluster_size, min_samples});
}

std::vector<EvalRow> evaluate_cell(const hdbscan::ClusterResult& r, const EvalInputs& inputs, std::size_t min_samples,
                                   std::size_t min_cluster_size) {
  std::vector<EvalRow> rows;
  for (eval::Level level : inputs.config.levels) {
    const auto found = inputs.annotations.find(level);
    if (found == inputs.annotations.end()) continue;
    const auto& ann = found->second;
    for (eval::Mode mode : inputs.config.modes) {
      EvalRow row{level, mode, min_samples, min_cluster_size, std::nullopt, "", r.k};
      try {
        if (mode == eval::Mode::soft_argmax && r.k == 0)
          throw UndefinedError("soft evaluation is undefined when no cluster was found");
        const std::vector<int> labels = mode == eval::Mode::hard ? r.labels : r.soft_labels();
        // Unannotated points are left out; only the annotated subset is scored.
        std::vector<eval::LabeledItem> items;
        for (std::size_t i = 0; i < labels.size(); ++i)
          if (!ann[i].empty()) items.push_back({std::to_string(i), labels[i], ann[i]});
        row.scores = eval::bcubed(items, inputs.config.noise_policy, inputs.config.variant);
      } catch (const Error& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

GridResult grid_search(const Matrix& points, const GridSpec& grid, const EvalInputs* eval) {
  grid.validate();
  GridResult out;
  out.cells.resize(grid.cells());
  const std::size_t cols = grid.min_cluster_size.size();

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(out.cells.size()); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    GridCell& cell = out.cells[c];
    cell.min_samples = grid.min_samples[c / cols];
    cell.min_cluster_size = grid.min_cluster_size[c % cols];
    try {
      const auto r = run_cell(points, cell.min_samples, cell.min_cluster_size);
      cell.k = r.k;
      cell.validity = r.relative_validity;
      if (!cell.validity) cell.error = "no clusters found (all points are noise)";
      if (eval) cell.eval = evaluate_cell(r, *eval, cell.min_samples, cell.min_cluster_size);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  }

  for (std::size_t row = 0; row < grid.min_samples.size(); ++row) {
    std::optional<std::size_t> best;
    for (std::size_t col = 0; col < cols; ++col) {
      const auto& cell = out.cells[row * cols + col];
      if (cell.validity && (!best || *cell.validity > *out.cells[*best].validity)) best = row * cols + col;
    }
    if (best) out.cells[*best].optimal = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

namespace {

// Reads one JSON object and remembers which keys were consumed, so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(where() + " must be a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& at(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ParseError(where(key) + " has the wrong type");
    }
  }

  void get_size(const std::string& key, std::size_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ParseError(where(key) + " must be a non-negative integer");
    out = v.get<std::size_t>();
  }

  void get_path(const std::string& key, fs::path& out, const fs::path& base) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = resolve(s, base);
  }

  std::vector<std::string> strings(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_array()) throw ParseError(where(key) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw ParseError(where(key) + " must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  Section child(const std::string& key) { return Section(at(key), where(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ParseError("unknown config key '" + where(key) + "'");
  }

  static fs::path resolve(const std::string& s, const fs::path& base) {
    fs::path p(s);
    return p.is_absolute() || base.empty() ? p : base / p;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Metric parse_metric(const std::string& s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "euclidean") return Metric::euclidean;
  throw UsageError("unknown metric '" + s + "' (expected cosine or euclidean)");
}

std::string_view metric_name(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

LabelMatch parse_match(const std::string& s) {
  if (s == "identical") return LabelMatch::identical;
  if (s == "intersecting") return LabelMatch::intersecting;
  throw UsageError("unknown label match '" + s + "' (expected identical or intersecting)");
}

void read_reduction(Section& s, umap::ReductionParams& p) {
  s.get_size("target_dim", p.target_dim);
  s.get_size("n_neighbors", p.n_neighbors);
  s.get("min_dist", p.min_dist);
  s.get_size("n_epochs", p.n_epochs);
  s.get("seed", p.seed);
  if (s.has("metric")) p.metric = parse_metric(s.at("metric").get<std::string>());
}

std::vector<std::size_t> read_axis(Section& grid, const std::string& key) {
  const json& v = grid.at(key);
  if (v.is_array()) {
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < 0)
        throw ParseError(grid.where(key) + " must hold non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }
  Section r(v, grid.where(key));
  std::size_t first = 0, last = 0, step = 1;
  if (!r.has("first") || !r.has("last")) throw ParseError(grid.where(key) + " range needs first and last");
  r.get_size("first", first);
  r.get_size("last", last);
  r.get_size("step", step);
  r.finish();
  return GridSpec::range(first, last, step);
}

ojson reduction_json(const umap::ReductionParams& p) {
  ojson j;
  j["target_dim"] = p.target_dim;
  j["n_neighbors"] = p.n_neighbors;
  j["min_dist"] = p.min_dist;
  j["n_epochs"] = p.n_epochs;
  j["seed"] = p.seed;
  j["metric"] = metric_name(p.metric);
  return j;
}

template <class T, class F>
ojson names(const std::vector<T>& v, F to_name) {
  ojson a = ojson::array();
  for (const auto& x : v) a.push_back(std::string(to_name(x)));
  return a;
}

}  // namespace

Config parse_config(const json& j, const fs::path& base_dir) {
  Config c;
  Section root(j, "");
  root.get_path("corpus", c.corpus, base_dir);
  root.get_path("embeddings", c.embeddings, base_dir);
  root.get_path("keys", c.keys, base_dir);
  root.get_path("output_dir", c.output_dir, base_dir);
  if (root.has("output_dir") == false) c.output_dir = Section::resolve(c.output_dir.string(), base_dir);

  if (root.has("mask")) {
    Section m = root.child("mask");
    m.get("enabled", c.mask.enabled);
    m.get("numerals", c.mask.options.numerals);
    m.get("digits", c.mask.options.digits);
    m.get("places", c.mask.options.places);
    if (m.has("gazetteer")) {
      fs::path p;
      m.get_path("gazetteer", p, base_dir);
      c.mask.gazetteer = p;
    }
    if (m.has("db_files")) {
      const json& files = m.at("db_files");
      if (!files.is_array()) throw ParseError("mask.db_files must be an array");
      for (const auto& f : files) {
        DbSource src;
        if (f.is_string()) {
          src.path = Section::resolve(f.get<std::string>(), base_dir);
        } else {
          Section fs_(f, "mask.db_files[]");
          fs_.get_path("path", src.path, base_dir);
          if (src.path.empty()) throw ParseError("mask.db_files[] entry needs a path");
          if (fs_.has("fields")) fs_.get("fields", src.fields);
          fs_.finish();
        }
        c.mask.db_files.push_back(std::move(src));
      }
    }
    if (m.has("extra_lexicons")) {
      Section lex = m.child("extra_lexicons");
      for (const auto& [tag, words] : m.at("extra_lexicons").items()) c.mask.extra_lexicons.emplace_back(tag, lex.strings(tag));
      lex.finish();
    }
    m.finish();
  }

  if (root.has("keep_domains")) {
    const auto v = root.strings("keep_domains");
    c.keep_domains = LabelSet(v.begin(), v.end());
  }
  if (root.has("drop_domains")) {
    const auto v = root.strings("drop_domains");
    c.drop_domains = LabelSet(v.begin(), v.end());
  }
  if (c.keep_domains && c.drop_domains) throw UsageError("keep_domains and drop_domains are mutually exclusive");

  if (root.has("plot")) {
    Section p = root.child("plot");
    p.get("label", c.plot_label);
    read_reduction(p, c.plot);
    p.finish();
  }
  if (root.has("reduce")) {
    Section r = root.child("reduce");
    r.get("enabled", c.reduce_enabled);
    read_reduction(r, c.reduce);
    r.finish();
  }
  if (c.plot.target_dim != 2) throw ValidationError("plot.target_dim must be 2");
  if (c.plot_label != "cluster" && c.plot_label != "domain" && c.plot_label != "intent")
    throw UsageError("plot.label must be cluster, domain or intent");

  if (root.has("cluster")) {
    Section s = root.child("cluster");
    s.get_size("min_cluster_size", c.cluster.min_cluster_size);
    if (s.has("min_samples")) {
      std::size_t ms = 0;
      s.get_size("min_samples", ms);
      c.cluster.min_samples = ms;
    }
    s.finish();
  }
  if (root.has("grid")) {
    Section g = root.child("grid");
    if (!g.has("min_samples") || !g.has("min_cluster_size"))
      throw ParseError("grid needs both min_samples and min_cluster_size");
    c.grid.min_samples = read_axis(g, "min_samples");
    c.grid.min_cluster_size = read_axis(g, "min_cluster_size");
    g.finish();
  }
  c.grid.validate();

  if (root.has("eval")) {
    Section e = root.child("eval");
    if (e.has("levels")) {
      c.eval.levels.clear();
      for (const auto& s : e.strings("levels")) c.eval.levels.push_back(eval::parse_level(s));
    }
    if (e.has("modes")) {
      c.eval.modes.clear();
      for (const auto& s : e.strings("modes")) c.eval.modes.push_back(eval::parse_mode(s));
    }
    if (e.has("noise_policy")) c.eval.noise_policy = eval::parse_noise_policy(e.at("noise_policy").get<std::string>());
    if (e.has("bcubed")) c.eval.variant = eval::parse_bcubed_variant(e.at("bcubed").get<std::string>());
    e.finish();
  }
  if (root.has("summary")) {
    Section s = root.child("summary");
    s.get_size("words", c.summary_words);
    if (s.has("level")) c.summary_level = eval::parse_level(s.at("level").get<std::string>());
    s.finish();
  }
  if (root.has("flows")) {
    Section f = root.child("flows");
    if (f.has("source")) c.flows.source = eval::parse_mode(f.at("source").get<std::string>());
    f.get("include_noise", c.flows.include_noise);
    f.get("collapse_repeats", c.flows.collapse_repeats);
    f.get_size("min_support", c.flows.min_support);
    f.get_size("topk", c.flows.topk);
    f.get_size("min_len", c.flows.min_len);
    f.get_size("max_len", c.flows.max_len);
    if (f.has("count")) c.flows.count = flows::parse_count_mode(f.at("count").get<std::string>());
    f.finish();
  }
  if (c.flows.min_support < 1) throw ValidationError("flows.min_support must be at least 1");
  if (c.flows.min_len < 1 || c.flows.min_len > c.flows.max_len)
    throw ValidationError("flows lengths must satisfy 1 <= min_len <= max_len");

  if (root.has("study")) {
    Section s = root.child("study");
    s.get("enabled", c.study.enabled);
    s.get_size("n_pairs", c.study.n_pairs);
    s.get("seed", c.study.seed);
    if (s.has("match")) c.study.match = parse_match(s.at("match").get<std::string>());
    s.finish();
  }
  root.get_size("histogram_min_count", c.histogram_min_count);
  root.finish();

  umap::validate(c.reduce, 0);
  umap::validate(c.plot, 0);
  return c;
}

Config load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

ojson to_json(const Config& c) {
  ojson j;
  j["corpus"] = c.corpus.string();
  j["embeddings"] = c.embeddings.string();
  j["keys"] = c.keys.string();
  j["output_dir"] = c.output_dir.string();

  ojson m;
  m["enabled"] = c.mask.enabled;
  m["numerals"] = c.mask.options.numerals;
  m["digits"] = c.mask.options.digits;
  m["places"] = c.mask.options.places;
  if (c.mask.gazetteer) m["gazetteer"] = c.mask.gazetteer->string();
  ojson files = ojson::array();
  for (const auto& f : c.mask.db_files) {
    ojson e;
    e["path"] = f.path.string();
    e["fields"] = ojson::object();
    for (const auto& [field, tag] : f.fields) e["fields"][field] = tag;
    files.push_back(e);
  }
  m["db_files"] = files;
  m["extra_lexicons"] = ojson::object();
  for (const auto& [tag, words] : c.mask.extra_lexicons) m["extra_lexicons"][tag] = words;
  j["mask"] = m;

  if (c.keep_domains) j["keep_domains"] = std::vector<std::string>(c.keep_domains->begin(), c.keep_domains->end());
  if (c.drop_domains) j["drop_domains"] = std::vector<std::string>(c.drop_domains->begin(), c.drop_domains->end());

  ojson r = reduction_json(c.reduce);
  r["enabled"] = c.reduce_enabled;
  j["reduce"] = r;
  ojson p = reduction_json(c.plot);
  p["label"] = c.plot_label;
  j["plot"] = p;

  j["cluster"]["min_cluster_size"] = c.cluster.min_cluster_size;
  j["cluster"]["min_samples"] = c.cluster.min_samples ? ojson(*c.cluster.min_samples) : ojson(nullptr);
  j["grid"]["min_samples"] = c.grid.min_samples;
  j["grid"]["min_cluster_size"] = c.grid.min_cluster_size;

  j["eval"]["levels"] = names(c.eval.levels, [](eval::Level l) { return eval::to_string(l); });
  j["eval"]["modes"] = names(c.eval.modes, [](eval::Mode m) { return eval::to_string(m); });
  j["eval"]["noise_policy"] = eval::to_string(c.eval.noise_policy);
  j["eval"]["bcubed"] = eval::to_string(c.eval.variant);

  j["summary"]["words"] = c.summary_words;
  j["summary"]["level"] = eval::to_string(c.summary_level);

  j["flows"]["source"] = eval::to_string(c.flows.source);
  j["flows"]["include_noise"] = c.flows.include_noise;
  j["flows"]["collapse_repeats"] = c.flows.collapse_repeats;
  j["flows"]["min_support"] = c.flows.min_support;
  j["flows"]["topk"] = c.flows.topk;
  j["flows"]["min_len"] = c.flows.min_len;
  j["flows"]["max_len"] = c.flows.max_len;
  j["flows"]["count"] = flows::to_string(c.flows.count);

  j["study"]["enabled"] = c.study.enabled;
  j["study"]["n_pairs"] = c.study.n_pairs;
  j["study"]["seed"] = c.study.seed;
  j["study"]["match"] = c.study.match == LabelMatch::identical ? "identical" : "intersecting";
  j["histogram_min_count"] = c.histogram_min_count;
  return j;
}

// ---------------------------------------------------------------------------
// Workspace

std::vector<std::string> Workspace::key_strings() const {
  std::vector<std::string> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(k.str());
  return out;
}

std::map<eval::Level, std::vector<LabelSet>> Workspace::annotations(std::span<const eval::Level> levels) const {
  std::map<eval::Level, std::vector<LabelSet>> out;
  for (eval::Level level : levels) {
    auto& v = out[level];
    v.reserve(utterances.size());
    for (const auto& u : utterances) v.push_back(eval::labels_at(u, level));
  }
  return out;
}

Gazetteer gazetteer_for(const MaskConfig& m) {
  if (m.gazetteer && fs::exists(*m.gazetteer)) {
    // The cache holds surface forms only; the digit rule comes from the config.
    Gazetteer g = load_gazetteer(*m.gazetteer);
    g.set_mask_digits(m.options.digits);
    return g;
  }
  Gazetteer g = build_gazetteer(m.db_files, m.extra_lexicons, m.options);
  if (m.gazetteer) write_gazetteer(g, *m.gazetteer);
  return g;
}

Workspace prepare(const Config& config) {
  Workspace ws;
  ws.config = config;
  if (config.corpus.empty()) throw UsageError("no corpus configured");
  ws.corpus = load_corpus(config.corpus);
  if (config.mask.enabled) ws.corpus = mask_corpus(ws.corpus, gazetteer_for(config.mask));

  for (auto& [key, u] : filter_utterances(ws.corpus, config.keep_domains, config.drop_domains)) {
    ws.keys.push_back(std::move(key));
    ws.utterances.push_back(std::move(u));
  }
  if (config.embeddings.empty() || config.keys.empty()) throw UsageError("no embedding matrix or keys file configured");
  ws.embeddings = load_embedding_file(config.embeddings, config.keys);
  ws.points = ws.embeddings.select(ws.key_strings());
  return ws;
}

Matrix clustering_space(const Workspace& ws) {
  if (!ws.config.reduce_enabled) return ws.points;
  return umap::reduce(ws.points, ws.config.reduce);
}

// ---------------------------------------------------------------------------
// Writers

void write_grid_csv(const GridResult& g, const fs::path& path) {
  csv::Writer w(path);
  w.row({"min_samples", "min_cluster_size", "relative_validity", "k", "optimal", "error"});
  for (const auto& c : g.cells)
    w.row({std::to_string(c.min_samples), std::to_string(c.min_cluster_size),
           c.validity ? csv::format_double(*c.validity) : "", std::to_string(c.k), c.optimal ? "1" : "0", c.error});
  w.close();
}

void write_eval_csv(const std::vector<EvalRow>& rows, const fs::path& path) {
  csv::Writer w(path);
  w.row({"level", "mode", "min_samples", "min_cluster_size", "P", "R", "M", "k", "error"});
  for (const auto& r : rows) {
    const auto f = [&](double v) { return r.scores ? csv::format_double(v) : std::string(); };
    w.row({std::string(eval::to_string(r.level)), std::string(eval::to_string(r.mode)), std::to_string(r.min_samples),
           std::to_string(r.min_cluster_size), f(r.scores ? r.scores->precision : 0.0),
           f(r.scores ? r.scores->recall : 0.0), f(r.scores ? r.scores->harmonic_mean : 0.0), std::to_string(r.k),
           r.error});
  }
  w.close();
}

void write_clusters_csv(const hdbscan::ClusterResult& r, std::span<const std::string> keys, const fs::path& path) {
  if (keys.size() != r.labels.size()) throw ParameterError("one key per clustered point required");
  const std::vector<int> soft = r.soft_labels();
  csv::Writer w(path);
  w.row({"key", "cluster", "probability", "outlier_score", "soft_cluster", "soft_probability"});
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double sp = soft[i] >= 0 ? r.memberships[i][static_cast<std::size_t>(soft[i])] : 0.0;
    w.row({keys[i], std::to_string(r.labels[i]), csv::format_double(r.probabilities[i]),
           csv::format_double(r.outlier_scores[i]), std::to_string(soft[i]), csv::format_double(sp)});
  }
  w.close();
}

std::vector<summarize::ClusterSummary> summarize_clusters(const hdbscan::ClusterResult& r, const Workspace& ws,
                                                          std::size_t n_words, eval::Level level) {
  std::map<int, std::vector<std::string>> texts;
  std::map<int, std::vector<LabelSet>> labels;
  for (std::size_t c = 0; c < r.k; ++c) texts[static_cast<int>(c)];
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    if (r.labels[i] < 0) continue;
    texts[r.labels[i]].push_back(ws.utterances[i].text);
    labels[r.labels[i]].push_back(eval::labels_at(ws.utterances[i], level));
  }
  const auto words = summarize::top_words(texts, n_words);
  std::vector<summarize::ClusterSummary> out;
  for (std::size_t c = 0; c < r.k; ++c) {
    const int id = static_cast<int>(c);
    out.push_back({id, texts[id].size(), r.persistence[c], words.at(id), summarize::reference_label(labels[id])});
  }
  return out;
}

std::vector<flows::SequentialPattern> mine_flows(const hdbscan::ClusterResult& r, const Workspace& ws,
                                                 const FlowConfig& f) {
  if (f.source == eval::Mode::soft_argmax && r.k == 0)
    throw UndefinedError("soft cluster assignment is undefined when no cluster was found");
  const std::vector<int> labels = f.source == eval::Mode::hard ? r.labels : r.soft_labels();
  std::unordered_map<std::string, int> assignment;
  for (std::size_t i = 0; i < ws.keys.size(); ++i) assignment.emplace(ws.keys[i].str(), labels[i]);

  flows::SequenceOptions so;
  so.include_noise = f.include_noise;
  so.collapse_repeats = f.collapse_repeats;
  // Utterances removed by the domain filter have no assignment by design.
  so.skip_unassigned = ws.config.keep_domains.has_value() || ws.config.drop_domains.has_value();
  const flows::SequenceDB db = flows::build_sequence_db(ws.corpus, assignment, so);

  const flows::MiningOptions mo{f.min_len, f.max_len, f.count};
  if (f.topk == 0) return flows::frequent(db, f.min_support, mo);
  auto top = flows::topk(db, f.topk, mo);
  std::erase_if(top, [&](const flows::SequentialPattern& p) { return p.support < f.min_support; });
  return top;
}

void emit_plot_data(const Matrix& coords, std::span<const std::string> labels, std::span<const std::string> keys,
                    const fs::path& path) {
  if (coords.cols() != 2)
    throw ParameterError("plot data needs 2-D coordinates; got " + std::to_string(coords.cols()) + " columns");
  if (labels.size() != coords.rows() || keys.size() != coords.rows())
    throw ParameterError("plot data needs one label and one key per point");
  csv::Writer w(path);
  w.row({"x", "y", "label", "key"});
  for (std::size_t i = 0; i < coords.rows(); ++i)
    w.row({csv::format_double(coords(i, 0), 12), csv::format_double(coords(i, 1), 12), labels[i], keys[i]});
  w.close();
}

// ---------------------------------------------------------------------------
// End to end

StageError::StageError(std::string stage, const std::exception& cause, bool validation)
    : Error("stage '" + stage + "' failed: " + cause.what()), stage_(std::move(stage)), validation_(validation) {}

namespace {

std::string join_labels(const LabelSet& s) {
  if (s.empty()) return std::string(summarize::kNoneLabel);
  std::string out;
  for (const auto& l : s) {
    if (!out.empty()) out += ' ';
    out += l;
  }
  return out;
}

ojson stats_json(const Corpus& corpus, std::size_t min_count) {
  const CorpusStats s = corpus_stats(corpus);
  ojson j;
  j["n_dialogues"] = s.n_dialogues;
  j["n_utterances"] = s.n_utterances;
  j["n_single_domain"] = s.n_single_domain;
  j["n_multi_domain"] = s.n_multi_domain;
  j["mean_turns_single_domain"] = s.mean_turns_single_domain ? ojson(*s.mean_turns_single_domain) : ojson(nullptr);
  j["mean_turns_multi_domain"] = s.mean_turns_multi_domain ? ojson(*s.mean_turns_multi_domain) : ojson(nullptr);
  ojson h = ojson::array();
  for (const auto& [combo, count] : domain_combination_histogram(corpus, min_count)) {
    ojson e;
    e["domains"] = combo;
    e["count"] = count;
    h.push_back(e);
  }
  j["domain_histogram"] = h;
  return j;
}

void write_text(const fs::path& path, const std::string& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << s;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

PipelineReport run_pipeline(const Config& config) {
  PipelineReport report;
  report.output_dir = config.output_dir;
  std::string failed_stage;
  std::string failure;

  auto record = [&](const std::string& name) { report.artifacts[name] = sha256_file(config.output_dir / name); };
  auto notice = [&](std::string msg) {
    log::info(msg);
    report.notices.push_back(std::move(msg));
  };
  auto write_manifest = [&] {
    ojson m;
    m["tool"] = "intentflow";
    m["status"] = failed_stage.empty() ? "complete" : "partial";
    if (!failed_stage.empty()) {
      m["failed_stage"] = failed_stage;
      m["error"] = failure;
    }
    m["config"] = to_json(config);
    ojson inputs;
    for (const auto& [name, p] : {std::pair<std::string, fs::path>{"corpus", config.corpus},
                                  {"embeddings", config.embeddings}, {"keys", config.keys}})
      inputs[name] = fs::exists(p) ? ojson(sha256_file(p)) : ojson(nullptr);
    m["inputs"] = inputs;
    if (report.best_cell) {
      const auto& c = report.grid.cells[*report.best_cell];
      m["best"]["min_samples"] = c.min_samples;
      m["best"]["min_cluster_size"] = c.min_cluster_size;
      m["best"]["relative_validity"] = *c.validity;
      m["best"]["k"] = c.k;
    }
    m["artifacts"] = ojson::object();
    for (const auto& [name, hash] : report.artifacts) m["artifacts"][name] = hash;
    m["notices"] = report.notices;
    write_text(config.output_dir / "manifest.json", m.dump(2) + "\n");
  };

  std::string stage;
  auto with_stage = [&](std::string name, const std::function<void()>& body) {
    stage = std::move(name);
    body();
  };

  try {
    fs::create_directories(config.output_dir);
    Workspace ws;
    with_stage("prepare", [&] { ws = prepare(config); });
    if (ws.utterances.empty()) throw ValidationError("no utterances left after the domain filter");

    with_stage("stats", [&] {
      write_text(config.output_dir / "stats.json", stats_json(ws.corpus, config.histogram_min_count).dump(2) + "\n");
      record("stats.json");
    });

    if (config.study.enabled)
      with_stage("study", [&] {
        report.study = pair_similarity_study(ws.corpus, ws.embeddings, config.study.n_pairs, config.study.seed,
                                             config.study.match);
        write_study_csv(*report.study, config.output_dir / "study.csv");
        write_study_summary(*report.study, config.output_dir / "study.json");
        record("study.csv");
        record("study.json");
      });

    Matrix space;
    with_stage("reduce", [&] { space = clustering_space(ws); });

    EvalInputs inputs;
    inputs.config = config.eval;
    const auto all = ws.annotations(config.eval.levels);
    for (const auto& [level, ann] : all) {
      const bool any = std::any_of(ann.begin(), ann.end(), [](const LabelSet& s) { return !s.empty(); });
      if (any) inputs.annotations.emplace(level, ann);
      else notice("evaluation at level '" + std::string(eval::to_string(level)) + "' skipped: corpus has no annotations");
    }

    with_stage("grid", [&] {
      report.grid = grid_search(space, config.grid, inputs.annotations.empty() ? nullptr : &inputs);
      write_grid_csv(report.grid, config.output_dir / "grid.csv");
      record("grid.csv");
      if (!inputs.annotations.empty()) {
        std::vector<EvalRow> rows;
        for (const auto& c : report.grid.cells) rows.insert(rows.end(), c.eval.begin(), c.eval.end());
        write_eval_csv(rows, config.output_dir / "eval.csv");
        record("eval.csv");
      }
      report.best_cell = report.grid.best();
      if (!report.best_cell) throw UndefinedError("no grid cell produced a clustering");
    });

    const GridCell& best = report.grid.cells[*report.best_cell];
    hdbscan::ClusterResult result;
    const auto keys = ws.key_strings();
    with_stage("cluster", [&] {
      result = run_cell(space, best.min_samples, best.min_cluster_size);
      write_clusters_csv(result, keys, config.output_dir / "clusters.csv");
      record("clusters.csv");
    });

    with_stage("summarize", [&] {
      summarize::write_summary_csv(summarize_clusters(result, ws, config.summary_words, config.summary_level),
                                   config.output_dir / "summary.csv");
      record("summary.csv");
    });

    with_stage("flows", [&] {
      flows::write_flows_csv(mine_flows(result, ws, config.flows), config.flows.count, config.output_dir / "flows.csv");
      record("flows.csv");
    });

    with_stage("plot", [&] {
      const Matrix coords = umap::reduce(ws.points, config.plot);
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < ws.utterances.size(); ++i) {
        if (config.plot_label == "cluster") labels.push_back(std::to_string(result.labels[i]));
        else
          labels.push_back(join_labels(eval::labels_at(
              ws.utterances[i], config.plot_label == "domain" ? eval::Level::domain : eval::Level::intent)));
      }
      emit_plot_data(coords, labels, keys, config.output_dir / "plot2d.csv");
      record("plot2d.csv");
    });
  } catch (const std::exception& e) {
    failed_stage = stage.empty() ? "setup" : stage;
    failure = e.what();
    const auto* err = dynamic_cast<const Error*>(&e);
    const bool validation = err != nullptr && err->is_validation();
    try {
      if (fs::exists(config.output_dir)) write_manifest();
    } catch (const std::exception&) {
    }
    throw StageError(failed_stage, e, validation);
  }
  write_manifest();
  return report;
}

PipelineReport run_pipeline(const fs::path& config_path) { return run_pipeline(load_config(config_path)); }

}  // namespace intentflow::pipeline
