#ifndef TANNIN_EXPERIMENT_HPP
#define TANNIN_EXPERIMENT_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tannin/baselines.hpp"
#include "tannin/dataset.hpp"
#include "tannin/error.hpp"
#include "tannin/metrics.hpp"
#include "tannin/model.hpp"
#include "tannin/nn.hpp"
#include "tannin/preprocess.hpp"
#include "tannin/rng.hpp"
#include "tannin/stats.hpp"

namespace tannin {

inline constexpr const char* kLibraryVersion = "1.0.0";
inline constexpr int kManifestVersion = 1;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Everything a command needs, resolved from defaults, the config file, and
/// flag overrides (in that order of increasing precedence). The data path
/// falls back to the TANNIN_DATA environment variable.
struct ExperimentConfig {
  std::string data_path;
  std::string out_dir = "out";
  std::optional<std::uint32_t> seed;  // mandatory: no implicit randomness
  double test_fraction = 0.2;
  bool stratified = true;

  nn::Variant variant = nn::Variant::Cnn;
  double dropout_rate = 0.3;
  nn::TrainConfig train;

  baselines::BaselineSpec knn, lr, rf, svm;
  std::size_t num_seeds = 1;  // ablate only: runs per variant
  bool parallel = false;

  ExperimentConfig() {
    knn.kind = baselines::Kind::Knn;
    lr.kind = baselines::Kind::LogisticRegression;
    rf.kind = baselines::Kind::RandomForest;
    svm.kind = baselines::Kind::LinearSvm;
  }

  void validate() const {
    if (!seed) throw ConfigError("config: seed is required");
    if (data_path.empty())
      throw ConfigError("config: no data path (set data=, --data, or TANNIN_DATA)");
    if (!std::filesystem::exists(data_path))
      throw ConfigError("config: data path not found: " + data_path);
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
      throw ConfigError("config: test_fraction must lie in (0,1)");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw ConfigError("config: dropout_rate must lie in [0,1)");
    if (train.epochs == 0) throw ConfigError("config: epochs must be >= 1");
    if (train.batch_size == 0) throw ConfigError("config: batch_size must be >= 1");
    if (train.learning_rate <= 0.0) throw ConfigError("config: learning_rate must be > 0");
    if (train.optimizer != "adam" && train.optimizer != "sgd")
      throw ConfigError("config: optimizer must be adam or sgd");
    if (num_seeds == 0) throw ConfigError("config: seeds must be >= 1");
    knn.validate();
    lr.validate();
    rf.validate();
    svm.validate();
  }

  SplitSpec split_spec() const { return SplitSpec{test_fraction, *seed, stratified}; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + ": not a number: " + value);
  }
  if (pos != value.size()) throw ConfigError("config: " + key + ": not a number: " + value);
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + ": not a non-negative integer: " + value);
  }
  if (pos != value.size() || value.front() == '-')
    throw ConfigError("config: " + key + ": not a non-negative integer: " + value);
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: " + key + ": not a boolean: " + value);
}

// FNV-1a, used to give each named model its own deterministic seed stream.
inline std::uint32_t name_stream(const std::string& name) {
  std::uint32_t h = 2166136261u;
  for (const unsigned char c : name) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

}  // namespace detail

/// Applies one key=value setting; throws ConfigError on unknown keys or
/// malformed values. The schema is documented in configs/default.conf.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key,
                          const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_unsigned;
  if (key == "data") {
    cfg.data_path = value;
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint32_t>(parse_unsigned(key, value));
  } else if (key == "test_fraction") {
    cfg.test_fraction = parse_double(key, value);
  } else if (key == "stratified") {
    cfg.stratified = parse_bool(key, value);
  } else if (key == "variant") {
    cfg.variant = nn::variant_from_string(value);
  } else if (key == "dropout_rate") {
    cfg.dropout_rate = parse_double(key, value);
  } else if (key == "epochs") {
    cfg.train.epochs = parse_unsigned(key, value);
  } else if (key == "batch_size") {
    cfg.train.batch_size = parse_unsigned(key, value);
  } else if (key == "learning_rate") {
    cfg.train.learning_rate = parse_double(key, value);
  } else if (key == "optimizer") {
    cfg.train.optimizer = value;
  } else if (key == "seeds") {
    cfg.num_seeds = parse_unsigned(key, value);
  } else if (key == "parallel") {
    cfg.parallel = parse_bool(key, value);
  } else if (key == "knn_k") {
    cfg.knn.k = parse_unsigned(key, value);
  } else if (key == "lr_l2") {
    cfg.lr.lr_l2 = parse_double(key, value);
  } else if (key == "lr_learning_rate") {
    cfg.lr.lr_learning_rate = parse_double(key, value);
  } else if (key == "lr_epochs") {
    cfg.lr.lr_epochs = parse_unsigned(key, value);
  } else if (key == "rf_trees") {
    cfg.rf.rf_trees = parse_unsigned(key, value);
  } else if (key == "rf_max_depth") {
    cfg.rf.rf_max_depth = parse_unsigned(key, value);
  } else if (key == "rf_min_leaf") {
    cfg.rf.rf_min_leaf = parse_unsigned(key, value);
  } else if (key == "svm_c") {
    cfg.svm.svm_c = parse_double(key, value);
  } else if (key == "svm_learning_rate") {
    cfg.svm.svm_learning_rate = parse_double(key, value);
  } else if (key == "svm_epochs") {
    cfg.svm.svm_epochs = parse_unsigned(key, value);
  } else {
    throw ConfigError("config: unknown key: " + key);
  }
}

/// key=value file, one per line; '#' starts a comment; blank lines ignored.
inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

struct CliOptions {
  std::string command;
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

/// tannin <analyze|train|compare|ablate> [--config F] [--data P] [--seed N]
///        [--out D] [--variant V] [--seeds N]
inline CliOptions parse_cli(int argc, const char* const* argv) {
  CliOptions opts;
  if (argc < 2)
    throw ConfigError("usage: tannin <analyze|train|compare|ablate> [flags]");
  opts.command = argv[1];
  if (opts.command != "analyze" && opts.command != "train" && opts.command != "compare" &&
      opts.command != "ablate")
    throw ConfigError("unknown command: " + opts.command);
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    if (i + 1 >= argc) throw ConfigError("flag needs a value: " + flag);
    const std::string value = argv[++i];
    if (flag == "--config")
      opts.config_path = value;
    else if (flag == "--data")
      opts.overrides.emplace_back("data", value);
    else if (flag == "--seed")
      opts.overrides.emplace_back("seed", value);
    else if (flag == "--out")
      opts.overrides.emplace_back("out", value);
    else if (flag == "--variant")
      opts.overrides.emplace_back("variant", value);
    else if (flag == "--seeds")
      opts.overrides.emplace_back("seeds", value);
    else
      throw ConfigError("unknown flag: " + flag);
  }
  return opts;
}

inline ExperimentConfig make_config(const CliOptions& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) load_config_file(cfg, opts.config_path);
  for (const auto& [key, value] : opts.overrides) apply_setting(cfg, key, value);
  if (cfg.data_path.empty())
    if (const char* env = std::getenv("TANNIN_DATA")) cfg.data_path = env;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

}  // namespace detail

inline void write_correlation_csv(const CorrelationMatrix& cm, const std::string& path) {
  std::ostringstream os;
  os << "feature";
  for (const auto& label : cm.labels) os << ',' << label;
  os << '\n';
  for (std::size_t i = 0; i < cm.values.rows(); ++i) {
    os << cm.labels[i];
    for (std::size_t j = 0; j < cm.values.cols(); ++j)
      os << ',' << detail::format_full(cm.values(i, j));
    os << '\n';
  }
  detail::write_text(path, os.str());
}

inline CorrelationMatrix load_correlation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty");
  CorrelationMatrix cm;
  {
    std::istringstream header(line);
    std::string field;
    std::getline(header, field, ',');  // corner cell
    while (std::getline(header, field, ',')) cm.labels.push_back(field);
  }
  const std::size_t d = cm.labels.size();
  cm.values = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::getline(in, line)) throw DataError(path + ": truncated");
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');  // row label
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::getline(row, field, ',')) throw DataError(path + ": short row");
      cm.values(i, j) = std::stod(field);
    }
  }
  return cm;
}

namespace detail {

// Fixed diverging scale over [-1,1]: blue at -1, white at 0, red at +1.
inline std::string heat_color(double v) {
  v = std::clamp(v, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (v >= 0.0) {
    g = b = static_cast<int>(std::lround(255.0 * (1.0 - v)));
  } else {
    r = g = static_cast<int>(std::lround(255.0 * (1.0 + v)));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

/// Annotated heatmap with one cell per matrix entry; colors come from the
/// fixed scale so the file is byte-stable across runs.
inline void write_heatmap_svg(const CorrelationMatrix& cm, const std::string& path) {
  const std::size_t d = cm.values.rows();
  const int cell = 56, left = 150, top = 150;
  const int width = left + cell * static_cast<int>(d) + 10;
  const int height = top + cell * static_cast<int>(d) + 10;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" font-family=\"monospace\" font-size=\"12\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  for (std::size_t j = 0; j < d; ++j) {
    const int x = left + static_cast<int>(j) * cell + cell / 2;
    os << "<text x=\"" << x << "\" y=\"" << top - 8 << "\" text-anchor=\"start\" "
       << "transform=\"rotate(-60 " << x << ' ' << top - 8 << ")\">" << cm.labels[j]
       << "</text>\n";
  }
  for (std::size_t i = 0; i < d; ++i) {
    const int y = top + static_cast<int>(i) * cell + cell / 2 + 4;
    os << "<text x=\"" << left - 8 << "\" y=\"" << y << "\" text-anchor=\"end\">"
       << cm.labels[i] << "</text>\n";
    for (std::size_t j = 0; j < d; ++j) {
      const double v = cm.values(i, j);
      const int x = left + static_cast<int>(j) * cell;
      char label[16];
      std::snprintf(label, sizeof label, "%.2f", v);
      os << "<rect x=\"" << x << "\" y=\"" << top + static_cast<int>(i) * cell
         << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
         << detail::heat_color(v) << "\" stroke=\"#808080\"/>\n";
      os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y << "\" text-anchor=\"middle\""
         << (std::abs(v) > 0.6 ? " fill=\"white\"" : "") << ">" << label << "</text>\n";
    }
  }
  os << "</svg>\n";
  detail::write_text(path, os.str());
}

// ---------------------------------------------------------------------------
// JSON snapshots
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const MetricsReport& rep) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, m] : rep.per_class)
    per_class[std::to_string(cls)] = {{"precision", m.precision},
                                      {"recall", m.recall},
                                      {"f1", m.f1},
                                      {"support", m.support}};
  return {{"accuracy", rep.accuracy},
          {"macro_precision", rep.macro_precision},
          {"macro_recall", rep.macro_recall},
          {"macro_f1", rep.macro_f1},
          {"per_class", std::move(per_class)}};
}

inline nlohmann::json baseline_spec_to_json(const baselines::BaselineSpec& s) {
  using baselines::Kind;
  nlohmann::json j{{"kind", baselines::to_string(s.kind)}, {"seed", s.seed}};
  switch (s.kind) {
    case Kind::Knn:
      j["k"] = s.k;
      break;
    case Kind::LogisticRegression:
      j["l2"] = s.lr_l2;
      j["learning_rate"] = s.lr_learning_rate;
      j["epochs"] = s.lr_epochs;
      break;
    case Kind::RandomForest:
      j["trees"] = s.rf_trees;
      j["max_depth"] = s.rf_max_depth;
      j["min_leaf"] = s.rf_min_leaf;
      j["bootstrap"] = s.rf_bootstrap;
      j["feature_subsample"] = s.rf_feature_subsample;
      break;
    case Kind::LinearSvm:
      j["c"] = s.svm_c;
      j["learning_rate"] = s.svm_learning_rate;
      j["epochs"] = s.svm_epochs;
      break;
  }
  return j;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  return {{"data", cfg.data_path},
          {"out", cfg.out_dir},
          {"seed", *cfg.seed},
          {"test_fraction", cfg.test_fraction},
          {"stratified", cfg.stratified},
          {"variant", nn::to_string(cfg.variant)},
          {"dropout_rate", cfg.dropout_rate},
          {"epochs", cfg.train.epochs},
          {"batch_size", cfg.train.batch_size},
          {"learning_rate", cfg.train.learning_rate},
          {"optimizer", cfg.train.optimizer},
          {"seeds", cfg.num_seeds},
          {"parallel", cfg.parallel},
          {"baselines",
           {{"knn", baseline_spec_to_json(cfg.knn)},
            {"lr", baseline_spec_to_json(cfg.lr)},
            {"rf", baseline_spec_to_json(cfg.rf)},
            {"svm", baseline_spec_to_json(cfg.svm)}}}};
}

inline nlohmann::json ordering_to_json(const FeatureOrdering& ord) {
  return {{"permutation", ord.permutation}, {"score", ord.score}};
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path ensure_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory: " + cfg.out_dir);
  return dir;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path.string(), j.dump(2) + "\n");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

struct AnalyzeResult {
  CorrelationMatrix correlation;
  PcaResult pca;
  std::vector<std::pair<std::string, ShapiroResult>> shapiro;
};

/// Correlation CSV + SVG heatmap (features plus quality), PCA importance
/// JSON, and per-feature Shapiro-Wilk JSON.
inline AnalyzeResult cmd_analyze(const ExperimentConfig& cfg) {
  const auto dir = detail::ensure_out_dir(cfg);
  const Dataset ds = load_dataset(cfg.data_path);

  AnalyzeResult res;
  res.correlation = correlation_matrix(ds, /*include_label=*/true);
  write_correlation_csv(res.correlation, (dir / "correlation.csv").string());
  write_heatmap_svg(res.correlation, (dir / "heatmap.svg").string());

  res.pca = pca(ds, /*standardize=*/true);
  nlohmann::json pj{{"standardized", true},
                    {"features", std::vector<std::string>(ds.column_names.begin(),
                                                          ds.column_names.end() - 1)},
                    {"importance", res.pca.importance},
                    {"explained_variance", res.pca.explained_variance},
                    {"explained_variance_ratio", res.pca.explained_variance_ratio}};
  detail::write_json(dir / "pca.json", pj);

  nlohmann::json features = nlohmann::json::array();
  for (std::size_t j = 0; j < ds.feature_count(); ++j) {
    const ShapiroResult sw = shapiro_wilk(ds.feature_column(j));
    res.shapiro.emplace_back(ds.column_names[j], sw);
    features.push_back({{"name", ds.column_names[j]},
                        {"W", sw.w_statistic},
                        {"p", sw.p_value},
                        {"normal_at_0.05", sw.p_value >= 0.05}});
  }
  detail::write_json(dir / "shapiro.json", nlohmann::json{{"alpha", 0.05}, {"features", features}});
  return res;
}

struct TrainResult {
  std::vector<nn::EpochStats> history;
  MetricsReport test_report;
  std::string table;
};

/// Fits scaler + ordering on the training split, trains the configured
/// variant, and writes checkpoint.json, history.csv, and report.json.
inline TrainResult cmd_train(const ExperimentConfig& cfg) {
  const auto dir = detail::ensure_out_dir(cfg);
  const Dataset ds = load_dataset(cfg.data_path);
  const auto [train, test] = split(ds, cfg.split_spec());

  nn::ModelSpec spec;
  spec.variant = cfg.variant;
  spec.dropout_rate = cfg.dropout_rate;
  spec.seed = derive_seed(*cfg.seed, detail::name_stream(nn::to_string(cfg.variant)));
  TrainedModel model = build_model(spec, ds.feature_count());
  fit_preprocessing(model, train);

  nn::TrainConfig tc = cfg.train;
  tc.seed = spec.seed;
  TrainResult res;
  res.history = train_model(model, train, tc);

  std::ostringstream hist;
  hist << "epoch,loss,train_accuracy\n";
  for (const auto& e : res.history)
    hist << e.epoch << ',' << detail::format_full(e.loss) << ','
         << detail::format_full(e.train_accuracy) << '\n';
  detail::write_text((dir / "history.csv").string(), hist.str());

  save_checkpoint(model, (dir / "checkpoint.json").string(), ds.feature_count());

  const auto [pred, probs] = predict(model, test);
  res.test_report = report(confusion(test.labels(), pred));
  res.table = metrics_table({{nn::to_string(cfg.variant), res.test_report}});

  detail::write_json(dir / "report.json",
                     nlohmann::json{{"manifest_version", kManifestVersion},
                                    {"library_version", kLibraryVersion},
                                    {"command", "train"},
                                    {"config", config_to_json(cfg)},
                                    {"feature_ordering", ordering_to_json(model.ordering)},
                                    {"model", nn::to_string(cfg.variant)},
                                    {"test", report_to_json(res.test_report)}});
  return res;
}

struct RunManifest {
  nlohmann::json manifest;
  nlohmann::json timings;
  std::string table;
};

namespace detail {

template <typename Fn>
auto run_models(bool parallel, const std::vector<std::string>& names, Fn&& fit) {
  using Result = decltype(fit(names.front()));
  std::vector<Result> results(names.size());
  if (parallel) {
    std::vector<std::future<Result>> futures;
    futures.reserve(names.size());
    for (const auto& name : names)
      futures.push_back(std::async(std::launch::async, [&fit, name] { return fit(name); }));
    for (std::size_t i = 0; i < names.size(); ++i) results[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < names.size(); ++i) results[i] = fit(names[i]);
  }
  return results;
}

}  // namespace detail

/// Table 1 analogue: kNN, SVM, LR, RF, and the 1DCNN on one shared split.
inline RunManifest cmd_compare(const ExperimentConfig& cfg) {
  const auto dir = detail::ensure_out_dir(cfg);
  const Dataset ds = load_dataset(cfg.data_path);
  const auto [train, test] = split(ds, cfg.split_spec());

  const ScalerParams scaler = fit_scaler(train);
  const Matrix x_train = transform(scaler, train);
  const Matrix x_test = transform(scaler, test);
  const std::vector<int> y_train = train.labels();
  const std::vector<int> y_test = test.labels();
  const FeatureOrdering ordering = reorder_features(correlation_matrix(train, false));

  const std::vector<std::string> names{"kNN", "SVM", "LR", "RF", "1DCNN"};
  struct ModelRun {
    nlohmann::json spec;
    MetricsReport test_report;
    double seconds = 0.0;
  };

  auto fit_one = [&](const std::string& name) -> ModelRun {
    const detail::Stopwatch clock;
    const std::uint32_t seed = derive_seed(*cfg.seed, detail::name_stream(name));
    try {
      ModelRun run;
      if (name == "1DCNN") {
        nn::ModelSpec spec;
        spec.variant = nn::Variant::Cnn;
        spec.dropout_rate = cfg.dropout_rate;
        spec.seed = seed;
        TrainedModel model = build_model(spec, ds.feature_count());
        model.scaler = scaler;
        model.ordering = ordering;
        model.preprocessing_fit = true;
        nn::TrainConfig tc = cfg.train;
        tc.seed = seed;
        train_model(model, train, tc);
        const auto [pred, probs] = predict(model, test);
        run.spec = spec_to_json(model.spec);
        run.test_report = report(confusion(y_test, pred));
      } else {
        baselines::BaselineSpec spec = name == "kNN"  ? cfg.knn
                                       : name == "SVM" ? cfg.svm
                                       : name == "LR"  ? cfg.lr
                                                       : cfg.rf;
        spec.seed = seed;
        const auto clf = baselines::fit_baseline(spec, x_train, y_train);
        run.spec = baseline_spec_to_json(spec);
        run.test_report = report(confusion(y_test, clf->predict(x_test)));
      }
      run.seconds = clock.seconds();
      return run;
    } catch (const ConfigError& e) {
      throw ConfigError(name + ": " + e.what());
    } catch (const TrainError& e) {
      throw TrainError(name + ": " + e.what());
    }
  };

  const auto runs = detail::run_models(cfg.parallel, names, fit_one);

  RunManifest out;
  std::vector<std::pair<std::string, MetricsReport>> rows;
  nlohmann::json models = nlohmann::json::object();
  out.timings = {{"command", "compare"}, {"seconds", nlohmann::json::object()}};
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows.emplace_back(names[i], runs[i].test_report);
    models[names[i]] = {{"spec", runs[i].spec},
                        {"test", report_to_json(runs[i].test_report)}};
    out.timings["seconds"][names[i]] = runs[i].seconds;
  }
  out.table = metrics_table(rows);
  out.manifest = {{"manifest_version", kManifestVersion},
                  {"library_version", kLibraryVersion},
                  {"command", "compare"},
                  {"config", config_to_json(cfg)},
                  {"feature_ordering", ordering_to_json(ordering)},
                  {"models", std::move(models)}};
  detail::write_json(dir / "manifest.json", out.manifest);
  detail::write_json(dir / "timings.json", out.timings);
  detail::write_text((dir / "table.txt").string(), out.table);
  return out;
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline std::string cell(double m, double s, bool with_std) {
  char buf[32];
  if (with_std)
    std::snprintf(buf, sizeof buf, "%.3f±%.3f", m, s);
  else
    std::snprintf(buf, sizeof buf, "%.3f", m);
  return buf;
}

}  // namespace detail

/// Table 2 analogue: DNN-D, DNN, 1DCNN-D, 1DCNN on one shared split with
/// shared scaler and ordering, plus the per-variant generalization gap.
/// With num_seeds > 1, metrics are aggregated as mean ± sample std.
inline RunManifest cmd_ablate(const ExperimentConfig& cfg) {
  const auto dir = detail::ensure_out_dir(cfg);
  const Dataset ds = load_dataset(cfg.data_path);
  const auto [train, test] = split(ds, cfg.split_spec());

  const ScalerParams scaler = fit_scaler(train);
  const FeatureOrdering ordering = reorder_features(correlation_matrix(train, false));
  const std::vector<int> y_train = train.labels();
  const std::vector<int> y_test = test.labels();

  const std::vector<std::string> names{"DNN-D", "DNN", "1DCNN-D", "1DCNN"};
  struct VariantRun {
    nlohmann::json spec;
    std::vector<nlohmann::json> runs;
    std::vector<double> precision, accuracy, recall, f1, gap;
    double seconds = 0.0;
  };

  auto fit_one = [&](const std::string& name) -> VariantRun {
    const detail::Stopwatch clock;
    VariantRun vr;
    try {
      for (std::size_t r = 0; r < cfg.num_seeds; ++r) {
        const std::uint32_t run_seed =
            derive_seed(derive_seed(*cfg.seed, static_cast<std::uint32_t>(r)),
                        detail::name_stream(name));
        nn::ModelSpec spec;
        spec.variant = nn::variant_from_string(name);
        spec.dropout_rate = cfg.dropout_rate;
        spec.seed = run_seed;
        TrainedModel model = build_model(spec, ds.feature_count());
        model.scaler = scaler;
        model.ordering = ordering;
        model.preprocessing_fit = true;
        nn::TrainConfig tc = cfg.train;
        tc.seed = run_seed;
        train_model(model, train, tc);
        vr.spec = spec_to_json(model.spec);

        const auto [train_pred, tp] = predict(model, train);
        const auto [test_pred, sp] = predict(model, test);
        const MetricsReport train_rep = report(confusion(y_train, train_pred));
        const MetricsReport test_rep = report(confusion(y_test, test_pred));
        const double gap = train_rep.accuracy - test_rep.accuracy;
        vr.precision.push_back(test_rep.macro_precision);
        vr.accuracy.push_back(test_rep.accuracy);
        vr.recall.push_back(test_rep.macro_recall);
        vr.f1.push_back(test_rep.macro_f1);
        vr.gap.push_back(gap);
        vr.runs.push_back({{"seed", run_seed},
                           {"train_accuracy", train_rep.accuracy},
                           {"generalization_gap", gap},
                           {"test", report_to_json(test_rep)}});
      }
      vr.seconds = clock.seconds();
      return vr;
    } catch (const ConfigError& e) {
      throw ConfigError(name + ": " + e.what());
    } catch (const TrainError& e) {
      throw TrainError(name + ": " + e.what());
    }
  };

  const auto runs = detail::run_models(cfg.parallel, names, fit_one);

  const bool multi = cfg.num_seeds > 1;
  const int w = multi ? 14 : 11;
  std::ostringstream table;
  table << std::left << std::setw(10) << "Model" << std::right << std::setw(w) << "Precision"
        << std::setw(w) << "Accuracy" << std::setw(w) << "Recall" << std::setw(w) << "F1-Score"
        << std::setw(w) << "Gap" << '\n';

  RunManifest out;
  nlohmann::json models = nlohmann::json::object();
  out.timings = {{"command", "ablate"}, {"seconds", nlohmann::json::object()}};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const VariantRun& vr = runs[i];
    using detail::mean_of;
    using detail::std_of;
    table << std::left << std::setw(10) << names[i] << std::right;
    for (const auto* v : {&vr.precision, &vr.accuracy, &vr.recall, &vr.f1, &vr.gap}) {
      std::string c = detail::cell(mean_of(*v), std_of(*v), multi);
      // "±" is two bytes; pad so columns stay visually aligned.
      table << std::setw(w + (multi ? 1 : 0)) << c;
    }
    table << '\n';
    nlohmann::json agg{{"mean",
                        {{"precision", mean_of(vr.precision)},
                         {"accuracy", mean_of(vr.accuracy)},
                         {"recall", mean_of(vr.recall)},
                         {"f1", mean_of(vr.f1)},
                         {"generalization_gap", mean_of(vr.gap)}}},
                       {"std",
                        {{"precision", std_of(vr.precision)},
                         {"accuracy", std_of(vr.accuracy)},
                         {"recall", std_of(vr.recall)},
                         {"f1", std_of(vr.f1)},
                         {"generalization_gap", std_of(vr.gap)}}}};
    models[names[i]] = {{"spec", vr.spec}, {"runs", vr.runs}, {"aggregate", std::move(agg)}};
    out.timings["seconds"][names[i]] = vr.seconds;
  }
  out.table = table.str();
  out.manifest = {{"manifest_version", kManifestVersion},
                  {"library_version", kLibraryVersion},
                  {"command", "ablate"},
                  {"config", config_to_json(cfg)},
                  {"feature_ordering", ordering_to_json(ordering)},
                  {"models", std::move(models)}};
  detail::write_json(dir / "manifest.json", out.manifest);
  detail::write_json(dir / "timings.json", out.timings);
  detail::write_text((dir / "table.txt").string(), out.table);
  return out;
}

}  // namespace tannin

#endif  // TANNIN_EXPERIMENT_HPP
