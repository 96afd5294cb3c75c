#ifndef TANNIN_MODEL_HPP
#define TANNIN_MODEL_HPP

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tannin/dataset.hpp"
#include "tannin/error.hpp"
#include "tannin/nn.hpp"
#include "tannin/preprocess.hpp"
#include "tannin/stats.hpp"

namespace tannin {

/// A network together with the preprocessing it was fit with. The scaler and
/// feature ordering always come from the training partition.
struct TrainedModel {
  nn::ModelSpec spec;
  nn::Model net;
  FeatureOrdering ordering;
  ScalerParams scaler;
  bool preprocessing_fit = false;

  Matrix preprocess(const Dataset& data) const {
    Matrix z = transform(scaler, data);
    return apply_ordering(ordering, z);
  }
};

/// Builds an initialized model for a variant. Preprocessing is fit later by
/// fit_preprocessing / train_model.
inline TrainedModel build_model(const nn::ModelSpec& spec, std::size_t input_dim = 11) {
  TrainedModel m;
  m.net = nn::build_network(spec, input_dim);
  m.spec = m.net.spec();
  return m;
}

inline TrainedModel build_model(nn::Variant variant, unsigned int seed,
                                std::size_t input_dim = 11) {
  nn::ModelSpec spec;
  spec.variant = variant;
  spec.seed = seed;
  return build_model(spec, input_dim);
}

/// Fits scaler and correlation-driven ordering on the training partition.
inline void fit_preprocessing(TrainedModel& model, const Dataset& train) {
  model.scaler = fit_scaler(train);
  const CorrelationMatrix corr = correlation_matrix(train, /*include_label=*/false);
  model.ordering = reorder_features(corr);
  model.preprocessing_fit = true;
}

inline std::vector<nn::EpochStats> train_model(TrainedModel& model, const Dataset& train,
                                               const nn::TrainConfig& config) {
  if (!model.preprocessing_fit)
    throw TrainError("train_model: scaler and ordering must be fit before training");
  const Matrix x = model.preprocess(train);
  return nn::train_network(model.net, x, train.labels(), config);
}

inline std::pair<std::vector<int>, Tensor> predict(TrainedModel& model, const Dataset& data) {
  return nn::predict_network(model.net, model.preprocess(data));
}

// ---------------------------------------------------------------------------
// Versioned JSON checkpoints
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json spec_to_json(const nn::ModelSpec& spec) {
  nlohmann::json j;
  j["variant"] = nn::to_string(spec.variant);
  if (spec.conv)
    j["conv"] = {{"num_filters", spec.conv->num_filters},
                 {"kernel_width", spec.conv->kernel_width},
                 {"stride", spec.conv->stride}};
  j["dense_sizes"] = spec.dense_sizes;
  j["num_classes"] = spec.num_classes;
  j["dropout_rate"] = spec.dropout_rate;
  j["use_batchnorm"] = spec.use_batchnorm;
  j["seed"] = spec.seed;
  return j;
}

inline nn::ModelSpec spec_from_json(const nlohmann::json& j) {
  nn::ModelSpec spec;
  spec.variant = nn::variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("conv")) {
    nn::ConvSpec c;
    c.num_filters = j["conv"].at("num_filters").get<std::size_t>();
    c.kernel_width = j["conv"].at("kernel_width").get<std::size_t>();
    c.stride = j["conv"].at("stride").get<std::size_t>();
    spec.conv = c;
  }
  spec.dense_sizes = j.at("dense_sizes").get<std::array<std::size_t, 4>>();
  spec.num_classes = j.at("num_classes").get<std::size_t>();
  spec.dropout_rate = j.at("dropout_rate").get<double>();
  spec.use_batchnorm = j.at("use_batchnorm").get<bool>();
  spec.seed = j.at("seed").get<unsigned int>();
  return spec;
}

inline nlohmann::json checkpoint_to_json(TrainedModel& model, std::size_t input_dim = 11) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["input_dim"] = input_dim;
  j["spec"] = spec_to_json(model.spec);
  nlohmann::json params = nlohmann::json::array();
  for (auto& p : model.net.params())
    params.push_back({{"name", p.name}, {"values", *p.value}});
  j["parameters"] = std::move(params);
  nlohmann::json buffers = nlohmann::json::array();
  for (auto& b : model.net.buffers())
    buffers.push_back({{"name", b.name}, {"values", *b.value}});
  j["bn_running_stats"] = std::move(buffers);
  j["ordering"] = {{"permutation", model.ordering.permutation}, {"score", model.ordering.score}};
  j["scaler"] = {{"mean", model.scaler.mean}, {"std", model.scaler.std}};
  return j;
}

inline TrainedModel checkpoint_from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw ConfigError("checkpoint: unsupported version");
  const std::size_t input_dim = j.at("input_dim").get<std::size_t>();
  TrainedModel model = build_model(spec_from_json(j.at("spec")), input_dim);

  auto params = model.net.params();
  const auto& jp = j.at("parameters");
  if (jp.size() != params.size()) throw ConfigError("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i)
    *params[i].value = jp[i].at("values").get<std::vector<double>>();

  auto buffers = model.net.buffers();
  const auto& jb = j.at("bn_running_stats");
  if (jb.size() != buffers.size()) throw ConfigError("checkpoint: buffer count mismatch");
  for (std::size_t i = 0; i < buffers.size(); ++i)
    *buffers[i].value = jb[i].at("values").get<std::vector<double>>();

  model.ordering.permutation =
      j.at("ordering").at("permutation").get<std::vector<std::size_t>>();
  model.ordering.score = j.at("ordering").at("score").get<double>();
  model.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
  model.scaler.std = j.at("scaler").at("std").get<std::vector<double>>();
  model.preprocessing_fit = true;
  return model;
}

inline void save_checkpoint(TrainedModel& model, const std::string& path,
                            std::size_t input_dim = 11) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(model, input_dim).dump(2) << '\n';
}

inline TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  return checkpoint_from_json(j);
}

}  // namespace tannin

#endif  // TANNIN_MODEL_HPP
