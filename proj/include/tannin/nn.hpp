#ifndef TANNIN_NN_HPP
#define TANNIN_NN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tannin/error.hpp"
#include "tannin/matrix.hpp"
#include "tannin/preprocess.hpp"
#include "tannin/rng.hpp"
#include "tannin/tensor.hpp"

namespace tannin::nn {

// ---------------------------------------------------------------------------
// Architecture description
// ---------------------------------------------------------------------------

enum class Variant { DnnD, Dnn, CnnD, Cnn };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::DnnD: return "DNN-D";
    case Variant::Dnn: return "DNN";
    case Variant::CnnD: return "1DCNN-D";
    case Variant::Cnn: return "1DCNN";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "DNN-D") return Variant::DnnD;
  if (s == "DNN") return Variant::Dnn;
  if (s == "1DCNN-D") return Variant::CnnD;
  if (s == "1DCNN") return Variant::Cnn;
  throw ConfigError("unknown model variant '" + s + "'");
}

inline bool has_conv(Variant v) { return v == Variant::CnnD || v == Variant::Cnn; }
inline bool has_regularization(Variant v) { return v == Variant::Dnn || v == Variant::Cnn; }

struct ConvSpec {
  std::size_t num_filters = 16;
  std::size_t kernel_width = 3;
  std::size_t stride = 1;
};

struct ModelSpec {
  Variant variant = Variant::Cnn;
  std::optional<ConvSpec> conv;
  std::array<std::size_t, 4> dense_sizes{64, 64, 32, 16};
  std::size_t num_classes = 10;
  double dropout_rate = 0.3;
  bool use_batchnorm = true;
  unsigned int seed = 0;
};

// ---------------------------------------------------------------------------
// Stateless tensor ops (also exposed for direct testing)
// ---------------------------------------------------------------------------

/// Valid cross-correlation (no kernel flip, no padding).
/// L_out = floor((L - k) / stride) + 1.
inline Tensor conv1d_forward(const Tensor& input, const Tensor& kernels,
                             std::span<const double> bias, std::size_t stride) {
  const std::size_t batch = input.shape[0], cin = input.shape[1], len = input.shape[2];
  const std::size_t cout = kernels.shape[0], k = kernels.shape[2];
  if (kernels.shape[1] != cin) throw std::invalid_argument("conv1d: channel mismatch");
  if (k > len) throw std::invalid_argument("conv1d: kernel wider than input");
  if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  const std::size_t lout = (len - k) / stride + 1;

  Tensor out({batch, cout, lout});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t t = 0; t < lout; ++t) {
        double acc = bias[co];
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t j = 0; j < k; ++j)
            acc += kernels.at(co, ci, j) * input.at(b, ci, t * stride + j);
        out.at(b, co, t) = acc;
      }
  return out;
}

/// Affine map W x + b per row; weights are [n_out, n_in].
inline Tensor dense_forward(const Tensor& input, const Tensor& weights,
                            std::span<const double> bias) {
  const std::size_t batch = input.shape[0], nin = input.shape[1];
  const std::size_t nout = weights.shape[0];
  if (weights.shape[1] != nin) throw std::invalid_argument("dense: shape mismatch");
  Tensor out({batch, nout});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < nout; ++o) {
      double acc = bias[o];
      for (std::size_t i = 0; i < nin; ++i) acc += weights.at(o, i) * input.at(b, i);
      out.at(b, o) = acc;
    }
  return out;
}

/// Mean cross-entropy over the batch with log-sum-exp stabilization.
/// Returns the loss and the softmax probability rows.
inline std::pair<double, Tensor> softmax_cross_entropy(const Tensor& logits,
                                                       std::span<const int> labels) {
  const std::size_t batch = logits.shape[0], classes = logits.shape[1];
  if (labels.size() != batch) throw std::invalid_argument("softmax_ce: label count mismatch");
  Tensor probs({batch, classes});
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= classes)
      throw std::invalid_argument("softmax_ce: label out of range");
    double mx = logits.at(b, 0);
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, logits.at(b, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(logits.at(b, c) - mx);
    const double log_z = mx + std::log(sum);
    for (std::size_t c = 0; c < classes; ++c)
      probs.at(b, c) = std::exp(logits.at(b, c) - log_z);
    loss -= logits.at(b, static_cast<std::size_t>(labels[b])) - log_z;
  }
  return {loss / static_cast<double>(batch), std::move(probs)};
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

struct ParamView {
  std::string name;
  std::vector<double>* value;
  std::vector<double>* grad;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, bool train, Rng* rng) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual std::vector<ParamView> params() { return {}; }
  /// Non-trainable state carried into inference (batchnorm running stats).
  virtual std::vector<ParamView> buffers() { return {}; }
  virtual std::string kind() const = 0;
};

class Conv1D final : public Layer {
 public:
  Conv1D(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride, Rng& rng)
      : cin_(cin), cout_(cout), k_(k), stride_(stride) {
    const double limit = std::sqrt(6.0 / static_cast<double>(cin * k));
    weights_.resize(cout * cin * k);
    for (double& w : weights_) w = rng.uniform(-limit, limit);
    bias_.assign(cout, 0.0);
    dweights_.assign(weights_.size(), 0.0);
    dbias_.assign(bias_.size(), 0.0);
  }

  Tensor forward(const Tensor& x, bool, Rng*) override {
    x_ = x;
    return conv1d_forward(x, kernel_tensor(), bias_, stride_);
  }

  Tensor backward(const Tensor& dy) override {
    const std::size_t batch = x_.shape[0], len = x_.shape[2], lout = dy.shape[2];
    Tensor dx({batch, cin_, len});
    std::fill(dweights_.begin(), dweights_.end(), 0.0);
    std::fill(dbias_.begin(), dbias_.end(), 0.0);
    const Tensor w = kernel_tensor();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t co = 0; co < cout_; ++co)
        for (std::size_t t = 0; t < lout; ++t) {
          const double g = dy.at(b, co, t);
          dbias_[co] += g;
          for (std::size_t ci = 0; ci < cin_; ++ci)
            for (std::size_t j = 0; j < k_; ++j) {
              dx.at(b, ci, t * stride_ + j) += w.at(co, ci, j) * g;
              dweights_[(co * cin_ + ci) * k_ + j] += x_.at(b, ci, t * stride_ + j) * g;
            }
        }
    return dx;
  }

  std::vector<ParamView> params() override {
    return {{"conv.weights", &weights_, &dweights_}, {"conv.bias", &bias_, &dbias_}};
  }
  std::string kind() const override { return "conv1d"; }

 private:
  Tensor kernel_tensor() const { return Tensor({cout_, cin_, k_}, weights_); }

  std::size_t cin_, cout_, k_, stride_;
  std::vector<double> weights_, bias_, dweights_, dbias_;
  Tensor x_;
};

class Dense final : public Layer {
 public:
  Dense(std::size_t nin, std::size_t nout, Rng& rng) : nin_(nin), nout_(nout) {
    const double limit = std::sqrt(6.0 / static_cast<double>(nin));
    weights_.resize(nout * nin);
    for (double& w : weights_) w = rng.uniform(-limit, limit);
    bias_.assign(nout, 0.0);
    dweights_.assign(weights_.size(), 0.0);
    dbias_.assign(bias_.size(), 0.0);
  }

  Tensor forward(const Tensor& x, bool, Rng*) override {
    x_ = x;
    return dense_forward(x, Tensor({nout_, nin_}, weights_), bias_);
  }

  Tensor backward(const Tensor& dy) override {
    const std::size_t batch = x_.shape[0];
    Tensor dx({batch, nin_});
    std::fill(dweights_.begin(), dweights_.end(), 0.0);
    std::fill(dbias_.begin(), dbias_.end(), 0.0);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t o = 0; o < nout_; ++o) {
        const double g = dy.at(b, o);
        dbias_[o] += g;
        for (std::size_t i = 0; i < nin_; ++i) {
          dweights_[o * nin_ + i] += x_.at(b, i) * g;
          dx.at(b, i) += weights_[o * nin_ + i] * g;
        }
      }
    return dx;
  }

  std::vector<ParamView> params() override {
    return {{"dense.weights", &weights_, &dweights_}, {"dense.bias", &bias_, &dbias_}};
  }
  std::string kind() const override { return "dense"; }

 private:
  std::size_t nin_, nout_;
  std::vector<double> weights_, bias_, dweights_, dbias_;
  Tensor x_;
};

class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(std::size_t n, double momentum = 0.1, double epsilon = 1e-5)
      : n_(n), momentum_(momentum), epsilon_(epsilon) {
    gamma_.assign(n, 1.0);
    beta_.assign(n, 0.0);
    dgamma_.assign(n, 0.0);
    dbeta_.assign(n, 0.0);
    running_mean_.assign(n, 0.0);
    running_var_.assign(n, 1.0);
  }

  Tensor forward(const Tensor& x, bool train, Rng*) override {
    const std::size_t batch = x.shape[0];
    Tensor y({batch, n_});
    if (train) {
      if (batch < 2) throw TrainError("batchnorm: train mode requires batch >= 2");
      x_ = x;
      mu_.assign(n_, 0.0);
      var_.assign(n_, 0.0);
      for (std::size_t j = 0; j < n_; ++j) {
        for (std::size_t b = 0; b < batch; ++b) mu_[j] += x.at(b, j);
        mu_[j] /= static_cast<double>(batch);
        for (std::size_t b = 0; b < batch; ++b) {
          const double d = x.at(b, j) - mu_[j];
          var_[j] += d * d;
        }
        var_[j] /= static_cast<double>(batch);
        running_mean_[j] = (1.0 - momentum_) * running_mean_[j] + momentum_ * mu_[j];
        running_var_[j] = (1.0 - momentum_) * running_var_[j] + momentum_ * var_[j];
      }
      xhat_ = Tensor({batch, n_});
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < n_; ++j) {
          xhat_.at(b, j) = (x.at(b, j) - mu_[j]) / std::sqrt(var_[j] + epsilon_);
          y.at(b, j) = gamma_[j] * xhat_.at(b, j) + beta_[j];
        }
    } else {
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < n_; ++j)
          y.at(b, j) = gamma_[j] * (x.at(b, j) - running_mean_[j]) /
                           std::sqrt(running_var_[j] + epsilon_) +
                       beta_[j];
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    const std::size_t batch = dy.shape[0];
    const double nb = static_cast<double>(batch);
    Tensor dx({batch, n_});
    std::fill(dgamma_.begin(), dgamma_.end(), 0.0);
    std::fill(dbeta_.begin(), dbeta_.end(), 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      const double inv_std = 1.0 / std::sqrt(var_[j] + epsilon_);
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double dxhat = dy.at(b, j) * gamma_[j];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat_.at(b, j);
        dgamma_[j] += dy.at(b, j) * xhat_.at(b, j);
        dbeta_[j] += dy.at(b, j);
      }
      for (std::size_t b = 0; b < batch; ++b) {
        const double dxhat = dy.at(b, j) * gamma_[j];
        dx.at(b, j) =
            inv_std * (dxhat - sum_dxhat / nb - xhat_.at(b, j) * sum_dxhat_xhat / nb);
      }
    }
    return dx;
  }

  std::vector<ParamView> params() override {
    return {{"bn.gamma", &gamma_, &dgamma_}, {"bn.beta", &beta_, &dbeta_}};
  }
  std::vector<ParamView> buffers() override {
    return {{"bn.running_mean", &running_mean_, nullptr},
            {"bn.running_var", &running_var_, nullptr}};
  }
  std::string kind() const override { return "batchnorm"; }

 private:
  std::size_t n_;
  double momentum_, epsilon_;
  std::vector<double> gamma_, beta_, dgamma_, dbeta_;
  std::vector<double> running_mean_, running_var_;
  std::vector<double> mu_, var_;
  Tensor x_, xhat_;
};

/// Inverted dropout: identity at eval time; at train time survivors are
/// scaled by 1/(1-rate) so expectations match.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0,1)");
  }

  Tensor forward(const Tensor& x, bool train, Rng* rng) override {
    if (!train || rate_ == 0.0) {
      mask_.assign(x.size(), 1.0);
      return x;
    }
    if (rng == nullptr) throw TrainError("dropout: train mode needs an rng");
    const double keep = 1.0 - rate_;
    mask_.resize(x.size());
    Tensor y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = rng->uniform() < rate_ ? 0.0 : 1.0 / keep;
      y.data[i] *= mask_[i];
    }
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask_[i];
    return dx;
  }

  std::string kind() const override { return "dropout"; }
  const std::vector<double>& mask() const { return mask_; }

 private:
  double rate_;
  std::vector<double> mask_;
};

class Relu final : public Layer {
 public:
  Tensor forward(const Tensor& x, bool, Rng*) override {
    x_ = x;
    Tensor y = x;
    for (double& v : y.data) v = std::max(v, 0.0);
    return y;
  }
  Tensor backward(const Tensor& dy) override {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (x_.data[i] <= 0.0) dx.data[i] = 0.0;
    return dx;
  }
  std::string kind() const override { return "relu"; }

 private:
  Tensor x_;
};

/// [B, n] -> [B, 1, n] on the way in; used ahead of the conv block.
class AddChannel final : public Layer {
 public:
  Tensor forward(const Tensor& x, bool, Rng*) override {
    return Tensor({x.shape[0], 1, x.shape[1]}, x.data);
  }
  Tensor backward(const Tensor& dy) override {
    return Tensor({dy.shape[0], dy.shape[2]}, dy.data);
  }
  std::string kind() const override { return "add_channel"; }
};

/// [B, C, L] -> [B, C*L].
class Flatten final : public Layer {
 public:
  Tensor forward(const Tensor& x, bool, Rng*) override {
    in_shape_ = x.shape;
    return Tensor({x.shape[0], x.shape[1] * x.shape[2]}, x.data);
  }
  Tensor backward(const Tensor& dy) override { return Tensor(in_shape_, dy.data); }
  std::string kind() const override { return "flatten"; }

 private:
  std::vector<std::size_t> in_shape_;
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

class Model {
 public:
  Model() = default;

  const ModelSpec& spec() const { return spec_; }
  std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

  Tensor forward(const Tensor& x, bool train, Rng* rng) {
    Tensor h = x;
    for (auto& layer : layers_) h = layer->forward(h, train, rng);
    return h;
  }

  /// Backpropagates the loss gradient w.r.t. the logits through every layer,
  /// filling parameter gradients. Requires a preceding forward pass.
  Tensor backward(const Tensor& dlogits) {
    Tensor g = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  std::vector<ParamView> params() {
    std::vector<ParamView> out;
    for (auto& layer : layers_)
      for (auto& p : layer->params()) out.push_back(p);
    return out;
  }

  std::vector<ParamView> buffers() {
    std::vector<ParamView> out;
    for (auto& layer : layers_)
      for (auto& p : layer->buffers()) out.push_back(p);
    return out;
  }

  std::vector<double> flat_params() {
    std::vector<double> out;
    for (auto& p : params()) out.insert(out.end(), p.value->begin(), p.value->end());
    return out;
  }

  void set_flat_params(std::span<const double> flat) {
    std::size_t off = 0;
    for (auto& p : params()) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                flat.begin() + static_cast<std::ptrdiff_t>(off + p.value->size()),
                p.value->begin());
      off += p.value->size();
    }
    if (off != flat.size()) throw std::invalid_argument("set_flat_params: size mismatch");
  }

  std::vector<double> flat_grads() {
    std::vector<double> out;
    for (auto& p : params()) out.insert(out.end(), p.grad->begin(), p.grad->end());
    return out;
  }

  std::size_t num_dropout() const { return count_kind("dropout"); }
  std::size_t num_batchnorm() const { return count_kind("batchnorm"); }

  friend Model build_network(const ModelSpec& spec, std::size_t input_dim);

 private:
  std::size_t count_kind(const std::string& k) const {
    std::size_t n = 0;
    for (const auto& layer : layers_)
      if (layer->kind() == k) ++n;
    return n;
  }

  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Materializes the layer stack for a variant: optional conv block
/// (AddChannel, Conv1D, ReLU, Flatten), then four dense layers where the
/// first three carry BatchNorm/ReLU/Dropout blocks when the variant uses
/// regularization, then the softmax head of num_classes logits. He-uniform
/// init drawn from an mt19937 seeded with spec.seed.
inline Model build_network(const ModelSpec& raw_spec, std::size_t input_dim) {
  ModelSpec spec = raw_spec;
  if (has_conv(spec.variant) && !spec.conv) spec.conv = ConvSpec{};
  if (!has_conv(spec.variant)) spec.conv.reset();
  if (!has_regularization(spec.variant)) {
    spec.dropout_rate = 0.0;
    spec.use_batchnorm = false;
  }

  Model model;
  model.spec_ = spec;
  Rng rng(spec.seed);

  std::size_t width = input_dim;
  if (spec.conv) {
    const auto& c = *spec.conv;
    if (c.kernel_width > input_dim)
      throw ConfigError("build_network: conv kernel wider than the feature vector");
    model.layers_.push_back(std::make_unique<AddChannel>());
    model.layers_.push_back(std::make_unique<Conv1D>(1, c.num_filters, c.kernel_width,
                                                     c.stride, rng));
    model.layers_.push_back(std::make_unique<Relu>());
    model.layers_.push_back(std::make_unique<Flatten>());
    width = c.num_filters * ((input_dim - c.kernel_width) / c.stride + 1);
  }

  for (std::size_t i = 0; i < spec.dense_sizes.size(); ++i) {
    const std::size_t out = spec.dense_sizes[i];
    model.layers_.push_back(std::make_unique<Dense>(width, out, rng));
    const bool regularized = i < 3 && has_regularization(spec.variant);
    if (regularized && spec.use_batchnorm)
      model.layers_.push_back(std::make_unique<BatchNorm>(out));
    model.layers_.push_back(std::make_unique<Relu>());
    if (regularized && spec.dropout_rate > 0.0)
      model.layers_.push_back(std::make_unique<Dropout>(spec.dropout_rate));
    width = out;
  }
  model.layers_.push_back(std::make_unique<Dense>(width, spec.num_classes, rng));
  return model;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";  // or "sgd"
  unsigned int seed = 0;
  bool shuffle = true;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
};

class AdamState {
 public:
  void step(std::vector<ParamView>& params, double lr, double beta1 = 0.9,
            double beta2 = 0.999, double epsilon = 1e-8) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value->size(), 0.0);
        v_.emplace_back(p.value->size(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& value = *params[p].value;
      const auto& grad = *params[p].grad;
      for (std::size_t i = 0; i < value.size(); ++i) {
        m_[p][i] = beta1 * m_[p][i] + (1.0 - beta1) * grad[i];
        v_[p][i] = beta2 * v_[p][i] + (1.0 - beta2) * grad[i] * grad[i];
        value[i] -= lr * (m_[p][i] / bc1) / (std::sqrt(v_[p][i] / bc2) + epsilon);
      }
    }
  }

 private:
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

/// Argmax per row with ties broken toward the smaller class index.
inline std::vector<int> argmax_rows(const Tensor& t) {
  std::vector<int> out(t.shape[0]);
  for (std::size_t b = 0; b < t.shape[0]; ++b) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < t.shape[1]; ++c)
      if (t.at(b, c) > t.at(b, arg)) arg = c;
    out[b] = static_cast<int>(arg);
  }
  return out;
}

/// Mini-batch gradient descent over pre-scaled (and, for conv variants,
/// reordered) features. Deterministic given config.seed.
inline std::vector<EpochStats> train_network(Model& model, const Matrix& x,
                                             const std::vector<int>& labels,
                                             const TrainConfig& config) {
  if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (config.optimizer != "adam" && config.optimizer != "sgd")
    throw ConfigError("train: unknown optimizer '" + config.optimizer + "'");
  if (x.rows() == 0) throw TrainError("train: empty training set");

  const std::size_t n = x.rows();
  Rng rng(config.seed);
  AdamState adam;
  std::vector<EpochStats> history;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t bsz = std::min(config.batch_size, n - start);
      Tensor xb({bsz, x.cols()});
      std::vector<int> yb(bsz);
      for (std::size_t i = 0; i < bsz; ++i) {
        const std::size_t src = order[start + i];
        for (std::size_t j = 0; j < x.cols(); ++j) xb.at(i, j) = x(src, j);
        yb[i] = labels[src];
      }

      // Batchnorm cannot normalize a singleton batch; fold it into stats-free
      // eval stepping would bias training, so skip the trailing singleton.
      if (bsz < 2 && model.num_batchnorm() > 0) continue;

      Tensor logits = model.forward(xb, /*train=*/true, &rng);
      auto [loss, probs] = softmax_cross_entropy(logits, yb);
      if (!std::isfinite(loss))
        throw TrainError("train: non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batches));
      epoch_loss += loss;
      ++batches;

      Tensor dlogits({bsz, logits.shape[1]});
      for (std::size_t b = 0; b < bsz; ++b)
        for (std::size_t c = 0; c < logits.shape[1]; ++c)
          dlogits.at(b, c) =
              (probs.at(b, c) - (static_cast<int>(c) == yb[b] ? 1.0 : 0.0)) /
              static_cast<double>(bsz);
      model.backward(dlogits);

      auto params = model.params();
      if (config.optimizer == "adam") {
        adam.step(params, config.learning_rate);
      } else {
        for (auto& p : params)
          for (std::size_t i = 0; i < p.value->size(); ++i)
            (*p.value)[i] -= config.learning_rate * (*p.grad)[i];
      }
    }

    Tensor all = Tensor::from_matrix(x);
    Tensor logits = model.forward(all, /*train=*/false, nullptr);
    const auto pred = argmax_rows(logits);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (pred[i] == labels[i]) ++correct;

    history.push_back({epoch, epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1)),
                       static_cast<double>(correct) / static_cast<double>(n)});
  }
  return history;
}

/// Eval-mode class predictions and probability rows.
inline std::pair<std::vector<int>, Tensor> predict_network(Model& model, const Matrix& x) {
  Tensor logits = model.forward(Tensor::from_matrix(x), /*train=*/false, nullptr);
  std::vector<int> labels = argmax_rows(logits);
  Tensor probs({logits.shape[0], logits.shape[1]});
  for (std::size_t b = 0; b < logits.shape[0]; ++b) {
    double mx = logits.at(b, 0);
    for (std::size_t c = 1; c < logits.shape[1]; ++c) mx = std::max(mx, logits.at(b, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.shape[1]; ++c) sum += std::exp(logits.at(b, c) - mx);
    for (std::size_t c = 0; c < logits.shape[1]; ++c)
      probs.at(b, c) = std::exp(logits.at(b, c) - mx) / sum;
  }
  return {std::move(labels), std::move(probs)};
}

}  // namespace tannin::nn

#endif  // TANNIN_NN_HPP
