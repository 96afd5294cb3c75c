#ifndef TANNIN_BASELINES_HPP
#define TANNIN_BASELINES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "tannin/error.hpp"
#include "tannin/matrix.hpp"
#include "tannin/metrics.hpp"
#include "tannin/rng.hpp"

namespace tannin::baselines {

enum class Kind { Knn, LogisticRegression, RandomForest, LinearSvm };

inline std::string to_string(Kind k) {
  switch (k) {
    case Kind::Knn: return "knn";
    case Kind::LogisticRegression: return "logistic_regression";
    case Kind::RandomForest: return "random_forest";
    case Kind::LinearSvm: return "linear_svm";
  }
  return "?";
}

inline Kind kind_from_string(const std::string& s) {
  if (s == "knn") return Kind::Knn;
  if (s == "logistic_regression") return Kind::LogisticRegression;
  if (s == "random_forest") return Kind::RandomForest;
  if (s == "linear_svm") return Kind::LinearSvm;
  throw ConfigError("unknown baseline kind '" + s + "'");
}

struct BaselineSpec {
  Kind kind = Kind::Knn;
  unsigned int seed = 0;

  // knn
  std::size_t k = 5;
  // logistic regression
  double lr_l2 = 1e-4;
  double lr_learning_rate = 0.1;
  std::size_t lr_epochs = 500;
  // random forest
  std::size_t rf_trees = 200;
  std::size_t rf_max_depth = 12;
  std::size_t rf_min_leaf = 2;
  bool rf_bootstrap = true;
  std::size_t rf_feature_subsample = 0;  // 0 = ceil(sqrt(d))
  // linear svm
  double svm_c = 1.0;
  double svm_learning_rate = 0.1;
  std::size_t svm_epochs = 500;

  void validate() const {
    if (k < 1) throw ConfigError("knn: k must be >= 1");
    if (rf_trees < 1) throw ConfigError("random_forest: n_trees must be >= 1");
    if (!(svm_c > 0.0)) throw ConfigError("linear_svm: C must be > 0");
    if (lr_epochs < 1 || svm_epochs < 1) throw ConfigError("baseline: epochs must be >= 1");
  }
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::vector<int> predict(const Matrix& x) const = 0;
  virtual const BaselineSpec& spec() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

namespace detail {

inline void check_dim(std::size_t got, std::size_t want, const char* who) {
  if (got != want)
    throw std::invalid_argument(std::string(who) + ": feature dimension mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// k-nearest neighbors
// ---------------------------------------------------------------------------

/// Majority vote among the k nearest training points by Euclidean distance.
/// Vote ties break by the larger summed inverse distance, then the smaller
/// label.
class KnnClassifier final : public Classifier {
 public:
  KnnClassifier(BaselineSpec spec, Matrix x, std::vector<int> y)
      : spec_(std::move(spec)), x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() == 0) throw TrainError("knn: empty training set");
  }

  std::vector<int> predict(const Matrix& q) const override {
    detail::check_dim(q.cols(), x_.cols(), "knn");
    const std::size_t k = std::min(spec_.k, x_.rows());
    std::vector<int> out(q.rows());
    std::vector<std::pair<double, std::size_t>> dist(x_.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
      for (std::size_t t = 0; t < x_.rows(); ++t) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < q.cols(); ++j) {
          const double d = q(i, j) - x_(t, j);
          d2 += d * d;
        }
        dist[t] = {d2, t};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                        dist.end());
      std::map<int, std::pair<std::size_t, double>> votes;  // label -> (count, inv dist)
      for (std::size_t t = 0; t < k; ++t) {
        auto& v = votes[y_[dist[t].second]];
        ++v.first;
        v.second += 1.0 / (std::sqrt(dist[t].first) + 1e-12);
      }
      int best = -1;
      std::pair<std::size_t, double> best_v{0, 0.0};
      for (const auto& [label, v] : votes) {
        if (v.first > best_v.first ||
            (v.first == best_v.first && v.second > best_v.second)) {
          best = label;
          best_v = v;
        }
      }
      out[i] = best;
    }
    return out;
  }

  const BaselineSpec& spec() const override { return spec_; }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["kind"] = "knn";
    j["k"] = spec_.k;
    j["train_features"] = x_.data();
    j["train_rows"] = x_.rows();
    j["train_cols"] = x_.cols();
    j["train_labels"] = y_;
    return j;
  }

 private:
  BaselineSpec spec_;
  Matrix x_;
  std::vector<int> y_;
};

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

class LogisticRegressionClassifier final : public Classifier {
 public:
  LogisticRegressionClassifier(BaselineSpec spec, const Matrix& x, const std::vector<int>& y)
      : spec_(std::move(spec)), d_(x.cols()) {
    if (x.rows() == 0) throw TrainError("logistic_regression: empty training set");
    w_ = Matrix(kNumClasses, d_ + 1);  // last column is the intercept
    const std::size_t n = x.rows();

    for (std::size_t epoch = 0; epoch < spec_.lr_epochs; ++epoch) {
      Matrix grad(kNumClasses, d_ + 1);
      double loss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        std::array<double, kNumClasses> score{};
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          double s = w_(c, d_);
          for (std::size_t j = 0; j < d_; ++j) s += w_(c, j) * x(i, j);
          score[c] = s;
          mx = std::max(mx, s);
        }
        double z = 0.0;
        for (std::size_t c = 0; c < kNumClasses; ++c) z += std::exp(score[c] - mx);
        loss -= score[static_cast<std::size_t>(y[i])] - mx - std::log(z);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          const double p = std::exp(score[c] - mx) / z;
          const double g = p - (static_cast<int>(c) == y[i] ? 1.0 : 0.0);
          for (std::size_t j = 0; j < d_; ++j) grad(c, j) += g * x(i, j);
          grad(c, d_) += g;
        }
      }
      loss_history_.push_back(loss / static_cast<double>(n) + l2_penalty());
      for (std::size_t c = 0; c < kNumClasses; ++c)
        for (std::size_t j = 0; j <= d_; ++j) {
          double g = grad(c, j) / static_cast<double>(n);
          if (j < d_) g += spec_.lr_l2 * w_(c, j);  // intercept not penalized
          w_(c, j) -= spec_.lr_learning_rate * g;
        }
    }
  }

  std::vector<int> predict(const Matrix& x) const override {
    detail::check_dim(x.cols(), d_, "logistic_regression");
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      int best = 0;
      double best_s = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        double s = w_(c, d_);
        for (std::size_t j = 0; j < d_; ++j) s += w_(c, j) * x(i, j);
        if (s > best_s) {
          best_s = s;
          best = static_cast<int>(c);
        }
      }
      out[i] = best;
    }
    return out;
  }

  const BaselineSpec& spec() const override { return spec_; }
  const std::vector<double>& loss_history() const { return loss_history_; }

  nlohmann::json to_json() const override {
    return {{"kind", "logistic_regression"}, {"weights", w_.data()}, {"dim", d_}};
  }

 private:
  double l2_penalty() const {
    double s = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c)
      for (std::size_t j = 0; j < d_; ++j) s += w_(c, j) * w_(c, j);
    return 0.5 * spec_.lr_l2 * s;
  }

  BaselineSpec spec_;
  std::size_t d_;
  Matrix w_;
  std::vector<double> loss_history_;
};

// ---------------------------------------------------------------------------
// Random forest (CART with Gini impurity)
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int label = 0;
  std::size_t left = 0, right = 0;
};

class DecisionTree {
 public:
  DecisionTree() = default;

  void fit(const Matrix& x, const std::vector<int>& y, const std::vector<std::size_t>& rows,
           std::size_t max_depth, std::size_t min_leaf, std::size_t features_per_split,
           Rng& rng) {
    nodes_.clear();
    build(x, y, rows, 0, max_depth, min_leaf, features_per_split, rng);
  }

  int predict_one(const Matrix& x, std::size_t i) const {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0) {
      node = x(i, static_cast<std::size_t>(nodes_[node].feature)) <= nodes_[node].threshold
                 ? nodes_[node].left
                 : nodes_[node].right;
    }
    return nodes_[node].label;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  void set_nodes(std::vector<TreeNode> n) { nodes_ = std::move(n); }

 private:
  static int majority(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
    std::map<int, std::size_t> counts;
    for (const auto r : rows) ++counts[y[r]];
    int best = y[rows.front()];
    std::size_t best_c = 0;
    for (const auto& [label, c] : counts)
      if (c > best_c) {
        best = label;
        best_c = c;
      }
    return best;
  }

  static double gini(const std::map<int, std::size_t>& counts, std::size_t total) {
    double g = 1.0;
    for (const auto& [label, c] : counts) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      g -= p * p;
    }
    return g;
  }

  std::size_t build(const Matrix& x, const std::vector<int>& y,
                    const std::vector<std::size_t>& rows, std::size_t depth,
                    std::size_t max_depth, std::size_t min_leaf,
                    std::size_t features_per_split, Rng& rng) {
    const std::size_t me = nodes_.size();
    nodes_.emplace_back();
    nodes_[me].label = majority(y, rows);

    const bool pure = std::all_of(rows.begin(), rows.end(),
                                  [&](std::size_t r) { return y[r] == y[rows.front()]; });
    if (pure || depth >= max_depth || rows.size() < 2 * min_leaf) return me;

    // Deterministic feature subsample for this split.
    std::vector<std::size_t> feats(x.cols());
    std::iota(feats.begin(), feats.end(), 0);
    if (features_per_split < x.cols()) {
      rng.shuffle(feats);
      feats.resize(features_per_split);
      std::sort(feats.begin(), feats.end());
    }

    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::size_t> order(rows);
    for (const auto f : feats) {
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
      std::map<int, std::size_t> left_counts, right_counts;
      for (const auto r : order) ++right_counts[y[r]];
      std::size_t n_left = 0, n_right = order.size();

      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const int lbl = y[order[i]];
        ++left_counts[lbl];
        if (--right_counts[lbl] == 0) right_counts.erase(lbl);
        ++n_left;
        --n_right;
        if (x(order[i], f) == x(order[i + 1], f)) continue;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double impurity =
            (static_cast<double>(n_left) * gini(left_counts, n_left) +
             static_cast<double>(n_right) * gini(right_counts, n_right)) /
            static_cast<double>(order.size());
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (x(order[i], f) + x(order[i + 1], f));
        }
      }
    }

    if (best_feature < 0) return me;

    std::vector<std::size_t> left_rows, right_rows;
    for (const auto r : rows)
      (x(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows
                                                                      : right_rows)
          .push_back(r);
    if (left_rows.empty() || right_rows.empty()) return me;

    nodes_[me].feature = best_feature;
    nodes_[me].threshold = best_threshold;
    const std::size_t l =
        build(x, y, left_rows, depth + 1, max_depth, min_leaf, features_per_split, rng);
    const std::size_t r =
        build(x, y, right_rows, depth + 1, max_depth, min_leaf, features_per_split, rng);
    nodes_[me].left = l;
    nodes_[me].right = r;
    return me;
  }

  std::vector<TreeNode> nodes_;
};

class RandomForestClassifier final : public Classifier {
 public:
  RandomForestClassifier(BaselineSpec spec, const Matrix& x, const std::vector<int>& y)
      : spec_(std::move(spec)), d_(x.cols()) {
    if (x.rows() == 0) throw TrainError("random_forest: empty training set");
    const std::size_t mtry =
        spec_.rf_feature_subsample > 0
            ? std::min(spec_.rf_feature_subsample, x.cols())
            : static_cast<std::size_t>(
                  std::ceil(std::sqrt(static_cast<double>(x.cols()))));

    trees_.resize(spec_.rf_trees);
    for (std::size_t t = 0; t < spec_.rf_trees; ++t) {
      // Each tree's stream derives from (seed, tree index) so trees could be
      // grown in parallel without changing results.
      Rng rng(derive_seed(spec_.seed, static_cast<std::uint32_t>(t)));
      std::vector<std::size_t> rows(x.rows());
      if (spec_.rf_bootstrap) {
        for (auto& r : rows) r = rng.below(x.rows());
      } else {
        std::iota(rows.begin(), rows.end(), 0);
      }
      trees_[t].fit(x, y, rows, spec_.rf_max_depth, spec_.rf_min_leaf, mtry, rng);
    }
  }

  std::vector<int> predict(const Matrix& x) const override {
    detail::check_dim(x.cols(), d_, "random_forest");
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::map<int, std::size_t> votes;
      for (const auto& tree : trees_) ++votes[tree.predict_one(x, i)];
      int best = 0;
      std::size_t best_c = 0;
      for (const auto& [label, c] : votes)
        if (c > best_c) {  // map order gives ties to the smaller label
          best = label;
          best_c = c;
        }
      out[i] = best;
    }
    return out;
  }

  const BaselineSpec& spec() const override { return spec_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["kind"] = "random_forest";
    j["dim"] = d_;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : tree.nodes())
        nodes.push_back({{"f", n.feature},
                         {"t", n.threshold},
                         {"l", n.label},
                         {"lc", n.left},
                         {"rc", n.right}});
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j;
  }

 private:
  BaselineSpec spec_;
  std::size_t d_;
  std::vector<DecisionTree> trees_;
};

// ---------------------------------------------------------------------------
// Linear SVM (one-vs-rest, hinge loss, subgradient descent)
// ---------------------------------------------------------------------------

class LinearSvmClassifier final : public Classifier {
 public:
  LinearSvmClassifier(BaselineSpec spec, const Matrix& x, const std::vector<int>& y)
      : spec_(std::move(spec)), d_(x.cols()) {
    if (x.rows() == 0) throw TrainError("linear_svm: empty training set");
    w_ = Matrix(kNumClasses, d_ + 1);
    const std::size_t n = x.rows();
    const double lambda = 1.0 / (spec_.svm_c * static_cast<double>(n));

    for (std::size_t epoch = 0; epoch < spec_.svm_epochs; ++epoch) {
      Matrix grad(kNumClasses, d_ + 1);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          const double target = y[i] == static_cast<int>(c) ? 1.0 : -1.0;
          double s = w_(c, d_);
          for (std::size_t j = 0; j < d_; ++j) s += w_(c, j) * x(i, j);
          if (target * s < 1.0) {
            for (std::size_t j = 0; j < d_; ++j) grad(c, j) -= target * x(i, j);
            grad(c, d_) -= target;
          }
        }
      }
      for (std::size_t c = 0; c < kNumClasses; ++c)
        for (std::size_t j = 0; j <= d_; ++j) {
          double g = grad(c, j) / static_cast<double>(n);
          if (j < d_) g += lambda * w_(c, j);
          w_(c, j) -= spec_.svm_learning_rate * g;
        }
    }
  }

  std::vector<int> predict(const Matrix& x) const override {
    detail::check_dim(x.cols(), d_, "linear_svm");
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      int best = 0;
      double best_s = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        double s = w_(c, d_);
        for (std::size_t j = 0; j < d_; ++j) s += w_(c, j) * x(i, j);
        if (s > best_s) {
          best_s = s;
          best = static_cast<int>(c);
        }
      }
      out[i] = best;
    }
    return out;
  }

  const BaselineSpec& spec() const override { return spec_; }

  nlohmann::json to_json() const override {
    return {{"kind", "linear_svm"}, {"weights", w_.data()}, {"dim", d_}};
  }

 private:
  BaselineSpec spec_;
  std::size_t d_;
  Matrix w_;
};

// ---------------------------------------------------------------------------
// Factory
// ---------------------------------------------------------------------------

inline std::unique_ptr<Classifier> fit_baseline(const BaselineSpec& spec, const Matrix& x,
                                                const std::vector<int>& y) {
  spec.validate();
  if (x.rows() == 0) throw TrainError("fit_baseline: empty training set");
  if (x.rows() != y.size())
    throw std::invalid_argument("fit_baseline: feature/label count mismatch");
  switch (spec.kind) {
    case Kind::Knn:
      return std::make_unique<KnnClassifier>(spec, x, y);
    case Kind::LogisticRegression:
      return std::make_unique<LogisticRegressionClassifier>(spec, x, y);
    case Kind::RandomForest:
      return std::make_unique<RandomForestClassifier>(spec, x, y);
    case Kind::LinearSvm:
      return std::make_unique<LinearSvmClassifier>(spec, x, y);
  }
  throw ConfigError("fit_baseline: unknown kind");
}

}  // namespace tannin::baselines

#endif  // TANNIN_BASELINES_HPP
