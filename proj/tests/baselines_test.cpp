#include "tannin/baselines.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "tannin/dataset.hpp"
#include "tannin/metrics.hpp"
#include "tannin/preprocess.hpp"
#include "tannin/rng.hpp"

namespace {

using tannin::Matrix;
using tannin::Rng;
namespace bl = tannin::baselines;

const std::string kRedWine = std::string(TANNIN_DATA_DIR) + "/winequality-red.csv";

struct WineSplit {
  Matrix x_train, x_test;
  std::vector<int> y_train, y_test;
};

const WineSplit& wine_split() {
  static const WineSplit ws = [] {
    const auto ds = tannin::load_dataset(kRedWine);
    const auto [train, test] = tannin::split(ds, {0.2, 42, true});
    const auto scaler = tannin::fit_scaler(train);
    return WineSplit{tannin::transform(scaler, train), tannin::transform(scaler, test),
                     train.labels(), test.labels()};
  }();
  return ws;
}

std::pair<Matrix, std::vector<int>> separable(std::size_t n, unsigned seed) {
  Rng rng(seed);
  Matrix x(n, 3);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = i % 2;
    for (std::size_t j = 0; j < 3; ++j)
      x(i, j) = rng.normal() * 0.25 + (cls == 0 ? -1.5 : 1.5);
    y[i] = cls == 0 ? 3 : 8;
  }
  return {x, y};
}

double accuracy(const std::vector<int>& want, const std::vector<int>& got) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < want.size(); ++i)
    if (want[i] == got[i]) ++ok;
  return static_cast<double>(ok) / static_cast<double>(want.size());
}

double majority_rate(const std::vector<int>& y) {
  std::map<int, std::size_t> counts;
  for (const int v : y) ++counts[v];
  std::size_t mx = 0;
  for (const auto& [cls, c] : counts) mx = std::max(mx, c);
  return static_cast<double>(mx) / static_cast<double>(y.size());
}

TEST(Knn, ExactTrainingPointReturnsItsLabel) {
  const auto [x, y] = separable(30, 1);
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::Knn;
  spec.k = 1;
  const auto clf = bl::fit_baseline(spec, x, y);
  const auto pred = clf->predict(x);
  EXPECT_EQ(pred, y);
}

TEST(Knn, HandBuiltMajorityVote) {
  // 1-D points: labels around the query 2.1 are {5 at 2.0, 5 at 2.2, 6 at 2.5};
  // k=3 majority is 5.
  const Matrix x = Matrix::from_rows({{2.0}, {2.2}, {2.5}, {9.0}, {-7.0}});
  const std::vector<int> y{5, 5, 6, 6, 6};
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::Knn;
  spec.k = 3;
  const auto clf = bl::fit_baseline(spec, x, y);
  EXPECT_EQ(clf->predict(Matrix::from_rows({{2.1}}))[0], 5);
}

TEST(Knn, KEqualsTrainSizePredictsGlobalMajority) {
  const auto& ws = wine_split();
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::Knn;
  spec.k = ws.y_train.size();
  const auto clf = bl::fit_baseline(spec, ws.x_train, ws.y_train);

  std::map<int, std::size_t> counts;
  for (const int v : ws.y_train) ++counts[v];
  int majority = 0;
  std::size_t best = 0;
  for (const auto& [cls, c] : counts)
    if (c > best) {
      majority = cls;
      best = c;
    }

  Matrix probe(3, ws.x_train.cols());
  for (std::size_t j = 0; j < probe.cols(); ++j) {
    probe(0, j) = 0.0;
    probe(1, j) = 5.0;
    probe(2, j) = -3.0;
  }
  for (const int p : clf->predict(probe)) EXPECT_EQ(p, majority);
}

TEST(LogisticRegression, SeparableTaskPerfectTrainingAccuracy) {
  const auto [x, y] = separable(80, 2);
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::LogisticRegression;
  const auto clf = bl::fit_baseline(spec, x, y);
  EXPECT_DOUBLE_EQ(accuracy(y, clf->predict(x)), 1.0);
}

TEST(LogisticRegression, LossMonotoneAtSmallLearningRate) {
  const auto& ws = wine_split();
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::LogisticRegression;
  spec.lr_learning_rate = 1e-3;
  spec.lr_epochs = 60;
  const bl::LogisticRegressionClassifier clf(spec, ws.x_train, ws.y_train);
  const auto& losses = clf.loss_history();
  ASSERT_EQ(losses.size(), 60u);
  for (std::size_t e = 1; e < losses.size(); ++e)
    EXPECT_LE(losses[e], losses[e - 1] + 1e-12) << "epoch " << e;
}

TEST(RandomForest, SingleUnrestrictedTreeMatchesDecisionTree) {
  const auto [x, y] = separable(50, 3);
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::RandomForest;
  spec.rf_trees = 1;
  spec.rf_max_depth = 64;
  spec.rf_min_leaf = 1;
  spec.rf_bootstrap = false;
  spec.rf_feature_subsample = x.cols();
  const bl::RandomForestClassifier forest(spec, x, y);
  ASSERT_EQ(forest.trees().size(), 1u);
  const auto pred = forest.predict(x);
  for (std::size_t i = 0; i < x.rows(); ++i)
    EXPECT_EQ(pred[i], forest.trees()[0].predict_one(x, i));
  EXPECT_DOUBLE_EQ(accuracy(y, pred), 1.0);
}

TEST(RandomForest, BeatsMajorityClassOnWineTest) {
  const auto& ws = wine_split();
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::RandomForest;
  spec.seed = 42;
  const auto clf = bl::fit_baseline(spec, ws.x_train, ws.y_train);
  EXPECT_GE(accuracy(ws.y_test, clf->predict(ws.x_test)), majority_rate(ws.y_test));
}

TEST(RandomForest, VoteIsOrderFree) {
  // Votes are tallied per class, so tree order cannot matter; check that two
  // forests with identical trees in different construction order agree.
  const auto& ws = wine_split();
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::RandomForest;
  spec.rf_trees = 15;
  spec.rf_max_depth = 6;
  spec.seed = 9;
  const auto clf = bl::fit_baseline(spec, ws.x_train, ws.y_train);

  Matrix probe(20, ws.x_test.cols());
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < probe.cols(); ++j) probe(i, j) = ws.x_test(i, j);
  const auto p1 = clf->predict(probe);
  const auto p2 = clf->predict(probe);
  EXPECT_EQ(p1, p2);
}

TEST(LinearSvm, SeparableTaskPerfectTrainingAccuracy) {
  const auto [x, y] = separable(80, 4);
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::LinearSvm;
  const auto clf = bl::fit_baseline(spec, x, y);
  EXPECT_DOUBLE_EQ(accuracy(y, clf->predict(x)), 1.0);
}

TEST(AllBaselines, DeterministicGivenSeed) {
  const auto& ws = wine_split();
  for (const auto kind : {bl::Kind::Knn, bl::Kind::LogisticRegression,
                          bl::Kind::RandomForest, bl::Kind::LinearSvm}) {
    bl::BaselineSpec spec;
    spec.kind = kind;
    spec.seed = 1234;
    spec.rf_trees = 25;  // keep the test quick
    spec.lr_epochs = 50;
    spec.svm_epochs = 50;
    const auto a = bl::fit_baseline(spec, ws.x_train, ws.y_train);
    const auto b = bl::fit_baseline(spec, ws.x_train, ws.y_train);
    EXPECT_EQ(a->predict(ws.x_test), b->predict(ws.x_test)) << bl::to_string(kind);
  }
}

TEST(AllBaselines, AtLeastMajorityTrainingAccuracy) {
  const auto& ws = wine_split();
  const double floor = majority_rate(ws.y_train);
  for (const auto kind : {bl::Kind::Knn, bl::Kind::LogisticRegression,
                          bl::Kind::RandomForest, bl::Kind::LinearSvm}) {
    bl::BaselineSpec spec;
    spec.kind = kind;
    spec.seed = 7;
    spec.rf_trees = 50;
    const auto clf = bl::fit_baseline(spec, ws.x_train, ws.y_train);
    EXPECT_GE(accuracy(ws.y_train, clf->predict(ws.x_train)), floor)
        << bl::to_string(kind);
  }
}

TEST(AllBaselines, InvalidHyperparametersRejected) {
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::Knn;
  spec.k = 0;
  const auto [x, y] = separable(10, 5);
  EXPECT_THROW(bl::fit_baseline(spec, x, y), tannin::ConfigError);
  spec.k = 5;
  spec.kind = bl::Kind::LinearSvm;
  spec.svm_c = 0.0;
  EXPECT_THROW(bl::fit_baseline(spec, x, y), tannin::ConfigError);
}

TEST(AllBaselines, EmptyTrainingSetRejected) {
  bl::BaselineSpec spec;
  EXPECT_THROW(bl::fit_baseline(spec, Matrix(0, 3), {}), tannin::TrainError);
}

TEST(AllBaselines, DimensionMismatchOnPredictRejected) {
  const auto [x, y] = separable(10, 6);
  bl::BaselineSpec spec;
  spec.kind = bl::Kind::LogisticRegression;
  spec.lr_epochs = 5;
  const auto clf = bl::fit_baseline(spec, x, y);
  EXPECT_THROW(clf->predict(Matrix(2, 5)), std::invalid_argument);
}

}  // namespace
