#ifndef TANNIN_METRICS_HPP
#define TANNIN_METRICS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tannin {

inline constexpr std::size_t kNumClasses = 10;

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
      for (const auto c : row) t += c;
    return t;
  }
};

inline ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("confusion: length mismatch");
  if (y_true.empty()) throw std::invalid_argument("confusion: empty inputs");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= static_cast<int>(kNumClasses) || p < 0 || p >= static_cast<int>(kNumClasses))
      throw std::invalid_argument("confusion: label out of range at index " + std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

/// One-vs-rest metrics per class plus macro averages over classes with
/// nonzero support. Zero denominators yield 0 so reports stay total.
struct MetricsReport {
  std::map<int, ClassMetrics> per_class;  // only classes with support > 0
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

inline MetricsReport report(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total == 0) throw std::invalid_argument("report: empty confusion matrix");

  MetricsReport rep;
  std::int64_t correct = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) correct += cm.counts[c][c];
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(total);

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::int64_t tp = cm.counts[c][c], fp = 0, fn = 0, support = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      if (k != c) {
        fp += cm.counts[k][c];
        fn += cm.counts[c][k];
      }
      support += cm.counts[c][k];
    }
    if (support == 0) continue;

    ClassMetrics m;
    m.support = support;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = static_cast<double>(tp) / static_cast<double>(support);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    rep.per_class[static_cast<int>(c)] = m;
  }

  const double k = static_cast<double>(rep.per_class.size());
  for (const auto& [cls, m] : rep.per_class) {
    rep.macro_precision += m.precision / k;
    rep.macro_recall += m.recall / k;
    rep.macro_f1 += m.f1 / k;
  }
  return rep;
}

/// Aligned plain-text table with one row per model, columns in the order
/// Precision, Accuracy, Recall, F1.
inline std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "Model" << std::right << std::setw(11) << "Precision"
     << std::setw(11) << "Accuracy" << std::setw(11) << "Recall" << std::setw(11) << "F1-Score"
     << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& [name, rep] : rows) {
    os << std::left << std::setw(10) << name << std::right << std::setw(11)
       << rep.macro_precision << std::setw(11) << rep.accuracy << std::setw(11)
       << rep.macro_recall << std::setw(11) << rep.macro_f1 << '\n';
  }
  return os.str();
}

}  // namespace tannin

#endif  // TANNIN_METRICS_HPP
