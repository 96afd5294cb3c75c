#ifndef TANNIN_DATASET_HPP
#define TANNIN_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tannin/error.hpp"
#include "tannin/matrix.hpp"
#include "tannin/rng.hpp"

namespace tannin {

/// One labeled row: physicochemical features plus an integer quality grade.
struct WineSample {
  std::vector<double> features;
  int quality = 0;

  bool operator==(const WineSample&) const = default;
};

/// A labeled feature table with named columns. Immutable once built; safe to
/// share across threads.
struct Dataset {
  std::vector<std::string> column_names;  // last entry is the label column
  std::vector<WineSample> samples;
  std::string source_path;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  std::size_t feature_count() const {
    return samples.empty() ? (column_names.empty() ? 0 : column_names.size() - 1)
                           : samples.front().features.size();
  }

  std::vector<double> feature_column(std::size_t j) const {
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].features[j];
    return out;
  }

  std::vector<int> labels() const {
    std::vector<int> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].quality;
    return out;
  }

  Matrix feature_matrix() const {
    Matrix m(samples.size(), feature_count());
    for (std::size_t i = 0; i < samples.size(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = samples[i].features[j];
    return m;
  }

  /// Builds a dataset from a raw feature matrix and labels; used by tests and
  /// synthetic fixtures where the column set is not the wine schema.
  static Dataset from_matrix(const Matrix& features, const std::vector<int>& labels) {
    if (features.rows() != labels.size())
      throw std::invalid_argument("from_matrix: row/label count mismatch");
    Dataset d;
    for (std::size_t j = 0; j < features.cols(); ++j)
      d.column_names.push_back("f" + std::to_string(j));
    d.column_names.push_back("quality");
    d.samples.resize(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) {
      d.samples[i].features = features.row(i);
      d.samples[i].quality = labels[i];
    }
    return d;
  }

  bool operator==(const Dataset& other) const {
    return column_names == other.column_names && samples == other.samples;
  }
};

/// How to cut a dataset into train and test partitions.
struct SplitSpec {
  double test_fraction = 0.2;
  unsigned int seed = 0;
  bool stratified = true;
};

namespace detail {

inline std::string strip_quotes(std::string s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

/// Strict double parse: the whole field must be consumed, `.` is the only
/// accepted decimal separator.
inline double parse_number(const std::string& field, std::size_t line_no,
                           const std::string& path) {
  const std::string s = strip_quotes(field);
  if (s.empty() || s.find(',') != std::string::npos)
    throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric field '" + field + "'");
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric field '" + field + "'");
  }
  if (pos != s.size())
    throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric field '" + field + "'");
  if (!std::isfinite(v))
    throw DataError(path + ":" + std::to_string(line_no) + ": non-finite value '" + field + "'");
  return v;
}

}  // namespace detail

/// Reads a semicolon-delimited UCI wine-quality file: a 12-column header
/// followed by numeric rows, the last column being the integer quality grade.
inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path);

  Dataset ds;
  ds.source_path = path;

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file (no header)");
  for (const auto& name : detail::split_fields(line, ';'))
    ds.column_names.push_back(detail::strip_quotes(name));
  if (ds.column_names.size() != 12)
    throw DataError(path + ":1: expected 12 header columns, got " +
                    std::to_string(ds.column_names.size()));

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_fields(line, ';');
    if (fields.size() != 12)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 12 fields, got " +
                      std::to_string(fields.size()));
    WineSample s;
    s.features.reserve(11);
    for (std::size_t j = 0; j < 11; ++j)
      s.features.push_back(detail::parse_number(fields[j], line_no, path));
    const double q = detail::parse_number(fields[11], line_no, path);
    if (q != std::floor(q) || q < 0 || q > 10)
      throw DataError(path + ":" + std::to_string(line_no) + ": quality '" + fields[11] +
                      "' outside integer range [0,10]");
    s.quality = static_cast<int>(q);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

/// Writes a dataset back in the same semicolon-delimited format.
inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write data file: " + path);
  for (std::size_t j = 0; j < ds.column_names.size(); ++j) {
    if (j) out << ';';
    out << '"' << ds.column_names[j] << '"';
  }
  out << '\n';
  out.precision(17);
  for (const auto& s : ds.samples) {
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      if (j) out << ';';
      out << s.features[j];
    }
    out << ';' << s.quality << '\n';
  }
}

/// Deterministic train/test split. Stratified mode allocates per-class test
/// counts by largest remainder so each class deviates from the exact
/// proportional count by at most one sample.
inline std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
  if (dataset.empty()) throw DataError("split: empty dataset");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw ConfigError("split: test_fraction must be in (0,1)");

  const std::size_t n = dataset.size();
  const std::size_t n_test =
      static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test == n)
    throw ConfigError("split: test_fraction " + std::to_string(spec.test_fraction) +
                      " produces an empty partition for N=" + std::to_string(n));

  Rng rng(spec.seed);
  std::vector<bool> in_test(n, false);

  if (spec.stratified) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[dataset.samples[i].quality].push_back(i);

    // Largest-remainder allocation of n_test across classes.
    std::vector<std::pair<int, std::size_t>> take;  // class -> test count
    std::vector<std::pair<double, int>> remainders;
    std::size_t allocated = 0;
    for (const auto& [cls, idx] : by_class) {
      const double exact = spec.test_fraction * static_cast<double>(idx.size());
      const std::size_t base = static_cast<std::size_t>(std::floor(exact));
      take.emplace_back(cls, base);
      allocated += base;
      remainders.emplace_back(-(exact - static_cast<double>(base)), cls);
    }
    std::sort(remainders.begin(), remainders.end());
    for (const auto& [neg_rem, cls] : remainders) {
      if (allocated >= n_test) break;
      for (auto& [c, t] : take) {
        if (c == cls && t < by_class[cls].size()) {
          ++t;
          ++allocated;
          break;
        }
      }
    }

    for (const auto& [cls, t] : take) {
      auto idx = by_class[cls];
      rng.shuffle(idx);
      for (std::size_t k = 0; k < t; ++k) in_test[idx[k]] = true;
    }
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    for (std::size_t k = 0; k < n_test; ++k) in_test[idx[k]] = true;
  }

  Dataset train, test;
  train.column_names = test.column_names = dataset.column_names;
  train.source_path = test.source_path = dataset.source_path;
  for (std::size_t i = 0; i < n; ++i)
    (in_test[i] ? test : train).samples.push_back(dataset.samples[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace tannin

#endif  // TANNIN_DATASET_HPP
