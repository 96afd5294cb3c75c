#ifndef TANNIN_PREPROCESS_HPP
#define TANNIN_PREPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <vector>

#include "tannin/dataset.hpp"
#include "tannin/error.hpp"
#include "tannin/matrix.hpp"
#include "tannin/stats.hpp"

namespace tannin {

/// Per-feature standardization statistics, fit on the training partition only.
struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> std;  // sample (n-1) standard deviation

  std::size_t dim() const { return mean.size(); }
};

inline ScalerParams fit_scaler(const Dataset& train) {
  if (train.empty()) throw DataError("fit_scaler: empty dataset");
  const std::size_t d = train.feature_count();
  ScalerParams p;
  p.mean.resize(d);
  p.std.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = train.feature_column(j);
    p.mean[j] = mean(col);
    p.std[j] = col.size() > 1 ? sample_std(col) : 0.0;
  }
  return p;
}

/// z[i][j] = (x[i][j] - mean[j]) / std[j]; zero-variance features map to 0.
inline Matrix transform(const ScalerParams& params, const Dataset& samples) {
  if (samples.feature_count() != params.dim())
    throw std::invalid_argument("transform: feature dimension mismatch");
  Matrix z(samples.size(), params.dim());
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < params.dim(); ++j)
      z(i, j) = params.std[j] > 0.0
                    ? (samples.samples[i].features[j] - params.mean[j]) / params.std[j]
                    : 0.0;
  return z;
}

inline Matrix inverse_transform(const ScalerParams& params, const Matrix& z) {
  if (z.cols() != params.dim())
    throw std::invalid_argument("inverse_transform: feature dimension mismatch");
  Matrix x(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j)
      x(i, j) = params.std[j] > 0.0 ? z(i, j) * params.std[j] + params.mean[j] : params.mean[j];
  return x;
}

/// A permutation of the feature columns together with its adjacency score
/// (sum of |rho| over consecutive pairs).
struct FeatureOrdering {
  std::vector<std::size_t> permutation;
  double score = 0.0;
};

inline double ordering_score(const Matrix& abs_corr, const std::vector<std::size_t>& perm) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < perm.size(); ++i) s += abs_corr(perm[i], perm[i + 1]);
  return s;
}

namespace detail {

/// Exact maximum-weight Hamiltonian path over the |rho| graph via
/// Held-Karp subset DP. O(2^d * d^2); used for the small dimensions this
/// pipeline works at.
inline std::vector<std::size_t> best_path_exact(const Matrix& absr) {
  const std::size_t d = absr.rows();
  const std::size_t full = std::size_t{1} << d;
  constexpr double kNegInf = -1.0;
  // dp[mask * d + end]: best adjacency score of a path over mask ending at end.
  std::vector<double> dp(full * d, kNegInf);
  std::vector<std::size_t> parent(full * d, d);
  for (std::size_t v = 0; v < d; ++v) dp[(std::size_t{1} << v) * d + v] = 0.0;

  for (std::size_t mask = 1; mask < full; ++mask) {
    for (std::size_t end = 0; end < d; ++end) {
      const double cur = dp[mask * d + end];
      if (cur < 0.0 || !(mask & (std::size_t{1} << end))) continue;
      for (std::size_t nxt = 0; nxt < d; ++nxt) {
        if (mask & (std::size_t{1} << nxt)) continue;
        const std::size_t nmask = mask | (std::size_t{1} << nxt);
        const double cand = cur + absr(end, nxt);
        if (cand > dp[nmask * d + nxt]) {
          dp[nmask * d + nxt] = cand;
          parent[nmask * d + nxt] = end;
        }
      }
    }
  }

  std::size_t end = 0;
  for (std::size_t v = 1; v < d; ++v)
    if (dp[(full - 1) * d + v] > dp[(full - 1) * d + end]) end = v;

  std::vector<std::size_t> path;
  std::size_t mask = full - 1;
  while (end < d) {
    path.push_back(end);
    const std::size_t prev = parent[mask * d + end];
    mask &= ~(std::size_t{1} << end);
    end = prev;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// Orders features so strongly correlated pairs sit next to each other,
/// maximizing the sum of |rho| over adjacent pairs. Solved exactly by subset
/// DP up to 16 features (the wine table has 11); larger inputs fall back to
/// a greedy chain: seed with the strongest pair, then repeatedly attach the
/// feature with the highest |rho| to either chain end. Deterministic; ties
/// resolve toward the smaller index.
inline FeatureOrdering reorder_features(const CorrelationMatrix& corr) {
  const std::size_t d = corr.dim();
  const Matrix& r = corr.values;
  if (r.rows() != d || r.cols() != d)
    throw std::invalid_argument("reorder_features: matrix shape mismatch");
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (std::abs(r(i, j) - r(j, i)) > 1e-12)
        throw std::invalid_argument("reorder_features: matrix not symmetric");

  Matrix absr(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) absr(i, j) = std::abs(r(i, j));

  FeatureOrdering ord;
  if (d == 1) {
    ord.permutation = {0};
    return ord;
  }

  if (d <= 16) {
    ord.permutation = detail::best_path_exact(absr);
    ord.score = ordering_score(absr, ord.permutation);
    return ord;
  }

  std::size_t best_i = 0, best_j = 1;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (absr(i, j) > absr(best_i, best_j)) {
        best_i = i;
        best_j = j;
      }

  std::deque<std::size_t> chain{best_i, best_j};
  std::vector<bool> used(d, false);
  used[best_i] = used[best_j] = true;

  for (std::size_t placed = 2; placed < d; ++placed) {
    double best = -1.0;
    std::size_t pick = 0;
    bool front = false;
    for (std::size_t f = 0; f < d; ++f) {
      if (used[f]) continue;
      if (absr(chain.front(), f) > best) {
        best = absr(chain.front(), f);
        pick = f;
        front = true;
      }
      if (absr(chain.back(), f) > best) {
        best = absr(chain.back(), f);
        pick = f;
        front = false;
      }
    }
    used[pick] = true;
    if (front)
      chain.push_front(pick);
    else
      chain.push_back(pick);
  }

  ord.permutation.assign(chain.begin(), chain.end());
  ord.score = ordering_score(absr, ord.permutation);
  return ord;
}

/// Column j of the output is column permutation[j] of the input.
inline Matrix apply_ordering(const FeatureOrdering& ordering, const Matrix& matrix) {
  if (ordering.permutation.size() != matrix.cols())
    throw std::invalid_argument("apply_ordering: dimension mismatch");
  Matrix out(matrix.rows(), matrix.cols());
  for (std::size_t i = 0; i < matrix.rows(); ++i)
    for (std::size_t j = 0; j < matrix.cols(); ++j)
      out(i, j) = matrix(i, ordering.permutation[j]);
  return out;
}

inline FeatureOrdering inverse_ordering(const FeatureOrdering& ordering) {
  FeatureOrdering inv;
  inv.permutation.resize(ordering.permutation.size());
  for (std::size_t j = 0; j < ordering.permutation.size(); ++j)
    inv.permutation[ordering.permutation[j]] = j;
  inv.score = ordering.score;
  return inv;
}

}  // namespace tannin

#endif  // TANNIN_PREPROCESS_HPP
