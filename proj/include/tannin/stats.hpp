#ifndef TANNIN_STATS_HPP
#define TANNIN_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tannin/dataset.hpp"
#include "tannin/error.hpp"
#include "tannin/matrix.hpp"

namespace tannin {

// ---------------------------------------------------------------------------
// Basic moments
// ---------------------------------------------------------------------------

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample (n-1) standard deviation.
inline double sample_std(std::span<const double> x) {
  const double mu = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// ---------------------------------------------------------------------------
// Pearson correlation
// ---------------------------------------------------------------------------

/// Pearson correlation coefficient using sample means and standard
/// deviations. Clamped to [-1,1] to absorb last-ulp drift.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson: zero-variance input, correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Symmetric matrix of pairwise Pearson coefficients over named columns.
struct CorrelationMatrix {
  std::vector<std::string> labels;
  Matrix values;

  std::size_t dim() const { return labels.size(); }
};

inline CorrelationMatrix correlation_matrix(const Dataset& dataset, bool include_label) {
  if (dataset.empty()) throw DataError("correlation_matrix: empty dataset");
  const std::size_t d = dataset.feature_count();
  const std::size_t total = include_label ? d + 1 : d;

  std::vector<std::vector<double>> cols(total);
  for (std::size_t j = 0; j < d; ++j) cols[j] = dataset.feature_column(j);
  if (include_label) {
    cols[d].resize(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i)
      cols[d][i] = static_cast<double>(dataset.samples[i].quality);
  }

  CorrelationMatrix cm;
  for (std::size_t j = 0; j < total; ++j) cm.labels.push_back(dataset.column_names[j]);
  cm.values = Matrix(total, total, 1.0);

  for (std::size_t i = 0; i < total; ++i)
    if (sample_std(cols[i]) == 0.0)
      throw DataError("correlation_matrix: zero-variance column '" + cm.labels[i] + "'");

  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = i + 1; j < total; ++j) {
      const double rho = pearson(cols[i], cols[j]);
      cm.values(i, j) = rho;
      cm.values(j, i) = rho;
    }
  }
  return cm;
}

// ---------------------------------------------------------------------------
// Eigendecomposition (cyclic Jacobi) and PCA
// ---------------------------------------------------------------------------

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // row k = eigenvector for values[k]
};

/// Cyclic Jacobi rotations on a symmetric matrix. Deterministic; converges
/// to off-diagonal norm below 1e-12 or stops at the sweep cap.
inline EigenDecomposition jacobi_eigen(Matrix a, double tol = 1e-12, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("jacobi_eigen: matrix not square");
  Matrix v(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) < tol) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition ed;
  ed.values.resize(n);
  ed.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    ed.values[k] = a(order[k], order[k]);
    // Fixed sign convention: the entry of largest magnitude is positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v(i, order[k])) > std::abs(v(arg, order[k]))) arg = i;
    const double sign = v(arg, order[k]) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) ed.vectors(k, i) = sign * v(i, order[k]);
  }
  return ed;
}

struct PcaResult {
  Matrix components;                       // row k = unit-norm direction k
  std::vector<double> explained_variance;  // non-increasing
  std::vector<double> explained_variance_ratio;
  std::vector<double> importance;          // per feature, sums to 1
  std::vector<double> center;              // per-feature mean used to center
  std::vector<double> scale;               // per-feature divisor (1 if raw)
};

/// PCA of the feature block: eigendecomposition of the covariance matrix
/// (correlation matrix when standardize). Importance of feature j is the
/// explained-variance-weighted sum of |loading| over components, normalized
/// to sum to 1.
inline PcaResult pca(const Dataset& dataset, bool standardize = true) {
  if (dataset.size() < 2) throw DataError("pca: need at least 2 samples");
  const std::size_t n = dataset.size();
  const std::size_t d = dataset.feature_count();

  PcaResult res;
  res.center.resize(d);
  res.scale.assign(d, 1.0);

  Matrix x = dataset.feature_matrix();
  for (const double v : x.data())
    if (!std::isfinite(v)) throw DataError("pca: non-finite value in features");

  for (std::size_t j = 0; j < d; ++j) {
    const auto col = x.column(j);
    res.center[j] = mean(col);
    if (standardize) {
      const double s = sample_std(col);
      res.scale[j] = s > 0.0 ? s : 1.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = (x(i, j) - res.center[j]) / res.scale[j];

  Matrix cov(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += x(i, a) * x(i, b);
      cov(a, b) = cov(b, a) = s / static_cast<double>(n - 1);
    }
  }

  EigenDecomposition ed = jacobi_eigen(cov);
  res.components = std::move(ed.vectors);
  res.explained_variance = std::move(ed.values);
  for (double& v : res.explained_variance) v = std::max(v, 0.0);

  const double total = std::accumulate(res.explained_variance.begin(),
                                       res.explained_variance.end(), 0.0);
  res.explained_variance_ratio.resize(d);
  for (std::size_t k = 0; k < d; ++k)
    res.explained_variance_ratio[k] = total > 0.0 ? res.explained_variance[k] / total : 0.0;

  res.importance.assign(d, 0.0);
  double norm = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < d; ++k)
      res.importance[j] += res.explained_variance_ratio[k] * std::abs(res.components(k, j));
    norm += res.importance[j];
  }
  if (norm > 0.0)
    for (double& v : res.importance) v /= norm;
  return res;
}

// ---------------------------------------------------------------------------
// Normal distribution helpers
// ---------------------------------------------------------------------------

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Inverse standard normal CDF: Acklam's rational approximation refined by
/// one Halley step, accurate to full double precision.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk normality test (AS R94, Royston 1995)
// ---------------------------------------------------------------------------

struct ShapiroResult {
  double w_statistic = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
};

inline ShapiroResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3) throw std::invalid_argument("shapiro_wilk: need at least 3 observations");
  if (n > 5000) throw std::invalid_argument("shapiro_wilk: n > 5000 unsupported");

  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  if (x.front() == x.back())
    throw std::invalid_argument("shapiro_wilk: constant sample");

  const double dn = static_cast<double>(n);

  // Expected normal order statistics (Blom scores) and the Royston-corrected
  // coefficient vector a.
  std::vector<double> m(n);
  double ssq_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (dn + 0.25));
    ssq_m += m[i] * m[i];
  }

  std::vector<double> a(n);
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[1] = 0.0;
    a[2] = std::sqrt(0.5);
  } else {
    const double rsn = 1.0 / std::sqrt(dn);
    const double c_n = m[n - 1] / std::sqrt(ssq_m);
    const double an = -2.706056 * std::pow(rsn, 5) + 4.434685 * std::pow(rsn, 4) -
                      2.071190 * std::pow(rsn, 3) - 0.147981 * rsn * rsn + 0.221157 * rsn + c_n;
    double phi;
    std::size_t fixed = 1;
    double an1 = 0.0;
    if (n > 5) {
      const double c_n1 = m[n - 2] / std::sqrt(ssq_m);
      an1 = -3.582633 * std::pow(rsn, 5) + 5.682633 * std::pow(rsn, 4) -
            1.752461 * std::pow(rsn, 3) - 0.293762 * rsn * rsn + 0.042981 * rsn + c_n1;
      fixed = 2;
      phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
            (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
    } else {
      phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
    }
    a[n - 1] = an;
    a[0] = -an;
    if (fixed == 2) {
      a[n - 2] = an1;
      a[1] = -an1;
    }
    for (std::size_t i = fixed; i < n - fixed; ++i) a[i] = m[i] / std::sqrt(phi);
  }

  const double xbar = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += a[i] * x[i];
    den += (x[i] - xbar) * (x[i] - xbar);
  }
  double w = num * num / den;
  w = std::min(w, 1.0);

  // Royston's normalizing transformation of W.
  double p;
  if (n == 3) {
    constexpr double pi6 = 1.90985931710274;   // 6/pi
    constexpr double stqr = 1.04719755119660;  // asin(sqrt(3/4))
    p = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
  } else if (n <= 11) {
    const double gamma = -2.273 + 0.459 * dn;
    const double lw = -std::log(gamma - std::log1p(-w));
    const double mu = 0.5440 - 0.39978 * dn + 0.025054 * dn * dn - 0.0006714 * dn * dn * dn;
    const double sigma =
        std::exp(1.3822 - 0.77857 * dn + 0.062767 * dn * dn - 0.0020322 * dn * dn * dn);
    p = 1.0 - normal_cdf((lw - mu) / sigma);
  } else {
    const double y = std::log(dn);
    const double lw = std::log1p(-w);
    const double mu = -1.5861 - 0.31082 * y - 0.083751 * y * y + 0.0038915 * y * y * y;
    const double sigma = std::exp(-0.4803 - 0.082676 * y + 0.0030302 * y * y);
    p = 1.0 - normal_cdf((lw - mu) / sigma);
  }

  return ShapiroResult{w, std::clamp(p, 0.0, 1.0), n};
}

}  // namespace tannin

#endif  // TANNIN_STATS_HPP
