#ifndef TANNIN_TESTS_GRADIENT_CHECK_HPP
#define TANNIN_TESTS_GRADIENT_CHECK_HPP

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <vector>

#include "tannin/nn.hpp"

namespace tannin_tests {

// Central finite differences of the data loss with respect to every
// parameter, evaluated with dropout off so masks play no role.  Also records
// the sign pattern of every ReLU pre-activation: a finite-difference step that
// flips one crosses a kink, where the central difference no longer estimates
// the one-sided derivative and the coordinate must be skipped.
inline double loss_and_signs(tannin::nn::Model& model, const tannin::Tensor& x,
                             const std::vector<int>& y, std::vector<bool>* signs) {
  if (signs) signs->clear();
  tannin::Tensor h = x;
  for (auto& layer : model.layers()) {
    if (signs && layer->kind() == "relu")
      for (const double v : h.data) signs->push_back(v > 0.0);
    h = layer->forward(h, true, nullptr);
  }
  return tannin::nn::softmax_cross_entropy(h, y).first;
}

inline double loss_of(tannin::nn::Model& model, const tannin::Tensor& x,
                      const std::vector<int>& y) {
  return loss_and_signs(model, x, y, nullptr);
}

inline void check_gradients(tannin::nn::Model& model, const tannin::Tensor& x,
                            const std::vector<int>& y, double tol = 1e-4) {
  namespace nn = tannin::nn;
  // Analytic pass.
  const tannin::Tensor logits = model.forward(x, true, nullptr);
  const auto [loss, probs] = nn::softmax_cross_entropy(logits, y);
  tannin::Tensor dlogits({logits.shape[0], logits.shape[1]});
  for (std::size_t b = 0; b < logits.shape[0]; ++b)
    for (std::size_t c = 0; c < logits.shape[1]; ++c)
      dlogits.at(b, c) = (probs.at(b, c) - (static_cast<int>(c) == y[b] ? 1.0 : 0.0)) /
                         static_cast<double>(logits.shape[0]);
  model.backward(dlogits);
  const std::vector<double> analytic = model.flat_grads();

  std::vector<double> theta = model.flat_params();
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::vector<bool> signs_up, signs_down;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    // Start at the nominal step and halve while the O(h^2) truncation of the
    // central difference still dominates the tolerance; a wrong analytic
    // gradient is never rescued because the estimate converges to the true
    // derivative as h shrinks.
    double rel = std::numeric_limits<double>::infinity();
    bool kink_free = false;
    for (double h = 1e-3; h >= 1e-5; h /= 2.0) {
      theta[i] = orig + h;
      model.set_flat_params(theta);
      const double up = loss_and_signs(model, x, y, &signs_up);
      theta[i] = orig - h;
      model.set_flat_params(theta);
      const double down = loss_and_signs(model, x, y, &signs_down);
      theta[i] = orig;
      if (signs_up != signs_down) continue;  // step crosses a ReLU kink
      kink_free = true;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
      rel = std::abs(numeric - analytic[i]) / denom;
      if (rel < tol) break;
    }
    if (!kink_free) continue;
    ++checked;
    max_rel = std::max(max_rel, rel);
  }
  model.set_flat_params(theta);
  EXPECT_GE(checked, theta.size() * 9 / 10);  // the kink filter must stay marginal
  EXPECT_LT(max_rel, tol);
}

}  // namespace tannin_tests

#endif  // TANNIN_TESTS_GRADIENT_CHECK_HPP
