#ifndef TANNIN_TENSOR_HPP
#define TANNIN_TENSOR_HPP

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tannin/matrix.hpp"

namespace tannin {

/// Dense row-major numeric array of rank 1-3, the common currency of the
/// layer operations.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(count(shape), 0.0);
  }
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (count(shape) != data.size())
      throw std::invalid_argument("Tensor: shape/data size mismatch");
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (const auto d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }

  // rank-2 access [i, j]
  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  // rank-3 access [b, c, l]
  double& at(std::size_t b, std::size_t c, std::size_t l) {
    return data[(b * shape[1] + c) * shape[2] + l];
  }
  double at(std::size_t b, std::size_t c, std::size_t l) const {
    return data[(b * shape[1] + c) * shape[2] + l];
  }

  static Tensor from_matrix(const Matrix& m) {
    return Tensor({m.rows(), m.cols()}, m.data());
  }
};

}  // namespace tannin

#endif  // TANNIN_TENSOR_HPP
