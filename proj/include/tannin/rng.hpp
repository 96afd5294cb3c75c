#ifndef TANNIN_RNG_HPP
#define TANNIN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tannin {

/// Seeded generator built on std::mt19937 (whose output sequence is fixed by
/// the standard) with hand-rolled derived draws, so runs replicate across
/// standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint32_t seed) : gen_(seed) {}

  std::uint32_t next_u32() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_()) * (1.0 / 4294967296.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); Lemire multiply-shift reduction.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<std::uint64_t>(gen_()) * static_cast<std::uint64_t>(n)) >> 32);
  }

  /// Box-Muller standard normal.
  double normal() {
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Fisher-Yates with portable index draws.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937 gen_;
};

/// Stable seed derivation for named sub-streams (per-model, per-tree, ...).
inline std::uint32_t derive_seed(std::uint32_t base, std::uint32_t stream) {
  std::uint64_t z = (static_cast<std::uint64_t>(base) << 32) ^ (stream + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<std::uint32_t>((z ^ (z >> 31)) & 0xffffffffULL);
}

}  // namespace tannin

#endif  // TANNIN_RNG_HPP
