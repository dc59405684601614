#ifndef SSNMF_RNG_HPP
#define SSNMF_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace ssnmf {

/// Seeded pseudo-random source. Identical seeds yield identical draw streams.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on (0, 1]; never returns zero.
  double uniform_positive() { return 1.0 - uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  /// Random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ssnmf

#endif  // SSNMF_RNG_HPP
