#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sfma {

// Deterministic random stream. std::mt19937_64 output is fully specified by
// the standard, and all variate transforms below are explicit, so a seed
// reproduces the same draws on any platform/compiler. (The std distribution
// adaptors are implementation-defined and would break that contract.)
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); never returns an endpoint, safe under log().
  double uniform_open() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one call consumes two uniforms on the first of each pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // |N(0, sigma2)|: half-normal with variance parameter sigma2.
  double half_normal(double sigma2) {
    return std::sqrt(sigma2) * std::abs(normal());
  }

  // Integer in [0, n).
  int below(int n) {
    const int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

  // First `count` entries of a random permutation of {0, ..., n-1}.
  std::vector<int> sample_indices(int n, int count) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < count && i < n; ++i) {
      const int j = i + below(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(count < n ? count : n);
    return idx;
  }

private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0;
};

}  // namespace sfma
