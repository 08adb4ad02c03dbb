#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fp/errors.hpp"

namespace fp {

// All randomized code in the library draws through this wrapper instead of
// <random> distributions, whose output is implementation-defined. mt19937_64
// itself is fully specified, so every draw here is reproducible bit-for-bit
// across platforms and independent of the standard library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : base_seed_(seed), engine_(seed) {}

  // Independent stream for replicate/worker `index`; results do not depend on
  // how many draws the parent has made.
  [[nodiscard]] Rng substream(std::uint64_t index) const {
    std::uint64_t s = base_seed_ + 0x9E3779B97F4A7C15ull * (index + 1);
    s = mix(s);
    s = mix(s);
    return Rng(s);
  }

  std::uint64_t bits() { return engine_(); }

  // Uniform integer in [0, n), rejection sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw UsageError("Rng::below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw UsageError("Rng::gamma: shape must be positive");
    if (shape < 1.0) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      while (u <= 0.0) u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha) {
    Eigen::VectorXd g(alpha.size());
    for (Eigen::Index i = 0; i < alpha.size(); ++i) g[i] = gamma(alpha[i]);
    const double total = g.sum();
    if (!(total > 0.0)) return Eigen::VectorXd::Constant(alpha.size(), 1.0 / double(alpha.size()));
    return g / total;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t base_seed_;
  std::mt19937_64 engine_;
};

}  // namespace fp
