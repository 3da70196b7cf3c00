#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace sen {

// Deterministic random source. All stochastic code in the project draws from
// one of these so that a run is fully reproduced by its seed; the standard
// <random> distributions are avoided on purpose because their output is not
// pinned down by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, caching the second draw
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // uniform integer in [0, n)
  long randint(long n) {
    if (n <= 0) throw std::invalid_argument("randint: n must be positive");
    return static_cast<long>(eng_() % static_cast<std::uint64_t>(n));
  }

  // derive an independent seed for a sub-component
  std::uint64_t fork() { return eng_(); }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sen
