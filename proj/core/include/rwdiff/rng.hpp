#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace rwdiff {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Splittable stream seed: a trajectory is fully determined by (seed, index)
// no matter how trajectories are scheduled across workers.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64(x);
  x ^= (index + 0x632be59bd9b4e019ULL) * 0x9e3779b97f4a7c15ULL;
  std::uint64_t b = splitmix64(x);
  return a ^ (b + 0x2545f4914f6cdd1dULL);
}

// Per-trajectory generator.  mt19937_64's output sequence is mandated by the
// standard; the variate transforms are hand-rolled (std::*_distribution is
// implementation-defined), so identical builds give identical paths on any
// platform and any worker count.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t index)
      : engine_(stream_seed(seed, index)) {}

  // Uniform on (0,1), never exactly 0 or 1.
  double u01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = u01();
    double u2 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
  }

  // Gamma(shape k, scale 1), Marsaglia-Tsang; boosted for k < 1.
  double gamma(double k) {
    if (!(k > 0)) throw std::invalid_argument("gamma: shape must be > 0");
    if (k < 1.0) {
      double u = u01();
      return gamma(k + 1.0) * std::pow(u, 1.0 / k);
    }
    double d = k - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0) continue;
      v = v * v * v;
      double u = u01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace rwdiff
