#pragma once

#include <array>
#include <cmath>

namespace rwdiff {

// Small fixed-capacity ambient vector.  Ambient dimension is d (flat fiber)
// or d+1 (curved fibers); with d <= 7 this never allocates.
struct Vec {
  static constexpr int kCap = 8;
  std::array<double, kCap> c{};
  int n = 0;

  Vec() = default;
  explicit Vec(int dim) : n(dim) {}

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }
  int size() const { return n; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) c[i] *= s;
    return *this;
  }
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double s, Vec a) { return a *= s; }

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) s += a.c[i] * b.c[i];
  return s;
}

// Minkowski form with signature (-,+,...,+); coordinate 0 is timelike.
inline double mdot(const Vec& a, const Vec& b) {
  double s = -a.c[0] * b.c[0];
  for (int i = 1; i < a.n; ++i) s += a.c[i] * b.c[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

}  // namespace rwdiff
