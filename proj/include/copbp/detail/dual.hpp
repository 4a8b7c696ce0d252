#pragma once

// Forward-mode dual number carrying first derivatives with respect to a fixed
// number of seeds. Only the operations the copula formulas need are defined.

#include <array>
#include <cmath>

namespace copbp::detail {

template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static Dual seed(double value, int index) {
    Dual x(value);
    x.d[index] = 1.0;
    return x;
  }
};

template <int N>
inline Dual<N> apply(const Dual<N>& x, double value, double slope) {
  Dual<N> r(value);
  for (int i = 0; i < N; ++i) r.d[i] = slope * x.d[i];
  return r;
}

template <int N>
inline Dual<N> operator-(const Dual<N>& a) {
  return apply(a, -a.v, -1.0);
}

template <int N>
inline Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v + b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
template <int N>
inline Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v - b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
template <int N>
inline Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v * b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
template <int N>
inline Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  const double q = a.v / b.v;
  Dual<N> r(q);
  for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - q * b.d[i]) / b.v;
  return r;
}

template <int N> inline Dual<N> operator+(const Dual<N>& a, double b) { return a + Dual<N>(b); }
template <int N> inline Dual<N> operator+(double a, const Dual<N>& b) { return Dual<N>(a) + b; }
template <int N> inline Dual<N> operator-(const Dual<N>& a, double b) { return a - Dual<N>(b); }
template <int N> inline Dual<N> operator-(double a, const Dual<N>& b) { return Dual<N>(a) - b; }
template <int N> inline Dual<N> operator*(const Dual<N>& a, double b) { return apply(a, a.v * b, b); }
template <int N> inline Dual<N> operator*(double a, const Dual<N>& b) { return apply(b, a * b.v, a); }
template <int N> inline Dual<N> operator/(const Dual<N>& a, double b) { return apply(a, a.v / b, 1.0 / b); }
template <int N> inline Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) / b; }

template <int N>
inline Dual<N> exp(const Dual<N>& x) {
  const double e = std::exp(x.v);
  return apply(x, e, e);
}
template <int N>
inline Dual<N> expm1(const Dual<N>& x) {
  return apply(x, std::expm1(x.v), std::exp(x.v));
}
template <int N>
inline Dual<N> log(const Dual<N>& x) {
  return apply(x, std::log(x.v), 1.0 / x.v);
}
template <int N>
inline Dual<N> log1p(const Dual<N>& x) {
  return apply(x, std::log1p(x.v), 1.0 / (1.0 + x.v));
}
template <int N>
inline Dual<N> sqrt(const Dual<N>& x) {
  const double s = std::sqrt(x.v);
  return apply(x, s, 0.5 / s);
}

inline double value_of(double x) { return x; }
template <int N>
inline double value_of(const Dual<N>& x) {
  return x.v;
}

}  // namespace copbp::detail
