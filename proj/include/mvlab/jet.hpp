#pragma once

#include <cmath>

namespace mvlab {

/// Second-order univariate Taylor jet: value, first and second derivative
/// along one coordinate direction. Evaluating a templated expression on a Jet
/// seeded with d = 1 yields the exact partial derivatives up to rounding.
struct Jet {
  double v = 0.0;
  double d = 0.0;
  double dd = 0.0;

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}  // NOLINT: implicit constants are intended
  constexpr Jet(double value, double first, double second) : v(value), d(first), dd(second) {}

  static constexpr Jet variable(double value) { return {value, 1.0, 0.0}; }
};

inline Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet operator-(Jet a, Jet b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet operator-(Jet a) { return {-a.v, -a.d, -a.dd}; }
inline Jet operator*(Jet a, Jet b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}

// f(a) with f, f', f'' evaluated at a.v
inline Jet chain(Jet a, double f, double f1, double f2) {
  return {f, f1 * a.d, f2 * a.d * a.d + f1 * a.dd};
}

inline Jet operator/(Jet a, Jet b) {
  const double inv = 1.0 / b.v;
  return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}
inline Jet& operator+=(Jet& a, Jet b) { return a = a + b; }
inline Jet& operator*=(Jet& a, Jet b) { return a = a * b; }

inline Jet exp(Jet a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}
inline Jet cos(Jet a) {
  const double c = std::cos(a.v), s = std::sin(a.v);
  return chain(a, c, -s, -c);
}
inline Jet sin(Jet a) {
  const double c = std::cos(a.v), s = std::sin(a.v);
  return chain(a, s, c, -s);
}
inline Jet cosh(Jet a) {
  const double c = std::cosh(a.v), s = std::sinh(a.v);
  return chain(a, c, s, c);
}
inline Jet sinh(Jet a) {
  const double c = std::cosh(a.v), s = std::sinh(a.v);
  return chain(a, s, c, s);
}
/// a^p for real p (a.v > 0 unless p is a nonnegative integer).
inline Jet pow(Jet a, double p) {
  const double f = std::pow(a.v, p);
  const double f1 = p * std::pow(a.v, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(a.v, p - 2.0);
  return chain(a, f, f1, f2);
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.v; }

}  // namespace mvlab
