#pragma once

#include <cmath>

#include "hforge/dual.hpp"

namespace hforge {

inline double value_of(double a) { return a; }
inline double value_of(const Dual& a) { return a.v; }

/// C-infinity step: 0 for u <= lo, 1 for u >= hi, flat to all orders at both ends.
template <class T>
T smooth_step(const T& u, double lo, double hi) {
  using std::exp;
  const T t = (u - lo) / (hi - lo);
  const double tv = value_of(t);
  if (tv <= 0.0) return T(0.0);
  if (tv >= 1.0) return T(1.0);
  const T a = exp(T(-1.0) / t);
  const T b = exp(T(-1.0) / (T(1.0) - t));
  return a / (a + b);
}

/// Derivative of smooth_step with respect to u, in the same arithmetic type.
template <class T>
T smooth_step_slope(const T& u, double lo, double hi) {
  using std::exp;
  const T t = (u - lo) / (hi - lo);
  const double tv = value_of(t);
  if (tv <= 0.0 || tv >= 1.0) return T(0.0);
  const T s = T(1.0) - t;
  const T a = exp(T(-1.0) / t);
  const T b = exp(T(-1.0) / s);
  const T sum = a + b;
  return a * b * (T(1.0) / (t * t) + T(1.0) / (s * s)) / (sum * sum) / (hi - lo);
}

/// Standard bump exp(1 - 1/(1 - s^2)) rescaled to (lo, hi); peak value 1 at the midpoint.
template <class T>
T smooth_bump(const T& u, double lo, double hi) {
  using std::exp;
  const T s = (T(2.0) * u - (lo + hi)) / (hi - lo);
  const double sv = value_of(s);
  if (sv <= -1.0 || sv >= 1.0) return T(0.0);
  return exp(T(1.0) - T(1.0) / (T(1.0) - s * s));
}

/// 0 outside (a, d), 1 on [b, c], smooth steps in between.
template <class T>
T smooth_plateau(const T& u, double a, double b, double c, double d) {
  return smooth_step(u, a, b) * (T(1.0) - smooth_step(u, c, d));
}

/// Derivative of smooth_step with respect to u.
inline double smooth_step_derivative(double u, double lo, double hi) {
  const Dual du = smooth_step(Dual::variable(u, 0), lo, hi);
  return du.d[0];
}

}  // namespace hforge
