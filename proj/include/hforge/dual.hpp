#pragma once

#include <array>
#include <cmath>

namespace hforge {

/// Forward-mode dual number carrying the gradient with respect to the four
/// chart coordinates (x, y, r, theta).
struct Dual {
  double v = 0.0;
  std::array<double, 4> d{0.0, 0.0, 0.0, 0.0};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(double value, const std::array<double, 4>& grad) : v(value), d(grad) {}

  static constexpr Dual variable(double value, int index) {
    Dual out(value);
    out.d[static_cast<std::size_t>(index)] = 1.0;
    return out;
  }

  [[nodiscard]] bool is_zero() const {
    return v == 0.0 && d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0 && d[3] == 0.0;
  }
};

namespace detail {
inline Dual chain(const Dual& a, double value, double slope) {
  Dual out(value);
  for (int i = 0; i < 4; ++i) out.d[i] = slope * a.d[i];
  return out;
}
}  // namespace detail

inline Dual operator+(const Dual& a, const Dual& b) {
  Dual out(a.v + b.v);
  for (int i = 0; i < 4; ++i) out.d[i] = a.d[i] + b.d[i];
  return out;
}
inline Dual operator-(const Dual& a, const Dual& b) {
  Dual out(a.v - b.v);
  for (int i = 0; i < 4; ++i) out.d[i] = a.d[i] - b.d[i];
  return out;
}
inline Dual operator-(const Dual& a) {
  Dual out(-a.v);
  for (int i = 0; i < 4; ++i) out.d[i] = -a.d[i];
  return out;
}
inline Dual operator*(const Dual& a, const Dual& b) {
  Dual out(a.v * b.v);
  for (int i = 0; i < 4; ++i) out.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return out;
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const double inv = 1.0 / b.v;
  Dual out(a.v * inv);
  for (int i = 0; i < 4; ++i) out.d[i] = (a.d[i] - out.v * b.d[i]) * inv;
  return out;
}
inline Dual& operator+=(Dual& a, const Dual& b) { return a = a + b; }
inline Dual& operator-=(Dual& a, const Dual& b) { return a = a - b; }
inline Dual& operator*=(Dual& a, const Dual& b) { return a = a * b; }

inline Dual sin(const Dual& a) { return detail::chain(a, std::sin(a.v), std::cos(a.v)); }
inline Dual cos(const Dual& a) { return detail::chain(a, std::cos(a.v), -std::sin(a.v)); }
inline Dual tan(const Dual& a) {
  const double t = std::tan(a.v);
  return detail::chain(a, t, 1.0 + t * t);
}
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return detail::chain(a, e, e);
}
inline Dual log(const Dual& a) { return detail::chain(a, std::log(a.v), 1.0 / a.v); }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return detail::chain(a, s, s > 0.0 ? 0.5 / s : 0.0);
}
inline Dual tanh(const Dual& a) {
  const double t = std::tanh(a.v);
  return detail::chain(a, t, 1.0 - t * t);
}
inline Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }

inline Dual pow_int(const Dual& a, int n) {
  if (n == 0) return Dual(1.0);
  if (n < 0) return Dual(1.0) / pow_int(a, -n);
  const double base = std::pow(a.v, n - 1);
  return detail::chain(a, base * a.v, n * base);
}

inline Dual pow(const Dual& a, const Dual& b) {
  const bool constant_exponent = b.d[0] == 0.0 && b.d[1] == 0.0 && b.d[2] == 0.0 && b.d[3] == 0.0;
  if (constant_exponent && b.v == std::round(b.v) && std::abs(b.v) < 64.0) {
    return pow_int(a, static_cast<int>(b.v));
  }
  return exp(b * log(a));
}

using DualPoint = std::array<Dual, 4>;

}  // namespace hforge
