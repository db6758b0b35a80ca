#pragma once

#include <array>
#include <functional>
#include <memory>
#include <utility>

#include "hforge/chart.hpp"
#include "hforge/dual.hpp"

namespace hforge {

/// Value plus gradient of a scalar field at a chart point.
struct Jet {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dr = 0.0;
  double dtheta = 0.0;
};

inline DualPoint seed(const ChartPoint& p) {
  return {Dual::variable(p.x, 0), Dual::variable(p.y, 1), Dual::variable(p.r, 2),
          Dual::variable(p.theta, 3)};
}

/// Smooth scalar field on the (x, y, r, theta) chart, differentiated exactly by
/// forward-mode evaluation. Cheap to copy; the callable is shared.
class Field {
 public:
  using Fn = std::function<Dual(const DualPoint&)>;

  Field() = default;
  explicit Field(Fn fn) : fn_(std::make_shared<const Fn>(std::move(fn))) {}

  static Field constant(double c) {
    if (c == 0.0) return Field();
    return Field([c](const DualPoint&) { return Dual(c); });
  }

  /// True only for the structural zero field (default constructed).
  [[nodiscard]] bool is_zero() const { return !fn_; }

  Dual operator()(const DualPoint& p) const { return fn_ ? (*fn_)(p) : Dual(0.0); }

  [[nodiscard]] Jet jet(const ChartPoint& p) const {
    const Dual d = (*this)(seed(p));
    return {d.v, d.d[0], d.d[1], d.d[2], d.d[3]};
  }
  [[nodiscard]] double value(const ChartPoint& p) const {
    if (!fn_) return 0.0;
    return (*fn_)(DualPoint{Dual(p.x), Dual(p.y), Dual(p.r), Dual(p.theta)}).v;
  }

  [[nodiscard]] Field scaled(double s) const {
    if (is_zero() || s == 0.0) return Field();
    auto inner = fn_;
    return Field([inner, s](const DualPoint& p) { return Dual(s) * (*inner)(p); });
  }

  friend Field operator+(const Field& a, const Field& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    auto fa = a.fn_;
    auto fb = b.fn_;
    return Field([fa, fb](const DualPoint& p) { return (*fa)(p) + (*fb)(p); });
  }
  friend Field operator-(const Field& a, const Field& b) { return a + b.scaled(-1.0); }

  friend Field operator*(const Field& a, const Field& b) {
    if (a.is_zero() || b.is_zero()) return Field();
    auto fa = a.fn_;
    auto fb = b.fn_;
    return Field([fa, fb](const DualPoint& p) {
      const Dual left = (*fa)(p);
      if (left.is_zero()) return Dual(0.0);
      return left * (*fb)(p);
    });
  }

 private:
  std::shared_ptr<const Fn> fn_;
};

}  // namespace hforge
