#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hforge {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHalfPi = 0.5 * std::numbers::pi;
inline constexpr double kQuarterPi = 0.25 * std::numbers::pi;

/// Raised when an operation's preconditions do not hold (bad region, bad input family).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative numerical procedure exhausts its budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical representative of an angle in [0, 2pi).
inline double canonical_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t -= kTwoPi;
  return t;
}

/// Distance between two angles on the circle, in [0, pi].
inline double angle_distance(double a, double b) {
  const double d = canonical_angle(a - b);
  return d > kPi ? kTwoPi - d : d;
}

/// Point of the base sphere: x is longitude normalized to [0,1], y is latitude.
struct BasePoint {
  double x = 0.0;
  double y = 0.0;

  [[nodiscard]] bool at_pole() const { return std::abs(std::abs(y) - kHalfPi) < 1e-15; }
};

/// Point of the fiber sphere in stereographic polar coordinates w = r e^{i theta}.
/// The north pole (w = infinity) is flagged instead of stored.
struct FiberPoint {
  double r = 0.0;
  double theta = 0.0;
  bool at_infinity = false;

  static FiberPoint polar(double radius, double angle) {
    if (radius < 0.0) throw PreconditionError("FiberPoint: negative radius");
    return FiberPoint{radius, canonical_angle(angle), false};
  }
  static FiberPoint infinity() { return FiberPoint{0.0, 0.0, true}; }

  [[nodiscard]] double u() const { return r * std::cos(theta); }
  [[nodiscard]] double v() const { return r * std::sin(theta); }
};

/// Planar (chart) distance between fiber points; infinity is only close to itself.
inline double fiber_distance(const FiberPoint& a, const FiberPoint& b) {
  if (a.at_infinity || b.at_infinity) return (a.at_infinity && b.at_infinity) ? 0.0 : INFINITY;
  return std::hypot(a.u() - b.u(), a.v() - b.v());
}

/// Coordinates on the product chart (x, y, r, theta).
struct ChartPoint {
  double x = 0.0;
  double y = 0.0;
  double r = 1.0;
  double theta = 0.0;

  [[nodiscard]] BasePoint base() const { return {x, y}; }
  [[nodiscard]] FiberPoint fiber() const { return FiberPoint{r, theta, false}; }
};

/// Closed annulus a <= |w| <= b in the stereographic fiber chart.
struct Annulus {
  double a = 0.25;
  double b = 4.0;

  void validate() const {
    if (!(a > 0.0) || !(b > a)) throw PreconditionError("Annulus: need 0 < a < b");
    if (!(a < 1.0 && b > 1.0)) throw PreconditionError("Annulus: the equator |w|=1 must lie inside");
  }
  [[nodiscard]] bool contains(double r) const { return r >= a && r <= b; }
};

}  // namespace hforge
