#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "hforge/chart.hpp"
#include "hforge/field.hpp"
#include "hforge/geometry.hpp"

namespace hforge {

/// Axis-aligned box in the base chart (x, y).
struct SupportBox {
  double x0 = 0.0;
  double x1 = 1.0;
  double y0 = -kHalfPi;
  double y1 = kHalfPi;

  [[nodiscard]] bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  [[nodiscard]] bool covers_latitude(double y) const { return y >= y0 && y <= y1; }
};

/// Scalar function H(x, y, w) split as varying(x, y, w) + offset(x, y). Only the varying part
/// generates fiber motion, and it must vanish outside `support` (checked by sampling).
struct HamiltonianFamily {
  Field varying;
  Field offset;
  SupportBox support;

  [[nodiscard]] bool is_zero() const { return varying.is_zero() && offset.is_zero(); }
  [[nodiscard]] Dual eval(const DualPoint& p) const { return varying(p) + offset(p); }
  [[nodiscard]] Jet jet(const ChartPoint& p) const;
  [[nodiscard]] double value(const ChartPoint& p) const { return varying.value(p) + offset.value(p); }
  [[nodiscard]] HamiltonianFamily scaled(double s) const;
  /// Largest |varying| seen at sample points outside the declared support.
  [[nodiscard]] double support_leak(const Annulus& annulus, int samples = 24) const;
  /// Largest w-variation of varying + offset at sample points with r outside the annulus.
  [[nodiscard]] double outside_annulus_variation(const Annulus& annulus, int samples = 16) const;
};

/// Bump data for inflation: a fiber bump in the two polar caps and a base bump on the
/// correction square.
struct BumpPair {
  // Fiber caps, as radius ranges: south cap bump on [s_lo, s_hi], north cap on [n_lo, n_hi].
  double s_lo = 0.05;
  double s_hi = 0.2;
  double n_lo = 5.0;
  double n_hi = 20.0;
  double amp_s = 0.0;
  double amp_n = 0.0;
  // Correction interval [u0, u1] in x with local margin eps.
  double u0 = 0.1;
  double u1 = 0.25;
  double eps = 0.05;
  double a = 0.0;

  [[nodiscard]] double x_local(double x) const { return (x - u0) / (u1 - u0); }
  [[nodiscard]] double f_sigma(double r) const;
  [[nodiscard]] double fbar_tau(double x, double y) const;
};

/// Omega = 1/(c+1) [ F_B dx^dy + F_F dr^dtheta + dPhi ^ dx ] with
/// F_B = f + c fbar_tau / a, F_F = (1 + c f_sigma) sigma_std, Phi = K + t H.
/// K is the Hamiltonian of the initial connection and H the correction.
class StructuredForm {
 public:
  StructuredForm() = default;
  StructuredForm(std::function<double(double, double)> base_density, Annulus annulus);

  static StructuredForm standard(Annulus annulus = {});

  std::function<double(double, double)> base_density;
  Annulus annulus;
  HamiltonianFamily initial;
  HamiltonianFamily correction;
  double t = 0.0;
  double c = 0.0;
  std::shared_ptr<const BumpPair> bumps;

  [[nodiscard]] double f(double x, double y) const { return base_density(x, y); }
  [[nodiscard]] double base_coefficient(double x, double y) const;
  [[nodiscard]] double fiber_coefficient(double r) const;
  [[nodiscard]] Jet phi_jet(const ChartPoint& p) const;
  [[nodiscard]] double phi_value(const ChartPoint& p) const;
  [[nodiscard]] Form2Coefficients coefficients(const ChartPoint& p) const;
  [[nodiscard]] Form2Patch patch() const;

  /// Horizontal lift of d/dx is d/dx + (dr, dtheta); the 1/(c+1) scale cancels.
  [[nodiscard]] std::pair<double, double> fiber_velocity(double x, double y, double r, double theta) const;
  /// x-intervals where the fiber motion along latitude y can be nonzero, sorted, merged.
  [[nodiscard]] std::vector<std::pair<double, double>> moving_intervals(double y) const;

  /// (F_B - dPhi/dy) / f, the factored symplecticity margin.
  [[nodiscard]] double factored_margin(const ChartPoint& p) const;
  /// Omega ^ Omega coefficient of the same form with Phi = 0.
  [[nodiscard]] double split_baseline(const ChartPoint& p) const;

  [[nodiscard]] StructuredForm with_correction(HamiltonianFamily h, double scale) const;
  [[nodiscard]] StructuredForm with_scale(double scale) const;
};

}  // namespace hforge
