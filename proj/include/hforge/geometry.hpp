#pragma once

#include <array>
#include <functional>
#include <limits>

#include "hforge/chart.hpp"

namespace hforge {

// Standard normalized area form on the fiber sphere, sigma_std = g(r) dr ^ dtheta.
inline double sigma_std_density(double r) {
  const double q = 1.0 + r * r;
  return r / (kPi * q * q);
}

/// Coefficient of the primitive lambda_std = c(r) dtheta, d(lambda_std) = sigma_std.
inline double lambda_std_coefficient(double r) { return -1.0 / (kTwoPi * (1.0 + r * r)); }

/// sigma_std-area of the disk |w| <= r (the lower hemisphere is r = 1, area 1/2).
inline double std_disk_area(double r) { return r * r / (1.0 + r * r); }

/// Inverse of std_disk_area on [0, 1).
inline double std_disk_radius(double area) { return std::sqrt(area / (1.0 - area)); }

/// Standard base density against dx ^ dy, x = longitude / 2pi, y = latitude.
inline double std_base_density(double y) { return 0.5 * std::cos(y); }

enum class ChartKind { Base, Fiber };

/// Area form given by its density against the coordinate area element of a chart:
/// dx ^ dy on the base, dr ^ dtheta on the fiber.
struct AreaForm {
  std::function<double(double, double)> density;
  ChartKind kind = ChartKind::Base;

  static AreaForm sigma_std_fiber() {
    return {[](double r, double) { return sigma_std_density(r); }, ChartKind::Fiber};
  }
  static AreaForm sigma_std_base() {
    return {[](double, double y) { return std_base_density(y); }, ChartKind::Base};
  }
};

/// Coordinate rectangle [u0,u1] x [v0,v1]; on the fiber chart u = r (u1 may be +inf).
struct ChartRect {
  double u0 = 0.0;
  double u1 = 1.0;
  double v0 = 0.0;
  double v1 = 1.0;
  bool pole_handling = false;

  static ChartRect base_sphere() { return {0.0, 1.0, -kHalfPi, kHalfPi, true}; }
  static ChartRect base_lower_hemisphere() { return {0.0, 1.0, -kHalfPi, 0.0, true}; }
  static ChartRect fiber_sphere() {
    return {0.0, std::numeric_limits<double>::infinity(), 0.0, kTwoPi, true};
  }
  static ChartRect fiber_disk(double radius) { return {0.0, radius, 0.0, kTwoPi, true}; }
  static ChartRect fiber_annulus(double a, double b) { return {a, b, 0.0, kTwoPi, false}; }
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Composite 2-D Simpson rule with at least `per_unit` intervals per unit length in
/// each direction (rounded up to even counts).
double simpson_2d(const std::function<double(double, double)>& fn, double u0, double u1, double v0,
                  double v1, int per_unit);

/// Integral of an area form over a chart rectangle. Composite Simpson with a
/// Richardson error estimate from the half-resolution rule. Regions touching a
/// chart singularity (base poles, fiber r = 0 or r = inf) need pole_handling;
/// fiber regions with pole handling are integrated in the polar angle chi,
/// r = tan(chi / 2).
QuadratureResult integrate_area(const AreaForm& form, const ChartRect& region, int per_unit = 256);

/// Coefficients of a 2-form in the order dx^dy, dx^dr, dx^dtheta, dy^dr, dy^dtheta, dr^dtheta.
using Form2Coefficients = std::array<double, 6>;
using Matrix4 = std::array<std::array<double, 4>, 4>;

Matrix4 to_matrix(const Form2Coefficients& c);
Form2Coefficients from_matrix(const Matrix4& m);
double pfaffian(const Matrix4& m);
double determinant(const Matrix4& m);
Matrix4 congruence(const Matrix4& jacobian, const Matrix4& m);

/// Valid region of a chart patch; x is periodic.
struct PatchBounds {
  double y_min = -kHalfPi;
  double y_max = kHalfPi;
  double r_min = 0.0;
  double r_max = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool contains_open(double y, double r) const {
    return y > y_min && y < y_max && r > r_min && r < r_max;
  }
};

/// A 2-form on a 4-dimensional chart patch of S^2 x S^2.
struct Form2Patch {
  std::function<Form2Coefficients(const ChartPoint&)> coefficients;
  PatchBounds bounds;

  Form2Coefficients operator()(const ChartPoint& p) const { return coefficients(p); }
};

/// Split form f(x,y) dx^dy + h(r) dr^dtheta.
Form2Patch split_form_patch(std::function<double(double, double)> base_density,
                            std::function<double(double)> fiber_density);

/// Coefficient of Omega ^ Omega against dx^dy^dr^dtheta, i.e. twice the Pfaffian of
/// the coefficient matrix. Positive iff Omega is nondegenerate and positively oriented.
double pfaffian_positivity(const Form2Patch& form, const ChartPoint& p);

/// Max norm of the four coefficients of dOmega by five-point central differences with step h.
/// Throws PreconditionError when the stencil leaves the patch.
double closedness_residual(const Form2Patch& form, const ChartPoint& p, double h);

/// sigma_std-area of the image of the Cartesian triangle (u_i, v_i) under a fiber map,
/// as the integral of the pulled-back density over the triangle. The Jacobian of the map
/// is taken by five-point differences with step h; 7-point degree-5 rule on the triangle.
double image_triangle_area(const std::function<FiberPoint(const FiberPoint&)>& map,
                           const std::array<std::array<double, 2>, 3>& vertices, double h = 1e-5);

}  // namespace hforge
