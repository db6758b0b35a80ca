#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hforge/connection.hpp"
#include "hforge/form.hpp"
#include "hforge/inflation.hpp"
#include "hforge/report.hpp"

namespace hforge {

/// Correction interval [u0, u1] on the base longitude and the end margin eps of its local
/// time coordinate s = (x - u0) / (u1 - u0).
struct CorrectionGeometry {
  double u0 = 0.1;
  double u1 = 0.25;
  double eps = 0.05;
};

/// Generator of the inverse latitude holonomy of the initial connection:
/// G(tau, lambda, w) = -L K(x1 - tau L, lambda, w) with [x1 - L, x1] the x-support of K.
/// Its time-1 flow at each lambda undoes the transport across the support of K.
HamiltonianFamily holonomy_generator(const HamiltonianFamily& initial);

/// H(x, y, w) = (1 / L) H_loc((x - u0) / L, y, w), L = u1 - u0.
HamiltonianFamily globalize(const HamiltonianFamily& local, double u0, double u1);

struct Correction {
  HamiltonianFamily generator;   // G, slots (tau, lambda, w)
  HamiltonianFamily contraction; // H~, slots (s, lambda, w)
  HamiltonianFamily local;       // normalized H, slots (s, lambda, w)
  HamiltonianFamily global;      // H on the base chart
};

/// Builds the correction killing the latitude holonomy of `initial`. When `normalize` is
/// false the equator normalization is skipped. Throws PreconditionError when the supports
/// overlap or the holonomy at lambda = 0 does not preserve E.
Correction build_correction(const HamiltonianFamily& initial, const CorrectionGeometry& geometry, bool normalize = true);

/// Shared tolerances and resolutions for stage verification.
struct PipelineOptions {
  TransportOptions transport;
  int markers = 32;
  MarginGrid grid;
  int generator_per_unit = 256;
  int lagrangian_grid = 64;
  double generator_tol = 1e-5;
  double lagrangian_tol = 1e-6;
  double holonomy_tol = 1e-5;
  double far_holonomy_tol = 1e-8;
  double closedness_tol = 1e-6;
  InflationGeometry inflation;
  CorrectionGeometry correction;
  /// When >= 0 replaces the computed threshold C.
  double c_override = -1.0;
  std::uint64_t seed = 1;
};

struct Stage {
  std::string label;
  StructuredForm form;
  VerificationReport report;
};

struct HomotopyTrace {
  std::vector<Stage> stages;
  Correction correction;
  Threshold threshold;
  std::shared_ptr<const BumpPair> bumps;
  std::vector<Holonomy> endpoint_holonomy;
};

/// |[D_lh x pt] - 1/2| and |[pt x D_lh] - 1/2|, the larger of the two.
double monotonicity_defect(const std::array<double, 4>& generators);

/// Margin, Pfaffian sign agreement, generators, Lagrangian residual, monotonicity, closedness
/// and holonomy at |lambda| = pi/3 for one form.
VerificationReport verify_stage(const StructuredForm& form, const std::string& stage, const PipelineOptions& options);

/// Bump geometry for the options: caps from options.inflation, correction interval and margin
/// from options.correction.
InflationGeometry inflation_geometry(const PipelineOptions& options, const Annulus& annulus);

/// Trace: initial; inflated c = C/2, C; corrected t = 1/4, 1/2, 3/4, 1 at c = C. The
/// endpoint holonomy is scanned on scan_latitudes().
HomotopyTrace kill_latitude_holonomy(const StructuredForm& form, const PipelineOptions& options);

/// Result of the two-form interpolation test on a 4-dimensional space.
struct InterpolationCheck {
  bool accepted = false;
  std::string diagnostic;
  double hyperplane_mismatch = 0.0;
  double min_pfaffian = 0.0;     // min over the t-grid of Pf(omega_t), oriented
  double min_closed_form = 0.0;  // same minimum from the quadratic expansion
  bool positive = false;
};

/// omega_t = (1 - t) omega + t omega' on `t_points` equally spaced t. Both forms must be
/// nondegenerate with the same orientation and agree on the span of `hyperplane`.
InterpolationCheck linear_interpolation_check(const Matrix4& omega, const Matrix4& omega_prime,
                                              const std::array<std::array<double, 4>, 3>& hyperplane,
                                              int t_points = 101, double tol = 1e-9);

/// Radial map m with A_C(m(r)) = A_std(r), where A_C is the disk area under the inflated
/// fiber form; m*(sigma_C) = sigma_std.
class FiberMoser {
 public:
  FiberMoser() = default;
  FiberMoser(std::shared_ptr<const BumpPair> bumps, double c);

  [[nodiscard]] double operator()(double r) const;
  [[nodiscard]] double area(double rho) const;  // A_C(rho)

 private:
  std::shared_ptr<const BumpPair> bumps_;
  double c_ = 0.0;
};

/// phi(x, y, w) = (x, y, P^y_x(m(w))) where P^y_x is parallel transport of `form` along the
/// latitude y from x = 0 to x. Transport uses fixed step counts so phi is smooth in its
/// arguments; derivatives are central differences with step `h`.
class PullbackMap {
 public:
  PullbackMap(StructuredForm form, int fixed_steps = 256, double h = 1e-4);

  [[nodiscard]] const StructuredForm& form() const { return form_; }
  [[nodiscard]] const FiberMoser& moser() const { return moser_; }

  [[nodiscard]] FiberPoint map(const ChartPoint& p) const;
  /// d phi as a 4x4 matrix, rows image coordinates, columns source coordinates.
  [[nodiscard]] Matrix4 jacobian(const ChartPoint& p) const;
  /// Coefficients of phi^* Omega at p.
  [[nodiscard]] Form2Coefficients pulled_back(const ChartPoint& p) const;
  [[nodiscard]] Form2Patch patch() const;

  /// Largest marker distance between transport to x along increasing x and along
  /// decreasing x from x = 1.
  [[nodiscard]] double path_independence(const std::vector<double>& lambdas, int markers, int x_samples) const;
  /// Largest |r - 1| of P^0_x(E) over sampled x and theta.
  [[nodiscard]] double equator_drift(int samples) const;
  /// Largest marker distance of P to the identity near x = 0 and for r outside the annulus.
  [[nodiscard]] double identity_defect(int samples) const;
  /// Generator integrals of phi^* Omega.
  [[nodiscard]] std::array<double, 4> generators(int per_unit) const;

 private:
  StructuredForm form_;
  FiberMoser moser_;
  TransportOptions options_;
  double h_;
};

/// max over pairs of {d/dx, d/dr, d/dtheta} of |(phi^* Omega - omega_std)(u, v)| at p.
double hyperplane_residual(const PullbackMap& phi, const StructuredForm& standard, const ChartPoint& p);

struct InterpolationTail {
  std::vector<Stage> stages;          // pullback and omega_t on the t-grid
  double path_independence = 0.0;
  double equator_drift = 0.0;
  double identity_defect = 0.0;
  double hyperplane_residual = 0.0;   // max over random points
  double min_pfaffian = 0.0;          // over all t and grid points
  std::size_t interpolation_rejections = 0;   // points where the interpolation hypotheses fail
};

/// Pulls the endpoint back by phi and interpolates linearly to the split standard form with the
/// same base density. Throws PreconditionError when the latitude holonomy is not trivial
/// within `options.holonomy_tol` or the hyperplane agreement fails.
InterpolationTail interpolate_to_standard(const StructuredForm& endpoint, const PipelineOptions& options,
                                          int t_points = 11, int random_points = 64);

}  // namespace hforge
