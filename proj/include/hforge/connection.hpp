#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "hforge/chart.hpp"
#include "hforge/form.hpp"
#include "hforge/geometry.hpp"

namespace hforge {

/// Tangent vector on the (x, y, r, theta) chart.
struct TangentVector {
  double dx = 0.0;
  double dy = 0.0;
  double dr = 0.0;
  double dtheta = 0.0;

  [[nodiscard]] std::array<double, 4> as_array() const { return {dx, dy, dr, dtheta}; }
};

/// Omega(u, v) for the coefficient matrix of a form at a point.
double pairing(const Matrix4& m, const TangentVector& u, const TangentVector& v);

/// Horizontal lift of vx d/dx + vy d/dy: d/dx lifts to d/dx + X_Phi, d/dy lifts to d/dy.
TangentVector horizontal_lift(const StructuredForm& form, const ChartPoint& p, double vx, double vy);

/// Horizontal lift for an arbitrary 2-form, solving Omega(lift, V) = 0 for vertical V.
/// Throws PreconditionError when the form is degenerate on the fiber at p.
TangentVector horizontal_lift_generic(const Form2Patch& form, const ChartPoint& p, double vx, double vy);

/// max |Omega(lift, V)| over the given vertical vectors (dr, dtheta).
double lift_residual(const Form2Patch& form, const ChartPoint& p, const TangentVector& lift,
                     const std::vector<std::array<double, 2>>& verticals);

struct TransportOptions {
  int steps_per_unit = 1024;
  double tol = 1e-10;
  int max_refinements = 6;
  bool adaptive = true;
  /// When positive, every moving sub-interval uses exactly this many steps, which makes the
  /// numerical transport a smooth function of its endpoints.
  int fixed_steps = 0;
};

struct TransportResult {
  FiberPoint end;
  int steps_per_unit = 0;
  double error_estimate = 0.0;
};

/// Chart distance used for holonomy residuals: max(|dr| / r, angle distance).
double marker_distance(const FiberPoint& a, const FiberPoint& b);

/// Transport along the latitude y from x0 to x1 (x1 < x0 runs backwards). Only the x-intervals
/// reported by form.moving_intervals(y) are integrated; elsewhere the lift is d/dx itself.
TransportResult transport_latitude(const StructuredForm& form, double y, double x0, double x1,
                                   const FiberPoint& start, const TransportOptions& options = {});

/// Fiber positions over the nodes x_k = k / nodes, k = 0..nodes, starting at `start` over x = 0,
/// with `sub` RK4 steps per node interval that meets a moving interval.
std::vector<FiberPoint> latitude_sweep(const StructuredForm& form, double y, const FiberPoint& start,
                                       int nodes, int sub);

/// Base curve tau in [0, 1] -> (x, y) with its velocity.
struct BasePath {
  std::function<std::array<double, 4>(double)> eval;  // x, y, dx/dtau, dy/dtau

  /// Path from a position function, velocity by central differences.
  static BasePath from_position(std::function<std::array<double, 2>(double)> position);
  static BasePath latitude(double y, double x0, double x1);
};

/// Transport along an arbitrary base path (RK4 in tau, adaptive halving).
TransportResult parallel_transport(const StructuredForm& form, const BasePath& path, const FiberPoint& start,
                                   const TransportOptions& options = {});

/// n x n markers on the annulus, log-spaced in r and uniform in theta.
std::vector<FiberPoint> annulus_markers(const Annulus& annulus, int n);

struct Holonomy {
  double lambda = 0.0;
  std::vector<FiberPoint> markers;
  std::vector<FiberPoint> images;
  double residual = 0.0;
  std::size_t worst_index = 0;
  int steps_per_unit = 0;
};

/// Transport around the circle of latitude y = lambda from x = 0 to x = 1. The step count
/// is chosen by adaptive halving on a probe subset, then applied to all markers.
Holonomy holonomy_latitude(const StructuredForm& form, double lambda, const TransportOptions& options = {},
                           int markers = 32);

/// 33 interior Chebyshev latitudes plus +-pi/4, +-pi/3, sorted.
std::vector<double> scan_latitudes();

/// Holonomies at the given latitudes, computed concurrently, returned in input order.
std::vector<Holonomy> holonomy_scan(const StructuredForm& form, const std::vector<double>& lambdas,
                                    const TransportOptions& options = {}, int markers = 32);

/// max |Omega(u, v)| over a grid on L_std = E x E, with u the lift of d/dx projected to
/// T L_std and v = d/dtheta.
double lagrangian_residual(const StructuredForm& form, int grid = 64);
double lagrangian_residual(const Form2Patch& form, int grid = 64);

/// Integrals over [S^2 x pt], [pt x S^2], [D_lh x pt], [pt x D_lh]; the base classes sit at the
/// fiber point e = (r = 1, theta = 0), the fiber classes over (x, y) = (0, 0).
std::array<double, 4> cohomology_generators(const StructuredForm& form, int per_unit = 256);

/// Sampling grid for margin scans.
struct MarginGrid {
  int nx = 64;
  int ny = 32;
  int nr = 16;
  int ntheta = 8;
  /// Extra refinement box in (x, y); empty when x0 >= x1.
  SupportBox focus{0.0, 0.0, 0.0, 0.0};

  static MarginGrid from_size(int n);
};

struct MarginSummary {
  double min_margin = 0.0;
  ChartPoint location;
  double min_pfaffian = 0.0;
  double max_mismatch = 0.0;
  std::size_t sign_disagreements = 0;
  std::size_t points = 0;
};

/// Minimum of the factored margin (F_B - dPhi/dy) / f over the grid, cross-checked at every
/// point against 2 Pf / split baseline.
MarginSummary symplecticity_margin(const StructuredForm& form, const MarginGrid& grid = {});

/// Torus given as circles |w| = radius(tau) over a closed base curve.
struct TorusSample {
  std::function<std::array<double, 2>(double)> curve;
  std::function<double(double)> radius = [](double) { return 1.0; };
  int curve_samples = 128;
  int circle_markers = 32;
  int checkpoints = 8;
};

struct TorusReport {
  bool embedded = false;
  double min_separation = 0.0;
  double hausdorff = 0.0;
};

TorusReport fibered_torus_check(const StructuredForm& form, const TorusSample& torus,
                                const TransportOptions& options = {});

/// Torus sample for L_std.
TorusSample clifford_torus_sample();

}  // namespace hforge
