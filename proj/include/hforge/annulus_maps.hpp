#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "hforge/chart.hpp"
#include "hforge/field.hpp"
#include "hforge/form.hpp"
#include "hforge/smooth.hpp"

namespace hforge {

using AnnulusMap = std::function<FiberPoint(const FiberPoint&)>;

/// Time-dependent Hamiltonian on the annulus. The generator is a Field read through the chart
/// slots as H(t, lambda, r, theta): x carries time and y the fixed family parameter.
/// Flows are RK4 with a fixed step count per call, so maps depend smoothly on the times.
struct AnnulusIsotopy {
  Field generator;
  double lambda = 0.0;
  Annulus annulus;
  int steps = 512;

  /// (dr/dt, dtheta/dt) of the Hamiltonian vector field, iota_X sigma_std = dH.
  [[nodiscard]] std::array<double, 2> velocity(double t, double r, double theta) const;
  [[nodiscard]] double hamiltonian(double t, double r, double theta) const;
  [[nodiscard]] FiberPoint flow(const FiberPoint& w, double t0, double t1) const;
  [[nodiscard]] FiberPoint map(const FiberPoint& w, double t) const { return flow(w, 0.0, t); }
};

/// F_t with (psi_t)^* lambda_std - lambda_std = dF_t, normalized to vanish on the lower
/// boundary whenever the Hamiltonian does.
struct PrimitivePotential {
  AnnulusIsotopy iso;
  double t = 1.0;

  /// F_t(w) = int_0^t (H_s + iota_{X_s} lambda_std)(psi_s(w)) ds by an augmented flow.
  [[nodiscard]] double operator()(const FiberPoint& w) const;
  /// Same quantity as the line integral of psi_t^* lambda_std - lambda_std along the radial
  /// segment from (a, theta) to w.
  [[nodiscard]] double path_integral(const FiberPoint& w, int panels = 64) const;
};

PrimitivePotential hamiltonian_to_potential(const AnnulusIsotopy& iso, double t);

/// H_t(w) = dF_t/dt (psi_t^{-1} w) - iota_{X_t} lambda_std (w), with dF/dt and X_t taken from
/// five-point differences in t of the potential and of the flow.
double potential_to_hamiltonian(const AnnulusIsotopy& iso, double t, const FiberPoint& w, double dt = 1e-2);

struct PotentialCheck {
  double path_mismatch = 0.0;          // |F - line integral|
  double differential_mismatch = 0.0;  // |dF - (psi^* lambda - lambda)|
};

/// Compares F_t with its line-integral definition and dF_t with psi_t^* lambda_std - lambda_std
/// on an n x n interior grid; derivatives by five-point differences with step 1e-4.
PotentialCheck check_potential(const AnnulusIsotopy& iso, double t, int n = 6);

struct RoundTripCheck {
  double hamiltonian_error = 0.0;  // sup |H - H'|
  double velocity_error = 0.0;     // sup |iota_X sigma_std - dH'|, dH' by five-point differences
};

/// H -> F -> H' on an n x n interior grid at the given times. Throws ConvergenceError when dH'
/// misses iota_X sigma_std by more than `flow_tol`.
RoundTripCheck round_trip_check(const AnnulusIsotopy& iso, const std::vector<double>& times, int n = 6,
                                double flow_tol = 1e-5);

/// rho(lambda) = 1 - step(|lambda|; 0, pi/4): 1 at 0, 0 for |lambda| >= pi/4.
template <class T>
T latitude_cutoff(const T& lambda) {
  using std::abs;
  return T(1.0) - smooth_step(abs(lambda), 0.0, kQuarterPi);
}

/// H = H~ - rho(lambda) H~(s, 0, e). Requires H~(s, 0, .) constant on E; throws
/// PreconditionError with the measured oscillation otherwise.
HamiltonianFamily normalize_on_equator(const HamiltonianFamily& h_tilde, double tol = 1e-9, int samples = 64);

/// Largest oscillation of H(s, 0, .) over E for s on a grid.
double equator_oscillation(const HamiltonianFamily& h, int samples = 64);

/// Given generators G(tau, lambda, w), tau in [0, 1], of psi^lambda, returns
/// H~_s = beta'(s) G_{beta(s)} with beta a smooth step from 0 at s = 2 eps to 1 at s = 1 - 2 eps.
/// Its time-s flow is psi^lambda run to time beta(s).
HamiltonianFamily flow_contraction(const HamiltonianFamily& generator, double eps = 0.05, double tol = 1e-9);

struct ContractionReport {
  double endpoint_error = 0.0;     // psi_1 vs psi at sampled lambda
  double outside_identity = 0.0;   // psi_s - id for |lambda| >= pi/4
  double end_constancy = 0.0;      // |H~| for s near 0 and 1
  double equator_drift = 0.0;      // |r - 1| of E markers under psi^0_s
};

ContractionReport check_contraction(const HamiltonianFamily& generator, const HamiltonianFamily& contraction,
                                    const Annulus& annulus, double eps = 0.05, int markers = 6);

/// r e^{i theta} -> r e^{i (theta + 2 pi rho(r))}; rho is checked to be nondecreasing with
/// 0 near a and 1 near b.
AnnulusMap dehn_twist(const std::function<double(double)>& rho, const Annulus& annulus, bool inverse = false);

/// Standard twist profile: smooth step in log r across the interior of the annulus.
std::function<double(double)> default_twist_profile(const Annulus& annulus);

/// Area coordinate s = A_std(r) - 1/2, so sigma_std = (1 / 2pi) ds ^ dtheta and E is s = 0.
inline double area_coordinate(double r) { return r * r / (1.0 + r * r) - 0.5; }
inline double radius_from_area_coordinate(double s) { return std::sqrt((s + 0.5) / (0.5 - s)); }

/// Orientation preserving isotopy of the circle, as a lifted angle f(t, theta) with f(0, .) = id.
struct CircleIsotopy {
  std::function<double(double, double)> map;
};

struct CircleExtension {
  Field hamiltonian;  // H(t, ., r, theta), slots as in AnnulusIsotopy
  double fit_error = 0.0;
};

/// H_t = -(1/2pi) s xi_t(theta) chi(s) in the area coordinate, with xi_t = (d/dt f_t) o f_t^{-1}
/// fitted by a trigonometric interpolant on `samples` nodes and chi = 1 near E. Throws
/// PreconditionError when the interpolant misses xi_t at the midpoints by more than `fit_tol`.
CircleExtension circle_extension_hamiltonian(const CircleIsotopy& f, int samples = 64, double fit_tol = 1e-7);

/// Map in the (s, theta) coordinates.
using CylinderMap = std::function<std::array<double, 2>(double, double)>;

/// psi_s = tau_s^{-1} o phi o tau_s with tau_s(s_c, theta) = (s s_c, theta), for s in (0, 1].
/// Throws PreconditionError when phi does not fix E pointwise.
CylinderMap alexander_family(const CylinderMap& phi, double s);

}  // namespace hforge
