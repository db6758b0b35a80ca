#pragma once

#include <array>
#include <memory>

#include "hforge/chart.hpp"
#include "hforge/form.hpp"

namespace hforge {

/// Regions for the bump construction. Caps are radius ranges in the fiber chart (the north cap
/// is written in r, its bump lives in 1/r); the base bump sits on the correction interval
/// [u0, u1] with local margin eps: Q = [2 eps, 1 - 2 eps] x [-pi/4, pi/4] and
/// Q~ = [eps, 1 - eps] x [-pi/3, pi/3] in the local coordinate (x - u0) / (u1 - u0).
struct InflationGeometry {
  double s_lo = 0.05;
  double s_hi = 0.2;
  double n_lo = 5.0;
  double n_hi = 20.0;
  double u0 = 0.1;
  double u1 = 0.25;
  double eps = 0.05;
  Annulus annulus;
  /// Simpson resolution for the normalization constant a.
  int a_per_unit = 4096;
};

/// Bumps normalized so that each cap carries sigma_std-mass 1/2 under f_sigma, with
/// a = int fbar_tau dx dy. Throws PreconditionError when the caps meet the annulus or the
/// correction squares do not nest.
std::shared_ptr<const BumpPair> build_bumps(const InflationGeometry& geometry);

struct BumpIntegrals {
  double south_cap = 0.0;  // int_{Cap_S} f_sigma sigma_std
  double north_cap = 0.0;
  double base_total = 0.0;  // int_{Q~} f_tau sigma_0 = int fbar_tau / a
  double base_upper = 0.0;  // same over y >= 0
  double asymmetry = 0.0;   // max |fbar_tau(x, y) - fbar_tau(x, -y)| on samples
};

/// Independent recomputation of the bump constraints (Gauss-Legendre in the fiber,
/// per-variable Simpson on the base).
BumpIntegrals bump_integrals(const BumpPair& bumps);

/// (int fbar_tau dx dy, same over y <= 0) by per-variable Simpson at 8192 nodes per unit.
std::array<double, 2> base_bump_mass(const BumpPair& bumps);

/// omega_c = (omega + c p1^* tau + c p2^* sigma) / (c + 1). c = 0 returns the form unchanged.
StructuredForm inflate(const StructuredForm& form, std::shared_ptr<const BumpPair> bumps, double c);

struct Threshold {
  double c = 0.0;          // 1.05 a max |dH/dy|
  double max_dhdy = 0.0;   // polished grid maximum
  ChartPoint argmax;
};

/// Threshold constant for the correction H over Q x A (plus cap radii where H is constant in
/// the fiber). Grid maximum, refined by coordinate-wise golden-section polish, times 1.05.
/// Throws ConvergenceError when the maximum is not finite or exceeds `limit`.
Threshold threshold_constant(const HamiltonianFamily& h, const BumpPair& bumps, const Annulus& annulus,
                             int grid = 40, double limit = 1e8);

}  // namespace hforge
