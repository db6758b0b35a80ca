#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace hforge {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Vec2 = std::array<double, 2>;

inline double det2(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

/// Smallest singular value of a 2x2 matrix.
double min_singular_value(const Mat2& m);

/// Graph w = A z of a linear map R^2 -> R^2 inside (R^4, dz ^ dw split form).
struct LinearGraph {
  Mat2 A{};
};

struct GraphMargin {
  double margin = 0.0;
  bool symplectic = false;
};

/// 1 + det A; the graph is symplectic iff this is positive.
GraphMargin is_graph_symplectic(const LinearGraph& g);

/// Radial profile phi(r) with derivative.
struct RadialProfile {
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
};

/// 1 + (phi^2 + r phi phi') det A: the margin of the graph of z -> phi(|z|) A z at |z| = r.
double scaled_graph_margin(const LinearGraph& g, const RadialProfile& profile, double r);

/// Same margin from a central-difference Jacobian of z -> phi(|z|) A z at z = r e^{i angle},
/// with step h r (the profile's features scale with r).
double scaled_graph_margin_fd(const LinearGraph& g, const RadialProfile& profile, double r,
                              double angle = 0.7, double h = 1e-6);

/// Closed-form profile phi^2 = (1 - delta^2 / r^2) / (1 - eps / 4) for r >= delta, zero inside.
RadialProfile raw_phi_profile(double eps, double delta);

/// Cutoff family phi_s: phi_s = s for r <= delta, phi_s = 1 for r >= gamma = 2 delta / sqrt(eps),
/// nondecreasing, and 0 <= phi_s^2 + r phi_s phi_s' < 1 / (1 - eps).
///
/// Built in u = r^2, where phi^2 + r phi phi' = d(u phi^2)/du =: kappa. The base profile has
/// kappa = P * step on [delta^2, delta^2 + w], plateau P, a smooth descent to 1 on
/// [gamma^2 - w, gamma^2], and 1 beyond; w = eps gamma^2 / 8 and P is fixed by
/// phi_0(gamma) = 1. The family is phi_s^2 = s^2 + (1 - s^2) phi_0^2.
class RadialCutoffFamily {
 public:
  RadialCutoffFamily(double eps, double delta);

  [[nodiscard]] double eps() const { return eps_; }
  [[nodiscard]] double delta() const { return delta_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] double plateau() const { return plateau_; }

  [[nodiscard]] double phi(double s, double r) const;
  [[nodiscard]] double dphi(double s, double r) const;
  /// phi_s^2 + r phi_s phi_s', evaluated in closed form through kappa.
  [[nodiscard]] double graph_factor(double s, double r) const;
  [[nodiscard]] RadialProfile profile(double s) const;

 private:
  [[nodiscard]] double kappa0(double u) const;
  [[nodiscard]] double psi0(double u) const;

  double eps_;
  double delta_;
  double gamma_;
  double width_;
  double plateau_;
};

RadialCutoffFamily build_phi_family(double eps, double delta);

/// Family of linear leaves lambda -> A^lambda over a finite parameter sample in R^2.
struct StraighteningFamily {
  std::function<Mat2(const Vec2&)> matrix;
  std::vector<Vec2> lambdas;
  double eps = 0.1;
  double delta = 0.01;
  /// Radius of the ball of z on which F_s is checked; defaults to eps when <= 0.
  double radius = 0.0;
};

struct StraighteningReport {
  double lipschitz_constant = 0.0;
  double derivative_constant = 0.0;
  double radius = 0.0;
  double min_singular_value = 0.0;
  double min_injectivity_ratio = 0.0;
  double fixed_leaf_deviation = 0.0;
  bool passed = false;
};

/// F_s(z, lambda) = (z, lambda + phi_{1-s}(|z|) A^lambda z). Checks injectivity on a grid of
/// the z-ball (pairwise over lambda samples) and invertibility of Id + B_s with
/// B_s = phi_{1-s}(|z|) [d A / d lambda_1 z, d A / d lambda_2 z]. Constants of lambda -> A^lambda
/// come from divided differences with a 2x safety factor; throws PreconditionError naming the
/// constant whose threshold radius * C < 1 fails.
StraighteningReport straightening_check(const StraighteningFamily& fam, double s, int grid = 12);

/// F_s(z, lambda) for a single point.
Vec2 straighten(const StraighteningFamily& fam, const RadialCutoffFamily& phi, double s, const Vec2& z,
                const Vec2& lambda);

}  // namespace hforge
