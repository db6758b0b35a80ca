#include "hforge/graphs.hpp"

#include <algorithm>
#include <cmath>

#include "hforge/chart.hpp"
#include "hforge/numerics.hpp"
#include "hforge/smooth.hpp"

namespace hforge {

namespace {

double norm2(const Mat2& m) {
  const double t = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
  const double d = det2(m);
  return std::sqrt(0.5 * (t + std::sqrt(std::max(t * t - 4.0 * d * d, 0.0))));
}

Mat2 sub(const Mat2& a, const Mat2& b) {
  return {{{a[0][0] - b[0][0], a[0][1] - b[0][1]}, {a[1][0] - b[1][0], a[1][1] - b[1][1]}}};
}

Vec2 mat_apply(const Mat2& m, const Vec2& z) {
  return {m[0][0] * z[0] + m[0][1] * z[1], m[1][0] * z[0] + m[1][1] * z[1]};
}

// Integral of the unit smooth step over [0, t].
double step_integral(double t) {
  if (t <= 0.0) return 0.0;
  const double upper = std::min(t, 1.0);
  const double core = integrate_1d([](double s) { return smooth_step(s, 0.0, 1.0); }, 0.0, upper, 4);
  return core + std::max(t - 1.0, 0.0);
}

}  // namespace

double min_singular_value(const Mat2& m) {
  const double t = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
  const double d = det2(m);
  return std::sqrt(std::max(0.5 * (t - std::sqrt(std::max(t * t - 4.0 * d * d, 0.0))), 0.0));
}

GraphMargin is_graph_symplectic(const LinearGraph& g) {
  const double m = 1.0 + det2(g.A);
  return {m, m > 0.0};
}

double scaled_graph_margin(const LinearGraph& g, const RadialProfile& profile, double r) {
  if (!(r > 0.0)) throw PreconditionError("scaled_graph_margin: r must be positive");
  const double p = profile.phi(r);
  return 1.0 + (p * p + r * p * profile.dphi(r)) * det2(g.A);
}

double scaled_graph_margin_fd(const LinearGraph& g, const RadialProfile& profile, double r, double angle,
                              double rel_step) {
  if (!(r > 0.0)) throw PreconditionError("scaled_graph_margin_fd: need r > 0");
  const double h = rel_step * r;
  auto map = [&](double u, double v) {
    const double p = profile.phi(std::hypot(u, v));
    return Vec2{p * (g.A[0][0] * u + g.A[0][1] * v), p * (g.A[1][0] * u + g.A[1][1] * v)};
  };
  const double u = r * std::cos(angle);
  const double v = r * std::sin(angle);
  const Vec2 up = map(u + h, v);
  const Vec2 um = map(u - h, v);
  const Vec2 vp = map(u, v + h);
  const Vec2 vm = map(u, v - h);
  const Mat2 jac{{{(up[0] - um[0]) / (2 * h), (vp[0] - vm[0]) / (2 * h)},
                  {(up[1] - um[1]) / (2 * h), (vp[1] - vm[1]) / (2 * h)}}};
  return 1.0 + det2(jac);
}

RadialProfile raw_phi_profile(double eps, double delta) {
  if (!(eps > 0.0 && eps <= 1.0) || !(delta > 0.0)) {
    throw PreconditionError("raw_phi_profile: need 0 < eps <= 1 and delta > 0");
  }
  const double scale = 1.0 / (1.0 - 0.25 * eps);
  RadialProfile p;
  p.phi = [=](double r) { return r <= delta ? 0.0 : std::sqrt((1.0 - delta * delta / (r * r)) * scale); };
  p.dphi = [=](double r) {
    if (r <= delta) return 0.0;
    const double phi = std::sqrt((1.0 - delta * delta / (r * r)) * scale);
    return scale * delta * delta / (r * r * r) / phi;
  };
  return p;
}

RadialCutoffFamily::RadialCutoffFamily(double eps, double delta) : eps_(eps), delta_(delta) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("build_phi_family: eps must lie in (0, 1)");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw PreconditionError("build_phi_family: delta must be positive");
  gamma_ = 2.0 * delta / std::sqrt(eps);
  const double g2 = gamma_ * gamma_;
  width_ = eps * g2 / 8.0;
  plateau_ = (g2 - 0.5 * width_) / (g2 - delta * delta - width_);
}

double RadialCutoffFamily::kappa0(double u) const {
  const double d = delta_ * delta_;
  const double g2 = gamma_ * gamma_;
  if (u <= d) return 0.0;
  if (u >= g2) return 1.0;
  if (u <= d + width_) return plateau_ * smooth_step(u, d, d + width_);
  if (u <= g2 - width_) return plateau_;
  return plateau_ + (1.0 - plateau_) * smooth_step(u, g2 - width_, g2);
}

double RadialCutoffFamily::psi0(double u) const {
  const double d = delta_ * delta_;
  const double g2 = gamma_ * gamma_;
  const double w = width_;
  const double p = plateau_;
  if (u <= d) return 0.0;
  if (u >= g2) return u;
  if (u <= d + w) return p * w * step_integral((u - d) / w);
  if (u <= g2 - w) return p * w / 2.0 + p * (u - d - w);
  const double before = p * w / 2.0 + p * (g2 - 2.0 * w - d);
  return before + p * (u - g2 + w) + (1.0 - p) * w * step_integral((u - g2 + w) / w);
}

double RadialCutoffFamily::phi(double s, double r) const {
  const double u = r * r;
  const double base = u > 0.0 ? psi0(u) / u : 0.0;
  return std::sqrt(s * s + (1.0 - s * s) * base);
}

double RadialCutoffFamily::dphi(double s, double r) const {
  const double u = r * r;
  if (u <= delta_ * delta_ || u >= gamma_ * gamma_) return 0.0;
  const double p = phi(s, r);
  if (p < 1e-150) return 0.0;
  const double dsq_du = (kappa0(u) * u - psi0(u)) / (u * u);
  return (1.0 - s * s) * dsq_du * 2.0 * r / (2.0 * p);
}

double RadialCutoffFamily::graph_factor(double s, double r) const {
  return s * s + (1.0 - s * s) * kappa0(r * r);
}

RadialProfile RadialCutoffFamily::profile(double s) const {
  const RadialCutoffFamily self = *this;
  return {[self, s](double r) { return self.phi(s, r); }, [self, s](double r) { return self.dphi(s, r); }};
}

RadialCutoffFamily build_phi_family(double eps, double delta) { return RadialCutoffFamily(eps, delta); }

Vec2 straighten(const StraighteningFamily& fam, const RadialCutoffFamily& phi, double s, const Vec2& z,
                const Vec2& lambda) {
  const double p = phi.phi(1.0 - s, std::hypot(z[0], z[1]));
  const Vec2 az = mat_apply(fam.matrix(lambda), z);
  return {lambda[0] + p * az[0], lambda[1] + p * az[1]};
}

StraighteningReport straightening_check(const StraighteningFamily& fam, double s, int grid) {
  if (fam.lambdas.empty()) throw PreconditionError("straightening_check: empty parameter sample");
  if (s < 0.0 || s > 1.0) throw PreconditionError("straightening_check: s must lie in [0, 1]");
  const RadialCutoffFamily phi(fam.eps, fam.delta);
  StraighteningReport rep;
  rep.radius = fam.radius > 0.0 ? fam.radius : fam.eps;

  double lip = 0.0;
  for (std::size_t i = 0; i < fam.lambdas.size(); ++i) {
    for (std::size_t j = i + 1; j < fam.lambdas.size(); ++j) {
      const double dl = std::hypot(fam.lambdas[i][0] - fam.lambdas[j][0], fam.lambdas[i][1] - fam.lambdas[j][1]);
      if (dl == 0.0) continue;
      lip = std::max(lip, norm2(sub(fam.matrix(fam.lambdas[i]), fam.matrix(fam.lambdas[j]))) / dl);
    }
  }
  const double h = 1e-5;
  std::vector<std::array<Mat2, 2>> partials;
  double der = 0.0;
  for (const Vec2& l : fam.lambdas) {
    std::array<Mat2, 2> d{};
    for (int k = 0; k < 2; ++k) {
      Vec2 lp = l;
      Vec2 lm = l;
      lp[static_cast<std::size_t>(k)] += h;
      lm[static_cast<std::size_t>(k)] -= h;
      const Mat2 diff = sub(fam.matrix(lp), fam.matrix(lm));
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) d[static_cast<std::size_t>(k)][a][b] = diff[a][b] / (2.0 * h);
      }
    }
    der = std::max(der, std::hypot(norm2(d[0]), norm2(d[1])));
    partials.push_back(d);
  }
  rep.lipschitz_constant = 2.0 * lip;
  rep.derivative_constant = 2.0 * der;
  if (rep.radius * rep.lipschitz_constant >= 1.0) {
    throw PreconditionError("straightening_check: radius * Lipschitz constant of lambda -> A^lambda is " +
                            std::to_string(rep.radius * rep.lipschitz_constant) + " >= 1 (injectivity)");
  }
  if (rep.radius * rep.derivative_constant >= 1.0) {
    throw PreconditionError("straightening_check: radius * derivative constant of lambda -> A^lambda is " +
                            std::to_string(rep.radius * rep.derivative_constant) + " >= 1 (immersion)");
  }

  rep.min_singular_value = INFINITY;
  rep.min_injectivity_ratio = INFINITY;
  for (int i = 0; i <= grid; ++i) {
    const double rad = rep.radius * i / grid;
    const int n_angle = i == 0 ? 1 : 2 * grid;
    for (int k = 0; k < n_angle; ++k) {
      const double ang = kTwoPi * k / n_angle;
      const Vec2 z{rad * std::cos(ang), rad * std::sin(ang)};
      const double p = phi.phi(1.0 - s, rad);
      for (std::size_t li = 0; li < fam.lambdas.size(); ++li) {
        const Vec2 b1 = mat_apply(partials[li][0], z);
        const Vec2 b2 = mat_apply(partials[li][1], z);
        const Mat2 jac{{{1.0 + p * b1[0], p * b2[0]}, {p * b1[1], 1.0 + p * b2[1]}}};
        rep.min_singular_value = std::min(rep.min_singular_value, min_singular_value(jac));
        const Vec2 fi = straighten(fam, phi, s, z, fam.lambdas[li]);
        if (rad <= fam.delta) {
          rep.fixed_leaf_deviation = std::max(rep.fixed_leaf_deviation,
                                              std::hypot(fi[0] - fam.lambdas[li][0], fi[1] - fam.lambdas[li][1]));
        }
        for (std::size_t lj = li + 1; lj < fam.lambdas.size(); ++lj) {
          const double dl = std::hypot(fam.lambdas[li][0] - fam.lambdas[lj][0],
                                       fam.lambdas[li][1] - fam.lambdas[lj][1]);
          if (dl == 0.0) continue;
          const Vec2 fj = straighten(fam, phi, s, z, fam.lambdas[lj]);
          rep.min_injectivity_ratio = std::min(rep.min_injectivity_ratio, std::hypot(fi[0] - fj[0], fi[1] - fj[1]) / dl);
        }
      }
    }
  }
  if (!std::isfinite(rep.min_injectivity_ratio)) rep.min_injectivity_ratio = 1.0;
  rep.passed = rep.min_singular_value > 0.0 && rep.min_injectivity_ratio > 0.0 &&
               (s < 1.0 || rep.fixed_leaf_deviation < 1e-14);
  return rep;
}

}  // namespace hforge
