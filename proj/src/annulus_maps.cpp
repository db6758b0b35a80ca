#include "hforge/annulus_maps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "hforge/geometry.hpp"
#include "hforge/numerics.hpp"

namespace hforge {

namespace {

// Flow with the angle kept unwrapped.
Vec<2> flow_state(const AnnulusIsotopy& iso, Vec<2> s, double t0, double t1) {
  if (t0 == t1) return s;
  return rk4_fixed<2>(s, t0, t1, iso.steps, [&](double t, const Vec<2>& w) -> Vec<2> {
    const auto v = iso.velocity(t, w[0], w[1]);
    return {v[0], v[1]};
  });
}

template <class F>
double five_point(F&& fn, double t, double h) {
  return (-fn(t + 2 * h) + 8 * fn(t + h) - 8 * fn(t - h) + fn(t - 2 * h)) / (12 * h);
}

}  // namespace

std::array<double, 2> AnnulusIsotopy::velocity(double t, double r, double theta) const {
  const Jet j = generator.jet({t, lambda, r, theta});
  const double g = sigma_std_density(r);
  return {j.dtheta / g, -j.dr / g};
}

double AnnulusIsotopy::hamiltonian(double t, double r, double theta) const {
  return generator.value({t, lambda, r, theta});
}

FiberPoint AnnulusIsotopy::flow(const FiberPoint& w, double t0, double t1) const {
  if (w.at_infinity) return w;
  const Vec<2> s = flow_state(*this, {w.r, w.theta}, t0, t1);
  return FiberPoint::polar(s[0], s[1]);
}

double PrimitivePotential::operator()(const FiberPoint& w) const {
  if (t == 0.0) return 0.0;
  const auto out = rk4_fixed<3>(Vec<3>{w.r, w.theta, 0.0}, 0.0, t, iso.steps, [&](double s, const Vec<3>& z) -> Vec<3> {
    const Jet j = iso.generator.jet({s, iso.lambda, z[0], z[1]});
    const double g = sigma_std_density(z[0]);
    const double xr = j.dtheta / g;
    const double xt = -j.dr / g;
    return {xr, xt, j.value + lambda_std_coefficient(z[0]) * xt};
  });
  return out[2];
}

double PrimitivePotential::path_integral(const FiberPoint& w, int panels) const {
  const double h = 1e-5;
  auto angle_at = [&](double rho) { return flow_state(iso, {rho, w.theta}, 0.0, t)[1]; };
  return integrate_1d(
      [&](double rho) {
        const Vec<2> img = flow_state(iso, {rho, w.theta}, 0.0, t);
        const double dtheta = (angle_at(rho + h) - angle_at(rho - h)) / (2 * h);
        return lambda_std_coefficient(img[0]) * dtheta;
      },
      iso.annulus.a, w.r, panels, 8);
}

PrimitivePotential hamiltonian_to_potential(const AnnulusIsotopy& iso, double t) { return {iso, t}; }

double potential_to_hamiltonian(const AnnulusIsotopy& iso, double t, const FiberPoint& w, double dt) {
  const Vec<2> z = flow_state(iso, {w.r, w.theta}, t, 0.0);
  const FiberPoint zp{z[0], z[1], false};
  const double fdot = five_point([&](double s) { return PrimitivePotential{iso, s}(zp); }, t, dt);
  const double xtheta = five_point([&](double s) { return flow_state(iso, z, 0.0, s)[1]; }, t, dt);
  return fdot - lambda_std_coefficient(w.r) * xtheta;
}

PotentialCheck check_potential(const AnnulusIsotopy& iso, double t, int n) {
  const PrimitivePotential F{iso, t};
  const double h = 1e-4;
  PotentialCheck out;
  for (int i = 0; i < n; ++i) {
    const double r = iso.annulus.a * std::pow(iso.annulus.b / iso.annulus.a, (i + 1.0) / (n + 1.0));
    for (int j = 0; j < n; ++j) {
      const double th = kTwoPi * j / n;
      const FiberPoint w{r, th, false};
      const double base = F({iso.annulus.a, th, false});
      out.path_mismatch = std::max(out.path_mismatch, std::abs(F(w) - base - F.path_integral(w)));

      const double dfr = five_point([&](double u) { return F({u, th, false}); }, r, h);
      const double dft = five_point([&](double u) { return F({r, u, false}); }, th, h);
      const Vec<2> img = flow_state(iso, {r, th}, 0.0, t);
      const double dtr = five_point([&](double u) { return flow_state(iso, {u, th}, 0.0, t)[1]; }, r, h);
      const double dtt = five_point([&](double u) { return flow_state(iso, {r, u}, 0.0, t)[1]; }, th, h);
      const double c_img = lambda_std_coefficient(img[0]);
      const double pull_r = c_img * dtr;
      const double pull_t = c_img * dtt - lambda_std_coefficient(r);
      out.differential_mismatch =
          std::max({out.differential_mismatch, std::abs(dfr - pull_r), std::abs(dft - pull_t)});
    }
  }
  return out;
}

RoundTripCheck round_trip_check(const AnnulusIsotopy& iso, const std::vector<double>& times, int n, double flow_tol) {
  RoundTripCheck out;
  const double h = 1e-3;
  for (double t : times) {
    for (int i = 0; i < n; ++i) {
      const double r = iso.annulus.a * std::pow(iso.annulus.b / iso.annulus.a, (i + 1.0) / (n + 1.0));
      for (int j = 0; j < n; ++j) {
        const double th = kTwoPi * j / n;
        const double recovered = potential_to_hamiltonian(iso, t, {r, th, false});
        out.hamiltonian_error = std::max(out.hamiltonian_error, std::abs(recovered - iso.hamiltonian(t, r, th)));
        if ((i + j) % 3 != 0) continue;
        auto hp = [&](double rr, double tt) { return potential_to_hamiltonian(iso, t, {rr, tt, false}); };
        auto d5 = [h](double p2, double p1, double m1, double m2) { return (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * h); };
        const double hr = d5(hp(r + 2 * h, th), hp(r + h, th), hp(r - h, th), hp(r - 2 * h, th));
        const double ht = d5(hp(r, th + 2 * h), hp(r, th + h), hp(r, th - h), hp(r, th - 2 * h));
        // iota_X sigma_std = g (X^r dtheta - X^theta dr) against dH'.
        const double g = sigma_std_density(r);
        const auto v = iso.velocity(t, r, th);
        out.velocity_error = std::max({out.velocity_error, std::abs(ht - g * v[0]), std::abs(hr + g * v[1])});
      }
    }
  }
  if (out.velocity_error > flow_tol) {
    throw ConvergenceError("round_trip_check: recovered vector field differs by " +
                           std::to_string(out.velocity_error));
  }
  return out;
}

double equator_oscillation(const HamiltonianFamily& h, int samples) {
  double worst = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    double lo = INFINITY;
    double hi = -INFINITY;
    for (int k = 0; k < 16; ++k) {
      const double v = h.value({s, 0.0, 1.0, kTwoPi * k / 16});
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

HamiltonianFamily normalize_on_equator(const HamiltonianFamily& h_tilde, double tol, int samples) {
  const double osc = equator_oscillation(h_tilde, samples);
  if (osc > tol) {
    throw PreconditionError("normalize_on_equator: H(s, 0, .) is not constant on E (oscillation " +
                            std::to_string(osc) + ")");
  }
  HamiltonianFamily out = h_tilde;
  out.offset = Field([h_tilde](const DualPoint& p) {
    const Dual on_e = h_tilde.eval(DualPoint{p[0], Dual(0.0), Dual(1.0), Dual(0.0)});
    return h_tilde.offset(p) - latitude_cutoff(p[1]) * on_e;
  });
  return out;
}

HamiltonianFamily flow_contraction(const HamiltonianFamily& generator, double eps, double tol) {
  if (!(eps > 0.0 && eps < 0.25)) throw PreconditionError("flow_contraction: eps must lie in (0, 1/4)");
  const double osc = equator_oscillation(generator);
  if (osc > tol) {
    throw PreconditionError("flow_contraction: generator at lambda = 0 does not preserve E (oscillation " +
                            std::to_string(osc) + ")");
  }
  const double lo = 2.0 * eps;
  const double hi = 1.0 - 2.0 * eps;
  auto retime = [lo, hi](const Field& g) {
    if (g.is_zero()) return Field();
    return Field([g, lo, hi](const DualPoint& p) {
      const Dual slope = smooth_step_slope(p[0], lo, hi);
      if (slope.is_zero()) return Dual(0.0);
      return slope * g(DualPoint{smooth_step(p[0], lo, hi), p[1], p[2], p[3]});
    });
  };
  HamiltonianFamily out;
  out.varying = retime(generator.varying);
  out.offset = retime(generator.offset);
  out.support = {lo, hi, generator.support.y0, generator.support.y1};
  return out;
}

ContractionReport check_contraction(const HamiltonianFamily& generator, const HamiltonianFamily& contraction,
                                    const Annulus& annulus, double eps, int markers) {
  ContractionReport rep;
  const auto pts = [&] {
    auto m = std::vector<FiberPoint>{};
    for (int i = 0; i < markers; ++i) {
      const double r = annulus.a * std::pow(annulus.b / annulus.a, (i + 0.5) / markers);
      for (int j = 0; j < markers; ++j) m.push_back(FiberPoint::polar(r, kTwoPi * (j + 0.5) / markers));
    }
    return m;
  }();
  auto iso = [&](const HamiltonianFamily& h, double lambda) {
    return AnnulusIsotopy{h.varying + h.offset, lambda, annulus, 512};
  };
  for (double lambda : {-0.3, 0.0, 0.25}) {
    const auto target = iso(generator, lambda);
    const auto contracted = iso(contraction, lambda);
    for (const auto& w : pts) {
      rep.endpoint_error = std::max(rep.endpoint_error, fiber_distance(target.map(w, 1.0), contracted.map(w, 1.0)));
    }
  }
  for (double lambda : {kQuarterPi, -kQuarterPi, kPi / 3.0, -kPi / 3.0}) {
    const auto contracted = iso(contraction, lambda);
    for (double s : {0.3, 0.6, 1.0}) {
      for (const auto& w : pts) rep.outside_identity = std::max(rep.outside_identity, fiber_distance(contracted.map(w, s), w));
    }
  }
  for (int i = 0; i <= 40; ++i) {
    const double frac = static_cast<double>(i) / 40;
    for (double s : {frac * 2.0 * eps, 1.0 - frac * 2.0 * eps}) {
      for (double lambda : {-0.3, 0.0, 0.25}) {
        for (const auto& w : pts) {
          rep.end_constancy =
              std::max(rep.end_constancy, std::abs(contraction.varying.value({s, lambda, w.r, w.theta})));
        }
      }
    }
  }
  const auto at_zero = iso(contraction, 0.0);
  for (double s : {0.25, 0.5, 0.75, 1.0}) {
    for (int j = 0; j < 16; ++j) {
      const FiberPoint e = at_zero.map(FiberPoint::polar(1.0, kTwoPi * j / 16), s);
      rep.equator_drift = std::max(rep.equator_drift, std::abs(e.r - 1.0));
    }
  }
  return rep;
}

AnnulusMap dehn_twist(const std::function<double(double)>& rho, const Annulus& annulus, bool inverse) {
  annulus.validate();
  if (std::abs(rho(annulus.a)) > 1e-12 || std::abs(rho(annulus.b) - 1.0) > 1e-12) {
    throw PreconditionError("dehn_twist: profile must be 0 at a and 1 at b");
  }
  double prev = rho(annulus.a);
  for (int k = 1; k <= 400; ++k) {
    const double r = annulus.a + (annulus.b - annulus.a) * k / 400;
    const double v = rho(r);
    if (v < prev - 1e-14) throw PreconditionError("dehn_twist: profile must be nondecreasing");
    prev = v;
  }
  const double sign = inverse ? -1.0 : 1.0;
  return [rho, annulus, sign](const FiberPoint& w) {
    if (w.at_infinity || w.r <= annulus.a || w.r >= annulus.b) return w;
    return FiberPoint::polar(w.r, w.theta + sign * kTwoPi * rho(w.r));
  };
}

std::function<double(double)> default_twist_profile(const Annulus& annulus) {
  const double la = std::log(annulus.a);
  const double lb = std::log(annulus.b);
  const double pad = 0.1 * (lb - la);
  return [la, lb, pad](double r) { return smooth_step(std::log(r), la + pad, lb - pad); };
}

namespace {

class XiInterpolant {
 public:
  XiInterpolant(CircleIsotopy f, int samples) : f_(std::move(f)), m_(samples) {}

  // Direct value of xi_t(theta) = d/dt f_t (f_t^{-1}(theta)).
  [[nodiscard]] double exact(double t, double theta) const {
    double phi = theta;
    for (int it = 0; it < 60; ++it) {
      const double h = 1e-6;
      const double val = f_.map(t, phi) - theta;
      const double der = (f_.map(t, phi + h) - f_.map(t, phi - h)) / (2 * h);
      const double step = val / der;
      phi -= step;
      if (std::abs(step) < 1e-15) break;
    }
    return five_point([&](double s) { return f_.map(s, phi); }, t, 1e-3);
  }

  [[nodiscard]] std::vector<double> coefficients(double t) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    std::vector<double> samples(static_cast<std::size_t>(m_));
    for (int j = 0; j < m_; ++j) samples[static_cast<std::size_t>(j)] = exact(t, kTwoPi * j / m_);
    // Layout: a_0..a_{m/2}, b_1..b_{m/2-1}.
    const int half = m_ / 2;
    std::vector<double> c(static_cast<std::size_t>(m_), 0.0);
    for (int k = 0; k <= half; ++k) {
      double a = 0.0;
      double b = 0.0;
      for (int j = 0; j < m_; ++j) {
        const double ang = kTwoPi * k * j / m_;
        a += samples[static_cast<std::size_t>(j)] * std::cos(ang);
        b += samples[static_cast<std::size_t>(j)] * std::sin(ang);
      }
      const double scale = (k == 0 || k == half) ? 1.0 / m_ : 2.0 / m_;
      c[static_cast<std::size_t>(k)] = a * scale;
      if (k > 0 && k < half) c[static_cast<std::size_t>(half + k)] = b * scale;
    }
    if (cache_.size() > 4096) cache_.clear();
    cache_.emplace(t, c);
    return c;
  }

  template <class T>
  [[nodiscard]] T eval(const std::vector<double>& c, const T& theta) const {
    using std::cos;
    using std::sin;
    const int half = m_ / 2;
    T v(c[0]);
    for (int k = 1; k <= half; ++k) {
      v = v + T(c[static_cast<std::size_t>(k)]) * cos(T(static_cast<double>(k)) * theta);
      if (k < half) v = v + T(c[static_cast<std::size_t>(half + k)]) * sin(T(static_cast<double>(k)) * theta);
    }
    return v;
  }

 private:
  CircleIsotopy f_;
  int m_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::vector<double>> cache_;
};

}  // namespace

CircleExtension circle_extension_hamiltonian(const CircleIsotopy& f, int samples, double fit_tol) {
  if (samples < 8 || samples % 2 != 0) throw PreconditionError("circle_extension_hamiltonian: need an even sample count >= 8");
  for (int j = 0; j < 16; ++j) {
    const double th = kTwoPi * j / 16;
    if (std::abs(f.map(0.0, th) - th) > 1e-12) throw PreconditionError("circle_extension_hamiltonian: f_0 must be the identity");
  }
  auto xi = std::make_shared<XiInterpolant>(f, samples);
  CircleExtension out;
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto c = xi->coefficients(t);
    for (int j = 0; j < samples; ++j) {
      const double mid = kTwoPi * (j + 0.5) / samples;
      out.fit_error = std::max(out.fit_error, std::abs(xi->eval(c, mid) - xi->exact(t, mid)));
    }
  }
  if (out.fit_error > fit_tol) {
    throw PreconditionError("circle_extension_hamiltonian: sampling too coarse to fit xi_t (midpoint error " +
                            std::to_string(out.fit_error) + ")");
  }
  // Only the r and theta slots of the result carry derivatives; the flow needs nothing else.
  out.hamiltonian = Field([xi](const DualPoint& p) {
    const Dual r2 = p[2] * p[2];
    const Dual s = r2 / (Dual(1.0) + r2) - Dual(0.5);
    const Dual chi = Dual(1.0) - smooth_step(abs(s), 0.15, 0.3);
    if (chi.is_zero()) return Dual(0.0);
    const auto c = xi->coefficients(p[0].v);
    return Dual(-1.0 / kTwoPi) * s * xi->eval(c, p[3]) * chi;
  });
  return out;
}

CylinderMap alexander_family(const CylinderMap& phi, double s) {
  if (!(s > 0.0 && s <= 1.0)) throw PreconditionError("alexander_family: s must lie in (0, 1]");
  for (int j = 0; j < 64; ++j) {
    const double th = kTwoPi * j / 64;
    const auto img = phi(0.0, th);
    if (std::abs(img[0]) > 1e-10 || angle_distance(img[1], th) > 1e-10) {
      throw PreconditionError("alexander_family: map does not fix E pointwise");
    }
  }
  return [phi, s](double sc, double theta) {
    const auto img = phi(s * sc, theta);
    return std::array<double, 2>{img[0] / s, img[1]};
  };
}

}  // namespace hforge
