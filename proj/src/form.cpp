#include "hforge/form.hpp"

#include <algorithm>
#include <cmath>

#include "hforge/smooth.hpp"

namespace hforge {

Jet HamiltonianFamily::jet(const ChartPoint& p) const {
  const Dual d = eval(seed(p));
  return {d.v, d.d[0], d.d[1], d.d[2], d.d[3]};
}

HamiltonianFamily HamiltonianFamily::scaled(double s) const {
  return {varying.scaled(s), offset.scaled(s), support};
}

double HamiltonianFamily::support_leak(const Annulus& annulus, int samples) const {
  if (varying.is_zero()) return 0.0;
  double worst = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = static_cast<double>(i) / samples;
    for (int j = 1; j < samples; ++j) {
      const double y = -kHalfPi + kPi * j / samples;
      if (support.contains(x, y)) continue;
      for (double r : {annulus.a, 0.5, 1.0, 2.0, annulus.b}) {
        for (double th : {0.0, 2.0, 4.0}) worst = std::max(worst, std::abs(varying.value({x, y, r, th})));
      }
    }
  }
  return worst;
}

double HamiltonianFamily::outside_annulus_variation(const Annulus& annulus, int samples) const {
  double worst = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = support.x0 + (support.x1 - support.x0) * i / samples;
    for (int j = 0; j <= samples; ++j) {
      const double y = support.y0 + (support.y1 - support.y0) * j / samples;
      for (double r : {0.3 * annulus.a, 0.9 * annulus.a, 1.1 * annulus.b, 3.0 * annulus.b}) {
        const double ref = value({x, y, r, 0.0});
        for (double th : {1.0, 2.5, 4.0, 5.5}) worst = std::max(worst, std::abs(value({x, y, r, th}) - ref));
        const double other = value({x, y, r < 1.0 ? 0.5 * r : 2.0 * r, 0.0});
        worst = std::max(worst, std::abs(other - ref));
      }
    }
  }
  return worst;
}

double BumpPair::f_sigma(double r) const {
  double v = 0.0;
  if (r > s_lo && r < s_hi) v += amp_s * smooth_bump(r, s_lo, s_hi);
  if (r > n_lo && r < n_hi) v += amp_n * smooth_bump(1.0 / r, 1.0 / n_hi, 1.0 / n_lo);
  return v;
}

double BumpPair::fbar_tau(double x, double y) const {
  const double s = x_local(x);
  if (s <= eps || s >= 1.0 - eps) return 0.0;
  const double ax = smooth_plateau(s, eps, 2.0 * eps, 1.0 - 2.0 * eps, 1.0 - eps);
  const double ay = smooth_plateau(y, -kPi / 3.0, -kQuarterPi, kQuarterPi, kPi / 3.0);
  return ax * ay;
}

StructuredForm::StructuredForm(std::function<double(double, double)> density, Annulus ann)
    : base_density(std::move(density)), annulus(ann) {
  annulus.validate();
}

StructuredForm StructuredForm::standard(Annulus annulus) {
  return StructuredForm([](double, double y) { return std_base_density(y); }, annulus);
}

double StructuredForm::base_coefficient(double x, double y) const {
  double v = f(x, y);
  if (c != 0.0 && bumps) v += c * bumps->fbar_tau(x, y) / bumps->a;
  return v;
}

double StructuredForm::fiber_coefficient(double r) const {
  double k = 1.0;
  if (c != 0.0 && bumps) k += c * bumps->f_sigma(r);
  return k * sigma_std_density(r);
}

Jet StructuredForm::phi_jet(const ChartPoint& p) const {
  Jet j = initial.jet(p);
  if (t != 0.0 && !correction.is_zero()) {
    const Jet h = correction.jet(p);
    j.value += t * h.value;
    j.dx += t * h.dx;
    j.dy += t * h.dy;
    j.dr += t * h.dr;
    j.dtheta += t * h.dtheta;
  }
  return j;
}

double StructuredForm::phi_value(const ChartPoint& p) const {
  double v = initial.value(p);
  if (t != 0.0) v += t * correction.value(p);
  return v;
}

Form2Coefficients StructuredForm::coefficients(const ChartPoint& p) const {
  const Jet phi = phi_jet(p);
  const double s = 1.0 / (c + 1.0);
  return {s * (base_coefficient(p.x, p.y) - phi.dy), -s * phi.dr, -s * phi.dtheta, 0.0, 0.0,
          s * fiber_coefficient(p.r)};
}

Form2Patch StructuredForm::patch() const {
  Form2Patch out;
  const StructuredForm self = *this;
  out.coefficients = [self](const ChartPoint& p) { return self.coefficients(p); };
  out.bounds = PatchBounds{};
  return out;
}

std::pair<double, double> StructuredForm::fiber_velocity(double x, double y, double r, double theta) const {
  const ChartPoint p{x, y, r, theta};
  double pr = 0.0;
  double pt = 0.0;
  if (!initial.varying.is_zero() && initial.support.contains(x, y)) {
    const Jet j = initial.varying.jet(p);
    pr += j.dr;
    pt += j.dtheta;
  }
  if (t != 0.0 && !correction.varying.is_zero() && correction.support.contains(x, y)) {
    const Jet j = correction.varying.jet(p);
    pr += t * j.dr;
    pt += t * j.dtheta;
  }
  if (pr == 0.0 && pt == 0.0) return {0.0, 0.0};
  const double g = fiber_coefficient(r);
  if (!(g > 0.0)) return {0.0, 0.0};
  return {pt / g, -pr / g};
}

std::vector<std::pair<double, double>> StructuredForm::moving_intervals(double y) const {
  std::vector<std::pair<double, double>> out;
  if (!initial.varying.is_zero() && initial.support.covers_latitude(y)) {
    out.emplace_back(initial.support.x0, initial.support.x1);
  }
  if (t != 0.0 && !correction.varying.is_zero() && correction.support.covers_latitude(y)) {
    out.emplace_back(correction.support.x0, correction.support.x1);
  }
  std::sort(out.begin(), out.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : out) {
    if (!merged.empty() && iv.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, iv.second);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

double StructuredForm::factored_margin(const ChartPoint& p) const {
  return (base_coefficient(p.x, p.y) - phi_jet(p).dy) / f(p.x, p.y);
}

double StructuredForm::split_baseline(const ChartPoint& p) const {
  const double s = 1.0 / (c + 1.0);
  return 2.0 * f(p.x, p.y) * fiber_coefficient(p.r) * s * s;
}

StructuredForm StructuredForm::with_correction(HamiltonianFamily h, double scale) const {
  StructuredForm out = *this;
  out.correction = std::move(h);
  out.t = scale;
  return out;
}

StructuredForm StructuredForm::with_scale(double scale) const {
  StructuredForm out = *this;
  out.t = scale;
  return out;
}

}  // namespace hforge
