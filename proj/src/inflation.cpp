#include "hforge/inflation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hforge/geometry.hpp"
#include "hforge/numerics.hpp"
#include "hforge/smooth.hpp"

namespace hforge {

namespace {

double y_plateau(double y) { return smooth_plateau(y, -kPi / 3.0, -kQuarterPi, kQuarterPi, kPi / 3.0); }

double south_mass(const BumpPair& b) {
  return kTwoPi * integrate_1d([&](double r) { return smooth_bump(r, b.s_lo, b.s_hi) * sigma_std_density(r); },
                               b.s_lo, b.s_hi, 64);
}

double north_mass(const BumpPair& b) {
  return kTwoPi * integrate_1d(
                      [&](double r) { return smooth_bump(1.0 / r, 1.0 / b.n_hi, 1.0 / b.n_lo) * sigma_std_density(r); },
                      b.n_lo, b.n_hi, 256);
}

}  // namespace

std::shared_ptr<const BumpPair> build_bumps(const InflationGeometry& g) {
  g.annulus.validate();
  if (!(g.s_lo > 0.0 && g.s_lo < g.s_hi && g.s_hi < g.annulus.a)) {
    throw PreconditionError("build_bumps: south cap must satisfy 0 < s_lo < s_hi < a");
  }
  if (!(g.n_lo > g.annulus.b && g.n_lo < g.n_hi && std::isfinite(g.n_hi))) {
    throw PreconditionError("build_bumps: north cap must satisfy b < n_lo < n_hi < inf");
  }
  if (!(g.u0 > 0.0 && g.u0 < g.u1 && g.u1 < 1.0)) {
    throw PreconditionError("build_bumps: correction interval must satisfy 0 < u0 < u1 < 1");
  }
  if (!(g.eps > 0.0 && g.eps < 0.25)) throw PreconditionError("build_bumps: eps must lie in (0, 1/4)");
  if (g.a_per_unit < 16) throw PreconditionError("build_bumps: a_per_unit too small");

  auto b = std::make_shared<BumpPair>();
  b->s_lo = g.s_lo;
  b->s_hi = g.s_hi;
  b->n_lo = g.n_lo;
  b->n_hi = g.n_hi;
  b->u0 = g.u0;
  b->u1 = g.u1;
  b->eps = g.eps;
  b->amp_s = 0.5 / south_mass(*b);
  b->amp_n = 0.5 / north_mass(*b);

  const double len = g.u1 - g.u0;
  b->a = simpson_2d([&](double x, double y) { return b->fbar_tau(x, y); }, g.u0 + g.eps * len, g.u1 - g.eps * len,
                    -kPi / 3.0, kPi / 3.0, g.a_per_unit);
  if (!(b->a > 0.0)) throw PreconditionError("build_bumps: base bump has no mass");
  return b;
}

BumpIntegrals bump_integrals(const BumpPair& b) {
  BumpIntegrals out;
  out.south_cap = b.amp_s * south_mass(b);
  out.north_cap = b.amp_n * north_mass(b);
  const auto mass = base_bump_mass(b);
  out.base_total = mass[0] / b.a;
  out.base_upper = (mass[0] - mass[1]) / b.a;
  const double len = b.u1 - b.u0;
  for (int i = 0; i <= 40; ++i) {
    const double x = b.u0 + len * i / 40.0;
    for (int j = 0; j <= 40; ++j) {
      const double y = kHalfPi * j / 40.0;
      out.asymmetry = std::max(out.asymmetry, std::abs(b.fbar_tau(x, y) - b.fbar_tau(x, -y)));
    }
  }
  return out;
}

std::array<double, 2> base_bump_mass(const BumpPair& b) {
  const double len = b.u1 - b.u0;
  const double mx = simpson_1d([&](double x) { return b.fbar_tau(x, 0.0); }, b.u0 + b.eps * len, b.u1 - b.eps * len,
                               static_cast<int>(8192 * len) + 2);
  const double upper = simpson_1d(y_plateau, 0.0, kPi / 3.0, 8192);
  const double lower = simpson_1d(y_plateau, -kPi / 3.0, 0.0, 8192);
  return {mx * (upper + lower), mx * lower};
}

StructuredForm inflate(const StructuredForm& form, std::shared_ptr<const BumpPair> bumps, double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw PreconditionError("inflate: need c >= 0");
  if (c == 0.0) return form;
  if (!bumps) throw PreconditionError("inflate: missing bump data");
  StructuredForm out = form;
  out.c = c;
  out.bumps = std::move(bumps);
  return out;
}

Threshold threshold_constant(const HamiltonianFamily& h, const BumpPair& bumps, const Annulus& annulus, int grid,
                             double limit) {
  Threshold out;
  if (h.is_zero()) return out;
  const double len = bumps.u1 - bumps.u0;
  const double x0 = bumps.u0 + 2.0 * bumps.eps * len;
  const double x1 = bumps.u1 - 2.0 * bumps.eps * len;
  const double y0 = std::max(h.support.y0, -kQuarterPi);
  const double y1 = std::min(h.support.y1, kQuarterPi);
  const int nr = std::max(grid / 2, 8);
  const int nt = std::max(grid / 3, 8);

  std::vector<double> radii{0.5 * bumps.s_lo, 0.5 * (bumps.s_lo + bumps.s_hi), 0.5 * (bumps.n_lo + bumps.n_hi)};
  for (int k = 0; k < nr; ++k) radii.push_back(annulus.a * std::pow(annulus.b / annulus.a, k / (nr - 1.0)));

  auto dhdy = [&](const ChartPoint& p) { return std::abs(h.jet(p).dy); };

  // Per-column maxima, merged in index order.
  std::vector<std::pair<double, ChartPoint>> best(static_cast<std::size_t>(grid + 1), {-1.0, ChartPoint{}});
  parallel_for(best.size(), [&](std::size_t i) {
    const double x = x0 + (x1 - x0) * static_cast<double>(i) / grid;
    auto& slot = best[i];
    for (int j = 0; j <= grid; ++j) {
      const double y = y0 + (y1 - y0) * j / grid;
      for (double r : radii) {
        for (int k = 0; k < nt; ++k) {
          const ChartPoint p{x, y, r, kTwoPi * k / nt};
          const double v = dhdy(p);
          if (v > slot.first) slot = {v, p};
        }
      }
    }
  });
  auto top = best.front();
  for (const auto& b : best) {
    if (b.first > top.first) top = b;
  }

  ChartPoint p = top.second;
  double value = top.first;
  const double hx = (x1 - x0) / grid;
  const double hy = (y1 - y0) / grid;
  const double ht = kTwoPi / nt;
  for (int round = 0; round < 3; ++round) {
    double arg = p.x;
    golden_maximize([&](double x) { return dhdy({x, p.y, p.r, p.theta}); }, std::max(x0, p.x - hx),
                    std::min(x1, p.x + hx), 1e-10, &arg);
    p.x = arg;
    golden_maximize([&](double y) { return dhdy({p.x, y, p.r, p.theta}); }, std::max(y0, p.y - hy),
                    std::min(y1, p.y + hy), 1e-10, &arg);
    p.y = arg;
    if (annulus.contains(p.r)) {
      const double lr = std::log(p.r);
      const double hr = std::log(annulus.b / annulus.a) / (nr - 1.0);
      golden_maximize([&](double l) { return dhdy({p.x, p.y, std::exp(l), p.theta}); },
                      std::max(std::log(annulus.a), lr - hr), std::min(std::log(annulus.b), lr + hr), 1e-10, &arg);
      p.r = std::exp(arg);
    }
    golden_maximize([&](double t) { return dhdy({p.x, p.y, p.r, t}); }, p.theta - ht, p.theta + ht, 1e-10, &arg);
    p.theta = canonical_angle(arg);
    value = std::max(value, dhdy(p));
  }
  out.max_dhdy = value;
  out.argmax = p;
  out.c = 1.05 * bumps.a * value;
  if (!std::isfinite(out.c) || out.c > limit) {
    throw ConvergenceError("threshold_constant: C = " + std::to_string(out.c) + " exceeds the limit " +
                           std::to_string(limit));
  }
  return out;
}

}  // namespace hforge
