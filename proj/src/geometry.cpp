#include "hforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace hforge {

namespace {

int even_intervals(double length, int per_unit) {
  int n = static_cast<int>(std::ceil(length * per_unit - 1e-9));
  n = std::max(n, 2);
  if (n % 2 != 0) ++n;
  return n;
}

constexpr std::array<std::pair<int, int>, 6> kPairs{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

}  // namespace

double simpson_2d(const std::function<double(double, double)>& fn, double u0, double u1, double v0,
                  double v1, int per_unit) {
  const int nu = even_intervals(u1 - u0, per_unit);
  const int nv = even_intervals(v1 - v0, per_unit);
  const double hu = (u1 - u0) / nu;
  const double hv = (v1 - v0) / nv;
  auto weight = [](int i, int n) { return (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0); };
  double total = 0.0;
  for (int i = 0; i <= nu; ++i) {
    const double u = u0 + i * hu;
    double row = 0.0;
    for (int j = 0; j <= nv; ++j) row += weight(j, nv) * fn(u, v0 + j * hv);
    total += weight(i, nu) * row;
  }
  return total * hu * hv / 9.0;
}

QuadratureResult integrate_area(const AreaForm& form, const ChartRect& region, int per_unit) {
  if (!(region.u1 > region.u0) || !(region.v1 > region.v0)) {
    throw PreconditionError("integrate_area: empty region");
  }
  std::function<double(double, double)> integrand;
  double u0 = region.u0;
  double u1 = region.u1;

  if (form.kind == ChartKind::Base) {
    if (region.u0 < 0.0 || region.u1 > 1.0 || region.v0 < -kHalfPi || region.v1 > kHalfPi) {
      throw PreconditionError("integrate_area: base region outside the chart");
    }
    const bool touches_pole = region.v0 <= -kHalfPi || region.v1 >= kHalfPi;
    if (touches_pole && !region.pole_handling) {
      throw PreconditionError("integrate_area: base region touches a pole without pole handling");
    }
    integrand = form.density;
  } else {
    if (region.u0 < 0.0) throw PreconditionError("integrate_area: negative fiber radius");
    const bool singular = region.u0 == 0.0 || std::isinf(region.u1);
    if (singular && !region.pole_handling) {
      throw PreconditionError(
          "integrate_area: fiber region touches r = 0 or r = infinity without pole handling");
    }
    if (region.pole_handling) {
      u0 = 2.0 * std::atan(region.u0);
      u1 = std::isinf(region.u1) ? kPi : 2.0 * std::atan(region.u1);
      integrand = [density = form.density](double chi, double theta) {
        if (chi >= kPi) return 0.0;
        const double r = std::tan(0.5 * chi);
        return density(r, theta) * 0.5 * (1.0 + r * r);
      };
    } else {
      integrand = form.density;
    }
  }
  const double fine = simpson_2d(integrand, u0, u1, region.v0, region.v1, per_unit);
  const double coarse = simpson_2d(integrand, u0, u1, region.v0, region.v1, std::max(per_unit / 2, 2));
  return {fine, std::abs(fine - coarse) / 15.0};
}

Matrix4 to_matrix(const Form2Coefficients& c) {
  Matrix4 m{};
  for (std::size_t k = 0; k < kPairs.size(); ++k) {
    const auto [i, j] = kPairs[k];
    m[i][j] = c[k];
    m[j][i] = -c[k];
  }
  return m;
}

Form2Coefficients from_matrix(const Matrix4& m) {
  Form2Coefficients c{};
  for (std::size_t k = 0; k < kPairs.size(); ++k) {
    const auto [i, j] = kPairs[k];
    c[k] = 0.5 * (m[i][j] - m[j][i]);
  }
  return c;
}

double pfaffian(const Matrix4& m) {
  return m[0][1] * m[2][3] - m[0][2] * m[1][3] + m[0][3] * m[1][2];
}

double determinant(const Matrix4& m) {
  // Laplace expansion along 2x2 minors of the first two rows.
  auto minor = [&](int r0, int r1, int c0, int c1) { return m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]; };
  return minor(0, 1, 0, 1) * minor(2, 3, 2, 3) - minor(0, 1, 0, 2) * minor(2, 3, 1, 3) +
         minor(0, 1, 0, 3) * minor(2, 3, 1, 2) + minor(0, 1, 1, 2) * minor(2, 3, 0, 3) -
         minor(0, 1, 1, 3) * minor(2, 3, 0, 2) + minor(0, 1, 2, 3) * minor(2, 3, 0, 1);
}

Matrix4 congruence(const Matrix4& jacobian, const Matrix4& m) {
  Matrix4 out{};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) s += jacobian[i][a] * m[i][j] * jacobian[j][b];
      }
      out[a][b] = s;
    }
  }
  return out;
}

Form2Patch split_form_patch(std::function<double(double, double)> base_density,
                            std::function<double(double)> fiber_density) {
  Form2Patch patch;
  patch.coefficients = [f = std::move(base_density), g = std::move(fiber_density)](const ChartPoint& p) {
    return Form2Coefficients{f(p.x, p.y), 0.0, 0.0, 0.0, 0.0, g(p.r)};
  };
  return patch;
}

double pfaffian_positivity(const Form2Patch& form, const ChartPoint& p) {
  return 2.0 * pfaffian(to_matrix(form(p)));
}

double closedness_residual(const Form2Patch& form, const ChartPoint& p, double h) {
  if (!(h > 0.0)) throw PreconditionError("closedness_residual: step must be positive");
  if (!form.bounds.contains_open(p.y - 2.0 * h, p.r - 2.0 * h) ||
      !form.bounds.contains_open(p.y + 2.0 * h, p.r + 2.0 * h)) {
    throw PreconditionError("closedness_residual: stencil exits the patch");
  }
  // partial[k][c]: derivative of coefficient c along coordinate k, five-point stencil.
  std::array<Form2Coefficients, 4> partial{};
  for (int k = 0; k < 4; ++k) {
    auto shifted = [&](double d) {
      ChartPoint q = p;
      double* coord = k == 0 ? &q.x : k == 1 ? &q.y : k == 2 ? &q.r : &q.theta;
      *coord += d;
      return form(q);
    };
    const Form2Coefficients p2 = shifted(2.0 * h);
    const Form2Coefficients p1 = shifted(h);
    const Form2Coefficients m1 = shifted(-h);
    const Form2Coefficients m2 = shifted(-2.0 * h);
    for (int c = 0; c < 6; ++c) partial[k][c] = (-p2[c] + 8.0 * p1[c] - 8.0 * m1[c] + m2[c]) / (12.0 * h);
  }
  auto index = [](int i, int j) {
    for (int k = 0; k < 6; ++k) {
      if (kPairs[k].first == i && kPairs[k].second == j) return k;
    }
    return -1;
  };
  constexpr std::array<std::array<int, 3>, 4> kTriples{{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
  double worst = 0.0;
  for (const auto& t : kTriples) {
    const int i = t[0];
    const int j = t[1];
    const int k = t[2];
    const double d = partial[i][index(j, k)] - partial[j][index(i, k)] + partial[k][index(i, j)];
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

double image_triangle_area(const std::function<FiberPoint(const FiberPoint&)>& map,
                           const std::array<std::array<double, 2>, 3>& vertices, double h) {
  // Dunavant degree-5 rule in barycentric coordinates.
  static constexpr double kA1 = 0.059715871789770;
  static constexpr double kB1 = 0.470142064105115;
  static constexpr double kA2 = 0.797426985353087;
  static constexpr double kB2 = 0.101286507323456;
  static constexpr double kW0 = 0.225;
  static constexpr double kW1 = 0.132394152788506;
  static constexpr double kW2 = 0.125939180544827;
  static const std::array<std::array<double, 4>, 7> kRule{{{1.0 / 3, 1.0 / 3, 1.0 / 3, kW0},
                                                           {kA1, kB1, kB1, kW1},
                                                           {kB1, kA1, kB1, kW1},
                                                           {kB1, kB1, kA1, kW1},
                                                           {kA2, kB2, kB2, kW2},
                                                           {kB2, kA2, kB2, kW2},
                                                           {kB2, kB2, kA2, kW2}}};
  const auto& p = vertices;
  const double area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
  auto image = [&](double u, double v) {
    const FiberPoint w = map(FiberPoint::polar(std::hypot(u, v), std::atan2(v, u)));
    return std::array<double, 2>{w.u(), w.v()};
  };
  // In Cartesian coordinates sigma_std = (1 / (pi (1 + |w|^2)^2)) du ^ dv.
  auto density = [](double u, double v) {
    const double q = 1.0 + u * u + v * v;
    return 1.0 / (kPi * q * q);
  };
  double total = 0.0;
  for (const auto& q : kRule) {
    const double u = q[0] * p[0][0] + q[1] * p[1][0] + q[2] * p[2][0];
    const double v = q[0] * p[0][1] + q[1] * p[1][1] + q[2] * p[2][1];
    const auto up = image(u + h, v);
    const auto um = image(u - h, v);
    const auto up2 = image(u + 2 * h, v);
    const auto um2 = image(u - 2 * h, v);
    const auto vp = image(u, v + h);
    const auto vm = image(u, v - h);
    const auto vp2 = image(u, v + 2 * h);
    const auto vm2 = image(u, v - 2 * h);
    auto d5 = [h](double p2, double p1, double m1, double m2) { return (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * h); };
    const double j00 = d5(up2[0], up[0], um[0], um2[0]);
    const double j10 = d5(up2[1], up[1], um[1], um2[1]);
    const double j01 = d5(vp2[0], vp[0], vm[0], vm2[0]);
    const double j11 = d5(vp2[1], vp[1], vm[1], vm2[1]);
    const auto centre = image(u, v);
    total += q[3] * density(centre[0], centre[1]) * (j00 * j11 - j01 * j10);
  }
  return total * std::abs(area);
}

}  // namespace hforge
