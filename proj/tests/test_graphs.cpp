#include <cmath>

#include "doctest.h"
#include "hforge/graphs.hpp"
#include "support.hpp"

using namespace hforge;

namespace {

// Determinant of the Jacobian of z -> phi(|z|) A z by five-point differences, a separate
// stencil from the library's central one.
double jacobian_det_oracle(const Mat2& a, const RadialProfile& p, double r, double angle) {
  auto map = [&](double u, double v) {
    const double s = p.phi(std::hypot(u, v));
    return Vec2{s * (a[0][0] * u + a[0][1] * v), s * (a[1][0] * u + a[1][1] * v)};
  };
  const double u = r * std::cos(angle);
  const double v = r * std::sin(angle);
  const double h = 1e-4 * r;
  const Vec2 pu = map(u + h, v), mu = map(u - h, v), pv = map(u, v + h), mv = map(u, v - h);
  const Vec2 pu2 = map(u + 2 * h, v), mu2 = map(u - 2 * h, v), pv2 = map(u, v + 2 * h), mv2 = map(u, v - 2 * h);
  auto d5 = [&](double p2, double p1, double m1, double m2) { return (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * h); };
  const double j00 = d5(pu2[0], pu[0], mu[0], mu2[0]);
  const double j10 = d5(pu2[1], pu[1], mu[1], mu2[1]);
  const double j01 = d5(pv2[0], pv[0], mv[0], mv2[0]);
  const double j11 = d5(pv2[1], pv[1], mv[1], mv2[1]);
  return j00 * j11 - j01 * j10;
}

}  // namespace

TEST_CASE("linear graph margins") {
  CHECK(is_graph_symplectic({Mat2{}}).margin == 1.0);
  CHECK(is_graph_symplectic({Mat2{{{1, 0}, {0, 1}}}}).margin == 2.0);
  const auto bad = is_graph_symplectic({Mat2{{{2, 0}, {0, -1}}}});
  CHECK(bad.margin == -1.0);
  CHECK_FALSE(bad.symplectic);
}

TEST_CASE("scaled margin reduces to the linear one for phi = 1 and to 1 for phi = 0") {
  const LinearGraph g{Mat2{{{0.3, -1.2}, {0.8, 2.0}}}};
  const RadialProfile one{[](double) { return 1.0; }, [](double) { return 0.0; }};
  const RadialProfile zero{[](double) { return 0.0; }, [](double) { return 0.0; }};
  CHECK(scaled_graph_margin(g, one, 0.4) == doctest::Approx(is_graph_symplectic(g).margin));
  CHECK(scaled_graph_margin(g, zero, 0.4) == 1.0);
}

TEST_CASE("raw profile at eps = 1/2, delta = 0.1, r = 0.15 against the finite-difference Jacobian") {
  const double eps = 0.5, delta = 0.1, r = 0.15;
  const RadialProfile raw = raw_phi_profile(eps, delta);
  const double phi2 = (1.0 - delta * delta / (r * r)) / (1.0 - eps / 4.0);
  CHECK(raw.phi(r) * raw.phi(r) == doctest::Approx(phi2).epsilon(1e-12));
  const LinearGraph g{Mat2{{{1, 0}, {0, 1}}}};
  const double oracle = 1.0 + jacobian_det_oracle(g.A, raw, r, 0.7);
  CHECK(std::abs(scaled_graph_margin(g, raw, r) - oracle) < 1e-6);
}

TEST_CASE("raw profile closed form at eps = 1, r = delta sqrt 2") {
  const double delta = 0.37;
  const RadialProfile raw = raw_phi_profile(1.0, delta);
  const double phi = raw.phi(delta * std::sqrt(2.0));
  CHECK(phi * phi == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("cutoff family endpoints") {
  const auto fam = build_phi_family(0.3, 0.05);
  CHECK(fam.phi(0.0, fam.delta()) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fam.phi(0.0, 0.5 * fam.delta()) == 0.0);
  CHECK(fam.phi(0.0, fam.gamma()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fam.phi(0.0, 3.0 * fam.gamma()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fam.gamma() == doctest::Approx(2.0 * 0.05 / std::sqrt(0.3)));
  for (double s : {0.0, 0.2, 0.7, 1.0}) {
    CHECK(fam.phi(s, 0.3 * fam.delta()) == doctest::Approx(s).epsilon(1e-12));
  }
  for (double r : {0.01, 0.06, 0.1, 0.2, 1.0}) CHECK(fam.phi(1.0, r) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(build_phi_family(0.0, 0.1), PreconditionError);
  CHECK_THROWS_AS(build_phi_family(1.0, 0.1), PreconditionError);
  CHECK_THROWS_AS(build_phi_family(0.5, -0.1), PreconditionError);
}

TEST_CASE("property: 0 <= phi^2 + r phi phi' < 1/(1 - eps), phi nondecreasing, margin matches Jacobian") {
  testing::Gen g(20240611);
  double worst_fd = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double eps = g.uniform(0.05, 0.95);
    const double delta = g.log_uniform(1e-3, 1.0);
    const auto fam = build_phi_family(eps, delta);
    const double bound = 1.0 / (1.0 - eps);
    double a00 = g.uniform(-3, 3), a01 = g.uniform(-3, 3), a10 = g.uniform(-3, 3), a11 = g.uniform(-3, 3);
    const double det = a00 * a11 - a01 * a10;
    if (std::abs(det) > 10.0) {
      const double scale = std::sqrt(10.0 / std::abs(det));
      a00 *= scale, a01 *= scale, a10 *= scale, a11 *= scale;
    }
    const LinearGraph lg{Mat2{{{a00, a01}, {a10, a11}}}};
    for (int i = 0; i < 1000; ++i) {
      const double s = g.uniform(0.0, 1.0);
      const double r = g.uniform(0.0, 1.5 * fam.gamma());
      const double q = fam.graph_factor(s, r);
      REQUIRE(q >= -1e-14);
      REQUIRE(q < bound);
      const double phi = fam.phi(s, r);
      const double direct = phi * phi + r * phi * fam.dphi(s, r);
      REQUIRE(std::abs(direct - q) < 1e-9);
      REQUIRE(fam.phi(s, r * 1.01) >= phi - 1e-14);
      if (i % 50 == 0 && r > 1e-3) {
        const auto prof = fam.profile(s);
        const double oracle = 1.0 + jacobian_det_oracle(lg.A, prof, r, g.uniform(0, 6.28));
        worst_fd = std::max(worst_fd, std::abs(scaled_graph_margin(lg, prof, r) - oracle));
        worst_fd = std::max(worst_fd, std::abs(scaled_graph_margin_fd(lg, prof, r) - oracle));
      }
    }
  }
  CHECK(worst_fd < 1e-6);
}

TEST_CASE("straightening: constant family, linear family, fixed leaves") {
  StraighteningFamily constant;
  constant.matrix = [](const Vec2&) { return Mat2{{{0.5, 0.1}, {-0.2, 0.3}}}; };
  constant.lambdas = {{0, 0}, {0.5, 0}, {1, 0}, {0, 1}};
  constant.eps = 0.3;
  const auto rc = straightening_check(constant, 0.4);
  CHECK(rc.passed);
  CHECK(rc.lipschitz_constant == doctest::Approx(0.0));

  StraighteningFamily linear;
  linear.matrix = [](const Vec2& l) { return Mat2{{{l[0], 0}, {0, l[0]}}}; };
  for (int i = 0; i <= 10; ++i) linear.lambdas.push_back({i / 10.0, 0.0});
  linear.eps = 0.1;
  linear.delta = 0.01;
  for (double s : {0.0, 0.5, 1.0}) {
    const auto r = straightening_check(linear, s);
    CHECK(r.passed);
    CHECK(r.min_singular_value >= 1.0 - 0.1 - 1e-12);
  }

  const auto phi = build_phi_family(linear.eps, linear.delta);
  for (const Vec2 z : {Vec2{0.003, 0.004}, Vec2{-0.005, 0.001}}) {
    const Vec2 out = straighten(linear, phi, 1.0, z, {0.7, 0.0});
    CHECK(out[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.0));
  }
  // A^lambda = 0 leaf stays put for every s.
  for (double s : {0.0, 0.3, 1.0}) {
    const Vec2 out = straighten(linear, phi, s, {0.05, 0.02}, {0.0, 0.0});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
  }
}

TEST_CASE("straightening rejects a radius above the Lipschitz threshold") {
  StraighteningFamily steep;
  steep.matrix = [](const Vec2& l) { return Mat2{{{40.0 * l[0], 0}, {0, 0}}}; };
  steep.lambdas = {{0, 0}, {0.5, 0}, {1, 0}};
  steep.eps = 0.5;
  CHECK_THROWS_AS(straightening_check(steep, 0.5), PreconditionError);
}

TEST_CASE("min singular value") {
  CHECK(min_singular_value(Mat2{{{3, 0}, {0, 2}}}) == doctest::Approx(2.0));
  CHECK(min_singular_value(Mat2{{{1, 1}, {1, 1}}}) == doctest::Approx(0.0).epsilon(1e-12));
}
