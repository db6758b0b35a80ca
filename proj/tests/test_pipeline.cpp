#include <cmath>

#include "doctest.h"
#include "hforge/connection.hpp"
#include "hforge/pipeline.hpp"
#include "support.hpp"

using namespace hforge;

namespace {

using Hyperplane = std::array<std::array<double, 4>, 3>;

double pf_oracle(const Matrix4& m) { return m[0][1] * m[2][3] - m[0][2] * m[1][3] + m[0][3] * m[1][2]; }

Matrix4 random_antisymmetric(testing::Gen& g) {
  Matrix4 m{};
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      m[i][j] = g.uniform(-2, 2);
      m[j][i] = -m[i][j];
    }
  }
  return m;
}

// Adds beta ^ alpha where beta annihilates the hyperplane (the normal covector).
Matrix4 add_wedge(const Matrix4& m, const std::array<double, 4>& beta, const std::array<double, 4>& alpha) {
  Matrix4 out = m;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out[i][j] += beta[i] * alpha[j] - beta[j] * alpha[i];
  }
  return out;
}

// Covector vanishing on the three rows: cofactor expansion of the 4x4 with a free first row.
std::array<double, 4> normal_covector(const Hyperplane& h) {
  std::array<double, 4> n{};
  for (int k = 0; k < 4; ++k) {
    double minor[3][3];
    for (int i = 0; i < 3; ++i) {
      int c = 0;
      for (int j = 0; j < 4; ++j) {
        if (j != k) minor[i][c++] = h[i][j];
      }
    }
    const double det = minor[0][0] * (minor[1][1] * minor[2][2] - minor[1][2] * minor[2][1]) -
                       minor[0][1] * (minor[1][0] * minor[2][2] - minor[1][2] * minor[2][0]) +
                       minor[0][2] * (minor[1][0] * minor[2][1] - minor[1][1] * minor[2][0]);
    n[k] = (k % 2 == 0 ? 1.0 : -1.0) * det;
  }
  return n;
}

const Hyperplane kXRTheta{{{1, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};

Matrix4 diag_form(double base, double fiber) {
  Matrix4 m{};
  m[0][1] = base;
  m[1][0] = -base;
  m[2][3] = fiber;
  m[3][2] = -fiber;
  return m;
}

}  // namespace

TEST_CASE("interpolation check: identical and area-rescaled forms") {
  const auto w = diag_form(1.0, 1.0);
  const auto same = linear_interpolation_check(w, w, kXRTheta);
  CHECK(same.accepted);
  CHECK(same.positive);
  CHECK(same.hyperplane_mismatch == 0.0);
  CHECK(same.min_pfaffian == doctest::Approx(1.0));

  // Two forms with different base areas agree on span{dx, dr, dtheta}.
  const auto chk = linear_interpolation_check(w, diag_form(2.0, 1.0), kXRTheta);
  CHECK(chk.accepted);
  CHECK(chk.positive);
  CHECK(chk.min_pfaffian == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chk.min_closed_form == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("property: random forms agreeing on a hyperplane interpolate nondegenerately") {
  testing::Gen g(2024);
  int tested = 0;
  while (tested < 300) {
    const auto w = random_antisymmetric(g);
    Hyperplane h{};
    for (auto& row : h) {
      for (double& v : row) v = g.uniform(-1, 1);
    }
    std::array<double, 4> alpha{};
    for (double& v : alpha) v = g.uniform(-1, 1);
    const auto wp = add_wedge(w, normal_covector(h), alpha);
    const double p0 = pf_oracle(w);
    const double p1 = pf_oracle(wp);
    if (std::abs(p0) < 0.05 || std::abs(p1) < 0.05 || (p0 > 0) != (p1 > 0)) continue;
    ++tested;
    const auto chk = linear_interpolation_check(w, wp, h);
    REQUIRE(chk.accepted);
    CHECK(chk.positive);
    // The difference has square zero, so Pf is affine in t: its minimum is at an endpoint.
    const double orient = p0 > 0 ? 1.0 : -1.0;
    const double expected = std::min(orient * p0, orient * p1);
    CHECK(std::abs(chk.min_pfaffian - expected) < 1e-9 * std::max(1.0, expected));
    CHECK(std::abs(chk.min_closed_form - expected) < 1e-9 * std::max(1.0, expected));
  }
}

TEST_CASE("interpolation check rejects bad inputs") {
  const auto w = diag_form(1.0, 1.0);
  const auto degenerate = linear_interpolation_check(w, diag_form(0.0, 1.0), kXRTheta);
  CHECK_FALSE(degenerate.accepted);
  CHECK(degenerate.diagnostic == "degenerate form");

  const auto flipped = linear_interpolation_check(w, diag_form(-1.0, 1.0), kXRTheta);
  CHECK_FALSE(flipped.accepted);
  CHECK(flipped.diagnostic == "opposite orientations");

  const auto mismatch = linear_interpolation_check(w, diag_form(1.0, 1.5), kXRTheta);
  CHECK_FALSE(mismatch.accepted);
  CHECK(mismatch.hyperplane_mismatch == doctest::Approx(0.5));
}

TEST_CASE("correction construction") {
  HamiltonianFamily none;
  const auto trivial = build_correction(none, CorrectionGeometry{});
  CHECK(trivial.global.is_zero());

  HamiltonianFamily k;
  k.varying = testing::field("0.03*bump(x,0.42,0.58)*bump(y,-0.45,0.45)*(r-1)*bump(r,0.3,3.5)");
  k.support = {0.42, 0.58, -0.45, 0.45};
  CHECK_THROWS_AS(build_correction(k, CorrectionGeometry{0.4, 0.5, 0.05}), PreconditionError);
  CHECK_THROWS_AS(build_correction(k, CorrectionGeometry{0.3, 0.2, 0.05}), PreconditionError);
  HamiltonianFamily tall = k;
  tall.support.y1 = 1.0;
  CHECK_THROWS_AS(build_correction(tall, CorrectionGeometry{}), PreconditionError);

  const auto corr = build_correction(k, CorrectionGeometry{});
  // Globalized H vanishes outside [u0, u1] and on the equator at y = 0.
  CHECK(corr.global.value({0.05, 0.1, 1.3, 0.2}) == 0.0);
  CHECK(corr.global.value({0.3, 0.1, 1.3, 0.2}) == 0.0);
  for (double x : {0.12, 0.17, 0.21}) CHECK(std::abs(corr.global.value({x, 0.0, 1.0, 1.0})) < 1e-15);
  // The corrected form has trivial holonomy.
  StructuredForm form = testing::form_with_k("0", {0, 0, 0, 0});
  form.initial = k;
  const auto corrected = form.with_correction(corr.global, 1.0);
  for (double lam : {-0.3, 0.0, 0.2}) CHECK(holonomy_latitude(corrected, lam, {}, 8).residual < 1e-5);
  CHECK(holonomy_latitude(form, 0.2, {}, 8).residual > 1e-3);
}

TEST_CASE("kill on the standard form keeps it standard") {
  PipelineOptions opt;
  opt.grid = MarginGrid::from_size(12);
  opt.markers = 6;
  opt.generator_per_unit = 128;
  const auto trace = kill_latitude_holonomy(StructuredForm::standard(), opt);
  REQUIRE(trace.stages.size() == 7);
  CHECK(trace.threshold.c == 0.0);
  for (const auto& st : trace.stages) CHECK(st.report.all_satisfied());
  for (const auto& h : trace.endpoint_holonomy) CHECK(h.residual < 1e-12);
}

TEST_CASE("fiber Moser map") {
  const auto bumps = build_bumps(InflationGeometry{});
  const FiberMoser id;
  CHECK(id(0.7) == 0.7);
  for (double c : {0.5, 2.0}) {
    const FiberMoser m(bumps, c);
    CHECK(std::abs(m(1.0) - 1.0) < 1e-12);
    double prev = 0.0;
    for (double r : {0.01, 0.1, 0.3, 0.9, 1.0, 1.1, 3.0, 10.0, 100.0}) {
      const double rho = m(r);
      CHECK(rho > prev);
      prev = rho;
      CHECK(std::abs(m.area(rho) - std_disk_area(r)) < 1e-10);
    }
    // Between the caps the inflated disk area is (A_std + c / 2) / (c + 1).
    for (double r : {0.8, 1.0, 1.25}) {
      const double expected = std_disk_radius((1.0 + c) * std_disk_area(r) - 0.5 * c);
      CHECK(m(r) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(FiberMoser(bumps, -1.0), PreconditionError);
}

TEST_CASE("pullback of a split form is the identity") {
  const PullbackMap phi(StructuredForm::standard());
  const auto std_form = StructuredForm::standard();
  testing::Gen g(5);
  for (int i = 0; i < 20; ++i) {
    const ChartPoint p{g.uniform(0, 1), g.uniform(-1.2, 1.2), g.log_uniform(0.2, 5), g.uniform(0, kTwoPi)};
    const auto w = phi.map(p);
    CHECK(std::abs(w.r - p.r) < 1e-14);
    CHECK(std::abs(std::remainder(w.theta - p.theta, kTwoPi)) < 1e-14);
    const auto a = phi.pulled_back(p);
    const auto b = std_form.coefficients(p);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-8);
    CHECK(hyperplane_residual(phi, std_form, p) < 1e-8);
  }
  CHECK(phi.equator_drift(16) < 1e-14);
  CHECK(phi.identity_defect(8) < 1e-14);
  CHECK(monotonicity_defect({1.0, 1.0, 0.5, 0.5}) == 0.0);
  CHECK(monotonicity_defect({1.0, 1.0, 0.5, 0.6}) == doctest::Approx(0.1));
}
