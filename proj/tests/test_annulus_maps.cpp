#include <cmath>

#include "doctest.h"
#include "hforge/annulus_maps.hpp"
#include "hforge/connection.hpp"
#include "support.hpp"

using namespace hforge;

namespace {

AnnulusIsotopy iso_from(const std::string& text, double lambda = 0.0) {
  AnnulusIsotopy iso;
  iso.generator = testing::field(text);
  iso.lambda = lambda;
  return iso;
}

// Random smooth Hamiltonian on the annulus, vanishing near both boundary circles.
std::string random_hamiltonian(testing::Gen& g) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "(%.6f*sin(%.6f*x + theta) + %.6f*cos(2*theta)*(1 + %.6f*x) + %.6f*(r - 1)^2)*bump(r, 0.3, 3.5)",
                g.uniform(-0.02, 0.02), g.uniform(0.5, 3.0), g.uniform(-0.02, 0.02), g.uniform(-1, 1),
                g.uniform(-0.02, 0.02));
  return buf;
}

double cap_distance(const CylinderMap& a, const CylinderMap& b, double smax) {
  double worst = 0.0;
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 8; ++j) {
      const double s = -smax + 2 * smax * i / 8.0;
      const double th = kTwoPi * j / 8.0;
      const auto p = a(s, th);
      const auto q = b(s, th);
      worst = std::max({worst, std::abs(p[0] - q[0]), std::abs(std::remainder(p[1] - q[1], kTwoPi))});
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("constant Hamiltonian: identity flow and F = kappa t") {
  const auto iso = iso_from("0.7");
  const FiberPoint w{1.4, 0.3, false};
  CHECK(marker_distance(iso.map(w, 1.0), w) == 0.0);
  const auto f = hamiltonian_to_potential(iso, 0.6);
  CHECK(f(w) == doctest::Approx(0.7 * 0.6).epsilon(1e-12));
  CHECK(f({0.5, 2.0, false}) == doctest::Approx(0.42).epsilon(1e-12));
  const auto zero = hamiltonian_to_potential(iso_from("0"), 1.0);
  CHECK(zero(w) == 0.0);
}

TEST_CASE("twist Hamiltonian: time quadrature and path integral agree") {
  const auto iso = iso_from("0.05*(r - 1)^2*bump(r, 0.3, 3.5)");
  const auto f = hamiltonian_to_potential(iso, 1.0);
  for (double r : {0.4, 0.8, 1.0, 1.7, 3.0}) {
    const FiberPoint w{r, 0.9, false};
    CHECK(std::abs(f(w) - f.path_integral(w)) < 1e-6);
  }
  const auto chk = check_potential(iso, 1.0);
  CHECK(chk.path_mismatch < 1e-6);
  CHECK(chk.differential_mismatch < 1e-6);
  // Recovered Hamiltonian is radial.
  const double h1 = potential_to_hamiltonian(iso, 0.5, {1.5, 0.2, false});
  const double h2 = potential_to_hamiltonian(iso, 0.5, {1.5, 2.9, false});
  CHECK(std::abs(h1 - h2) < 1e-6);
}

TEST_CASE("property: H -> F -> H round trip on random Hamiltonians") {
  testing::Gen g(404);
  for (int k = 0; k < 4; ++k) {
    const auto iso = iso_from(random_hamiltonian(g));
    const auto rt = round_trip_check(iso, {0.3, 0.8}, 4);
    CHECK(rt.hamiltonian_error < 1e-5);
    const auto pc = check_potential(iso, 0.8, 4);
    CHECK(pc.differential_mismatch < 1e-6);
  }
}

TEST_CASE("property: isotopy time-t maps preserve triangle areas") {
  testing::Gen g(12);
  const auto iso = iso_from(random_hamiltonian(g));
  auto map = [&](const FiberPoint& w) { return iso.map(w, 1.0); };
  auto id = [](const FiberPoint& w) { return w; };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double r = g.uniform(0.4, 3.0), th = g.uniform(0, kTwoPi);
    std::array<std::array<double, 2>, 3> tri{};
    for (auto& v : tri) {
      const double rr = r * (1 + g.uniform(-0.04, 0.04)), tt = th + g.uniform(-0.04, 0.04);
      v = {rr * std::cos(tt), rr * std::sin(tt)};
    }
    worst = std::max(worst, std::abs(image_triangle_area(map, tri) - image_triangle_area(id, tri)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("equator normalization") {
  HamiltonianFamily h;
  h.varying = testing::field("0.1*sin(6.283185307179586*x)*bump(y,-0.7,0.7)*(r - 1)*bump(r,0.3,3.5)");
  h.offset = testing::field("0.2*x*bump(y,-0.7,0.7)");
  const auto n = normalize_on_equator(h);
  for (double s : {0.1, 0.4, 0.77}) CHECK(std::abs(n.value({s, 0.0, 1.0, 0.0})) < 1e-15);

  // Already normalized: unchanged.
  const auto nn = normalize_on_equator(n);
  testing::Gen g(8);
  for (int i = 0; i < 50; ++i) {
    const ChartPoint p{g.uniform(0, 1), g.uniform(-1, 1), g.uniform(0.3, 3), g.uniform(0, kTwoPi)};
    CHECK(std::abs(nn.value(p) - n.value(p)) < 1e-14);
  }

  // Shift by 5 rho(lambda): same normalization.
  HamiltonianFamily shifted = h;
  shifted.offset = h.offset + Field([](const DualPoint& p) { return Dual(5.0) * latitude_cutoff(p[1]); });
  const auto ns = normalize_on_equator(shifted);
  for (int i = 0; i < 50; ++i) {
    const ChartPoint p{g.uniform(0, 1), g.uniform(-1, 1), g.uniform(0.3, 3), g.uniform(0, kTwoPi)};
    CHECK(std::abs(ns.value(p) - n.value(p)) < 1e-12);
  }

  // The vector field is unchanged: flows agree.
  for (double lam : {0.0, 0.3}) {
    AnnulusIsotopy a{h.varying + h.offset, lam, Annulus{}, 256};
    AnnulusIsotopy b{n.varying + n.offset, lam, Annulus{}, 256};
    for (const auto& w : annulus_markers(Annulus{}, 4)) CHECK(marker_distance(a.map(w, 1.0), b.map(w, 1.0)) < 1e-8);
  }

  HamiltonianFamily bad;
  bad.varying = testing::field("0.1*cos(theta)*r*bump(r,0.3,3.5)");
  CHECK_THROWS_AS(normalize_on_equator(bad), PreconditionError);
}

TEST_CASE("flow contraction: identity, twist, and the four conditions") {
  HamiltonianFamily id;
  const auto c0 = flow_contraction(id);
  CHECK(c0.is_zero());

  HamiltonianFamily twist;
  twist.varying = testing::field("0.04*bump(y,-0.7,0.7)*(r - 1)^2*bump(r,0.3,3.5)");
  twist.support = {0.0, 1.0, -0.7, 0.7};
  const auto c = flow_contraction(twist);
  const auto rep = check_contraction(twist, c, Annulus{});
  CHECK(rep.endpoint_error < 1e-8);
  CHECK(rep.outside_identity < 1e-9);
  CHECK(rep.end_constancy == 0.0);
  CHECK(rep.equator_drift < 1e-12);
  // Twist preserves circles: r is unchanged along the contraction.
  AnnulusIsotopy iso{c.varying, 0.2, Annulus{}, 256};
  const FiberPoint w{1.8, 0.5, false};
  CHECK(std::abs(iso.flow(w, 0.0, 0.6).r - 1.8) < 1e-12);

  HamiltonianFamily bad;
  bad.varying = testing::field("0.1*r*cos(theta)*bump(r,0.3,3.5)");
  CHECK_THROWS_AS(flow_contraction(bad), PreconditionError);
}

TEST_CASE("Dehn twist: fixed boundaries, area preserving, inverse") {
  const Annulus ann;
  const auto rho = default_twist_profile(ann);
  const auto t = dehn_twist(rho, ann);
  const auto ti = dehn_twist(rho, ann, true);
  for (int k = 0; k < 12; ++k) {
    const FiberPoint in{ann.a, kTwoPi * k / 12, false};
    const FiberPoint out{ann.b, kTwoPi * k / 12, false};
    CHECK(marker_distance(t(in), in) < 1e-14);
    CHECK(marker_distance(t(out), out) < 1e-12);
  }
  testing::Gen g(31);
  auto id = [](const FiberPoint& w) { return w; };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double r = g.uniform(0.3, 3.5), th = g.uniform(0, kTwoPi);
    std::array<std::array<double, 2>, 3> tri{};
    for (auto& v : tri) {
      const double rr = r * (1 + g.uniform(-0.03, 0.03)), tt = th + g.uniform(-0.03, 0.03);
      v = {rr * std::cos(tt), rr * std::sin(tt)};
    }
    worst = std::max(worst, std::abs(image_triangle_area(t, tri) - image_triangle_area(id, tri)));
    const FiberPoint w{r, th, false};
    CHECK(marker_distance(ti(t(w)), w) < 1e-9);
  }
  CHECK(worst < 1e-8);
  CHECK_THROWS_AS(dehn_twist([](double r) { return r < 1 ? 1.0 : 0.0; }, ann), PreconditionError);
}

TEST_CASE("circle extension: rotation, identity, and a nonuniform isotopy") {
  const double alpha = 0.3;
  const auto rot = circle_extension_hamiltonian({[alpha](double t, double th) { return th + kTwoPi * alpha * t; }});
  CHECK(rot.fit_error < 1e-7);
  // Near E in area coordinates s, H = -(1/2pi) s xi with xi = 2 pi alpha.
  const double r = radius_from_area_coordinate(0.01);
  CHECK(rot.hamiltonian.value({0.5, 0.0, r, 1.1}) == doctest::Approx(-0.01 * alpha).epsilon(1e-9));
  AnnulusIsotopy iso{rot.hamiltonian, 0.0, Annulus{}, 512};
  for (int k = 0; k < 8; ++k) {
    const double th = kTwoPi * k / 8;
    const auto q = iso.map({1.0, th, false}, 1.0);
    CHECK(std::abs(q.r - 1.0) < 1e-12);
    CHECK(std::abs(std::remainder(q.theta - th - kTwoPi * alpha, kTwoPi)) < 1e-9);
  }

  const auto none = circle_extension_hamiltonian({[](double, double th) { return th; }});
  CHECK(std::abs(none.hamiltonian.value({0.4, 0.0, 1.05, 2.0})) < 1e-12);

  auto f = [](double t, double th) { return th + 0.3 * t * std::sin(th) + 0.5 * t * t; };
  const auto ext = circle_extension_hamiltonian({f});
  AnnulusIsotopy iso2{ext.hamiltonian, 0.0, Annulus{}, 1024};
  double worst = 0.0;
  for (int k = 0; k < 32; ++k) {
    const double th = kTwoPi * k / 32;
    for (double t : {0.5, 1.0}) {
      const auto q = iso2.map({1.0, th, false}, t);
      worst = std::max(worst, std::abs(std::remainder(q.theta - f(t, th), kTwoPi)));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("Alexander family") {
  const CylinderMap id = [](double s, double th) { return std::array<double, 2>{s, th}; };
  CHECK(cap_distance(alexander_family(id, 0.3), id, 0.2) == 0.0);
  // A shear fixing E pointwise: (s, theta) -> (s, theta + s + s^2).
  const CylinderMap shear = [](double s, double th) { return std::array<double, 2>{s, th + s + s * s}; };
  CHECK(cap_distance(alexander_family(shear, 1.0), shear, 0.2) == 0.0);
  double prev = INFINITY;
  std::vector<double> dist;
  for (double s : {0.8, 0.4, 0.2, 0.1, 0.05}) {
    const double d = cap_distance(alexander_family(shear, s), id, 0.2);
    CHECK(d < prev);
    prev = d;
    dist.push_back(d);
  }
  // O(s): halving s roughly halves the distance.
  CHECK(dist[3] / dist[4] == doctest::Approx(2.0).epsilon(0.05));
  const CylinderMap moves_e = [](double s, double th) { return std::array<double, 2>{s + 0.01, th}; };
  CHECK_THROWS_AS(alexander_family(moves_e, 0.5), PreconditionError);
}
