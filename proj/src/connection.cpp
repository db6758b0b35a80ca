#include "hforge/connection.hpp"

#include <algorithm>
#include <cmath>

#include "hforge/inflation.hpp"
#include "hforge/numerics.hpp"
#include "hforge/smooth.hpp"

namespace hforge {

namespace {

using State = Vec<2>;

State to_state(const FiberPoint& p) { return {p.r, p.theta}; }

FiberPoint from_state(const State& s) { return FiberPoint::polar(std::max(s[0], 0.0), s[1]); }

State integrate_latitude_piece(const StructuredForm& form, double y, double a, double b, int steps, State s) {
  auto rhs = [&](double x, const State& w) -> State {
    const auto [dr, dth] = form.fiber_velocity(x, y, w[0], w[1]);
    return {dr, dth};
  };
  return rk4_fixed<2>(s, a, b, steps, rhs);
}

// Moving sub-intervals of [lo, hi] in the direction of travel.
std::vector<std::pair<double, double>> pieces_between(const StructuredForm& form, double y, double x0, double x1) {
  const double lo = std::min(x0, x1);
  const double hi = std::max(x0, x1);
  std::vector<std::pair<double, double>> out;
  for (const auto& [a, b] : form.moving_intervals(y)) {
    const double s = std::max(a, lo);
    const double e = std::min(b, hi);
    if (e > s) out.emplace_back(s, e);
  }
  if (x1 < x0) {
    std::reverse(out.begin(), out.end());
    for (auto& iv : out) std::swap(iv.first, iv.second);
  }
  return out;
}

State run_latitude(const StructuredForm& form, double y, double x0, double x1, State s, int per_unit, int fixed) {
  for (const auto& [a, b] : pieces_between(form, y, x0, x1)) {
    const int n = fixed > 0 ? fixed : std::max(1, static_cast<int>(std::ceil(std::abs(b - a) * per_unit)));
    s = integrate_latitude_piece(form, y, a, b, n, s);
  }
  return s;
}

template <class Run>
TransportResult adaptive(const FiberPoint& start, const TransportOptions& options, Run&& run) {
  if (start.at_infinity) return {start, 0, 0.0};
  if (options.fixed_steps > 0 || !options.adaptive) {
    return {from_state(run(options.steps_per_unit)), options.steps_per_unit, 0.0};
  }
  int n = options.steps_per_unit;
  State coarse = run(n);
  double est = 0.0;
  for (int k = 0; k <= options.max_refinements; ++k) {
    const State fine = run(2 * n);
    est = marker_distance(from_state(coarse), from_state(fine));
    if (est < options.tol) return {from_state(fine), 2 * n, est};
    coarse = fine;
    n *= 2;
  }
  throw ConvergenceError("transport: endpoint change " + std::to_string(est) + " still above tolerance " +
                         std::to_string(options.tol) + " at " + std::to_string(n) + " steps per unit");
}

}  // namespace

double pairing(const Matrix4& m, const TangentVector& u, const TangentVector& v) {
  const auto a = u.as_array();
  const auto b = v.as_array();
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) s += a[i] * m[i][j] * b[j];
  }
  return s;
}

TangentVector horizontal_lift(const StructuredForm& form, const ChartPoint& p, double vx, double vy) {
  const auto [dr, dth] = form.fiber_velocity(p.x, p.y, p.r, p.theta);
  return {vx, vy, vx * dr, vx * dth};
}

TangentVector horizontal_lift_generic(const Form2Patch& form, const ChartPoint& p, double vx, double vy) {
  const Matrix4 m = to_matrix(form(p));
  // Omega(h, e_k) = 0 for k = 2, 3: sum_j v_j M[j][k] = -(vx M[0][k] + vy M[1][k]).
  const double a00 = m[2][2];
  const double a01 = m[3][2];
  const double a10 = m[2][3];
  const double a11 = m[3][3];
  const double r0 = -(vx * m[0][2] + vy * m[1][2]);
  const double r1 = -(vx * m[0][3] + vy * m[1][3]);
  const double det = a00 * a11 - a01 * a10;
  if (std::abs(det) < 1e-300) throw PreconditionError("horizontal_lift: form is degenerate on the fiber");
  return {vx, vy, (r0 * a11 - a01 * r1) / det, (a00 * r1 - a10 * r0) / det};
}

double lift_residual(const Form2Patch& form, const ChartPoint& p, const TangentVector& lift,
                     const std::vector<std::array<double, 2>>& verticals) {
  const Matrix4 m = to_matrix(form(p));
  double worst = 0.0;
  for (const auto& v : verticals) {
    worst = std::max(worst, std::abs(pairing(m, lift, {0.0, 0.0, v[0], v[1]})));
  }
  return worst;
}

double marker_distance(const FiberPoint& a, const FiberPoint& b) {
  if (a.at_infinity || b.at_infinity) return (a.at_infinity && b.at_infinity) ? 0.0 : INFINITY;
  const double scale = a.r > 0.0 ? a.r : 1.0;
  return std::max(std::abs(a.r - b.r) / scale, angle_distance(a.theta, b.theta));
}

TransportResult transport_latitude(const StructuredForm& form, double y, double x0, double x1,
                                   const FiberPoint& start, const TransportOptions& options) {
  if (std::abs(y) >= kHalfPi) throw PreconditionError("transport_latitude: latitude at a pole");
  if (pieces_between(form, y, x0, x1).empty() || start.at_infinity) return {start, 0, 0.0};
  return adaptive(start, options, [&](int n) {
    return run_latitude(form, y, x0, x1, to_state(start), n, options.fixed_steps);
  });
}

std::vector<FiberPoint> latitude_sweep(const StructuredForm& form, double y, const FiberPoint& start, int nodes,
                                       int sub) {
  std::vector<FiberPoint> out(static_cast<std::size_t>(nodes) + 1);
  out[0] = start;
  const auto moving = form.moving_intervals(y);
  State s = to_state(start);
  for (int k = 0; k < nodes; ++k) {
    const double a = static_cast<double>(k) / nodes;
    const double b = static_cast<double>(k + 1) / nodes;
    const bool active = !start.at_infinity && std::any_of(moving.begin(), moving.end(), [&](const auto& iv) {
      return iv.first < b && iv.second > a;
    });
    if (active) s = integrate_latitude_piece(form, y, a, b, sub, s);
    out[static_cast<std::size_t>(k) + 1] = start.at_infinity ? start : from_state(s);
  }
  return out;
}

BasePath BasePath::from_position(std::function<std::array<double, 2>(double)> position) {
  BasePath p;
  p.eval = [pos = std::move(position)](double tau) {
    const double h = 1e-6;
    const auto c = pos(tau);
    const auto a = pos(tau + h);
    const auto b = pos(tau - h);
    return std::array<double, 4>{c[0], c[1], (a[0] - b[0]) / (2 * h), (a[1] - b[1]) / (2 * h)};
  };
  return p;
}

BasePath BasePath::latitude(double y, double x0, double x1) {
  BasePath p;
  p.eval = [=](double tau) { return std::array<double, 4>{x0 + tau * (x1 - x0), y, x1 - x0, 0.0}; };
  return p;
}

TransportResult parallel_transport(const StructuredForm& form, const BasePath& path, const FiberPoint& start,
                                   const TransportOptions& options) {
  auto rhs = [&](double tau, const State& w) -> State {
    const auto q = path.eval(tau);
    if (std::abs(q[1]) >= kHalfPi) throw PreconditionError("parallel_transport: path reaches a pole");
    if (q[2] == 0.0) return {0.0, 0.0};
    double x = q[0] - std::floor(q[0]);
    const auto [dr, dth] = form.fiber_velocity(x, q[1], w[0], w[1]);
    return {q[2] * dr, q[2] * dth};
  };
  return adaptive(start, options, [&](int n) {
    const int steps = options.fixed_steps > 0 ? options.fixed_steps : n;
    return rk4_fixed<2>(to_state(start), 0.0, 1.0, steps, rhs);
  });
}

std::vector<FiberPoint> annulus_markers(const Annulus& annulus, int n) {
  std::vector<FiberPoint> out;
  out.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double r = annulus.a * std::pow(annulus.b / annulus.a, (i + 0.5) / n);
    for (int j = 0; j < n; ++j) out.push_back(FiberPoint::polar(r, kTwoPi * (j + 0.5) / n));
  }
  return out;
}

Holonomy holonomy_latitude(const StructuredForm& form, double lambda, const TransportOptions& options,
                           int markers) {
  if (std::abs(lambda) >= kHalfPi) throw PreconditionError("holonomy_latitude: need |lambda| < pi/2");
  Holonomy h;
  h.lambda = lambda;
  h.markers = annulus_markers(form.annulus, markers);
  h.images = h.markers;
  if (form.moving_intervals(lambda).empty()) return h;

  int per_unit = options.steps_per_unit;
  if (options.adaptive && options.fixed_steps <= 0) {
    const std::size_t stride = std::max<std::size_t>(1, h.markers.size() / 16);
    for (std::size_t i = 0; i < h.markers.size(); i += stride) {
      per_unit = std::max(per_unit, transport_latitude(form, lambda, 0.0, 1.0, h.markers[i], options).steps_per_unit);
    }
  }
  h.steps_per_unit = per_unit;
  for (std::size_t i = 0; i < h.markers.size(); ++i) {
    h.images[i] = from_state(run_latitude(form, lambda, 0.0, 1.0, to_state(h.markers[i]), per_unit, options.fixed_steps));
    const double d = marker_distance(h.markers[i], h.images[i]);
    if (d > h.residual) {
      h.residual = d;
      h.worst_index = i;
    }
  }
  return h;
}

std::vector<double> scan_latitudes() {
  std::vector<double> out;
  // Mirrored so the grid is exactly symmetric and contains 0.
  for (int k = 0; k < 16; ++k) {
    const double v = kHalfPi * std::cos((2.0 * k + 1.0) * kPi / 66.0);
    out.push_back(v);
    out.push_back(-v);
  }
  out.push_back(0.0);
  for (double v : {kQuarterPi, -kQuarterPi, kPi / 3.0, -kPi / 3.0}) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Holonomy> holonomy_scan(const StructuredForm& form, const std::vector<double>& lambdas,
                                    const TransportOptions& options, int markers) {
  std::vector<Holonomy> out(lambdas.size());
  parallel_for(lambdas.size(), [&](std::size_t i) { out[i] = holonomy_latitude(form, lambdas[i], options, markers); });
  return out;
}

double lagrangian_residual(const StructuredForm& form, int grid) {
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const ChartPoint p{static_cast<double>(i) / grid, 0.0, 1.0, kTwoPi * j / grid};
      const Matrix4 m = to_matrix(form.coefficients(p));
      const TangentVector lift = horizontal_lift(form, p, 1.0, 0.0);
      const TangentVector u{1.0, 0.0, 0.0, lift.dtheta};
      worst = std::max(worst, std::abs(pairing(m, u, {0.0, 0.0, 0.0, 1.0})));
    }
  }
  return worst;
}

double lagrangian_residual(const Form2Patch& form, int grid) {
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const ChartPoint p{static_cast<double>(i) / grid, 0.0, 1.0, kTwoPi * j / grid};
      const Matrix4 m = to_matrix(form(p));
      const TangentVector lift = horizontal_lift_generic(form, p, 1.0, 0.0);
      const TangentVector u{1.0, 0.0, 0.0, lift.dtheta};
      worst = std::max(worst, std::abs(pairing(m, u, {0.0, 0.0, 0.0, 1.0})));
    }
  }
  return worst;
}

std::array<double, 4> cohomology_generators(const StructuredForm& form, int per_unit) {
  const double s = 1.0 / (form.c + 1.0);
  // Base classes at e: the dx^dy coefficient without the inflation bump, plus the bump
  // integrated separately (it is a product of one-variable plateaus).
  AreaForm base{[&form](double x, double y) { return form.f(x, y) - form.phi_jet({x, y, 1.0, 0.0}).dy; },
                ChartKind::Base};
  double sphere = integrate_area(base, ChartRect::base_sphere(), per_unit).value;
  double lower = integrate_area(base, ChartRect::base_lower_hemisphere(), per_unit).value;
  if (form.c != 0.0 && form.bumps) {
    const auto mass = base_bump_mass(*form.bumps);
    sphere += form.c * mass[0] / form.bumps->a;
    lower += form.c * mass[1] / form.bumps->a;
  }
  AreaForm fiber{[&form](double r, double theta) { return form.coefficients({0.0, 0.0, r, theta})[5]; },
                 ChartKind::Fiber};
  const double fiber_sphere = integrate_area(fiber, ChartRect::fiber_sphere(), per_unit).value;
  const double fiber_disk = integrate_area(fiber, ChartRect::fiber_disk(1.0), per_unit).value;
  return {s * sphere, fiber_sphere, s * lower, fiber_disk};
}

MarginGrid MarginGrid::from_size(int n) {
  MarginGrid g;
  g.nx = std::max(n, 4);
  g.ny = std::max(n / 2, 4);
  g.nr = std::max(n / 4, 4);
  g.ntheta = std::max(n / 8, 2);
  return g;
}

MarginSummary symplecticity_margin(const StructuredForm& form, const MarginGrid& grid) {
  std::vector<double> radii;
  for (int k = 0; k < grid.nr; ++k) {
    radii.push_back(form.annulus.a * std::pow(form.annulus.b / form.annulus.a, k / (grid.nr - 1.0)));
  }
  for (double r : {0.1, 0.15, 7.0, 12.0}) radii.push_back(r);

  struct Column {
    double x;
    double y0;
    double y1;
    int ny;
  };
  std::vector<Column> columns;
  for (int i = 0; i < grid.nx; ++i) columns.push_back({(i + 0.5) / grid.nx, -kHalfPi, kHalfPi, grid.ny});
  if (grid.focus.x1 > grid.focus.x0) {
    for (int i = 0; i <= grid.nx; ++i) {
      columns.push_back({grid.focus.x0 + (grid.focus.x1 - grid.focus.x0) * i / grid.nx, grid.focus.y0, grid.focus.y1,
                         -grid.ny});
    }
  }

  std::vector<MarginSummary> partial(columns.size());
  parallel_for(columns.size(), [&](std::size_t ci) {
    const Column& col = columns[ci];
    MarginSummary m;
    m.min_margin = INFINITY;
    m.min_pfaffian = INFINITY;
    const int ny = std::abs(col.ny);
    for (int j = 0; j < ny; ++j) {
      // Open grid on the full chart, closed grid on the focus box.
      const double y = col.ny > 0 ? col.y0 + (col.y1 - col.y0) * (j + 0.5) / ny
                                  : col.y0 + (col.y1 - col.y0) * j / std::max(ny - 1, 1);
      for (double r : radii) {
        for (int k = 0; k < grid.ntheta; ++k) {
          const ChartPoint p{col.x, y, r, kTwoPi * k / grid.ntheta};
          const double margin = form.factored_margin(p);
          const double pf = 2.0 * pfaffian(to_matrix(form.coefficients(p)));
          const double normalized = pf / form.split_baseline(p);
          ++m.points;
          m.max_mismatch = std::max(m.max_mismatch, std::abs(normalized - margin));
          if ((pf > 0.0) != (margin > 0.0)) ++m.sign_disagreements;
          m.min_pfaffian = std::min(m.min_pfaffian, pf);
          if (margin < m.min_margin) {
            m.min_margin = margin;
            m.location = p;
          }
        }
      }
    }
    partial[ci] = m;
  });

  MarginSummary out;
  out.min_margin = INFINITY;
  out.min_pfaffian = INFINITY;
  for (const auto& m : partial) {
    out.points += m.points;
    out.sign_disagreements += m.sign_disagreements;
    out.max_mismatch = std::max(out.max_mismatch, m.max_mismatch);
    out.min_pfaffian = std::min(out.min_pfaffian, m.min_pfaffian);
    if (m.min_margin < out.min_margin) {
      out.min_margin = m.min_margin;
      out.location = m.location;
    }
  }
  return out;
}

namespace {

double wrap_dx(double dx) { return dx - std::round(dx); }

double segment_distance(const std::array<double, 2>& p0, const std::array<double, 2>& p1,
                        const std::array<double, 2>& q0, const std::array<double, 2>& q1) {
  auto point_segment = [](const std::array<double, 2>& p, const std::array<double, 2>& a,
                          const std::array<double, 2>& b) {
    const double ux = b[0] - a[0];
    const double uy = b[1] - a[1];
    const double len2 = ux * ux + uy * uy;
    double t = len2 > 0.0 ? ((p[0] - a[0]) * ux + (p[1] - a[1]) * uy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p[0] - a[0] - t * ux, p[1] - a[1] - t * uy);
  };
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  const double d1 = cross(p0, p1, q0);
  const double d2 = cross(p0, p1, q1);
  const double d3 = cross(q0, q1, p0);
  const double d4 = cross(q0, q1, p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return 0.0;
  return std::min({point_segment(p0, q0, q1), point_segment(p1, q0, q1), point_segment(q0, p0, p1),
                   point_segment(q1, p0, p1)});
}

}  // namespace

TorusReport fibered_torus_check(const StructuredForm& form, const TorusSample& torus,
                                const TransportOptions& options) {
  TorusReport rep;
  const int n = torus.curve_samples;
  std::vector<std::array<double, 2>> pts(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) pts[static_cast<std::size_t>(k)] = torus.curve(static_cast<double>(k) / n);
  // Segment k joins pts[k] to pts[k+1] with the x step unwrapped; x is periodic.
  auto segment = [&](int k) {
    const auto& a = pts[static_cast<std::size_t>(k)];
    const auto& b = pts[static_cast<std::size_t>((k + 1) % n)];
    return std::array<std::array<double, 2>, 2>{a, std::array<double, 2>{a[0] + wrap_dx(b[0] - a[0]), b[1]}};
  };
  rep.min_separation = INFINITY;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const auto si = segment(i);
      auto sj = segment(j);
      double best = INFINITY;
      for (int shift = -1; shift <= 1; ++shift) {
        const std::array<double, 2> q0{sj[0][0] + shift, sj[0][1]};
        const std::array<double, 2> q1{sj[1][0] + shift, sj[1][1]};
        best = std::min(best, segment_distance(si[0], si[1], q0, q1));
      }
      rep.min_separation = std::min(rep.min_separation, best);
    }
  }
  rep.embedded = rep.min_separation > 0.0;

  std::vector<FiberPoint> markers;
  const double r0 = torus.radius(0.0);
  for (int j = 0; j < torus.circle_markers; ++j) markers.push_back(FiberPoint::polar(r0, kTwoPi * j / torus.circle_markers));
  for (int k = 0; k < torus.checkpoints; ++k) {
    const double t0 = static_cast<double>(k) / torus.checkpoints;
    const double t1 = static_cast<double>(k + 1) / torus.checkpoints;
    const BasePath piece = BasePath::from_position([&torus, t0, t1](double s) {
      const auto a = torus.curve(t0);
      auto p = torus.curve(t0 + s * (t1 - t0));
      p[0] = a[0] + wrap_dx(p[0] - a[0]);
      return p;
    });
    const double target = torus.radius(t1);
    for (auto& m : markers) {
      m = parallel_transport(form, piece, m, options).end;
      rep.hausdorff = std::max(rep.hausdorff, std::abs(m.r - target));
    }
  }
  return rep;
}

TorusSample clifford_torus_sample() {
  TorusSample t;
  t.curve = [](double tau) { return std::array<double, 2>{tau, 0.0}; };
  return t;
}

}  // namespace hforge
