#include "hforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hforge/annulus_maps.hpp"
#include "hforge/numerics.hpp"
#include "hforge/smooth.hpp"

namespace hforge {

namespace {

std::string label_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string describe(const ChartPoint& p) {
  std::ostringstream os;
  os.precision(6);
  os << "x=" << p.x << " y=" << p.y << " r=" << p.r << " theta=" << p.theta;
  return os.str();
}

double wrapped(double d) { return std::remainder(d, kTwoPi); }

double dot4(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

std::array<double, 4> apply(const Matrix4& m, const std::array<double, 4>& v) {
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) out[i] = dot4(m[i], v);
  return out;
}

double form_on(const Matrix4& m, const std::array<double, 4>& u, const std::array<double, 4>& v) {
  return dot4(u, apply(m, v));
}

Matrix4 blend(const Matrix4& a, const Matrix4& b, double t) {
  Matrix4 out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out[i][j] = (1.0 - t) * a[i][j] + t * b[i][j];
  }
  return out;
}

// Gaussian elimination with partial pivoting; false when singular.
bool solve4(Matrix4 a, std::array<double, 4> b, std::array<double, 4>& x) {
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-300) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < 4; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (int c = 3; c >= 0; --c) {
    double s = b[c];
    for (int k = c + 1; k < 4; ++k) s -= a[c][k] * x[k];
    x[c] = s / a[c][c];
  }
  return true;
}

const std::array<std::string, 4> kGeneratorNames{"gen_base_sphere", "gen_fiber_sphere", "gen_base_lower",
                                                 "gen_fiber_disk"};
const std::array<double, 4> kGeneratorTargets{1.0, 1.0, 0.5, 0.5};

void add_generator_checks(VerificationReport& rep, const std::string& stage, const std::array<double, 4>& g,
                          double tol) {
  for (std::size_t i = 0; i < 4; ++i) {
    rep.add(stage, kGeneratorNames[i], std::abs(g[i] - kGeneratorTargets[i]), Comparison::Less, tol,
            "value=" + format_double(g[i]));
  }
  rep.add(stage, "monotonicity_defect", monotonicity_defect(g), Comparison::Less, tol);
}

}  // namespace

HamiltonianFamily holonomy_generator(const HamiltonianFamily& initial) {
  const double len = initial.support.x1 - initial.support.x0;
  const double x1 = initial.support.x1;
  auto pull = [len, x1](const Field& k) {
    if (k.is_zero()) return Field();
    return Field([k, len, x1](const DualPoint& p) {
      return Dual(-len) * k(DualPoint{Dual(x1) - Dual(len) * p[0], p[1], p[2], p[3]});
    });
  };
  HamiltonianFamily g;
  g.varying = pull(initial.varying);
  g.offset = pull(initial.offset);
  g.support = {0.0, 1.0, initial.support.y0, initial.support.y1};
  return g;
}

HamiltonianFamily globalize(const HamiltonianFamily& local, double u0, double u1) {
  const double len = u1 - u0;
  auto push = [u0, len](const Field& h) {
    if (h.is_zero()) return Field();
    return Field([h, u0, len](const DualPoint& p) {
      const Dual s = (p[0] - Dual(u0)) / Dual(len);
      if (s.v <= 0.0 || s.v >= 1.0) return Dual(0.0);
      return h(DualPoint{s, p[1], p[2], p[3]}) / Dual(len);
    });
  };
  HamiltonianFamily out;
  out.varying = push(local.varying);
  out.offset = push(local.offset);
  out.support = {u0 + len * local.support.x0, u0 + len * local.support.x1, local.support.y0, local.support.y1};
  return out;
}

Correction build_correction(const HamiltonianFamily& initial, const CorrectionGeometry& g, bool normalize) {
  if (!(g.u0 > 0.0 && g.u0 < g.u1 && g.u1 < 1.0)) {
    throw PreconditionError("build_correction: need 0 < u0 < u1 < 1");
  }
  Correction c;
  if (initial.varying.is_zero()) return c;
  const SupportBox& k = initial.support;
  if (!(k.x0 > 0.0 && k.x1 < 1.0 && k.x0 < k.x1)) {
    throw PreconditionError("build_correction: the initial support must lie in 0 < x < 1");
  }
  if (!(g.u1 < k.x0 || g.u0 > k.x1)) {
    throw PreconditionError("build_correction: correction interval overlaps the initial support");
  }
  if (k.y0 < -kQuarterPi || k.y1 > kQuarterPi) {
    throw PreconditionError("build_correction: initial support must satisfy |y| <= pi/4");
  }
  c.generator = holonomy_generator(initial);
  c.contraction = flow_contraction(c.generator, g.eps);
  c.local = normalize ? normalize_on_equator(c.contraction) : c.contraction;
  c.global = globalize(c.local, g.u0, g.u1);
  return c;
}

double monotonicity_defect(const std::array<double, 4>& g) {
  return std::max(std::abs(g[2] - 0.5), std::abs(g[3] - 0.5));
}

VerificationReport verify_stage(const StructuredForm& form, const std::string& stage, const PipelineOptions& options) {
  VerificationReport rep;
  const MarginSummary m = symplecticity_margin(form, options.grid);
  rep.add(stage, "min_margin", m.min_margin, Comparison::Greater, 0.0, describe(m.location));
  rep.add(stage, "min_pfaffian", m.min_pfaffian, Comparison::Greater, 0.0);
  rep.add(stage, "pfaffian_sign_disagreements", static_cast<double>(m.sign_disagreements), Comparison::LessEqual, 0.0);
  rep.add(stage, "factored_mismatch", m.max_mismatch, Comparison::Less, 1e-8);

  add_generator_checks(rep, stage, cohomology_generators(form, options.generator_per_unit), options.generator_tol);
  rep.add(stage, "lagrangian_residual", lagrangian_residual(form, options.lagrangian_grid), Comparison::Less,
          options.lagrangian_tol);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  std::uniform_real_distribution<double> uy(-1.2, 1.2);
  std::uniform_real_distribution<double> ul(std::log(0.2), std::log(5.0));
  std::uniform_real_distribution<double> ut(0.0, kTwoPi);
  const Form2Patch patch = form.patch();
  double closed = 0.0;
  ChartPoint where;
  for (int i = 0; i < 24; ++i) {
    const ChartPoint p{ux(rng), uy(rng), std::exp(ul(rng)), ut(rng)};
    const double v = closedness_residual(patch, p, 1e-3);
    if (v > closed) {
      closed = v;
      where = p;
    }
  }
  rep.add(stage, "closedness_residual", closed, Comparison::Less, options.closedness_tol, describe(where));

  double far = 0.0;
  for (double lam : {kPi / 3.0, -kPi / 3.0}) {
    far = std::max(far, holonomy_latitude(form, lam, options.transport, options.markers).residual);
  }
  rep.add(stage, "holonomy_pi_over_3", far, Comparison::Less, options.far_holonomy_tol);
  return rep;
}

InflationGeometry inflation_geometry(const PipelineOptions& options, const Annulus& annulus) {
  InflationGeometry geo = options.inflation;
  geo.u0 = options.correction.u0;
  geo.u1 = options.correction.u1;
  geo.eps = options.correction.eps;
  geo.annulus = annulus;
  return geo;
}

HomotopyTrace kill_latitude_holonomy(const StructuredForm& form, const PipelineOptions& options) {
  HomotopyTrace trace;
  trace.correction = build_correction(form.initial, options.correction);

  trace.bumps = build_bumps(inflation_geometry(options, form.annulus));
  trace.threshold = threshold_constant(trace.correction.global, *trace.bumps, form.annulus);
  const double c = options.c_override >= 0.0 ? options.c_override : trace.threshold.c;

  auto push = [&](const std::string& label, const StructuredForm& f) {
    trace.stages.push_back({label, f, verify_stage(f, label, options)});
  };
  push("initial", form);
  push("inflated_c_half", inflate(form, trace.bumps, 0.5 * c));
  const StructuredForm inflated = inflate(form, trace.bumps, c);
  push("inflated_c_full", inflated);
  for (double t : {0.25, 0.5, 0.75, 1.0}) {
    push("corrected_t" + label_number(t), inflated.with_correction(trace.correction.global, t));
  }

  Stage& last = trace.stages.back();
  trace.endpoint_holonomy = holonomy_scan(last.form, scan_latitudes(), options.transport, options.markers);
  double worst = 0.0;
  double far = 0.0;
  double worst_lambda = 0.0;
  for (const auto& h : trace.endpoint_holonomy) {
    if (h.residual > worst) {
      worst = h.residual;
      worst_lambda = h.lambda;
    }
    if (std::abs(h.lambda) >= kQuarterPi - 1e-12) far = std::max(far, h.residual);
  }
  last.report.add(last.label, "holonomy_residual", worst, Comparison::Less, options.holonomy_tol,
                  "lambda=" + format_double(worst_lambda));
  last.report.add(last.label, "holonomy_residual_far", far, Comparison::Less, options.far_holonomy_tol);
  last.report.add(last.label, "threshold_c", c, Comparison::Info, 0.0, describe(trace.threshold.argmax));
  return trace;
}

InterpolationCheck linear_interpolation_check(const Matrix4& omega, const Matrix4& omega_prime,
                                              const std::array<std::array<double, 4>, 3>& hyperplane, int t_points,
                                              double tol) {
  InterpolationCheck out;
  double scale = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) scale = std::max({scale, std::abs(omega[i][j]), std::abs(omega_prime[i][j])});
  }
  const double p0 = pfaffian(omega);
  const double p1 = pfaffian(omega_prime);
  if (std::abs(p0) <= tol * scale * scale || std::abs(p1) <= tol * scale * scale) {
    out.diagnostic = "degenerate form";
    return out;
  }
  if ((p0 > 0.0) != (p1 > 0.0)) {
    out.diagnostic = "opposite orientations";
    return out;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      out.hyperplane_mismatch =
          std::max(out.hyperplane_mismatch, std::abs(form_on(omega, hyperplane[i], hyperplane[j]) -
                                                     form_on(omega_prime, hyperplane[i], hyperplane[j])));
    }
  }
  if (out.hyperplane_mismatch > tol * std::max(1.0, scale)) {
    out.diagnostic = "forms disagree on the hyperplane by " + format_double(out.hyperplane_mismatch);
    return out;
  }
  const double orient = p0 > 0.0 ? 1.0 : -1.0;

  // Adapted basis: e2 spans the kernel of omega on the hyperplane, omega(e1, f1) = 1.
  const double a01 = form_on(omega, hyperplane[0], hyperplane[1]);
  const double a02 = form_on(omega, hyperplane[0], hyperplane[2]);
  const double a12 = form_on(omega, hyperplane[1], hyperplane[2]);
  std::array<double, 4> e2{};
  for (int k = 0; k < 4; ++k) e2[k] = a12 * hyperplane[0][k] - a02 * hyperplane[1][k] + a01 * hyperplane[2][k];
  int iu = 0;
  int iv = 1;
  double best = std::abs(a01);
  if (std::abs(a02) > best) {
    iu = 0;
    iv = 2;
    best = std::abs(a02);
  }
  if (std::abs(a12) > best) {
    iu = 1;
    iv = 2;
  }
  const std::array<double, 4> e1 = hyperplane[iu];
  std::array<double, 4> f1 = hyperplane[iv];
  const double w = form_on(omega, e1, f1);
  for (double& v : f1) v /= w;

  Matrix4 sys{};
  // Rows u^T W' so that row . f = omega'(u, f).
  for (int k = 0; k < 4; ++k) {
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < 4; ++i) {
      s0 += e1[i] * omega_prime[i][k];
      s1 += f1[i] * omega_prime[i][k];
      s2 += e2[i] * omega_prime[i][k];
    }
    sys[0][k] = s0;
    sys[1][k] = s1;
    sys[2][k] = s2;
    sys[3][k] = e2[k];
  }
  std::array<double, 4> f2{};
  if (!solve4(sys, {0.0, 0.0, 1.0, 0.0}, f2)) {
    out.diagnostic = "no transverse vector f2'";
    return out;
  }
  out.accepted = true;

  Matrix4 basis{};
  for (int k = 0; k < 4; ++k) {
    basis[k][0] = e1[k];
    basis[k][1] = f1[k];
    basis[k][2] = e2[k];
    basis[k][3] = f2[k];
  }
  const double det = determinant(basis);
  const double w11 = form_on(omega, e1, f1);
  const double w22 = form_on(omega, e2, f2);
  const double v11 = form_on(omega_prime, e1, f1);
  const double v22 = form_on(omega_prime, e2, f2);

  out.min_pfaffian = INFINITY;
  out.min_closed_form = INFINITY;
  for (int k = 0; k < t_points; ++k) {
    const double t = t_points == 1 ? 0.0 : static_cast<double>(k) / (t_points - 1);
    out.min_pfaffian = std::min(out.min_pfaffian, orient * pfaffian(blend(omega, omega_prime, t)));
    const double q = 2.0 * (1.0 - t) * (1.0 - t) * w11 * w22 + 2.0 * t * t * v11 * v22 +
                     2.0 * t * (1.0 - t) * (w11 * v22 + w22 * v11);
    out.min_closed_form = std::min(out.min_closed_form, orient * q / (2.0 * det));
  }
  out.positive = out.min_pfaffian > 0.0 && out.min_closed_form > 0.0;
  return out;
}

FiberMoser::FiberMoser(std::shared_ptr<const BumpPair> bumps, double c) : bumps_(std::move(bumps)), c_(c) {
  if (c_ < 0.0) throw PreconditionError("FiberMoser: need c >= 0");
}

namespace {

// sigma_std-weighted cap mass of f_sigma over [lo, hi] intersected with the cap. A fully covered
// cap carries exactly 1/2 by normalization; partial caps use the normalization's panel counts.
double cap_mass(const BumpPair& b, double lo, double hi) {
  double total = 0.0;
  const double s0 = std::max(lo, b.s_lo);
  const double s1 = std::min(hi, b.s_hi);
  if (s0 == b.s_lo && s1 == b.s_hi) {
    total += 0.5;
  } else if (s1 > s0) {
    total += kTwoPi * b.amp_s *
             integrate_1d([&](double r) { return smooth_bump(r, b.s_lo, b.s_hi) * sigma_std_density(r); }, s0, s1, 64);
  }
  const double n0 = std::max(lo, b.n_lo);
  const double n1 = std::min(hi, b.n_hi);
  if (n0 == b.n_lo && n1 == b.n_hi) {
    total += 0.5;
  } else if (n1 > n0) {
    total += kTwoPi * b.amp_n *
             integrate_1d([&](double r) { return smooth_bump(1.0 / r, 1.0 / b.n_hi, 1.0 / b.n_lo) * sigma_std_density(r); },
                          n0, n1, 256);
  }
  return total;
}

}  // namespace

double FiberMoser::area(double rho) const {
  if (!bumps_ || c_ == 0.0) return std_disk_area(rho);
  return (std_disk_area(rho) + c_ * cap_mass(*bumps_, 0.0, rho)) / (c_ + 1.0);
}

double FiberMoser::operator()(double r) const {
  if (!bumps_ || c_ == 0.0 || r == 0.0) return r;
  const BumpPair& b = *bumps_;
  // Inside r < 1 match disk areas; outside match complements, which stay well conditioned
  // as r grows.
  const bool inner = r <= 1.0;
  auto residual = [&](double rho) {
    if (inner) return (std_disk_area(rho) + c_ * cap_mass(b, 0.0, rho)) / (c_ + 1.0) - std_disk_area(r);
    const double comp = 1.0 / (1.0 + rho * rho);
    const double comp_r = 1.0 / (1.0 + r * r);
    return comp_r - (comp + c_ * cap_mass(b, rho, INFINITY)) / (c_ + 1.0);
  };
  auto slope = [&](double rho) { return kTwoPi * (1.0 + c_ * b.f_sigma(rho)) * sigma_std_density(rho) / (c_ + 1.0); };
  double lo = 0.0;
  double hi = inner ? 1.0 : std::max(2.0 * r, 1.0) * std::sqrt(c_ + 2.0);
  while (residual(hi) < 0.0) hi *= 2.0;
  double rho = std::clamp(r, lo, hi);
  for (int it = 0; it < 100; ++it) {
    const double f = residual(rho);
    if (f > 0.0) {
      hi = rho;
    } else {
      lo = rho;
    }
    const double d = slope(rho);
    double next = d > 0.0 ? rho - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - rho) <= 1e-15 * std::max(1.0, rho)) return next;
    rho = next;
  }
  throw ConvergenceError("FiberMoser: Newton iteration did not converge at r = " + format_double(r));
}

PullbackMap::PullbackMap(StructuredForm form, int fixed_steps, double h)
    : form_(std::move(form)), moser_(form_.bumps, form_.c), h_(h) {
  options_.adaptive = false;
  options_.fixed_steps = fixed_steps;
}

FiberPoint PullbackMap::map(const ChartPoint& p) const {
  const FiberPoint start{moser_(p.r), p.theta, false};
  return transport_latitude(form_, p.y, 0.0, p.x, start, options_).end;
}

Matrix4 PullbackMap::jacobian(const ChartPoint& p) const {
  Matrix4 j{};
  const FiberPoint img = map(p);
  const auto [vr, vt] = form_.fiber_velocity(p.x, p.y, img.r, img.theta);
  j[0][0] = 1.0;
  j[1][1] = 1.0;
  j[2][0] = vr;
  j[3][0] = vt;
  auto column = [&](int col, ChartPoint plus, ChartPoint minus) {
    const FiberPoint a = map(plus);
    const FiberPoint b = map(minus);
    j[2][col] = (a.r - b.r) / (2.0 * h_);
    j[3][col] = wrapped(a.theta - b.theta) / (2.0 * h_);
  };
  column(1, {p.x, p.y + h_, p.r, p.theta}, {p.x, p.y - h_, p.r, p.theta});
  column(2, {p.x, p.y, p.r + h_, p.theta}, {p.x, p.y, p.r - h_, p.theta});
  column(3, {p.x, p.y, p.r, p.theta + h_}, {p.x, p.y, p.r, p.theta - h_});
  return j;
}

Form2Coefficients PullbackMap::pulled_back(const ChartPoint& p) const {
  const FiberPoint img = map(p);
  const Matrix4 m = to_matrix(form_.coefficients({p.x, p.y, img.r, img.theta}));
  return from_matrix(congruence(jacobian(p), m));
}

Form2Patch PullbackMap::patch() const {
  Form2Patch out;
  const PullbackMap self = *this;
  out.coefficients = [self](const ChartPoint& p) { return self.pulled_back(p); };
  return out;
}

double PullbackMap::path_independence(const std::vector<double>& lambdas, int markers, int x_samples) const {
  std::vector<double> worst(lambdas.size(), 0.0);
  const auto pts = annulus_markers(form_.annulus, markers);
  parallel_for(lambdas.size(), [&](std::size_t i) {
    for (int k = 0; k < x_samples; ++k) {
      const double x = (k + 0.5) / x_samples;
      for (const auto& w : pts) {
        const FiberPoint fwd = transport_latitude(form_, lambdas[i], 0.0, x, w, options_).end;
        const FiberPoint bwd = transport_latitude(form_, lambdas[i], 1.0, x, w, options_).end;
        worst[i] = std::max(worst[i], marker_distance(fwd, bwd));
      }
    }
  });
  return worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
}

double PullbackMap::equator_drift(int samples) const {
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double x = (k + 0.5) / samples;
    for (int j = 0; j < samples; ++j) {
      const FiberPoint q = map({x, 0.0, 1.0, kTwoPi * j / samples});
      worst = std::max(worst, std::abs(q.r - 1.0));
    }
  }
  return worst;
}

double PullbackMap::identity_defect(int samples) const {
  double first = 1.0;
  for (const auto& [a, b] : form_.moving_intervals(0.0)) first = std::min(first, a);
  first = std::min({first, form_.initial.support.x0, form_.correction.support.x0});
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double y = -1.2 + 2.4 * k / std::max(1, samples - 1);
    for (int j = 0; j < samples; ++j) {
      const double th = kTwoPi * j / samples;
      const FiberPoint w{1.0 + 0.5 * std::sin(3.0 * j), th, false};
      const FiberPoint near_m0 = transport_latitude(form_, y, 0.0, 0.9 * first, w, options_).end;
      worst = std::max(worst, marker_distance(near_m0, w));
      for (double r : {0.5 * form_.annulus.a, 2.0 * form_.annulus.b}) {
        const FiberPoint cap{r, th, false};
        const FiberPoint moved = transport_latitude(form_, y, 0.0, (j + 0.5) / samples, cap, options_).end;
        worst = std::max(worst, marker_distance(moved, cap));
      }
    }
  }
  return worst;
}

std::array<double, 4> PullbackMap::generators(int per_unit) const {
  const StructuredForm& f = form_;
  const double s = 1.0 / (f.c + 1.0);
  const int nx = std::max(2, per_unit + per_unit % 2);
  // Multiple of 4 so that the lower half also has an even Simpson count.
  int ny = static_cast<int>(std::ceil(kPi * per_unit));
  ny += (4 - ny % 4) % 4;
  const int sub = std::max(1, 4 * options_.fixed_steps / nx);
  // Rows of (F_B - bump - dPhi/dy) at the transported e along each latitude.
  std::vector<double> row(static_cast<std::size_t>(ny) + 1);
  parallel_for(row.size(), [&](std::size_t jy) {
    const double y = -kHalfPi + kPi * static_cast<double>(jy) / ny;
    if (std::abs(y) >= kHalfPi - 1e-12) {
      row[jy] = 0.0;
      return;
    }
    const FiberPoint e{moser_(1.0), 0.0, false};
    const auto pts = latitude_sweep(f, y, e, nx, sub);
    double acc = 0.0;
    for (int ix = 0; ix <= nx; ++ix) {
      const double x = static_cast<double>(ix) / nx;
      const auto& q = pts[static_cast<std::size_t>(ix)];
      const double v = f.f(x, y) - f.phi_jet({x, y, q.r, q.theta}).dy;
      const double w = (ix == 0 || ix == nx) ? 1.0 : (ix % 2 == 1 ? 4.0 : 2.0);
      acc += w * v;
    }
    row[jy] = acc / (3.0 * nx);
  });
  double sphere = 0.0;
  double lower = 0.0;
  const double hy = kPi / ny;
  for (int jy = 0; jy <= ny; ++jy) {
    const double w = (jy == 0 || jy == ny) ? 1.0 : (jy % 2 == 1 ? 4.0 : 2.0);
    sphere += w * row[static_cast<std::size_t>(jy)];
  }
  sphere *= hy / 3.0;
  const int half = ny / 2;
  for (int jy = 0; jy <= half; ++jy) {
    const double w = (jy == 0 || jy == half) ? 1.0 : (jy % 2 == 1 ? 4.0 : 2.0);
    lower += w * row[static_cast<std::size_t>(jy)];
  }
  lower *= hy / 3.0;
  if (f.c != 0.0 && f.bumps) {
    const auto mass = base_bump_mass(*f.bumps);
    sphere += f.c * mass[0] / f.bumps->a;
    lower += f.c * mass[1] / f.bumps->a;
  }
  // Over x = 0 the transport is the identity, so the fiber classes are those of m^* sigma_C.
  // The density is radial: 2 pi int over r, with r -> 1/r on the outer half.
  auto density = [this, s](double r) {
    const double h = 1e-5 * std::max(1.0, r);
    const double lo = std::max(0.0, r - h);
    const double dm = (moser_(r + h) - moser_(lo)) / (r + h - lo);
    return form_.fiber_coefficient(moser_(r)) * dm * s;
  };
  const int panels = std::max(8, per_unit / 4);
  const double fiber_disk = kTwoPi * integrate_1d(density, 0.0, 1.0, panels);
  const double outer = kTwoPi * integrate_1d([&](double u) { return density(1.0 / u) / (u * u); }, 0.0, 1.0, panels);
  const double fiber_sphere = fiber_disk + outer;
  return {s * sphere, fiber_sphere, s * lower, fiber_disk};
}

double hyperplane_residual(const PullbackMap& phi, const StructuredForm& standard, const ChartPoint& p) {
  const auto a = phi.pulled_back(p);
  const auto b = standard.coefficients(p);
  return std::max({std::abs(a[1] - b[1]), std::abs(a[2] - b[2]), std::abs(a[5] - b[5])});
}

namespace {

// phi^* Omega at the x nodes of one latitude line, from seven sweeps.
std::vector<Form2Coefficients> pulled_back_line(const PullbackMap& phi, double y, double r, double theta, int nodes,
                                                int sub, double h) {
  const StructuredForm& f = phi.form();
  auto sweep = [&](double yy, double rr, double tt) {
    return latitude_sweep(f, yy, FiberPoint{phi.moser()(rr), tt, false}, nodes, sub);
  };
  const auto c = sweep(y, r, theta);
  const auto yp = sweep(y + h, r, theta);
  const auto ym = sweep(y - h, r, theta);
  const auto rp = sweep(y, r + h, theta);
  const auto rm = sweep(y, r - h, theta);
  const auto tp = sweep(y, r, theta + h);
  const auto tm = sweep(y, r, theta - h);
  std::vector<Form2Coefficients> out(static_cast<std::size_t>(nodes) + 1);
  for (int k = 0; k <= nodes; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double x = static_cast<double>(k) / nodes;
    Matrix4 j{};
    const auto [vr, vt] = f.fiber_velocity(x, y, c[i].r, c[i].theta);
    j[0][0] = 1.0;
    j[1][1] = 1.0;
    j[2][0] = vr;
    j[3][0] = vt;
    j[2][1] = (yp[i].r - ym[i].r) / (2 * h);
    j[3][1] = wrapped(yp[i].theta - ym[i].theta) / (2 * h);
    j[2][2] = (rp[i].r - rm[i].r) / (2 * h);
    j[3][2] = wrapped(rp[i].theta - rm[i].theta) / (2 * h);
    j[2][3] = (tp[i].r - tm[i].r) / (2 * h);
    j[3][3] = wrapped(tp[i].theta - tm[i].theta) / (2 * h);
    const Matrix4 m = to_matrix(f.coefficients({x, y, c[i].r, c[i].theta}));
    out[i] = from_matrix(congruence(j, m));
  }
  return out;
}

}  // namespace

InterpolationTail interpolate_to_standard(const StructuredForm& endpoint, const PipelineOptions& options, int t_points,
                                          int random_points) {
  InterpolationTail tail;
  const PullbackMap phi(endpoint);
  const StructuredForm standard(endpoint.base_density, endpoint.annulus);

  std::vector<double> lambdas;
  for (double l : scan_latitudes()) {
    if (std::abs(l) < 0.6) lambdas.push_back(l);
  }
  tail.path_independence = phi.path_independence(lambdas, 4, 3);
  if (tail.path_independence > 100.0 * options.holonomy_tol) {
    throw PreconditionError("interpolate_to_standard: latitude holonomy is not trivial (path dependence " +
                            format_double(tail.path_independence) + ")");
  }
  tail.equator_drift = phi.equator_drift(8);
  tail.identity_defect = phi.identity_defect(6);

  // Random points: hyperplane agreement and the interpolation hypotheses.
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  std::uniform_real_distribution<double> uy(-1.3, 1.3);
  std::uniform_real_distribution<double> ul(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> ut(0.0, kTwoPi);
  std::vector<ChartPoint> pts(static_cast<std::size_t>(random_points));
  for (auto& p : pts) p = {ux(rng), uy(rng), std::exp(ul(rng)), ut(rng)};
  std::vector<double> resid(pts.size());
  std::vector<int> rejected(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const auto a = phi.pulled_back(pts[i]);
    const auto b = standard.coefficients(pts[i]);
    resid[i] = std::max({std::abs(a[1] - b[1]), std::abs(a[2] - b[2]), std::abs(a[5] - b[5])});
    const auto chk = linear_interpolation_check(to_matrix(a), to_matrix(b),
                                                {{{1, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}}, t_points, 1e-6);
    rejected[i] = (chk.accepted && chk.positive) ? 0 : 1;
  });
  ChartPoint worst_point;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (resid[i] > tail.hyperplane_residual) {
      tail.hyperplane_residual = resid[i];
      worst_point = pts[i];
    }
    tail.interpolation_rejections += static_cast<std::size_t>(rejected[i]);
  }
  if (tail.hyperplane_residual > 1e-3) {
    throw PreconditionError("interpolate_to_standard: pullback disagrees with the standard form on T(C x S^2) by " +
                            format_double(tail.hyperplane_residual));
  }

  // Pfaffian grid: latitude lines of pulled-back coefficients, shared by every t.
  const int nodes = 32;
  const int sub = 8;
  const int ny = 12;
  const std::vector<double> radii{0.1, 0.3, 0.6, 1.0, 1.7, 3.0, 6.0, 12.0};
  const int nt = 4;
  const std::size_t lines = static_cast<std::size_t>(ny) * radii.size() * nt;
  std::vector<std::vector<Form2Coefficients>> grid(lines);
  parallel_for(lines, [&](std::size_t i) {
    const int iy = static_cast<int>(i / (radii.size() * nt));
    const std::size_t rest = i % (radii.size() * nt);
    const double y = -1.35 + 2.7 * iy / (ny - 1);
    const double r = radii[rest / nt];
    const double th = kTwoPi * static_cast<double>(rest % nt) / nt + 0.3;
    grid[i] = pulled_back_line(phi, y, r, th, nodes, sub, 1e-4);
  });

  const auto gen_pull = phi.generators(options.generator_per_unit);
  const auto gen_std = cohomology_generators(standard, options.generator_per_unit);
  double lag = 0.0;
  for (int k = 0; k < 16; ++k) {
    for (int j = 0; j < 8; ++j) {
      lag = std::max(lag, std::abs(phi.pulled_back({(k + 0.5) / 16.0, 0.0, 1.0, kTwoPi * j / 8.0})[2]));
    }
  }

  tail.min_pfaffian = INFINITY;
  for (int k = 0; k < t_points; ++k) {
    const double t = t_points == 1 ? 0.0 : static_cast<double>(k) / (t_points - 1);
    Stage st;
    st.label = k == 0 ? "pullback" : "interp_t" + label_number(t);
    st.form = endpoint;
    double minpf = INFINITY;
    std::size_t where = 0;
    std::size_t node = 0;
    for (std::size_t i = 0; i < lines; ++i) {
      for (std::size_t n = 0; n < grid[i].size(); ++n) {
        const auto& a = grid[i][n];
        const double iy = static_cast<double>(i / (radii.size() * nt));
        const double y = -1.35 + 2.7 * iy / (ny - 1);
        const double x = static_cast<double>(n) / nodes;
        const std::size_t rest = i % (radii.size() * nt);
        const auto bs = standard.coefficients({x, y, radii[rest / nt], 0.0});
        Form2Coefficients mix{};
        for (std::size_t c = 0; c < 6; ++c) mix[c] = (1.0 - t) * a[c] + t * bs[c];
        const double pf = 2.0 * pfaffian(to_matrix(mix));
        if (pf < minpf) {
          minpf = pf;
          where = i;
          node = n;
        }
      }
    }
    tail.min_pfaffian = std::min(tail.min_pfaffian, minpf);
    const std::size_t rest = where % (radii.size() * nt);
    const ChartPoint wp{static_cast<double>(node) / nodes,
                        -1.35 + 2.7 * static_cast<double>(where / (radii.size() * nt)) / (ny - 1), radii[rest / nt],
                        kTwoPi * static_cast<double>(rest % nt) / nt + 0.3};
    st.report.add(st.label, "min_pfaffian", minpf, Comparison::Greater, 0.0, describe(wp));
    std::array<double, 4> g{};
    for (std::size_t i = 0; i < 4; ++i) g[i] = (1.0 - t) * gen_pull[i] + t * gen_std[i];
    add_generator_checks(st.report, st.label, g, options.generator_tol);
    st.report.add(st.label, "lagrangian_residual", (1.0 - t) * lag, Comparison::Less, options.lagrangian_tol);
    if (k == 0) {
      st.report.add(st.label, "path_independence", tail.path_independence, Comparison::Less, options.holonomy_tol);
      st.report.add(st.label, "equator_drift", tail.equator_drift, Comparison::Less, 1e-8);
      st.report.add(st.label, "identity_defect", tail.identity_defect, Comparison::Less, 1e-12);
      st.report.add(st.label, "hyperplane_residual", tail.hyperplane_residual, Comparison::Less, 1e-6,
                    describe(worst_point));
      st.report.add(st.label, "interpolation_rejections", static_cast<double>(tail.interpolation_rejections),
                    Comparison::LessEqual, 0.0);
    }
    tail.stages.push_back(std::move(st));
  }
  return tail;
}

}  // namespace hforge
