// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hforge/annulus_maps.hpp"
#include "hforge/connection.hpp"
#include "hforge/expression.hpp"
#include "hforge/graphs.hpp"
#include "hforge/inflation.hpp"
#include "hforge/numerics.hpp"
#include "hforge/pipeline.hpp"
#include "hforge/report.hpp"
#include "hforge/scenario.hpp"

using namespace hforge;

namespace {

const std::string kSource = HFORGE_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

Field field(const std::string& text) { return Expression::parse(text).to_field(); }

using Triangle = std::array<std::array<double, 2>, 3>;

Triangle random_triangle(std::mt19937_64& rng, double r_lo, double r_hi, double size) {
  std::uniform_real_distribution<double> ur(r_lo, r_hi), ut(0, kTwoPi), ud(-size, size);
  const double r = ur(rng), th = ut(rng);
  Triangle tri{};
  for (auto& v : tri) {
    const double rr = r * (1 + ud(rng)), tt = th + ud(rng);
    v = {rr * std::cos(tt), rr * std::sin(tt)};
  }
  return tri;
}

// Shared twist pipeline run.
struct TwistRun {
  Scenario scenario;
  PipelineOptions options;
  StructuredForm initial;
  HomotopyTrace trace;
  InterpolationTail tail;
  double kill_seconds = 0.0;
  double tail_seconds = 0.0;
};

const TwistRun& twist_run() {
  static const TwistRun run = [] {
    TwistRun r;
    r.scenario = load_scenario(kSource + "/scenarios/twist_two_mode.json");
    r.options = pipeline_options(r.scenario);
    r.initial = build_initial_form(r.scenario);
    Stopwatch sw;
    r.trace = kill_latitude_holonomy(r.initial, r.options);
    r.kill_seconds = sw.seconds();
    Stopwatch sw2;
    r.tail = interpolate_to_standard(r.trace.stages.back().form, r.options);
    r.tail_seconds = sw2.seconds();
    return r;
  }();
  return run;
}

std::vector<const Stage*> all_stages(const TwistRun& run) {
  std::vector<const Stage*> out;
  for (const auto& s : run.trace.stages) out.push_back(&s);
  for (const auto& s : run.tail.stages) out.push_back(&s);
  return out;
}

Outcome criterion1() {
  const auto& run = twist_run();
  const double target[4] = {1.0, 1.0, 0.5, 0.5};
  double worst = 0.0;
  std::string where;
  auto note = [&](double d, const std::string& label) {
    if (d > worst) {
      worst = d;
      where = label;
    }
  };
  // Chart forms are integrated directly; the pulled-back forms carry their integrals in the report.
  for (const auto& st : run.trace.stages) {
    const auto g = cohomology_generators(st.form, run.options.generator_per_unit);
    for (int i = 0; i < 4; ++i) note(std::abs(g[i] - target[i]), st.label);
  }
  int tail_checks = 0;
  for (const auto& st : run.tail.stages) {
    for (const char* name : {"gen_base_sphere", "gen_fiber_sphere", "gen_base_lower", "gen_fiber_disk"}) {
      if (const Check* c = st.report.find(st.label, name)) {
        note(c->value, st.label);
        ++tail_checks;
      }
    }
  }
  const double seconds = run.kill_seconds + run.tail_seconds;
  const bool ok = worst < 1e-5 && tail_checks == 4 * static_cast<int>(run.tail.stages.size()) && seconds < 60.0;
  return {ok, std::to_string(all_stages(run).size()) + " stages, max generator error " + fmt(worst) + " (" + where +
                  "), pipeline " + fmt(seconds) + " s"};
}

Outcome criterion2() {
  const auto& run = twist_run();
  double worst = 0.0, far = 0.0;
  int chebyshev = 0;
  for (const auto& h : run.trace.endpoint_holonomy) {
    worst = std::max(worst, h.residual);
    if (std::abs(h.lambda) >= kQuarterPi - 1e-12) far = std::max(far, h.residual);
    const double l = std::abs(h.lambda);
    if (l != kQuarterPi && l != kPi / 3.0) ++chebyshev;
  }
  const double before = holonomy_latitude(run.initial, 0.2, run.options.transport, run.options.markers).residual;
  const bool ok = chebyshev == 33 && worst < 1e-5 && far < 1e-8 && run.kill_seconds < 300.0;
  return {ok, std::to_string(chebyshev) + " scanned latitudes plus +-pi/4, +-pi/3, max residual " + fmt(worst) + ", |lambda|>=pi/4 " +
                  fmt(far) + ", initial residual at 0.2 " + fmt(before) + ", kill " + fmt(run.kill_seconds) + " s"};
}

Outcome criterion3() {
  const Scenario s = load_scenario(kSource + "/scenarios/steep_H_no_inflation.json");
  PipelineOptions opt = pipeline_options(s);
  const StructuredForm form = build_initial_form(s);
  const Correction corr = build_correction(form.initial, opt.correction);
  const auto bumps = build_bumps(inflation_geometry(opt, form.annulus));
  const Threshold th = threshold_constant(corr.global, *bumps, form.annulus);
  MarginGrid grid = opt.grid;
  grid.focus = {corr.global.support.x0, corr.global.support.x1, -kQuarterPi, kQuarterPi};
  const auto bare = symplecticity_margin(form.with_correction(corr.global, 1.0), grid);
  const auto inflated = symplecticity_margin(inflate(form, bumps, th.c).with_correction(corr.global, 1.0), grid);
  const bool ok = bare.min_margin < 0.0 && inflated.min_margin >= 0.0 && inflated.sign_disagreements == 0 &&
                  bare.sign_disagreements == 0;
  return {ok, "c=0 margin " + fmt(bare.min_margin) + ", C=" + fmt(th.c) + " margin " + fmt(inflated.min_margin) +
                  ", sign disagreements " + std::to_string(inflated.sign_disagreements) + " over " +
                  std::to_string(inflated.points) + " points"};
}

Outcome criterion4() {
  const auto& run = twist_run();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(0, 1), uy(-1.5, 1.5), ul(std::log(0.05), std::log(20.0)), ut(0, kTwoPi);
  std::uniform_int_distribution<std::size_t> pick(0, run.trace.stages.size() - 1);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const StructuredForm& form = run.trace.stages[pick(rng)].form;
    ChartPoint p{ux(rng), uy(rng), std::exp(ul(rng)), ut(rng)};
    if (i % 2 == 0) {  // half the points inside the supports of K and H
      p.x = i % 4 == 0 ? 0.42 + 0.16 * ux(rng) : 0.1 + 0.15 * ux(rng);
      p.y = -0.8 + 1.6 * ux(rng);
    }
    const double pf = pfaffian_positivity(form.patch(), p);
    worst = std::max(worst, std::abs(pf - form.factored_margin(p) * form.split_baseline(p)));
  }
  return {worst < 1e-8, "max |Pf - margin * baseline| " + fmt(worst) + " at 10000 points"};
}

Outcome criterion5() {
  const auto& run = twist_run();
  const StructuredForm& form = run.initial;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uc(0.35, 0.65), uy(-0.35, 0.35), ur(0.08, 0.2);
  std::vector<BasePath> loops;
  for (int k = 0; k < 20; ++k) {
    const double cx = uc(rng), cy = uy(rng), rad = ur(rng), ecc = 0.5 + ur(rng);
    loops.push_back(BasePath::from_position([=](double t) {
      return std::array<double, 2>{cx + rad * std::cos(kTwoPi * t), cy + ecc * rad * std::sin(kTwoPi * t)};
    }));
  }
  std::vector<Triangle> triangles;
  for (int i = 0; i < 100; ++i) triangles.push_back(random_triangle(rng, 0.4, 2.8, 0.03));

  TransportOptions opt;
  opt.adaptive = false;
  opt.fixed_steps = 128;
  auto id = [](const FiberPoint& w) { return w; };
  std::vector<double> reference(triangles.size());
  for (std::size_t i = 0; i < triangles.size(); ++i) reference[i] = image_triangle_area(id, triangles[i]);
  std::vector<double> worst_per_loop(loops.size(), 0.0);
  parallel_for(loops.size(), [&](std::size_t k) {
    auto map = [&](const FiberPoint& w) { return parallel_transport(form, loops[k], w, opt).end; };
    for (std::size_t i = 0; i < triangles.size(); ++i) {
      worst_per_loop[k] = std::max(worst_per_loop[k], std::abs(image_triangle_area(map, triangles[i]) - reference[i]));
    }
  });
  const double worst = *std::max_element(worst_per_loop.begin(), worst_per_loop.end());

  // Order check on the integrator: endpoint error at n and n/2 steps against a fine reference.
  auto endpoint_error = [&](int steps) {
    TransportOptions o;
    o.adaptive = false;
    o.fixed_steps = steps;
    TransportOptions fine = o;
    fine.fixed_steps = 8192;
    double e = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      for (const auto& w : annulus_markers(form.annulus, 4)) {
        e = std::max(e, marker_distance(parallel_transport(form, loops[k], w, o).end,
                                        parallel_transport(form, loops[k], w, fine).end));
      }
    }
    return e;
  };
  const double coarse = endpoint_error(64);
  const double halved = endpoint_error(128);
  const double ratio = coarse / halved;
  return {worst < 1e-6 && ratio >= 8.0, "2000 transported triangles, max area error " + fmt(worst) +
                                            ", step halving ratio " + fmt(ratio) + " (" + fmt(coarse) + " -> " +
                                            fmt(halved) + ")"};
}

Outcome criterion6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> amp(-0.02, 0.02), freq(0.5, 3.0), mix(-1, 1);
  double worst_h = 0.0, worst_d = 0.0;
  for (int k = 0; k < 20; ++k) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "(%.6f*sin(%.6f*x + theta) + %.6f*cos(2*theta)*(1 + %.6f*x) + %.6f*(r - 1)^2)*bump(r, 0.3, 3.5)",
                  amp(rng), freq(rng), amp(rng), mix(rng), amp(rng));
    AnnulusIsotopy iso;
    iso.generator = field(buf);
    iso.steps = 128;
    const auto rt = round_trip_check(iso, {0.5, 1.0}, 5);
    const auto pc = check_potential(iso, 1.0, 5);
    worst_h = std::max(worst_h, rt.hamiltonian_error);
    worst_d = std::max(worst_d, pc.differential_mismatch);
  }
  return {worst_h < 1e-5 && worst_d < 1e-6,
          "20 Hamiltonians, sup |H - H'| " + fmt(worst_h) + ", sup |dF - (psi^*lambda - lambda)| " + fmt(worst_d)};
}

Outcome criterion7() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  int accepted = 0, positive = 0, tried = 0;
  double worst = 0.0;
  while (accepted < 1000) {
    ++tried;
    Matrix4 w{};
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        w[i][j] = u(rng);
        w[j][i] = -w[i][j];
      }
    }
    std::array<std::array<double, 4>, 3> h{};
    for (auto& row : h) {
      for (double& v : row) v = u(rng);
    }
    // beta annihilates the hyperplane; omega' = omega + beta ^ alpha agrees with omega on it.
    std::array<double, 4> beta{};
    for (int k = 0; k < 4; ++k) {
      Matrix4 m{};
      for (int i = 0; i < 3; ++i) m[i] = h[i];
      m[3] = {0, 0, 0, 0};
      m[3][k] = 1.0;
      beta[k] = determinant(m);
    }
    std::array<double, 4> alpha{};
    for (double& v : alpha) v = u(rng);
    Matrix4 wp = w;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) wp[i][j] += beta[i] * alpha[j] - beta[j] * alpha[i];
    }
    const double p0 = pfaffian(w), p1 = pfaffian(wp);
    if (std::abs(p0) < 1e-3 || std::abs(p1) < 1e-3 || (p0 > 0) != (p1 > 0)) continue;
    const auto chk = linear_interpolation_check(w, wp, h, 101);
    if (!chk.accepted) continue;
    ++accepted;
    if (chk.positive) ++positive;
    worst = std::max(worst, std::abs(chk.min_closed_form - chk.min_pfaffian) / std::max(1.0, chk.min_pfaffian));
  }
  return {positive == accepted && worst < 1e-9, std::to_string(positive) + "/" + std::to_string(accepted) +
                                                    " positive on 101 t, closed form vs grid " + fmt(worst) + " (" +
                                                    std::to_string(tried) + " draws)"};
}

Outcome criterion8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ue(0.05, 0.95), ud(std::log(1e-3), 0.0), ua(-2, 2), us(0, 1), ut(0, kTwoPi);
  double worst_fd = 0.0;
  int bound_violations = 0;
  for (int k = 0; k < 20; ++k) {
    const double eps = ue(rng), delta = std::exp(ud(rng));
    const auto fam = build_phi_family(eps, delta);
    const LinearGraph g{Mat2{{{ua(rng), ua(rng)}, {ua(rng), ua(rng)}}}};
    std::uniform_real_distribution<double> ur(0.0, 1.5 * fam.gamma());
    for (int i = 0; i < 1000; ++i) {
      const double s = us(rng), r = ur(rng);
      const double q = fam.graph_factor(s, r);
      if (!(q >= 0.0 && q < 1.0 / (1.0 - eps))) ++bound_violations;
      if (r > 1e-3 * fam.gamma()) {
        const auto prof = fam.profile(s);
        worst_fd = std::max(worst_fd, std::abs(scaled_graph_margin(g, prof, r) -
                                               scaled_graph_margin_fd(g, prof, r, ut(rng))));
      }
    }
  }
  return {bound_violations == 0 && worst_fd < 1e-6,
          "20 (eps, delta) x 1000 samples, bound violations " + std::to_string(bound_violations) +
              ", margin vs Jacobian " + fmt(worst_fd)};
}

Outcome criterion9() {
  const auto& run = twist_run();
  double worst = 0.0;
  int stages = 0;
  for (const Stage* st : all_stages(run)) {
    if (const Check* c = st->report.find(st->label, "lagrangian_residual")) {
      worst = std::max(worst, c->value);
      ++stages;
    }
  }
  // Negative control: the contraction plus kappa rho(lambda) beta'(s), left un-normalized.
  const Correction& corr = run.trace.correction;
  const double eps = run.options.correction.eps;
  const double kappa = 0.05;
  HamiltonianFamily control = corr.contraction;
  const Field base = control.offset;
  control.offset = Field([base, eps, kappa](const DualPoint& p) {
    const Dual extra = Dual(kappa) * latitude_cutoff(p[1]) * smooth_step_slope(p[0], 2 * eps, 1 - 2 * eps);
    return base.is_zero() ? extra : base(p) + extra;
  });
  const HamiltonianFamily global = globalize(control, run.options.correction.u0, run.options.correction.u1);
  const StructuredForm& inflated = run.trace.stages[2].form;
  const StructuredForm bad = inflated.with_correction(global, 1.0);
  const double lag = lagrangian_residual(bad, run.options.lagrangian_grid);
  const double mono = monotonicity_defect(cohomology_generators(bad, run.options.generator_per_unit));
  const double control_value = std::max(lag, mono);
  return {stages == static_cast<int>(all_stages(run).size()) && worst < 1e-6 && control_value > 1e-3,
          std::to_string(stages) + " stages, max Lagrangian residual " + fmt(worst) + ", control " +
              fmt(control_value) + " (residual " + fmt(lag) + ", monotonicity " + fmt(mono) + ")"};
}

Outcome criterion10() {
  const auto& run = twist_run();
  double min_pf = INFINITY;
  int t_stages = 0;
  for (const auto& st : run.tail.stages) {
    ++t_stages;
    if (const Check* c = st.report.find(st.label, "min_pfaffian")) min_pf = std::min(min_pf, c->value);
  }
  const bool ok = run.tail.hyperplane_residual < 1e-6 && t_stages == 11 && min_pf > 0.0 &&
                  run.tail.interpolation_rejections == 0;
  return {ok, "hyperplane residual " + fmt(run.tail.hyperplane_residual) + ", " + std::to_string(t_stages) +
                  " t values, min Pfaffian " + fmt(min_pf) + ", interpolation rejections " +
                  std::to_string(run.tail.interpolation_rejections)};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    Stopwatch sw;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu: %s  %s  [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), sw.seconds());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
