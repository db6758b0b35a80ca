#include "hforge/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "json.hpp"

#include "hforge/annulus_maps.hpp"
#include "hforge/expression.hpp"
#include "hforge/geometry.hpp"
#include "hforge/numerics.hpp"
#include "hforge/report.hpp"

namespace hforge {

namespace {

using nlohmann::json;

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object", 0);
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) throw ParseError(where + ": unknown key '" + k + "'", 0);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!obj.at(key).is_number_integer()) throw ParseError(where + "." + key + ": expected an integer", 0);
  }
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + "." + key + ": wrong type", 0);
  }
}

void check_expression(const std::string& text, unsigned allowed, const std::string& where) {
  Expression e;
  try {
    e = Expression::parse(text);
  } catch (const ParseError& err) {
    throw ParseError(where + ": " + err.what(), err.position());
  }
  if (!e.uses_only(allowed)) throw ParseError(where + ": expression mentions variables outside its slot", 0);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario JSON: ") + e.what(), e.byte);
  }
  allow_keys(j, "scenario", {"format_version", "name", "base_density", "annulus", "initial", "correction",
                             "inflation", "transport", "holonomy_scan", "verify", "expected_fail", "commands",
                             "numerics"});
  Scenario s;
  if (!j.contains("format_version")) throw ParseError("scenario: missing format_version", 0);
  read(j, "format_version", s.format_version, "scenario");
  if (s.format_version != kFormatVersion) {
    throw ParseError("scenario: unsupported format_version " + std::to_string(s.format_version), 0);
  }
  read(j, "name", s.name, "scenario");
  read(j, "base_density", s.base_density, "scenario");
  check_expression(s.base_density, 0b0011u, "base_density");

  if (j.contains("annulus")) {
    const auto& a = j["annulus"];
    allow_keys(a, "annulus", {"a", "b"});
    read(a, "a", s.annulus.a, "annulus");
    read(a, "b", s.annulus.b, "annulus");
  }
  if (j.contains("initial")) {
    const auto& in = j["initial"];
    allow_keys(in, "initial", {"support", "modes"});
    if (in.contains("support")) {
      const auto& b = in["support"];
      allow_keys(b, "initial.support", {"x0", "x1", "y0", "y1"});
      read(b, "x0", s.support.x0, "initial.support");
      read(b, "x1", s.support.x1, "initial.support");
      read(b, "y0", s.support.y0, "initial.support");
      read(b, "y1", s.support.y1, "initial.support");
    }
    if (in.contains("modes")) {
      if (!in["modes"].is_array()) throw ParseError("initial.modes: expected an array", 0);
      for (std::size_t i = 0; i < in["modes"].size(); ++i) {
        const auto& m = in["modes"][i];
        const std::string where = "initial.modes[" + std::to_string(i) + "]";
        allow_keys(m, where, {"x", "y", "w"});
        ModeSpec mode;
        read(m, "x", mode.x, where);
        read(m, "y", mode.y, where);
        read(m, "w", mode.w, where);
        check_expression(mode.x, 0b0001u, where + ".x");
        check_expression(mode.y, 0b0010u, where + ".y");
        check_expression(mode.w, 0b1100u, where + ".w");
        s.modes.push_back(mode);
      }
    }
  }
  if (j.contains("correction")) {
    const auto& c = j["correction"];
    allow_keys(c, "correction", {"u0", "u1", "eps"});
    read(c, "u0", s.correction.u0, "correction");
    read(c, "u1", s.correction.u1, "correction");
    read(c, "eps", s.correction.eps, "correction");
  }
  if (j.contains("inflation")) {
    const auto& c = j["inflation"];
    allow_keys(c, "inflation", {"c", "caps", "a_per_unit"});
    if (c.contains("c")) {
      if (c["c"].is_string()) {
        if (c["c"].get<std::string>() != "threshold") throw ParseError("inflation.c: expected a number or \"threshold\"", 0);
        s.inflation_c = -1.0;
      } else {
        read(c, "c", s.inflation_c, "inflation");
        if (s.inflation_c < 0.0) throw ParseError("inflation.c: must be >= 0", 0);
      }
    }
    read(c, "a_per_unit", s.caps.a_per_unit, "inflation");
    if (c.contains("caps")) {
      const auto& caps = c["caps"];
      allow_keys(caps, "inflation.caps", {"s_lo", "s_hi", "n_lo", "n_hi"});
      read(caps, "s_lo", s.caps.s_lo, "inflation.caps");
      read(caps, "s_hi", s.caps.s_hi, "inflation.caps");
      read(caps, "n_lo", s.caps.n_lo, "inflation.caps");
      read(caps, "n_hi", s.caps.n_hi, "inflation.caps");
    }
  }
  if (j.contains("transport")) {
    const auto& t = j["transport"];
    allow_keys(t, "transport", {"y", "x0", "x1", "markers"});
    read(t, "y", s.transport.y, "transport");
    read(t, "x0", s.transport.x0, "transport");
    read(t, "x1", s.transport.x1, "transport");
    read(t, "markers", s.transport.markers, "transport");
  }
  if (j.contains("holonomy_scan")) {
    const auto& h = j["holonomy_scan"];
    allow_keys(h, "holonomy_scan", {"expect_trivial"});
    read(h, "expect_trivial", s.expect_trivial_holonomy, "holonomy_scan");
  }
  if (j.contains("verify")) {
    if (!j["verify"].is_array()) throw ParseError("verify: expected an array", 0);
    for (std::size_t i = 0; i < j["verify"].size(); ++i) {
      const auto& v = j["verify"][i];
      const std::string where = "verify[" + std::to_string(i) + "]";
      allow_keys(v, where, {"label", "c", "t"});
      VerifySpec spec;
      spec.label = "verify" + std::to_string(i);
      read(v, "label", spec.label, where);
      if (v.contains("c") && v["c"].is_string()) {
        if (v["c"].get<std::string>() != "threshold") throw ParseError(where + ".c: expected a number or \"threshold\"", 0);
        spec.c = -1.0;
      } else {
        read(v, "c", spec.c, where);
        if (spec.c < 0.0) throw ParseError(where + ".c: must be >= 0", 0);
      }
      read(v, "t", spec.t, where);
      if (!(spec.t >= 0.0 && spec.t <= 1.0)) throw ParseError(where + ".t: must lie in [0, 1]", 0);
      s.verify.push_back(spec);
    }
  }
  read(j, "expected_fail", s.expected_fail, "scenario");
  read(j, "commands", s.commands, "scenario");
  static const std::set<std::string> known{"transport", "holonomy-scan", "kill-holonomy", "inflate",
                                           "interpolate", "verify", "dehn-demo"};
  for (const auto& c : s.commands) {
    if (!known.count(c)) throw ParseError("commands: unknown command '" + c + "'", 0);
  }
  if (j.contains("numerics")) {
    const auto& n = j["numerics"];
    allow_keys(n, "numerics", {"steps_per_unit", "tol", "markers", "grid", "generator_per_unit", "holonomy_tol",
                               "seed", "threads"});
    read(n, "steps_per_unit", s.numerics.steps_per_unit, "numerics");
    read(n, "tol", s.numerics.tol, "numerics");
    read(n, "markers", s.numerics.markers, "numerics");
    read(n, "grid", s.numerics.grid, "numerics");
    read(n, "generator_per_unit", s.numerics.generator_per_unit, "numerics");
    read(n, "holonomy_tol", s.numerics.holonomy_tol, "numerics");
    read(n, "seed", s.numerics.seed, "numerics");
    read(n, "threads", s.numerics.threads, "numerics");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read scenario file '" + path + "'", 0);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_scenario(os.str());
}

namespace {

HamiltonianFamily initial_hamiltonian(const Scenario& s) {
  HamiltonianFamily k;
  k.support = s.support;
  if (s.modes.empty()) return k;
  struct Term {
    Expression x, y, w;
  };
  std::vector<Term> terms;
  for (const auto& m : s.modes) {
    terms.push_back({Expression::parse(m.x), Expression::parse(m.y), Expression::parse(m.w)});
  }
  const SupportBox box = s.support;
  k.varying = Field([terms, box](const DualPoint& p) {
    if (!box.contains(p[0].v, p[1].v)) return Dual(0.0);
    Dual sum(0.0);
    for (const auto& t : terms) {
      const Dual a = t.x.eval(p);
      if (a.is_zero()) continue;
      const Dual b = t.y.eval(p);
      if (b.is_zero()) continue;
      sum = sum + a * b * t.w.eval(p);
    }
    return sum;
  });
  return k;
}

}  // namespace

StructuredForm build_initial_form(const Scenario& s) {
  s.annulus.validate();
  const Expression fexpr = Expression::parse(s.base_density);
  StructuredForm form([fexpr](double x, double y) { return fexpr.eval(x, y, 1.0, 0.0); }, s.annulus);

  for (int i = 0; i <= 64; ++i) {
    for (int j = 1; j < 64; ++j) {
      const double x = i / 64.0;
      const double y = -kHalfPi + kPi * j / 64.0;
      if (!(form.f(x, y) > 0.0)) throw PreconditionError("base density must be positive away from the poles");
    }
  }
  const double mass = integrate_area({form.base_density, ChartKind::Base}, ChartRect::base_sphere(), 256).value;
  if (std::abs(mass - 1.0) > 1e-8) {
    throw PreconditionError("base density must have total mass 1 (found " + format_double(mass) + ")");
  }

  const SupportBox& b = s.support;
  if (!(0.0 < b.x0 && b.x0 < b.x1 && b.x1 < 1.0 && -kHalfPi < b.y0 && b.y0 < b.y1 && b.y1 < kHalfPi)) {
    throw PreconditionError("initial support box must lie inside (0, 1) x (-pi/2, pi/2)");
  }
  form.initial = initial_hamiltonian(s);
  if (form.initial.varying.is_zero()) return form;

  // The box clips K, so leakage shows up as a jump at its edges.
  double edge = 0.0;
  for (int i = 0; i <= 32; ++i) {
    for (double r : {0.3, 0.7, 1.0, 1.6, 3.0}) {
      for (double th : {0.0, 2.1, 4.2}) {
        const double x = b.x0 + (b.x1 - b.x0) * i / 32.0;
        const double y = b.y0 + (b.y1 - b.y0) * i / 32.0;
        edge = std::max({edge, std::abs(form.initial.varying.value({b.x0, y, r, th})),
                         std::abs(form.initial.varying.value({b.x1, y, r, th})),
                         std::abs(form.initial.varying.value({x, b.y0, r, th})),
                         std::abs(form.initial.varying.value({x, b.y1, r, th}))});
      }
    }
  }
  if (edge > 1e-12) {
    throw PreconditionError("initial Hamiltonian does not vanish on its support box boundary (" + format_double(edge) +
                            ")");
  }
  const double outside = form.initial.outside_annulus_variation(s.annulus);
  if (outside > 1e-12) {
    throw PreconditionError("initial Hamiltonian varies in w outside the annulus (" + format_double(outside) + ")");
  }
  const double osc = equator_oscillation(HamiltonianFamily{
      Field([k = form.initial](const DualPoint& p) { return k.eval(DualPoint{p[0], Dual(0.0), p[2], p[3]}); }), {},
      {}});
  if (osc > 1e-10) {
    throw PreconditionError("initial Hamiltonian is not constant on E at y = 0 (oscillation " + format_double(osc) + ")");
  }
  const double mean = simpson_1d([&](double x) { return form.initial.value({x, 0.0, 1.0, 0.0}); }, 0.0, 1.0, 4096);
  if (std::abs(mean) > 1e-9) {
    throw PreconditionError("initial Hamiltonian has nonzero mean on the equator (" + format_double(mean) + ")");
  }
  double worst = INFINITY;
  for (int i = 0; i <= 48; ++i) {
    for (int j = 0; j <= 48; ++j) {
      const double x = b.x0 + (b.x1 - b.x0) * i / 48.0;
      const double y = b.y0 + (b.y1 - b.y0) * j / 48.0;
      for (int k = 0; k < 12; ++k) {
        const double r = s.annulus.a * std::pow(s.annulus.b / s.annulus.a, k / 11.0);
        for (int m = 0; m < 6; ++m) {
          const ChartPoint p{x, y, r, kTwoPi * m / 6.0};
          worst = std::min(worst, form.f(x, y) - form.initial.jet(p).dy);
        }
      }
    }
  }
  if (!(worst > 0.0)) {
    throw PreconditionError("initial form is not symplectic: min of f - dK/dy is " + format_double(worst));
  }
  return form;
}

PipelineOptions pipeline_options(const Scenario& s) {
  PipelineOptions o;
  o.transport.steps_per_unit = s.numerics.steps_per_unit;
  o.transport.tol = s.numerics.tol;
  o.markers = s.numerics.markers;
  o.grid = MarginGrid::from_size(s.numerics.grid);
  o.grid.focus = s.support;
  o.generator_per_unit = s.numerics.generator_per_unit;
  o.holonomy_tol = s.numerics.holonomy_tol;
  o.inflation = s.caps;
  o.inflation.annulus = s.annulus;
  o.correction = s.correction;
  o.c_override = s.inflation_c;
  o.seed = s.numerics.seed;
  return o;
}

std::string form_to_json(const Scenario& s, const StructuredForm& form) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["scenario"] = s.name;
  j["base_density"] = s.base_density;
  j["annulus"] = {{"a", form.annulus.a}, {"b", form.annulus.b}};
  nlohmann::ordered_json modes = nlohmann::ordered_json::array();
  for (const auto& m : s.modes) modes.push_back({{"x", m.x}, {"y", m.y}, {"w", m.w}});
  j["initial"] = {{"support", {{"x0", form.initial.support.x0}, {"x1", form.initial.support.x1},
                               {"y0", form.initial.support.y0}, {"y1", form.initial.support.y1}}},
                  {"modes", modes}};
  nlohmann::ordered_json corr;
  corr["u0"] = s.correction.u0;
  corr["u1"] = s.correction.u1;
  corr["eps"] = s.correction.eps;
  corr["present"] = !form.correction.is_zero();
  corr["t"] = form.t;
  j["correction"] = corr;
  nlohmann::ordered_json infl;
  infl["c"] = form.c;
  if (form.bumps) {
    const BumpPair& b = *form.bumps;
    infl["bumps"] = {{"s_lo", b.s_lo}, {"s_hi", b.s_hi}, {"n_lo", b.n_lo}, {"n_hi", b.n_hi}, {"amp_s", b.amp_s},
                     {"amp_n", b.amp_n}, {"a", b.a}};
  }
  j["inflation"] = infl;
  return j.dump(2) + "\n";
}

}  // namespace hforge
