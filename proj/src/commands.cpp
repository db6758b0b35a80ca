#include "hforge/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "hforge/annulus_maps.hpp"
#include "hforge/connection.hpp"
#include "hforge/expression.hpp"
#include "hforge/geometry.hpp"
#include "hforge/inflation.hpp"

namespace hforge {

namespace {

std::string holonomy_csv(const std::vector<Holonomy>& scan) {
  std::ostringstream os;
  os << "format_version,lambda,residual,worst_r,worst_theta,steps_per_unit\n";
  for (const auto& h : scan) {
    const FiberPoint w = h.markers.empty() ? FiberPoint{} : h.markers[h.worst_index];
    os << kFormatVersion << ',' << format_double(h.lambda) << ',' << format_double(h.residual) << ','
       << format_double(w.r) << ',' << format_double(w.theta) << ',' << h.steps_per_unit << '\n';
  }
  return os.str();
}

std::string two_digits(std::size_t n) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02zu", n);
  return buf;
}

class Session {
 public:
  explicit Session(const Scenario& s) : scenario_(s), options_(pipeline_options(s)) {}

  void run(const std::string& command, const CommandOptions& opts) {
    if (command == "transport") {
      transport();
    } else if (command == "holonomy-scan") {
      holonomy_scan_command();
    } else if (command == "kill-holonomy") {
      trace();
    } else if (command == "inflate") {
      inflate_command(opts);
    } else if (command == "interpolate") {
      interpolate();
    } else if (command == "verify") {
      verify();
    } else if (command == "dehn-demo") {
      dehn_demo();
    } else {
      throw ParseError("unknown command '" + command + "'", 0);
    }
  }

  RunOutput finish() {
    out_.report.mark_expected_failures(scenario_.expected_fail);
    for (std::size_t i = 0; i < stage_files_.size(); ++i) {
      VerificationReport part;
      for (const auto& c : out_.report.checks()) {
        if (c.stage == stage_files_[i].second) part.add(c.stage, c.name, c.value, c.comparison, c.tolerance, c.location);
      }
      part.mark_expected_failures(scenario_.expected_fail);
      out_.files["stages/" + two_digits(i) + "_" + stage_files_[i].second + ".csv"] = part.to_csv();
    }
    out_.files["report.csv"] = out_.report.to_csv();
    out_.files["report.json"] = out_.report.to_json();
    out_.files["summary.txt"] = summary();
    return std::move(out_);
  }

  std::vector<std::string> commands;

 private:
  const StructuredForm& initial() {
    if (!initial_) initial_ = build_initial_form(scenario_);
    return *initial_;
  }

  const Correction& correction() {
    if (!correction_) correction_ = build_correction(initial().initial, options_.correction);
    return *correction_;
  }

  std::shared_ptr<const BumpPair> bumps() {
    if (!bumps_) bumps_ = build_bumps(inflation_geometry(options_, scenario_.annulus));
    return bumps_;
  }

  double threshold() {
    if (!threshold_) threshold_ = threshold_constant(correction().global, *bumps(), scenario_.annulus);
    return threshold_->c;
  }

  void add_stage(const VerificationReport& rep, const std::string& label) {
    out_.report.append(rep);
    stage_files_.emplace_back(stage_files_.size(), label);
  }

  const HomotopyTrace& trace() {
    if (!trace_) {
      trace_ = kill_latitude_holonomy(initial(), options_);
      for (const auto& st : trace_->stages) add_stage(st.report, st.label);
      out_.files["endpoint_holonomy.csv"] = holonomy_csv(trace_->endpoint_holonomy);
    }
    return *trace_;
  }

  void transport() {
    const auto& t = scenario_.transport;
    const auto markers = annulus_markers(scenario_.annulus, t.markers);
    std::ostringstream os;
    os << "format_version,marker,r0,theta0,r1,theta1,steps_per_unit,error_estimate\n";
    double moved = 0.0;
    double back = 0.0;
    for (std::size_t i = 0; i < markers.size(); ++i) {
      const TransportResult res = transport_latitude(initial(), t.y, t.x0, t.x1, markers[i], options_.transport);
      const TransportResult ret = transport_latitude(initial(), t.y, t.x1, t.x0, res.end, options_.transport);
      moved = std::max(moved, marker_distance(res.end, markers[i]));
      back = std::max(back, marker_distance(ret.end, markers[i]));
      os << kFormatVersion << ',' << i << ',' << format_double(markers[i].r) << ',' << format_double(markers[i].theta)
         << ',' << format_double(res.end.r) << ',' << format_double(res.end.theta) << ',' << res.steps_per_unit << ','
         << format_double(res.error_estimate) << '\n';
    }
    out_.files["transport.csv"] = os.str();
    VerificationReport rep;
    rep.add("transport", "max_displacement", moved, Comparison::Info, 0.0, "y=" + format_double(t.y));
    rep.add("transport", "return_defect", back, Comparison::Less, 1e-8);
    add_stage(rep, "transport");
  }

  void holonomy_scan_command() {
    const auto scan = holonomy_scan(initial(), scan_latitudes(), options_.transport, options_.markers);
    out_.files["holonomy_scan.csv"] = holonomy_csv(scan);
    double worst = 0.0;
    double far = 0.0;
    double where = 0.0;
    for (const auto& h : scan) {
      if (h.residual > worst) {
        worst = h.residual;
        where = h.lambda;
      }
      if (std::abs(h.lambda) >= kQuarterPi - 1e-12) far = std::max(far, h.residual);
    }
    VerificationReport rep;
    rep.add("holonomy_scan", "max_residual", worst,
            scenario_.expect_trivial_holonomy ? Comparison::Less : Comparison::Info,
            scenario_.expect_trivial_holonomy ? options_.far_holonomy_tol : 0.0, "lambda=" + format_double(where));
    rep.add("holonomy_scan", "max_residual_far", far, Comparison::Less, options_.far_holonomy_tol);
    add_stage(rep, "holonomy_scan");
  }

  void inflate_command(const CommandOptions& opts) {
    double c = opts.inflate_c ? *opts.inflate_c : scenario_.inflation_c;
    if (c < 0.0) c = threshold();
    const StructuredForm& in = initial();
    const StructuredForm inflated = c == 0.0 ? in : inflate(in, bumps(), c);
    out_.files["input_form.json"] = form_to_json(scenario_, in);
    out_.files["form.json"] = form_to_json(scenario_, inflated);
    VerificationReport rep = verify_stage(inflated, "inflated", options_);
    rep.add("inflated", "inflation_c", c, Comparison::Info, 0.0);
    add_stage(rep, "inflated");
  }

  void interpolate() {
    const HomotopyTrace& tr = trace();
    const InterpolationTail tail = interpolate_to_standard(tr.stages.back().form, options_);
    for (const auto& st : tail.stages) add_stage(st.report, st.label);
  }

  void verify() {
    for (const auto& v : scenario_.verify) {
      const double c = v.c < 0.0 ? threshold() : v.c;
      StructuredForm f = c == 0.0 ? initial() : inflate(initial(), bumps(), c);
      if (v.t > 0.0) f = f.with_correction(correction().global, v.t);
      VerificationReport rep = verify_stage(f, v.label, options_);
      rep.add(v.label, "inflation_c", c, Comparison::Info, 0.0);
      add_stage(rep, v.label);
    }
  }

  void dehn_demo() {
    const Annulus& ann = scenario_.annulus;
    const auto rho = default_twist_profile(ann);
    const AnnulusMap twist = dehn_twist(rho, ann);
    const AnnulusMap untwist = dehn_twist(rho, ann, true);
    auto identity = [](const FiberPoint& w) { return w; };

    std::ostringstream os;
    os << "format_version,r,theta,r_image,theta_image,twist\n";
    double boundary = 0.0;
    double inverse = 0.0;
    for (const auto& w : annulus_markers(ann, 8)) {
      const FiberPoint q = twist(w);
      inverse = std::max(inverse, marker_distance(untwist(q), w));
      os << kFormatVersion << ',' << format_double(w.r) << ',' << format_double(w.theta) << ','
         << format_double(q.r) << ',' << format_double(q.theta) << ',' << format_double(rho(w.r)) << '\n';
    }
    for (int k = 0; k < 16; ++k) {
      const double th = kTwoPi * k / 16.0;
      for (double r : {ann.a, ann.b}) boundary = std::max(boundary, marker_distance(twist({r, th, false}), {r, th, false}));
    }
    out_.files["dehn.csv"] = os.str();

    std::mt19937_64 rng(options_.seed);
    std::uniform_real_distribution<double> ur(std::log(ann.a * 1.05), std::log(ann.b / 1.05));
    std::uniform_real_distribution<double> ut(0.0, kTwoPi);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    double area = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double r = std::exp(ur(rng));
      const double th = ut(rng);
      std::array<std::array<double, 2>, 3> tri{};
      for (auto& v : tri) {
        const double rr = r * (1.0 + jitter(rng));
        const double tt = th + jitter(rng);
        v = {rr * std::cos(tt), rr * std::sin(tt)};
      }
      area = std::max(area, std::abs(image_triangle_area(twist, tri) - image_triangle_area(identity, tri)));
    }
    VerificationReport rep;
    rep.add("dehn", "boundary_identity", boundary, Comparison::Less, 1e-12);
    rep.add("dehn", "inverse_defect", inverse, Comparison::Less, 1e-9);
    rep.add("dehn", "triangle_area_defect", area, Comparison::Less, 1e-8);
    add_stage(rep, "dehn");
  }

  std::string summary() const {
    std::ostringstream os;
    const auto& checks = out_.report.checks();
    std::size_t expected = 0;
    for (const auto& c : checks) expected += c.expected_fail ? 1 : 0;
    os << "scenario: " << scenario_.name << '\n';
    os << "commands:";
    for (const auto& c : commands) os << ' ' << c;
    os << '\n';
    os << "checks: " << checks.size() << "  unsatisfied: " << out_.report.failures()
       << "  expected failures: " << expected << '\n';
    os << "status: " << (out_.report.all_satisfied() ? "PASS" : "FAIL") << "\n\n";
    for (const auto& [index, label] : stage_files_) {
      std::size_t n = 0;
      std::size_t bad = 0;
      for (const auto& c : checks) {
        if (c.stage != label) continue;
        ++n;
        bad += c.satisfied() ? 0 : 1;
      }
      os << two_digits(index) << ' ' << label << ": " << n << " checks, " << bad << " unsatisfied\n";
    }
    auto list = [&](const char* title, bool want_expected) {
      bool any = false;
      for (const auto& c : checks) {
        const bool show = want_expected ? c.expected_fail : !c.satisfied();
        if (!show) continue;
        if (!any) os << '\n' << title << ":\n";
        any = true;
        os << "  " << c.key() << " value=" << format_double(c.value) << ' ' << to_string(c.comparison) << ' '
           << format_double(c.tolerance) << (c.passed ? " (passed)" : " (failed)");
        if (!c.location.empty()) os << " at " << c.location;
        os << '\n';
      }
    };
    list("unsatisfied", false);
    list("expected failures", true);
    return os.str();
  }

  const Scenario& scenario_;
  PipelineOptions options_;
  RunOutput out_;
  std::vector<std::pair<std::size_t, std::string>> stage_files_;
  std::optional<StructuredForm> initial_;
  std::optional<Correction> correction_;
  std::shared_ptr<const BumpPair> bumps_;
  std::optional<Threshold> threshold_;
  std::optional<HomotopyTrace> trace_;
};

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"transport", "holonomy-scan", "kill-holonomy", "inflate",
                                              "interpolate", "verify", "dehn-demo"};
  return names;
}

std::vector<std::string> default_commands(const Scenario& s) {
  if (!s.commands.empty()) return s.commands;
  std::vector<std::string> out{"holonomy-scan", "kill-holonomy", "interpolate"};
  if (!s.verify.empty()) out.push_back("verify");
  return out;
}

RunOutput run_commands(const Scenario& s, const std::vector<std::string>& commands, const CommandOptions& options) {
  Session session(s);
  session.commands = commands;
  for (const auto& c : commands) session.run(c, options);
  return session.finish();
}

void write_output(const RunOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  for (const auto& [rel, content] : out.files) {
    const fs::path p = fs::path(dir) / rel;
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw PreconditionError("cannot write '" + p.string() + "'");
    f << content;
  }
}

}  // namespace hforge
