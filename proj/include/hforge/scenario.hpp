#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hforge/form.hpp"
#include "hforge/inflation.hpp"
#include "hforge/pipeline.hpp"

namespace hforge {

/// One separable term x(x) * y(y) * w(r, theta) of the initial Hamiltonian K.
struct ModeSpec {
  std::string x = "1";
  std::string y = "1";
  std::string w = "0";
};

/// A form to verify: c < 0 means the threshold constant, t scales the correction.
struct VerifySpec {
  std::string label;
  double c = 0.0;
  double t = 0.0;
};

struct TransportSpec {
  double y = 0.2;
  double x0 = 0.0;
  double x1 = 1.0;
  int markers = 8;
};

struct NumericsSpec {
  int steps_per_unit = 1024;
  double tol = 1e-10;
  int markers = 32;
  int grid = 64;
  int generator_per_unit = 256;
  double holonomy_tol = 1e-5;
  std::uint64_t seed = 1;
  int threads = 0;
};

/// Parsed scenario document; see docs/scenario_format.md for the schema.
struct Scenario {
  int format_version = 1;
  std::string name;
  std::string base_density = "cos(y)/2";
  Annulus annulus;
  SupportBox support{0.42, 0.58, -0.45, 0.45};
  std::vector<ModeSpec> modes;
  CorrectionGeometry correction;
  InflationGeometry caps;
  /// Inflation constant for kill-holonomy; negative selects the threshold constant.
  double inflation_c = -1.0;
  TransportSpec transport;
  bool expect_trivial_holonomy = false;
  std::vector<VerifySpec> verify;
  std::vector<std::string> expected_fail;
  std::vector<std::string> commands;
  NumericsSpec numerics;
};

/// Throws ParseError on malformed JSON, unknown keys, wrong types, bad expressions, or
/// expressions that mention variables outside their slot.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

/// The initial form: split with base density f plus dK ^ dx. Throws PreconditionError unless
/// f > 0 with total mass 1, K is supported in the declared box and constant in w off the
/// annulus, K(x, 0, .) is constant on E with zero x-mean at e, and f > dK/dy.
StructuredForm build_initial_form(const Scenario& s);

PipelineOptions pipeline_options(const Scenario& s);

/// Canonical JSON text of a structured form built from the scenario.
std::string form_to_json(const Scenario& s, const StructuredForm& form);

}  // namespace hforge
