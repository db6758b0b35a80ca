#pragma once

#include <string>
#include <vector>

namespace hforge {

inline constexpr int kFormatVersion = 1;

enum class Comparison { Less, LessEqual, Greater, GreaterEqual, Info };

std::string to_string(Comparison c);
Comparison comparison_from_string(const std::string& s);

/// One named check: passed is `value <cmp> tolerance`. Info rows always pass.
struct Check {
  std::string stage;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::Less;
  bool passed = false;
  bool expected_fail = false;
  std::string location;

  [[nodiscard]] std::string key() const { return stage + "/" + name; }
  /// An expected failure is satisfied when the check fails.
  [[nodiscard]] bool satisfied() const { return passed != expected_fail; }
};

bool evaluate(double value, Comparison c, double tolerance);

class VerificationReport {
 public:
  Check& add(const std::string& stage, const std::string& name, double value, Comparison c, double tolerance,
             const std::string& location = "");
  void append(const VerificationReport& other);
  /// Marks checks whose key appears in `keys` as expected failures.
  void mark_expected_failures(const std::vector<std::string>& keys);

  [[nodiscard]] const std::vector<Check>& checks() const { return checks_; }
  [[nodiscard]] const Check* find(const std::string& stage, const std::string& name) const;
  [[nodiscard]] bool all_satisfied() const;
  [[nodiscard]] std::size_t failures() const;

  static std::string csv_header();
  [[nodiscard]] std::string to_csv() const;
  static VerificationReport from_csv(const std::string& text);
  [[nodiscard]] std::string to_json() const;
  static VerificationReport from_json(const std::string& text);

  friend bool operator==(const VerificationReport& a, const VerificationReport& b);

 private:
  std::vector<Check> checks_;
};

/// Shortest decimal text that parses back to the same double ("inf", "-inf", "nan" otherwise).
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace hforge
