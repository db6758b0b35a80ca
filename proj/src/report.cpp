#include "hforge/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "hforge/expression.hpp"

namespace hforge {

std::string to_string(Comparison c) {
  switch (c) {
    case Comparison::Less: return "lt";
    case Comparison::LessEqual: return "le";
    case Comparison::Greater: return "gt";
    case Comparison::GreaterEqual: return "ge";
    case Comparison::Info: return "info";
  }
  return "info";
}

Comparison comparison_from_string(const std::string& s) {
  if (s == "lt") return Comparison::Less;
  if (s == "le") return Comparison::LessEqual;
  if (s == "gt") return Comparison::Greater;
  if (s == "ge") return Comparison::GreaterEqual;
  if (s == "info") return Comparison::Info;
  throw ParseError("unknown comparison '" + s + "'", 0);
}

bool evaluate(double value, Comparison c, double tolerance) {
  switch (c) {
    case Comparison::Less: return value < tolerance;
    case Comparison::LessEqual: return value <= tolerance;
    case Comparison::Greater: return value > tolerance;
    case Comparison::GreaterEqual: return value >= tolerance;
    case Comparison::Info: return true;
  }
  return false;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError("bad number '" + s + "'", 0);
  return v;
}

Check& VerificationReport::add(const std::string& stage, const std::string& name, double value, Comparison c,
                               double tolerance, const std::string& location) {
  Check ch;
  ch.stage = stage;
  ch.name = name;
  ch.value = value;
  ch.tolerance = tolerance;
  ch.comparison = c;
  ch.passed = evaluate(value, c, tolerance);
  ch.location = location;
  checks_.push_back(ch);
  return checks_.back();
}

void VerificationReport::append(const VerificationReport& other) {
  checks_.insert(checks_.end(), other.checks_.begin(), other.checks_.end());
}

void VerificationReport::mark_expected_failures(const std::vector<std::string>& keys) {
  for (auto& c : checks_) {
    for (const auto& k : keys) {
      if (c.key() == k) c.expected_fail = true;
    }
  }
}

const Check* VerificationReport::find(const std::string& stage, const std::string& name) const {
  for (const auto& c : checks_) {
    if (c.stage == stage && c.name == name) return &c;
  }
  return nullptr;
}

bool VerificationReport::all_satisfied() const { return failures() == 0; }

std::size_t VerificationReport::failures() const {
  std::size_t n = 0;
  for (const auto& c : checks_) n += c.satisfied() ? 0 : 1;
  return n;
}

std::string VerificationReport::csv_header() {
  return "format_version,stage,check,value,tolerance,comparison,passed,expected_fail,location";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw ParseError("unterminated quote in CSV row", 0);
  out.push_back(cur);
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ParseError("bad boolean '" + s + "'", 0);
}

}  // namespace

std::string VerificationReport::to_csv() const {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (const auto& c : checks_) {
    os << kFormatVersion << ',' << csv_field(c.stage) << ',' << csv_field(c.name) << ',' << format_double(c.value)
       << ',' << format_double(c.tolerance) << ',' << to_string(c.comparison) << ',' << (c.passed ? "true" : "false")
       << ',' << (c.expected_fail ? "true" : "false") << ',' << csv_field(c.location) << '\n';
  }
  return os.str();
}

VerificationReport VerificationReport::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != csv_header()) throw ParseError("missing or unknown CSV header", 0);
  VerificationReport rep;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw ParseError("CSV row with " + std::to_string(f.size()) + " fields", 0);
    if (f[0] != std::to_string(kFormatVersion)) throw ParseError("unsupported format_version " + f[0], 0);
    Check c;
    c.stage = f[1];
    c.name = f[2];
    c.value = parse_double(f[3]);
    c.tolerance = parse_double(f[4]);
    c.comparison = comparison_from_string(f[5]);
    c.passed = parse_bool(f[6]);
    c.expected_fail = parse_bool(f[7]);
    c.location = f[8];
    rep.checks_.push_back(c);
  }
  return rep;
}

std::string VerificationReport::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks_) {
    nlohmann::ordered_json row;
    row["stage"] = c.stage;
    row["check"] = c.name;
    // Text keeps non-finite values and exact round trips.
    row["value"] = format_double(c.value);
    row["tolerance"] = format_double(c.tolerance);
    row["comparison"] = to_string(c.comparison);
    row["passed"] = c.passed;
    row["expected_fail"] = c.expected_fail;
    row["location"] = c.location;
    j["checks"].push_back(row);
  }
  return j.dump(2) + "\n";
}

VerificationReport VerificationReport::from_json(const std::string& text) {
  VerificationReport rep;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != kFormatVersion) throw ParseError("unsupported format_version", 0);
    for (const auto& row : j.at("checks")) {
      Check c;
      c.stage = row.at("stage").get<std::string>();
      c.name = row.at("check").get<std::string>();
      c.value = parse_double(row.at("value").get<std::string>());
      c.tolerance = parse_double(row.at("tolerance").get<std::string>());
      c.comparison = comparison_from_string(row.at("comparison").get<std::string>());
      c.passed = row.at("passed").get<bool>();
      c.expected_fail = row.at("expected_fail").get<bool>();
      c.location = row.at("location").get<std::string>();
      rep.checks_.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what(), 0);
  }
  return rep;
}

bool operator==(const VerificationReport& a, const VerificationReport& b) {
  if (a.checks_.size() != b.checks_.size()) return false;
  for (std::size_t i = 0; i < a.checks_.size(); ++i) {
    const Check& x = a.checks_[i];
    const Check& y = b.checks_[i];
    const bool same_value = (std::isnan(x.value) && std::isnan(y.value)) || x.value == y.value;
    const bool same_tol = (std::isnan(x.tolerance) && std::isnan(y.tolerance)) || x.tolerance == y.tolerance;
    if (x.stage != y.stage || x.name != y.name || !same_value || !same_tol || x.comparison != y.comparison ||
        x.passed != y.passed || x.expected_fail != y.expected_fail || x.location != y.location) {
      return false;
    }
  }
  return true;
}

}  // namespace hforge
