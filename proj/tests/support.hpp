#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "hforge/expression.hpp"
#include "hforge/form.hpp"
#include "hforge/geometry.hpp"

namespace testing {

/// Seeded generator for the hand-rolled property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Twice the Pfaffian written out from the six coefficients, independent of the library.
inline double two_pf(const hforge::Form2Coefficients& c) {
  // order: xy, xr, xt, yr, yt, rt
  return 2.0 * (c[0] * c[5] - c[1] * c[4] + c[2] * c[3]);
}

inline hforge::Field field(const std::string& text) { return hforge::Expression::parse(text).to_field(); }

/// Form f dx^dy + sigma_std + dK ^ dx with K given as an expression.
inline hforge::StructuredForm form_with_k(const std::string& k, hforge::SupportBox box,
                                          const std::string& density = "cos(y)/2") {
  const auto f = hforge::Expression::parse(density);
  hforge::StructuredForm form([f](double x, double y) { return f.eval(x, y, 1.0, 0.0); }, hforge::Annulus{});
  form.initial.varying = field(k);
  form.initial.support = box;
  return form;
}

}  // namespace testing
