#pragma once

#include <array>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hforge {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
Vec<N> axpy(const Vec<N>& y, double a, const Vec<N>& k) {
  Vec<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + a * k[i];
  return out;
}

/// One classical Runge-Kutta step of dy/dt = f(t, y).
template <std::size_t N, class F>
Vec<N> rk4_step(const Vec<N>& y, double t, double h, F&& f) {
  const Vec<N> k1 = f(t, y);
  const Vec<N> k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
  const Vec<N> k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
  const Vec<N> k4 = f(t + h, axpy(y, h, k3));
  Vec<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

/// Integrates from t0 to t1 with exactly `steps` equal RK4 steps (t1 < t0 allowed).
template <std::size_t N, class F>
Vec<N> rk4_fixed(Vec<N> y, double t0, double t1, int steps, F&& f) {
  const double h = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) y = rk4_step<N>(y, t0 + i * h, h, f);
  return y;
}

/// Gauss-Legendre nodes and weights on [-1, 1], n in {8, 16}.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

/// Composite Gauss-Legendre integral of fn over [a, b] with `panels` equal panels.
double integrate_1d(const std::function<double(double)>& fn, double a, double b, int panels = 32,
                    int order = 16);

/// Composite Simpson rule with an even number of intervals >= n.
double simpson_1d(const std::function<double(double)>& fn, double a, double b, int n);

/// Thread count: explicit request if positive, else HOLONOMY_FORGE_THREADS, else hardware.
int resolve_threads(int requested);
void set_default_threads(int threads);
int default_threads();

/// Calls fn(i) for i in [0, n) on a pool of threads. Results must be written to
/// index-addressed storage by fn, which keeps merges deterministic. The first
/// exception thrown by any worker is rethrown on the caller's thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

/// Golden-section maximization of fn on [lo, hi].
double golden_maximize(const std::function<double(double)>& fn, double lo, double hi, double tol,
                       double* argmax = nullptr);

}  // namespace hforge
