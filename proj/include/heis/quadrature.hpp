#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <vector>

#include "heis/common.hpp"

namespace heis {

/// Knobs for every 1-D integral in the toolkit. `truncation` is the largest
/// admissible half-length of the integration window; evaluators pick the
/// actual window from analytic tail bounds and fail with truncation_error if
/// the bound cannot be met inside it.
struct QuadratureConfig {
  double truncation = 80.0;
  int node_budget = 400000;
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  double singular_guard = 1e-6;

  QuadratureConfig with_tols(double at, double rt) const {
    QuadratureConfig c = *this;
    c.abs_tol = at;
    c.rel_tol = rt;
    return c;
  }
};

template <typename T>
struct IntegrationResult {
  T value{};
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// Gauss-7 / Kronrod-15 nodes and weights on [-1, 1] (positive half).
inline constexpr double kGK15Nodes[8] = {
    0.99145537112081263920685469752633, 0.94910791234275852452618968404785,
    0.86486442335976907278971278864093, 0.74153118559939443986386477328079,
    0.58608723546769113029414483825873, 0.40584515137739716690660641207696,
    0.20778495500789846760068940377324, 0.0};
inline constexpr double kGK15WeightsK[8] = {
    0.02293532201052922496373200805897, 0.06309209262997855329070066318921,
    0.10479001032225018383987632254152, 0.14065325971552591874518959051024,
    0.16900472663926790282658342659855, 0.19035057806478540991325640242101,
    0.20443294007529889241416199923465, 0.20948214108472782801299917489171};
inline constexpr double kGK15WeightsG[4] = {
    0.12948496616886969327061143267908, 0.27970539148927666790146777142378,
    0.38183005050511894495036977548898, 0.41795918367346938775510204081633};

template <typename T, typename F>
void gk15(F&& f, double a, double b, T& value, double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T resk{};
  T resg{};
  for (int i = 0; i < 7; ++i) {
    T fl = f(c - h * kGK15Nodes[i]);
    T fr = f(c + h * kGK15Nodes[i]);
    resk += kGK15WeightsK[i] * (fl + fr);
    if (i % 2 == 1) resg += kGK15WeightsG[i / 2] * (fl + fr);
  }
  T fc = f(c);
  resk += kGK15WeightsK[7] * fc;
  resg += kGK15WeightsG[3] * fc;
  value = resk * h;
  error = std::abs(resk - resg) * h;
}

template <typename T>
struct Interval {
  double a, b, error;
  T value;
  bool operator<(const Interval& o) const { return error < o.error; }
};

}  // namespace detail

/// Adaptive Gauss-Kronrod over [a, b]; T is double or std::complex<double>.
template <typename T, typename F>
IntegrationResult<T> integrate_adaptive(F&& f, double a, double b, const QuadratureConfig& cfg) {
  IntegrationResult<T> out;
  if (!(b > a)) {
    out.converged = true;
    return out;
  }

  // Seed with several pieces so narrow features are seen before the error
  // heap settles.
  constexpr int kInitialPieces = 32;
  std::priority_queue<detail::Interval<T>> heap;
  T total{};
  double total_err = 0.0;
  double step = (b - a) / kInitialPieces;
  for (int i = 0; i < kInitialPieces; ++i) {
    double lo = a + i * step;
    double hi = i + 1 == kInitialPieces ? b : lo + step;
    T v;
    double e;
    detail::gk15(f, lo, hi, v, e);
    out.evaluations += 15;
    total += v;
    total_err += e;
    heap.push({lo, hi, e, v});
  }

  while (true) {
    double target = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total));
    if (total_err <= target) {
      out.converged = true;
      break;
    }
    if (out.evaluations + 30 > cfg.node_budget || heap.empty()) break;
    detail::Interval<T> worst = heap.top();
    double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // machine resolution
    heap.pop();
    total_err -= worst.error;
    total -= worst.value;
    for (auto [lo, hi] : {std::pair{worst.a, mid}, std::pair{mid, worst.b}}) {
      T v;
      double e;
      detail::gk15(f, lo, hi, v, e);
      out.evaluations += 15;
      total += v;
      total_err += e;
      heap.push({lo, hi, e, v});
    }
  }
  out.value = total;
  out.error = total_err;
  return out;
}

/// Integral of s^order * exp(-a s) over [L, +inf); the closed form behind the
/// analytic truncation bounds: exp(-aL) * sum_k order!/k! L^k / a^{order-k+1}.
inline double tail_poly_exp(int order, double a, double L) {
  if (!(a > 0.0)) return std::numeric_limits<double>::infinity();
  std::vector<double> fr(static_cast<std::size_t>(order) + 1, 1.0);  // order!/k!
  for (int k = order - 1; k >= 0; --k)
    fr[static_cast<std::size_t>(k)] = fr[static_cast<std::size_t>(k) + 1] * (k + 1);
  double sum = 0.0;
  double Lk = 1.0;
  for (int k = 0; k <= order; ++k) {
    sum += fr[static_cast<std::size_t>(k)] * Lk / std::pow(a, order - k + 1);
    Lk *= L;
  }
  return std::exp(-a * L) * sum;
}

}  // namespace heis
