#pragma once

#include <cmath>
#include <complex>

#include "heis/group.hpp"
#include "heis/quadrature.hpp"

namespace heis {

/// Result of a heat-kernel evaluation. Heat kernels are strictly positive;
/// `positive` is cleared instead of throwing when the quadrature returns a
/// non-positive number (only reachable at extreme arguments where the true
/// value underflows).
struct HeatValue {
  double value = 0.0;
  double estimated_error = 0.0;
  double imag_residual = 0.0;  // |Im| of the lambda-integral, ~0 by symmetry
  bool within_tolerance = true;
  bool positive = true;
};

namespace detail {

// lambda*coth(lambda) and lambda/sinh(lambda) with the removable singularity
// at 0 replaced by 4th-order Taylor values inside the guard window.
inline void lambda_factors(double lam, double guard, double& lcoth, double& lsinh) {
  if (std::abs(lam) < guard) {
    double l2 = lam * lam;
    lcoth = 1.0 + l2 / 3.0 - l2 * l2 / 45.0;
    lsinh = 1.0 - l2 / 6.0 + 7.0 * l2 * l2 / 360.0;
  } else {
    lcoth = lam / std::tanh(lam);
    lsinh = lam / std::sinh(lam);
  }
}

/// Smallest window half-length making the analytic tail bound of the heat
/// integrand < target. Bound used: (lambda/sinh lambda)^n <= (2.4 lambda)^n
/// exp(-n lambda) for lambda >= 1, and exp(-lambda z2 coth / 4h) <=
/// exp(-lambda z2 / 4h). `extra_order` accounts for polynomial prefactors
/// (the vector-field integrand carries one more power of lambda).
inline double heat_window(int n, double z2, double h, double target, double max_half,
                          int extra_order, double prefactor) {
  double a = n + z2 / (4.0 * h);
  double coeff = prefactor * 2.0 * std::pow(2.4, n);
  double L = 5.0;
  while (L <= max_half) {
    double bound = coeff * tail_poly_exp(n + extra_order, a, L);
    if (bound < target) return L;
    L *= 1.4;
  }
  throw truncation_error("heat window: tail bound not met inside cfg.truncation");
}

}  // namespace detail

/// Heat kernel p_h(g) on H^n through the oscillatory-integral representation
///   p_h(g) = (2 (4 pi h)^{n+1})^{-1} Int_R exp((lambda/4h)(i t - ||z||^2
///            coth lambda)) (lambda/sinh lambda)^n dlambda.
/// The imaginary part integrates to zero by the lambda -> -lambda symmetry
/// and is kept as an internal consistency residual.
inline HeatValue heat_eval(const GroupPoint& g, double h, const QuadratureConfig& cfg = {}) {
  if (g.mode != Mode::heisenberg) throw argument_error("heat_eval: Heisenberg mode only");
  if (!(h > 0.0)) throw argument_error("heat_eval: h must be positive");
  const int n = g.n();
  if (n < 1) throw argument_error("heat_eval: n >= 1 required");
  const double z2 = squared_z_norm(g);
  const double t = g.t;
  const double pref = 1.0 / (2.0 * std::pow(4.0 * M_PI * h, n + 1));

  auto integrand = [&](double lam) -> std::complex<double> {
    double lcoth, lsinh;
    detail::lambda_factors(lam, cfg.singular_guard, lcoth, lsinh);
    std::complex<double> expo(-z2 * lcoth / (4.0 * h), lam * t / (4.0 * h));
    return std::exp(expo) * std::pow(lsinh, n);
  };

  // Two passes: a rough value fixes the relative-error target, then the
  // window is grown until the analytic tail bound sits below target/10.
  QuadratureConfig rough = cfg.with_tols(1e-8, 1e-6);
  auto first = integrate_adaptive<std::complex<double>>(integrand, -10.0, 10.0, rough);
  double scale = std::max(std::abs(first.value.real()), 1e-300);
  double target = std::max(cfg.abs_tol / pref, cfg.rel_tol * scale) / 10.0;
  double window = detail::heat_window(n, z2, h, target, cfg.truncation, 0, 1.0);

  QuadratureConfig inner = cfg;
  if (z2 == 0.0) inner.node_budget *= 2;  // pure-centre points: oscillation only
  auto res = integrate_adaptive<std::complex<double>>(integrand, -window, window, inner);

  HeatValue out;
  out.value = pref * res.value.real();
  out.estimated_error = pref * res.error + target * pref * 10.0;
  out.imag_residual = pref * std::abs(res.value.imag());
  out.within_tolerance = res.converged;
  out.positive = out.value > 0.0;
  return out;
}

/// Classical Gaussian heat kernel on R^n: (4 pi h)^{-n/2} exp(-|x|^2/4h).
inline double heat_eval_abelian(const std::vector<double>& x, double h) {
  if (!(h > 0.0)) throw argument_error("heat_eval_abelian: h must be positive");
  double x2 = 0.0;
  for (double v : x) x2 += v * v;
  return std::pow(4.0 * M_PI * h, -0.5 * static_cast<double>(x.size())) *
         std::exp(-x2 / (4.0 * h));
}

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  int samples = 0;
};

/// Importance-sampled Monte-Carlo mass of p_1 over the box [-half, half]^{2n+1}.
/// Proposal: z Gaussian (variance 2.2 per coordinate, slightly heavier than
/// the e^{-|z|^2/4} factor), t Laplace(2.5) (heavier than the e^{-pi|t|/4}
/// decay), so the weights stay bounded.
inline McEstimate heat_normalization_mc(int n, int samples, std::uint64_t seed,
                                        QuadratureConfig cfg = {}, double box_half = 12.0) {
  cfg.abs_tol = std::max(cfg.abs_tol, 1e-12);
  cfg.rel_tol = std::max(cfg.rel_tol, 1e-7);
  const double sigma2 = 2.2, beta = 2.5;
  const double gauss_norm = std::pow(2.0 * M_PI * sigma2, -0.5);
  Rng rng(seed);
  GroupPoint g = GroupPoint::identity(Mode::heisenberg, n);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    bool inside = true;
    double q = 1.0;
    for (int k = 0; k < 2 * n; ++k) {
      double v = rng.normal() * std::sqrt(sigma2);
      if (std::abs(v) > box_half) inside = false;
      q *= gauss_norm * std::exp(-v * v / (2.0 * sigma2));
      if (k < n)
        g.x[static_cast<std::size_t>(k)] = v;
      else
        g.y[static_cast<std::size_t>(k - n)] = v;
    }
    double u = rng.uniform01();
    double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    double t = -beta * std::log(std::max(1.0 - u, 1e-300)) * sign;
    if (std::abs(t) > box_half) inside = false;
    g.t = t;
    q *= std::exp(-std::abs(t) / beta) / (2.0 * beta);
    double w = 0.0;
    if (inside) w = std::max(heat_eval(g, 1.0, cfg).value, 0.0) / q;
    sum += w;
    sum2 += w * w;
  }
  McEstimate est;
  est.samples = samples;
  est.value = sum / samples;
  double var = std::max(sum2 / samples - est.value * est.value, 0.0);
  est.stderr_ = std::sqrt(var / samples);
  return est;
}

enum class HeatDerivativeMethod { analytic_integrand, finite_difference };

/// X_j p_h(g) (or Y_j p_h). Analytic mode differentiates under the integral
/// sign: the exponent contributes (-x_j lambda coth lambda + i y_j lambda)/2h
/// for X_j and (-y_j lambda coth lambda - i x_j lambda)/2h for Y_j.
inline double heat_vector_field(VectorFieldId j, const GroupPoint& g, double h,
                                const QuadratureConfig& cfg = {},
                                HeatDerivativeMethod method = HeatDerivativeMethod::analytic_integrand) {
  j.validate();
  if (!(h > 0.0)) throw argument_error("heat_vector_field: h must be positive");

  if (g.mode == Mode::abelian) {
    // d/dx_j of the Gaussian, exact.
    if (!j.is_x()) throw argument_error("heat_vector_field: abelian mode has X fields only");
    return -(g.x[static_cast<std::size_t>(j.coord())] / (2.0 * h)) * heat_eval_abelian(g.x, h);
  }

  if (method == HeatDerivativeMethod::finite_difference) {
    QuadratureConfig tight = cfg.with_tols(std::min(cfg.abs_tol, 1e-15), std::min(cfg.rel_tol, 1e-12));
    double step = 1e-4 * std::max(1.0, koranyi_norm(g));
    return apply_vector_field(
        j, [&](const GroupPoint& p) { return heat_eval(p, h, tight).value; }, g, step);
  }

  const int n = g.n();
  const int c = j.coord();
  const double z2 = squared_z_norm(g);
  const double t = g.t;
  const double xc = g.x[static_cast<std::size_t>(c)];
  const double yc = g.y[static_cast<std::size_t>(c)];
  const double pref = 1.0 / (2.0 * std::pow(4.0 * M_PI * h, n + 1));
  if (xc == 0.0 && yc == 0.0) return 0.0;  // derivative prefactor vanishes identically

  auto integrand = [&](double lam) -> std::complex<double> {
    double lcoth, lsinh;
    detail::lambda_factors(lam, cfg.singular_guard, lcoth, lsinh);
    std::complex<double> deriv =
        j.is_x() ? std::complex<double>(-xc * lcoth / (2.0 * h), yc * lam / (2.0 * h))
                 : std::complex<double>(-yc * lcoth / (2.0 * h), -xc * lam / (2.0 * h));
    std::complex<double> expo(-z2 * lcoth / (4.0 * h), lam * t / (4.0 * h));
    return deriv * std::exp(expo) * std::pow(lsinh, n);
  };

  QuadratureConfig rough = cfg.with_tols(1e-8, 1e-6);
  auto first = integrate_adaptive<std::complex<double>>(integrand, -10.0, 10.0, rough);
  double scale = std::max(std::abs(first.value.real()), 1e-300);
  double target = std::max(cfg.abs_tol / pref, cfg.rel_tol * scale) / 10.0;
  double coeff = (std::abs(xc) * 1.4 + std::abs(yc)) / (2.0 * h);  // coth <= 1.4 for lam >= 1
  double window = detail::heat_window(n, z2, h, target, cfg.truncation, 1, std::max(coeff, 1e-300));

  QuadratureConfig inner = cfg;
  if (z2 == 0.0) inner.node_budget *= 2;
  auto res = integrate_adaptive<std::complex<double>>(integrand, -window, window, inner);
  return pref * res.value.real();
}

}  // namespace heis
