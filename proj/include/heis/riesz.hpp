#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "heis/group.hpp"
#include "heis/heat.hpp"
#include "heis/quadrature.hpp"

namespace heis {

/// phi = arg(||z||^2 + i t) in [-pi/2, pi/2]; e^{i phi} = d_K^{-2} (||z||^2 + i t).
struct PhaseAngle {
  double phi = 0.0;
};

inline PhaseAngle phase_of(const GroupPoint& g) {
  if (g.mode != Mode::heisenberg) throw argument_error("phase_of: Heisenberg mode only");
  double z2 = squared_z_norm(g);
  if (z2 == 0.0 && g.t == 0.0) throw argument_error("phase_of: undefined at the identity");
  return {std::atan2(g.t, z2)};
}

/// Value of a contour integral with branch-continuity monitoring: the flag is
/// true iff the phase of the square-root argument moved by less than pi/2
/// between every pair of adjacent scan nodes.
struct ContourValue {
  std::complex<double> value{};
  bool branch_ok = true;
};

namespace detail {

/// sinh(v)/v on the principal determination, series inside the guard window.
inline std::complex<double> sinhc(std::complex<double> v) {
  if (std::abs(v) < 1e-3) {
    std::complex<double> v2 = v * v;
    return 1.0 + v2 / 6.0 + v2 * v2 / 120.0;
  }
  return std::sinh(v) / v;
}

inline double contour_window(int n, std::complex<double> w, double target, double max_half) {
  // integrand decays like 2^n exp(-n lambda) (up to a sqrt(lambda) factor);
  // solve 2^n exp(-n L)/n < target with margin.
  double L = (std::log(1.0 / std::max(target, 1e-300)) + n * std::log(2.0) + 6.0) /
                 static_cast<double>(n) +
             std::abs(w.real());
  L = std::max(L, 12.0);
  if (L > max_half) throw truncation_error("contour window exceeds cfg.truncation");
  return L;
}

/// Max consecutive phase increment of lambda -> sinh(lambda+w)/(lambda+w)
/// along a dense ordered sweep of [-L, L].
inline double max_phase_increment(std::complex<double> w, double L, int scan_points) {
  double prev = std::arg(sinhc(std::complex<double>(-L, 0) + w));
  double worst = 0.0;
  for (int i = 1; i <= scan_points; ++i) {
    double lam = -L + 2.0 * L * i / scan_points;
    double cur = std::arg(sinhc(std::complex<double>(lam, 0) + w));
    double d = std::abs(cur - prev);
    if (d > M_PI) d = 2.0 * M_PI - d;  // wrapped
    worst = std::max(worst, d);
    prev = cur;
  }
  return worst;
}

}  // namespace detail

/// A_n(w) = Int_R [sinh(lambda+w)/(lambda+w)]^{1/2} cosh(lambda+w)
///          (cosh lambda)^{-n-3/2} dlambda, principal square root.
inline ContourValue contour_A(int n, std::complex<double> w, const QuadratureConfig& cfg = {}) {
  if (n < 1) throw argument_error("contour_A: n >= 1 required");
  if (std::abs(w.imag()) > M_PI / 2 + 1e-9)
    throw argument_error("contour_A: |Im w| <= pi/2 required");
  double target = std::max(cfg.abs_tol, cfg.rel_tol) / 10.0;
  double L = detail::contour_window(n, w, target, cfg.truncation);
  ContourValue out;
  out.branch_ok = detail::max_phase_increment(w, L, 4096) < M_PI / 2;
  auto f = [&](double lam) -> std::complex<double> {
    std::complex<double> v = std::complex<double>(lam, 0) + w;
    return std::sqrt(detail::sinhc(v)) * std::cosh(v) *
           std::pow(std::cosh(lam), -static_cast<double>(n) - 1.5);
  };
  out.value = integrate_adaptive<std::complex<double>>(f, -L, L, cfg).value;
  return out;
}

/// B_n(w) = Int_R (lambda+w) [sinh(lambda+w)/(lambda+w)]^{3/2}
///          (cosh lambda)^{-n-3/2} dlambda.
inline ContourValue contour_B(int n, std::complex<double> w, const QuadratureConfig& cfg = {}) {
  if (n < 1) throw argument_error("contour_B: n >= 1 required");
  if (std::abs(w.imag()) > M_PI / 2 + 1e-9)
    throw argument_error("contour_B: |Im w| <= pi/2 required");
  double target = std::max(cfg.abs_tol, cfg.rel_tol) / 10.0;
  double L = detail::contour_window(n, w, target, cfg.truncation);
  ContourValue out;
  out.branch_ok = detail::max_phase_increment(w, L, 4096) < M_PI / 2;
  auto f = [&](double lam) -> std::complex<double> {
    std::complex<double> v = std::complex<double>(lam, 0) + w;
    std::complex<double> u = detail::sinhc(v);
    return v * u * std::sqrt(u) * std::pow(std::cosh(lam), -static_cast<double>(n) - 1.5);
  };
  out.value = integrate_adaptive<std::complex<double>>(f, -L, L, cfg).value;
  return out;
}

namespace detail {

/// Natural cubic spline on a uniform grid.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(double x0, double dx, std::vector<double> y) : x0_(x0), dx_(dx), y_(std::move(y)) {
    const std::size_t n = y_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> diag(n, 4.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i)
      rhs[i] = 6.0 * (y_[i - 1] - 2.0 * y_[i] + y_[i + 1]) / (dx_ * dx_);
    // Thomas on the interior (natural: m_0 = m_{n-1} = 0)
    for (std::size_t i = 2; i + 1 < n; ++i) {
      double w = 1.0 / diag[i - 1];
      diag[i] -= w;
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      double upper = (i + 2 < n) ? m_[i + 1] : 0.0;
      m_[i] = (rhs[i] - upper) / diag[i];
      if (i == 1) break;
    }
  }

  double operator()(double x) const {
    const std::size_t n = y_.size();
    double u = (x - x0_) / dx_;
    auto k = static_cast<std::ptrdiff_t>(std::floor(u));
    k = std::max<std::ptrdiff_t>(0, std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(n) - 2));
    double s = x - (x0_ + static_cast<double>(k) * dx_);
    std::size_t i = static_cast<std::size_t>(k);
    double a = (y_[i + 1] - y_[i]) / dx_ - dx_ * (2.0 * m_[i] + m_[i + 1]) / 6.0;
    return y_[i] + s * (a + s * (m_[i] / 2.0 + s * (m_[i + 1] - m_[i]) / (6.0 * dx_)));
  }

 private:
  double x0_ = 0.0, dx_ = 1.0;
  std::vector<double> y_, m_;
};

}  // namespace detail

/// Dense cache of A_n(i phi) (real on the segment) and Im B_n(i phi)
/// (B_n is purely imaginary there) with spline interpolation. The grid is
/// padded past +-pi/2, where the integrals remain analytic, so the endpoints
/// are interpolated at interior accuracy.
struct KernelTable {
  int n = 1;
  double max_structural_residual = 0.0;  // max |Im A|, |Re B| over the nodes
  bool branch_ok = true;
  detail::CubicSpline a_spline;  // phi -> A_n(i phi)
  detail::CubicSpline b_spline;  // phi -> Im B_n(i phi)

  double a(double phi) const { return a_spline(phi); }
  double b(double phi) const { return b_spline(phi); }

  static KernelTable build(int n, int nodes = 2049, QuadratureConfig cfg = {}) {
    if (nodes < 65) throw argument_error("KernelTable: need >= 65 nodes");
    const int pad = 6;
    const double dphi = M_PI / (nodes - 1);
    const double phi0 = -M_PI / 2 - pad * dphi;
    const int total = nodes + 2 * pad;
    std::vector<double> av(static_cast<std::size_t>(total)), bv(static_cast<std::size_t>(total));
    KernelTable kt;
    kt.n = n;
    std::vector<double> resid(static_cast<std::size_t>(total), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(total), 1);
    parallel_for(0, static_cast<std::size_t>(total), [&](std::size_t i) {
      double phi = phi0 + static_cast<double>(i) * dphi;
      // the padded nodes sit slightly outside the segment; the integrals are
      // still well-defined there (|Im w| < pi/2 + pad*dphi < pi)
      std::complex<double> w(0.0, phi);
      QuadratureConfig c = cfg;
      auto A = [&] {
        double target = std::max(c.abs_tol, c.rel_tol) / 10.0;
        double L = detail::contour_window(n, w, target, c.truncation);
        auto f = [&](double lam) -> std::complex<double> {
          std::complex<double> v = std::complex<double>(lam, 0) + w;
          return std::sqrt(detail::sinhc(v)) * std::cosh(v) *
                 std::pow(std::cosh(lam), -static_cast<double>(n) - 1.5);
        };
        ContourValue cv;
        cv.branch_ok = detail::max_phase_increment(w, L, 2048) < M_PI / 2;
        cv.value = integrate_adaptive<std::complex<double>>(f, -L, L, c).value;
        return cv;
      }();
      auto B = [&] {
        double target = std::max(c.abs_tol, c.rel_tol) / 10.0;
        double L = detail::contour_window(n, w, target, c.truncation);
        auto f = [&](double lam) -> std::complex<double> {
          std::complex<double> v = std::complex<double>(lam, 0) + w;
          std::complex<double> u = detail::sinhc(v);
          return v * u * std::sqrt(u) * std::pow(std::cosh(lam), -static_cast<double>(n) - 1.5);
        };
        ContourValue cv;
        cv.branch_ok = detail::max_phase_increment(w, L, 2048) < M_PI / 2;
        cv.value = integrate_adaptive<std::complex<double>>(f, -L, L, c).value;
        return cv;
      }();
      av[i] = A.value.real();
      bv[i] = B.value.imag();
      resid[i] = std::max(std::abs(A.value.imag()), std::abs(B.value.real()));
      ok[i] = A.branch_ok && B.branch_ok;
    });
    for (std::size_t i = 0; i < av.size(); ++i) {
      kt.max_structural_residual = std::max(kt.max_structural_residual, resid[i]);
      if (!ok[i]) kt.branch_ok = false;
    }
    kt.a_spline = detail::CubicSpline(phi0, dphi, std::move(av));
    kt.b_spline = detail::CubicSpline(phi0, dphi, std::move(bv));
    return kt;
  }
};

/// Riesz kernel value. `raw` is d_K^{-Q-1} F_j (formula path, known up to one
/// global complex constant); `calibrated` is Re(c* raw) once a calibration is
/// supplied, NaN otherwise.
struct RieszKernelValue {
  std::complex<double> raw{};
  double calibrated = std::numeric_limits<double>::quiet_NaN();
  VectorFieldId j{};
};

/// Global-constant calibration record: c* fits the subordination path.
struct Calibration {
  VectorFieldId j{};
  std::complex<double> c{};
  double residual = 0.0;
  std::uint64_t id = 0;
};

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

/// F_j(g) = x_j A - i y_j B (X-type) or H_j(g) = y_j A + i x_j B (Y-type).
inline std::complex<double> f_combination(VectorFieldId j, double xc, double yc,
                                          std::complex<double> A, std::complex<double> B) {
  const std::complex<double> I(0.0, 1.0);
  return j.is_x() ? xc * A - I * yc * B : yc * A + I * xc * B;
}

}  // namespace detail

/// Formula path for K_j: raw = d_K(g)^{-Q-1} F_j(g). Uses the table when
/// given (A real, B purely imaginary on the segment), direct contour
/// integrals otherwise.
inline RieszKernelValue riesz_formula_eval(VectorFieldId j, const GroupPoint& g,
                                           const QuadratureConfig& cfg = {},
                                           const KernelTable* table = nullptr,
                                           const Calibration* calib = nullptr) {
  j.validate();
  if (g.mode != Mode::heisenberg) throw argument_error("riesz_formula_eval: Heisenberg only");
  const int n = g.n();
  if (j.n != n) throw argument_error("riesz_formula_eval: field/point dimension mismatch");
  double d = koranyi_norm(g);
  if (d == 0.0) throw argument_error("riesz_formula_eval: undefined at the identity");
  double phi = phase_of(g).phi;
  const int c = j.coord();
  double xc = g.x[static_cast<std::size_t>(c)];
  double yc = g.y[static_cast<std::size_t>(c)];
  std::complex<double> A, B;
  if (table) {
    if (table->n != n) throw argument_error("riesz_formula_eval: table dimension mismatch");
    A = table->a(phi);
    B = std::complex<double>(0.0, table->b(phi));
  } else {
    auto ca = contour_A(n, std::complex<double>(0.0, phi), cfg);
    auto cb = contour_B(n, std::complex<double>(0.0, phi), cfg);
    if (!ca.branch_ok || !cb.branch_ok)
      throw branch_error("riesz_formula_eval: branch continuity violated");
    A = ca.value;
    B = cb.value;
  }
  RieszKernelValue out;
  out.j = j;
  const int Q = 2 * n + 2;
  out.raw = std::pow(d, -(Q + 1)) * detail::f_combination(j, xc, yc, A, B);
  if (calib) out.calibrated = (calib->c * out.raw).real();
  return out;
}

/// Subordination path: K_j(g) = pi^{-1/2} Int_0^inf h^{-1/2} X_j p_h(g) dh,
/// computed after the substitution h = e^u. Real by construction. Works in
/// both Heisenberg and abelian mode (abelian: Gaussian derivative inner).
inline double riesz_subordination_eval(VectorFieldId j, const GroupPoint& g,
                                       const QuadratureConfig& cfg = {}) {
  j.validate();
  double d = koranyi_norm(g);
  if (d == 0.0) throw argument_error("riesz_subordination_eval: undefined at the identity");
  const int Q = homogeneous_dimension(g.mode, g.n());
  const double centre = 2.0 * std::log(d);
  const double lo = centre - 34.0;
  const double hi = centre + std::max(16.0, 72.0 / (Q + 1));
  QuadratureConfig inner = cfg.with_tols(cfg.abs_tol * std::pow(d, -Q - 1) * 1e-2,
                                         std::min(cfg.rel_tol, 1e-9) * 1e-2);
  auto f = [&](double u) {
    double h = std::exp(u);
    return std::exp(0.5 * u) * heat_vector_field(j, g, h, inner);
  };
  QuadratureConfig outer = cfg.with_tols(cfg.abs_tol * std::pow(d, -Q), cfg.rel_tol);
  outer.node_budget = std::min(outer.node_budget, 40000);
  auto res = integrate_adaptive<double>(f, lo, hi, outer);
  if (!res.converged && res.error > 1e-5 * std::abs(res.value))
    throw truncation_error("riesz_subordination_eval: outer quadrature did not converge");
  return res.value / std::sqrt(M_PI);
}

/// Classical closed form on R^n:
/// K_j(x) = -Gamma((n+1)/2) pi^{-(n+1)/2} x_j |x|^{-(n+1)}.
inline double riesz_abelian_closed_form(VectorFieldId j, const std::vector<double>& x) {
  j.validate();
  const int n = static_cast<int>(x.size());
  if (!j.is_x()) throw argument_error("riesz_abelian_closed_form: X fields only");
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  if (r2 == 0.0) throw argument_error("riesz_abelian_closed_form: undefined at 0");
  double r = std::sqrt(r2);
  return -std::tgamma((n + 1) / 2.0) * std::pow(M_PI, -(n + 1) / 2.0) *
         x[static_cast<std::size_t>(j.coord())] * std::pow(r, -(n + 1));
}

/// Least-squares complex scalar c* minimizing sum |c raw(g) - subord(g)|^2.
inline Calibration calibrate_constant(VectorFieldId j, const std::vector<GroupPoint>& sample,
                                      const QuadratureConfig& cfg = {},
                                      const KernelTable* table = nullptr) {
  j.validate();
  if (sample.size() < 8) throw argument_error("calibrate_constant: need >= 8 sample points");
  std::vector<std::complex<double>> raws(sample.size());
  std::vector<double> subs(sample.size());
  parallel_for(0, sample.size(), [&](std::size_t i) {
    raws[i] = riesz_formula_eval(j, sample[i], cfg, table).raw;
    subs[i] = riesz_subordination_eval(j, sample[i], cfg);
  });
  std::complex<double> num{};
  double den = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    num += std::conj(raws[i]) * subs[i];
    den += std::norm(raws[i]);
    ss += subs[i] * subs[i];
  }
  if (den <= 1e-30 * ss || den == 0.0)
    throw calibration_error("calibrate_constant: raw values are degenerate");
  Calibration cal;
  cal.j = j;
  cal.c = num / den;
  double res2 = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) res2 += std::norm(cal.c * raws[i] - subs[i]);
  cal.residual = std::sqrt(res2 / std::max(ss, 1e-300));
  if (cal.residual > 1e-4)
    throw calibration_error("calibrate_constant: fit residual " + std::to_string(cal.residual) +
                            " exceeds 1e-4");
  struct {
    int n, idx;
    double cr, ci, res;
  } key{j.n, j.index, cal.c.real(), cal.c.imag(), cal.residual};
  cal.id = detail::fnv1a(&key, sizeof key);
  return cal;
}

/// Calibrated kernel bound to one field j: fast evaluation of
/// K_j(g, g') = Re(c*) d^{-Q-1} (x_j A(phi) + y_j Im B(phi)) through the table.
struct CalibratedKernel {
  std::shared_ptr<const KernelTable> table;
  Calibration calib;

  int n() const { return table->n; }
  VectorFieldId j() const { return calib.j; }

  /// Kernel at a relative point in flat layout [x.., y.., t] (size 2n+1).
  double eval_raw(const double* w) const {
    const int nn = table->n;
    double z2 = squared_z_norm_raw(nn, w);
    double t = w[2 * nn];
    double d4 = z2 * z2 + t * t;
    if (d4 == 0.0) throw argument_error("CalibratedKernel: undefined at the identity");
    double phi = std::atan2(t, z2);
    const int c = calib.j.coord();
    double xc = w[c];
    double yc = w[nn + c];
    double f = calib.j.is_x() ? xc * table->a(phi) + yc * table->b(phi)
                              : yc * table->a(phi) - xc * table->b(phi);
    // d^{-(Q+1)} = d4^{-(2n+3)/4} via two sqrts and an integer power
    double dinv = 1.0 / std::sqrt(std::sqrt(d4));
    double acc = 1.0, base = dinv;
    for (int e = 2 * nn + 3; e; e >>= 1) {
      if (e & 1) acc *= base;
      base *= base;
    }
    return calib.c.real() * acc * f;
  }

  double eval(const GroupPoint& w) const {
    std::vector<double> flat(static_cast<std::size_t>(2 * w.n() + 1));
    for (int k = 0; k < w.n(); ++k) {
      flat[static_cast<std::size_t>(k)] = w.x[static_cast<std::size_t>(k)];
      flat[static_cast<std::size_t>(w.n() + k)] = w.y[static_cast<std::size_t>(k)];
    }
    flat[static_cast<std::size_t>(2 * w.n())] = w.t;
    return eval_raw(flat.data());
  }

  /// K(g, g') = K(g'^{-1} o g).
  double eval_pair(const GroupPoint& g, const GroupPoint& gp) const {
    return eval(compose(inverse(gp), g));
  }
};

inline CalibratedKernel make_calibrated_kernel(VectorFieldId j,
                                               const std::vector<GroupPoint>& sample,
                                               const QuadratureConfig& cfg = {},
                                               std::shared_ptr<const KernelTable> table = nullptr) {
  if (!table) table = std::make_shared<KernelTable>(KernelTable::build(j.n, 2049, cfg));
  Calibration cal = calibrate_constant(j, sample, cfg, table.get());
  return CalibratedKernel{std::move(table), cal};
}

/// Default calibration sample: points spread over an annulus of the unit
/// sphere scale, avoiding the kernel's thin zero set.
inline std::vector<GroupPoint> default_calibration_sample(VectorFieldId j, int count,
                                                          std::uint64_t seed,
                                                          const KernelTable* table = nullptr) {
  Rng rng(seed);
  std::vector<GroupPoint> out;
  const int n = j.n;
  while (static_cast<int>(out.size()) < count) {
    GroupPoint g = GroupPoint::identity(Mode::heisenberg, n);
    for (auto& v : g.x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : g.y) v = rng.uniform(-1.0, 1.0);
    g.t = rng.uniform(-1.0, 1.0);
    double d = koranyi_norm(g);
    if (d < 0.3) continue;
    g = dilate(1.0 / d, g);  // unit sphere
    if (table) {
      double phi = phase_of(g).phi;
      const int c = j.coord();
      double f = j.is_x()
                     ? g.x[static_cast<std::size_t>(c)] * table->a(phi) +
                           g.y[static_cast<std::size_t>(c)] * table->b(phi)
                     : g.y[static_cast<std::size_t>(c)] * table->a(phi) -
                           g.x[static_cast<std::size_t>(c)] * table->b(phi);
      if (std::abs(f) < 0.2) continue;  // keep the fit well-conditioned
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// Roots of A_n(i phi) on [-pi/2, pi/2] by sign-change bracketing of the
/// (real) values and bisection; each root is validated against the modulus
/// threshold 1e-8 * max over the scan.
inline std::vector<PhaseAngle> zero_scan(int n, int grid, const QuadratureConfig& cfg = {}) {
  if (grid < 64) throw argument_error("zero_scan: grid >= 64 required");
  auto eval = [&](double phi) {
    auto cv = contour_A(n, std::complex<double>(0.0, phi), cfg);
    if (!cv.branch_ok) throw branch_error("zero_scan: branch failure at phi=" + std::to_string(phi));
    return cv.value;
  };
  std::vector<double> phis(static_cast<std::size_t>(grid) + 1);
  std::vector<std::complex<double>> vals(phis.size());
  for (std::size_t i = 0; i < phis.size(); ++i)
    phis[i] = -M_PI / 2 + M_PI * static_cast<double>(i) / grid;
  parallel_for(0, phis.size(), [&](std::size_t i) { vals[i] = eval(phis[i]); });
  double maxmod = 0.0;
  for (auto& v : vals) maxmod = std::max(maxmod, std::abs(v));
  for (auto& v : vals)
    if (std::abs(v.imag()) > 1e-7 * maxmod)
      throw numerical_error("zero_scan: A_n(i phi) failed the realness residual");
  std::vector<PhaseAngle> roots;
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
    double f0 = vals[i].real(), f1 = vals[i + 1].real();
    if (f0 == 0.0) {
      roots.push_back({phis[i]});
      continue;
    }
    if (f0 * f1 >= 0.0) continue;
    double a = phis[i], b = phis[i + 1], fa = f0;
    while (b - a > 1e-10) {
      double mid = 0.5 * (a + b);
      double fm = eval(mid).real();
      if (fa * fm <= 0.0)
        b = mid;
      else {
        a = mid;
        fa = fm;
      }
    }
    double root = 0.5 * (a + b);
    if (std::abs(eval(root)) < 1e-8 * maxmod) roots.push_back({root});
  }
  return roots;
}

/// Near-zero census of |K_j| on the unit Koranyi sphere. The zero set meets
/// every phase level along the direction where x_j A(phi) + y_j Im B(phi)
/// cancels (plus the |z_j| = 0 set), so "distance to locus" is measured
/// against that curve; the fraction below a cell-size-proportional threshold
/// must vanish under refinement (the zero set has measure zero).
struct NonvanishingReport {
  int grid = 0;
  double max_abs_kernel = 0.0;
  double fixed_threshold = 1e-6;
  double near_zero_fraction_fixed = 0.0;
  double adaptive_threshold = 0.0;
  double near_zero_fraction_adaptive = 0.0;
  double max_locus_distance = 0.0;  // over adaptive near-zero cells
  double cell_size = 0.0;
  std::vector<double> a_zeros;
};

inline NonvanishingReport nonvanishing_report(VectorFieldId j, int sphere_grid,
                                              const QuadratureConfig& cfg,
                                              const CalibratedKernel& kernel) {
  j.validate();
  if (sphere_grid < 32) throw argument_error("nonvanishing_report: sphere_grid >= 32 required");
  const int n = kernel.n();
  if (n != 1)
    throw argument_error("nonvanishing_report: structured sphere grid implemented for n=1");
  NonvanishingReport rep;
  rep.grid = sphere_grid;
  rep.cell_size = M_PI / sphere_grid;

  const int nphi = sphere_grid, ntheta = 2 * sphere_grid;
  std::vector<double> kv(static_cast<std::size_t>(nphi) * ntheta);
  std::vector<double> locus(kv.size());
  const auto& tab = *kernel.table;
  const double creal = kernel.calib.c.real();
  for (int a = 0; a < nphi; ++a) {
    double phi = -M_PI / 2 + M_PI * (a + 0.5) / nphi;
    double A = tab.a(phi), b = tab.b(phi);
    double zn = std::sqrt(std::cos(phi));
    // direction where the combination cancels: cos(t)A + sin(t)b = 0 for
    // X-type, sin(t)A - cos(t)b = 0 for Y-type
    double theta_star = j.is_x() ? std::atan2(-A, b) : std::atan2(b, A);
    for (int bth = 0; bth < ntheta; ++bth) {
      double theta = 2.0 * M_PI * (bth + 0.5) / ntheta;
      double xc = zn * std::cos(theta), yc = zn * std::sin(theta);
      double comb = j.is_x() ? xc * A + yc * b : yc * A - xc * b;
      double val = std::abs(creal * comb);  // d = 1 on the sphere
      std::size_t idx = static_cast<std::size_t>(a) * ntheta + static_cast<std::size_t>(bth);
      kv[idx] = val;
      double dth = std::remainder(theta - theta_star, M_PI);
      locus[idx] = std::min(zn, zn * std::abs(dth));
    }
  }
  (void)cfg;
  for (double v : kv) rep.max_abs_kernel = std::max(rep.max_abs_kernel, v);
  rep.adaptive_threshold = rep.max_abs_kernel * rep.cell_size;
  std::size_t cnt_fixed = 0, cnt_adapt = 0;
  for (std::size_t i = 0; i < kv.size(); ++i) {
    if (kv[i] < rep.fixed_threshold) ++cnt_fixed;
    if (kv[i] < rep.adaptive_threshold) {
      ++cnt_adapt;
      rep.max_locus_distance = std::max(rep.max_locus_distance, locus[i]);
    }
  }
  rep.near_zero_fraction_fixed = static_cast<double>(cnt_fixed) / static_cast<double>(kv.size());
  rep.near_zero_fraction_adaptive =
      static_cast<double>(cnt_adapt) / static_cast<double>(kv.size());
  rep.a_zeros.clear();
  for (auto r : zero_scan(n, std::max(128, sphere_grid), cfg)) rep.a_zeros.push_back(r.phi);
  return rep;
}

/// Empirical envelope constant: max over the unit sphere of |K_j|, so that
/// |K_j(g)| <= C_emp d_K(g)^{-Q} by homogeneity.
inline double kernel_envelope_constant(const CalibratedKernel& kernel, int grid = 256) {
  const auto& tab = *kernel.table;
  if (tab.n != 1) throw argument_error("kernel_envelope_constant: n=1 grids only");
  double creal = kernel.calib.c.real();
  double best = 0.0;
  for (int a = 0; a < grid; ++a) {
    double phi = -M_PI / 2 + M_PI * (a + 0.5) / grid;
    double A = tab.a(phi), b = tab.b(phi);
    double zn = std::sqrt(std::cos(phi));
    // max over theta of |x A + y b| = |z| * hypot(A, b)
    best = std::max(best, std::abs(creal) * zn * std::hypot(A, b));
  }
  return best;
}

}  // namespace heis
