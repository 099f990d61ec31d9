#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <vector>

#include "heis/common.hpp"

namespace heis {

/// Which group the point lives on: the Heisenberg group H^n (coordinates
/// [x, y, t], step 2) or the abelian oracle R^n (coordinates [x], step 1).
enum class Mode { heisenberg, abelian };

/// A point of H^n (or of R^n in abelian mode). Value type, freely shareable.
struct GroupPoint {
  Mode mode = Mode::heisenberg;
  std::vector<double> x;
  std::vector<double> y;  // empty in abelian mode
  double t = 0.0;         // ignored in abelian mode

  GroupPoint() = default;
  GroupPoint(Mode m, std::vector<double> px, std::vector<double> py, double pt)
      : mode(m), x(std::move(px)), y(std::move(py)), t(pt) {}

  int n() const { return static_cast<int>(x.size()); }

  static GroupPoint identity(Mode m, int n) {
    GroupPoint g;
    g.mode = m;
    g.x.assign(static_cast<std::size_t>(n), 0.0);
    if (m == Mode::heisenberg) g.y.assign(static_cast<std::size_t>(n), 0.0);
    return g;
  }

  /// Convenience for H^1 / R^1 literals.
  static GroupPoint h1(double x0, double y0, double t0) {
    return GroupPoint(Mode::heisenberg, {x0}, {y0}, t0);
  }
  static GroupPoint r1(double x0) { return GroupPoint(Mode::abelian, {x0}, {}, 0.0); }

  bool same_shape(const GroupPoint& o) const {
    return mode == o.mode && x.size() == o.x.size();
  }
};

/// Metric data of the ambient group.
struct GroupMetricInfo {
  int n = 1;
  int Q = 4;  // homogeneous dimension: 2n+2 on H^n, n on R^n
  double quasi_triangle_constant = 1.0;
};

inline int homogeneous_dimension(Mode mode, int n) {
  return mode == Mode::heisenberg ? 2 * n + 2 : n;
}

namespace detail {
inline void check_shape(const GroupPoint& g, const GroupPoint& h, const char* op) {
  if (!g.same_shape(h)) throw argument_error(std::string(op) + ": mode/dimension mismatch");
}
}  // namespace detail

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// Group law. Heisenberg: [x,y,t] o [x',y',t'] =
/// [x+x', y+y', t+t' + 2<y,x'> - 2<x,y'>]. Abelian: componentwise sum.
inline GroupPoint compose(const GroupPoint& g, const GroupPoint& h) {
  detail::check_shape(g, h, "compose");
  GroupPoint out = g;
  for (std::size_t j = 0; j < g.x.size(); ++j) out.x[j] = g.x[j] + h.x[j];
  if (g.mode == Mode::heisenberg) {
    for (std::size_t j = 0; j < g.y.size(); ++j) out.y[j] = g.y[j] + h.y[j];
    out.t = g.t + h.t + 2.0 * dot(g.y, h.x) - 2.0 * dot(g.x, h.y);
  }
  return out;
}

/// [z,t]^{-1} = [-z,-t].
inline GroupPoint inverse(const GroupPoint& g) {
  GroupPoint out = g;
  for (auto& v : out.x) v = -v;
  for (auto& v : out.y) v = -v;
  out.t = -out.t;
  return out;
}

/// Anisotropic dilation: (x,y) scale by lambda, t by lambda^2.
inline GroupPoint dilate(double lambda, const GroupPoint& g) {
  if (!(lambda > 0.0)) throw argument_error("dilate: lambda must be positive");
  GroupPoint out = g;
  for (auto& v : out.x) v *= lambda;
  for (auto& v : out.y) v *= lambda;
  out.t *= lambda * lambda;
  return out;
}

inline double squared_z_norm(const GroupPoint& g) {
  double s = 0.0;
  for (double v : g.x) s += v * v;
  for (double v : g.y) s += v * v;
  return s;
}

/// Koranyi norm d_K(g) = (||z||^4 + t^2)^{1/4}; Euclidean norm in abelian mode.
inline double koranyi_norm(const GroupPoint& g) {
  double z2 = squared_z_norm(g);
  if (g.mode == Mode::abelian) return std::sqrt(z2);
  return std::pow(z2 * z2 + g.t * g.t, 0.25);
}

inline double koranyi_distance(const GroupPoint& g, const GroupPoint& h) {
  detail::check_shape(g, h, "koranyi_distance");
  return koranyi_norm(compose(inverse(h), g));
}

/// First-stratum left-invariant field: X_j (j in 1..n) or Y_j (j in n+1..2n).
struct VectorFieldId {
  int index = 1;  // 1-based, range 1..2n
  int n = 1;

  static VectorFieldId X(int j, int n) { return {j, n}; }
  static VectorFieldId Y(int j, int n) { return {n + j, n}; }

  bool is_x() const { return index <= n; }
  /// 0-based complex coordinate this field acts on.
  int coord() const { return (is_x() ? index : index - n) - 1; }

  void validate() const {
    if (n < 1 || index < 1 || index > 2 * n)
      throw argument_error("VectorFieldId: index out of range 1..2n");
  }
};

enum class DerivativePath { coordinate, curve };

/// X_j f(g) (or Y_j f) by second-order central differences, either through
/// the coordinate formula X_j = d/dx_j + 2 y_j d/dt or along the
/// left-invariant curve s -> g o gamma_j(s). Both agree to O(step^2).
template <typename F>
double apply_vector_field(VectorFieldId j, F&& f, const GroupPoint& g, double step,
                          DerivativePath path = DerivativePath::coordinate) {
  j.validate();
  if (!(step > 0.0)) throw argument_error("apply_vector_field: step must be positive");
  if (g.mode == Mode::heisenberg && j.n != g.n())
    throw argument_error("apply_vector_field: field/point dimension mismatch");
  const int c = j.coord();
  auto eval = [&](const GroupPoint& p) {
    double v = f(p);
    if (!std::isfinite(v)) throw numerical_error("apply_vector_field: non-finite f value");
    return v;
  };

  if (g.mode == Mode::abelian) {
    GroupPoint p = g, m = g;
    p.x[c] += step;
    m.x[c] -= step;
    return (eval(p) - eval(m)) / (2.0 * step);
  }

  if (path == DerivativePath::curve) {
    GroupPoint gamma = GroupPoint::identity(g.mode, g.n());
    GroupPoint gamma_m = gamma;
    if (j.is_x()) {
      gamma.x[c] = step;
      gamma_m.x[c] = -step;
    } else {
      gamma.y[c] = step;
      gamma_m.y[c] = -step;
    }
    return (eval(compose(g, gamma)) - eval(compose(g, gamma_m))) / (2.0 * step);
  }

  GroupPoint p = g, m = g;
  if (j.is_x()) {
    p.x[c] += step;
    m.x[c] -= step;
  } else {
    p.y[c] += step;
    m.y[c] -= step;
  }
  double d_coord = (eval(p) - eval(m)) / (2.0 * step);
  GroupPoint pt = g, mt = g;
  pt.t += step;
  mt.t -= step;
  double d_t = (eval(pt) - eval(mt)) / (2.0 * step);
  double slope = j.is_x() ? 2.0 * g.y[c] : -2.0 * g.x[c];
  return d_coord + slope * d_t;
}

inline double default_vector_field_step(const GroupPoint& g) {
  return 1e-5 * std::max(1.0, koranyi_norm(g));
}

/// Uniform sample of the Koranyi ball B(center, r) by rejection from the
/// enclosing coordinate box; left translation preserves Haar measure, so the
/// translated points are uniform in B(center, r). Deterministic per seed.
inline std::vector<GroupPoint> ball_sample(const GroupPoint& center, double r, int count,
                                           std::uint64_t seed) {
  if (!(r > 0.0)) throw argument_error("ball_sample: r must be positive");
  if (count < 0) throw argument_error("ball_sample: count must be >= 0");
  std::vector<GroupPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  Rng rng(seed);
  const int n = center.n();
  GroupPoint q = GroupPoint::identity(center.mode, n);
  while (static_cast<int>(out.size()) < count) {
    for (int j = 0; j < n; ++j) q.x[static_cast<std::size_t>(j)] = rng.uniform(-r, r);
    if (center.mode == Mode::heisenberg) {
      for (int j = 0; j < n; ++j) q.y[static_cast<std::size_t>(j)] = rng.uniform(-r, r);
      q.t = rng.uniform(-r * r, r * r);
    }
    if (koranyi_norm(q) < r) out.push_back(compose(center, q));
  }
  return out;
}

/// Acceptance fraction of the rejection sampler above (used for Monte-Carlo
/// ball-volume estimates): fraction of box draws that landed inside the ball.
inline double ball_rejection_acceptance(Mode mode, int n, double r, int trials,
                                        std::uint64_t seed) {
  Rng rng(seed);
  GroupPoint q = GroupPoint::identity(mode, n);
  int hits = 0;
  for (int i = 0; i < trials; ++i) {
    for (int j = 0; j < n; ++j) q.x[static_cast<std::size_t>(j)] = rng.uniform(-r, r);
    if (mode == Mode::heisenberg) {
      for (int j = 0; j < n; ++j) q.y[static_cast<std::size_t>(j)] = rng.uniform(-r, r);
      q.t = rng.uniform(-r * r, r * r);
    }
    if (koranyi_norm(q) < r) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

/// Volume of the unit Koranyi ball estimated by the rejection fraction.
/// Box volume is (2r)^{2n} * 2r^2 in Heisenberg mode, (2r)^n abelian.
inline double unit_ball_volume_mc(Mode mode, int n, int trials, std::uint64_t seed) {
  double frac = ball_rejection_acceptance(mode, n, 1.0, trials, seed);
  double box = mode == Mode::heisenberg ? std::pow(2.0, 2 * n) * 2.0 : std::pow(2.0, n);
  return frac * box;
}

/// Empirical quasi-triangle constant: max over sampled triples of
/// d(g1,g2) / (d(g1,g') + d(g',g2)), then a 1.05 safety factor. For the
/// Koranyi metric the true constant is 1; we report the measured one.
inline double estimate_quasi_triangle_constant(Mode mode, int n, int triples,
                                               std::uint64_t seed) {
  Rng rng(seed);
  auto draw = [&]() {
    GroupPoint g = GroupPoint::identity(mode, n);
    for (auto& v : g.x) v = rng.uniform(-2.0, 2.0);
    for (auto& v : g.y) v = rng.uniform(-2.0, 2.0);
    if (mode == Mode::heisenberg) g.t = rng.uniform(-4.0, 4.0);
    return g;
  };
  double worst = 0.0;
  for (int i = 0; i < triples; ++i) {
    GroupPoint a = draw(), b = draw(), c = draw();
    double lhs = koranyi_distance(a, b);
    double rhs = koranyi_distance(a, c) + koranyi_distance(c, b);
    if (rhs > 1e-12) worst = std::max(worst, lhs / rhs);
  }
  return worst * 1.05;
}

/// Cached metric info per (mode, n). The quasi-triangle constant is estimated
/// once from 10^6 triples and memoized.
inline GroupMetricInfo metric_info(Mode mode, int n, int triples = 1000000) {
  static std::map<std::pair<int, int>, GroupMetricInfo> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(static_cast<int>(mode), n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  GroupMetricInfo info;
  info.n = n;
  info.Q = homogeneous_dimension(mode, n);
  info.quasi_triangle_constant = estimate_quasi_triangle_constant(mode, n, triples, 20260810u);
  cache[key] = info;
  return info;
}

// ---------------------------------------------------------------------------
// Allocation-free helpers on flat coordinates [x_0..x_{n-1}, y_0.., t] for
// grid-heavy inner loops (Heisenberg layout; abelian uses the first n slots).
// ---------------------------------------------------------------------------

/// out = b^{-1} o a  (the kernel argument of K(a, b)), flat layout, size 2n+1.
inline void relative_point_raw(int n, const double* a, const double* b, double* out) {
  double cross = 0.0;
  for (int j = 0; j < n; ++j) {
    out[j] = a[j] - b[j];
    out[n + j] = a[n + j] - b[n + j];
    cross += -b[n + j] * a[j] + b[j] * a[n + j];
  }
  out[2 * n] = a[2 * n] - b[2 * n] + 2.0 * cross;
}

inline double squared_z_norm_raw(int n, const double* p) {
  double s = 0.0;
  for (int j = 0; j < 2 * n; ++j) s += p[j] * p[j];
  return s;
}

inline double koranyi_norm_raw(int n, const double* p) {
  double z2 = squared_z_norm_raw(n, p);
  double t = p[2 * n];
  return std::pow(z2 * z2 + t * t, 0.25);
}

}  // namespace heis
