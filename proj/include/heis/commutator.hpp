#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "heis/oscillation.hpp"
#include "heis/riesz.hpp"
#include "heis/sampled.hpp"
#include "heis/sector.hpp"

namespace heis {

/// Euclidean Riesz kernel in the same fast-evaluation clothing as the
/// calibrated Heisenberg kernel (relative point in flat layout, n coords).
struct AbelianRieszKernel {
  VectorFieldId j{};
  int n = 1;

  static constexpr Mode mode = Mode::abelian;

  double eval_raw(const double* w) const {
    double r2 = 0.0;
    for (int k = 0; k < n; ++k) r2 += w[k] * w[k];
    if (r2 == 0.0) throw argument_error("AbelianRieszKernel: undefined at 0");
    double r = std::sqrt(r2);
    return -std::tgamma((n + 1) / 2.0) * std::pow(M_PI, -(n + 1) / 2.0) *
           w[j.coord()] * std::pow(r, -(n + 1));
  }
};

namespace detail {

template <class Kernel>
Mode kernel_mode(const Kernel&) {
  if constexpr (std::is_same_v<Kernel, AbelianRieszKernel>)
    return Mode::abelian;
  else
    return Mode::heisenberg;
}

inline void relative_any(Mode mode, int n, const double* a, const double* b, double* w) {
  if (mode == Mode::abelian) {
    for (int k = 0; k < n; ++k) w[k] = a[k] - b[k];
  } else {
    relative_point_raw(n, a, b, w);
  }
}

inline double norm_any(Mode mode, int n, const double* w) {
  if (mode == Mode::abelian) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += w[k] * w[k];
    return std::sqrt(s);
  }
  return koranyi_norm_raw(n, w);
}

inline double point_distance(Mode mode, int n, const double* a, const double* b) {
  if (n > 8) throw argument_error("point_distance: n > 8 unsupported");
  double w[2 * 8 + 1];
  relative_any(mode, n, a, b, w);
  return norm_any(mode, n, w);
}

}  // namespace detail

/// Principal-value application of the Riesz transform on a grid:
/// far field (d > pv_cut) as a plain Riemann sum over the support of f,
/// near field (0 < d <= pv_cut) through the cancellation-corrected sum
/// sum K(g,g') (f(g') - f(g)), second order on smooth f.
template <class Kernel>
SampledFunction riesz_apply(const Kernel& kernel, const SampledFunction& f, double pv_cut) {
  Mode mode = detail::kernel_mode(kernel);
  if (mode != f.mode) throw argument_error("riesz_apply: kernel/grid mode mismatch");
  double max_sp = 0.0;
  for (std::size_t a = 0; a < f.dims(); ++a) max_sp = std::max(max_sp, f.spacing(a));
  if (!(pv_cut >= 2.0 * max_sp))
    throw argument_error("riesz_apply: pv_cut must be >= 2 grid spacings");
  const int n = f.n;
  const std::size_t dims = f.dims();
  const std::size_t N = f.size();

  // cell centres, flattened once
  std::vector<double> centers(N * dims);
  for (std::size_t i = 0; i < N; ++i) f.cell_center(i, &centers[i * dims]);

  std::vector<std::uint32_t> support;
  for (std::size_t i = 0; i < N; ++i)
    if (f.values[i] != 0.0) support.push_back(static_cast<std::uint32_t>(i));

  // near-field index offsets are cheapest rebuilt per output cell via a
  // bounding box (the t-extent depends on the cell's z through the shear)
  SampledFunction out = f;
  std::fill(out.values.begin(), out.values.end(), 0.0);

  parallel_for(0, N, [&](std::size_t i) {
    const double* gi = &centers[i * dims];
    double w[2 * 8 + 1];
    double far_acc = 0.0;
    for (auto s : support) {
      const double* cs = &centers[s * dims];
      detail::relative_any(mode, n, gi, cs, w);
      double d = detail::norm_any(mode, n, w);
      if (d <= pv_cut) continue;
      far_acc += kernel.eval_raw(w) * f.values[s];
    }
    // near annulus: all cells with 0 < d <= pv_cut
    double near_acc = 0.0;
    std::vector<int> lo(dims), hi(dims), idx(dims);
    bool empty = false;
    for (std::size_t a = 0; a < dims; ++a) {
      double ext = pv_cut;
      if (mode == Mode::heisenberg && a == static_cast<std::size_t>(2 * n)) {
        double zn = 0.0;
        for (int k = 0; k < 2 * n; ++k) zn += gi[k] * gi[k];
        ext = ball_t_extent(pv_cut, std::sqrt(zn));
      }
      double sp = f.spacing(a);
      lo[a] = std::max(0, static_cast<int>(std::floor((gi[a] - ext - f.box.lo[a]) / sp)));
      hi[a] = std::min(f.shape[a] - 1,
                       static_cast<int>(std::floor((gi[a] + ext - f.box.lo[a]) / sp)));
      if (lo[a] > hi[a]) empty = true;
    }
    if (!empty) {
      idx = lo;
      while (true) {
        std::size_t flat = f.flat_index(idx);
        if (flat != i) {
          const double* cs = &centers[flat * dims];
          detail::relative_any(mode, n, gi, cs, w);
          double d = detail::norm_any(mode, n, w);
          if (d > 0.0 && d <= pv_cut)
            near_acc += kernel.eval_raw(w) * (f.values[flat] - f.values[i]);
        }
        std::size_t a = dims;
        bool done = true;
        while (a-- > 0) {
          if (++idx[a] <= hi[a]) {
            done = false;
            break;
          }
          idx[a] = lo[a];
        }
        if (done) break;
      }
    }
    out.values[i] = (far_acc + near_acc) * f.cell_measure;
  });
  return out;
}

/// [b, R_j] f = b * R_j f - R_j(b f).
template <class Kernel>
SampledFunction commutator_apply(const Kernel& kernel, const SampledFunction& b,
                                 const SampledFunction& f, double pv_cut) {
  if (b.size() != f.size() || b.shape != f.shape)
    throw argument_error("commutator_apply: b and f must share the grid");
  SampledFunction bf = f;
  for (std::size_t i = 0; i < f.size(); ++i) bf.values[i] = b.values[i] * f.values[i];
  SampledFunction rf = riesz_apply(kernel, f, pv_cut);
  SampledFunction rbf = riesz_apply(kernel, bf, pv_cut);
  SampledFunction out = f;
  for (std::size_t i = 0; i < f.size(); ++i)
    out.values[i] = b.values[i] * rf.values[i] - rbf.values[i];
  return out;
}

/// Superlevel-set measures |{ |u| > lambda }| by cell counting, optionally
/// paired with the L log+ L functional of an input f at the same thresholds.
struct DistributionReport {
  std::vector<double> thresholds;
  std::vector<double> measures;
  std::vector<double> llogl;  // empty unless an input was supplied
};

inline double llogl_functional(const SampledFunction& f, double lambda) {
  if (!(lambda > 0.0)) throw argument_error("llogl_functional: lambda > 0 required");
  double s = 0.0;
  for (double v : f.values) {
    double r = std::abs(v) / lambda;
    if (r > 0.0) s += r * (1.0 + std::max(0.0, std::log(r)));
  }
  return s * f.cell_measure;
}

inline DistributionReport weak_l1_report(const SampledFunction& u,
                                         const std::vector<double>& thresholds,
                                         const SampledFunction* input = nullptr) {
  DistributionReport rep;
  rep.thresholds = thresholds;
  for (double lam : thresholds) {
    std::size_t cnt = 0;
    for (double v : u.values)
      if (std::abs(v) > lam) ++cnt;
    rep.measures.push_back(static_cast<double>(cnt) * u.cell_measure);
    if (input) rep.llogl.push_back(llogl_functional(*input, lam));
  }
  return rep;
}

/// phi = chi_{E2} - chi_{E1} built from the median split of b over the ball.
/// Exactly mean-zero on the grid (tie cells balance the two sides),
/// phi (b - m) >= 0 cellwise, and (1/|B|) Int phi b = M, the mean oscillation
/// of b about its median.
struct PhiFunction {
  SampledFunction phi;
  double M = 0.0;       // (1/|B|) Int phi (b - m) = (1/|B|) Int phi b
  double median = 0.0;
};

inline PhiFunction phi_test_function(const SampledFunction& b, const CellSet& ball_cells) {
  if (ball_cells.empty()) throw argument_error("phi_test_function: empty ball");
  PhiFunction out;
  out.phi = b;
  std::fill(out.phi.values.begin(), out.phi.values.end(), 0.0);
  double m = median(b, ball_cells);
  out.median = m;
  CellSet above, below, ties;
  for (auto i : ball_cells) {
    if (b.values[i] > m)
      above.push_back(i);
    else if (b.values[i] < m)
      below.push_back(i);
    else
      ties.push_back(i);
  }
  std::size_t half = ball_cells.size() / 2;
  std::size_t ti = 0;
  while (above.size() < half && ti < ties.size()) above.push_back(ties[ti++]);
  while (below.size() < half && ti < ties.size()) below.push_back(ties[ti++]);
  std::size_t k = std::min(above.size(), below.size());
  double acc = 0.0;
  for (std::size_t idx = 0; idx < k; ++idx) {
    out.phi.values[above[idx]] = 1.0;
    out.phi.values[below[idx]] = -1.0;
    acc += std::abs(b.values[above[idx]] - m) + std::abs(b.values[below[idx]] - m);
  }
  out.M = acc / static_cast<double>(ball_cells.size());
  return out;
}

/// psi = sgn(b) chi_F.
inline SampledFunction psi_test_function(const SampledFunction& b, const CellSet& f_cells) {
  SampledFunction psi = b;
  std::fill(psi.values.begin(), psi.values.end(), 0.0);
  for (auto i : f_cells) {
    double v = b.values[i];
    psi.values[i] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  }
  return psi;
}

/// A (1,q)-atom: ball-supported, mean zero, ||a||_q <= |B|^{1/q-1} in the
/// discrete norms.
struct Atom {
  SampledFunction a;
  CellSet support;
  std::vector<double> ball_center;
  double ball_radius = 0.0;
  double q = 2.0;  // INFINITY allowed
  double discrete_ball_measure = 0.0;
};

enum class AtomPattern { two_block, radial };

inline Atom make_atom(const SampledFunction& grid, const std::vector<double>& center,
                      double radius, AtomPattern pattern, double q) {
  Atom atom;
  atom.a = grid;
  std::fill(atom.a.values.begin(), atom.a.values.end(), 0.0);
  atom.ball_center = center;
  atom.ball_radius = radius;
  atom.q = q;
  atom.support = cells_in_ball(grid, center.data(), radius);
  if (atom.support.size() < 2) throw argument_error("make_atom: ball holds < 2 cells");
  const double meas = static_cast<double>(atom.support.size()) * grid.cell_measure;
  atom.discrete_ball_measure = meas;

  if (pattern == AtomPattern::two_block) {
    std::size_t half = atom.support.size() / 2;
    double v = 1.0 / meas;
    for (std::size_t i = 0; i < half; ++i) atom.a.values[atom.support[i]] = v;
    for (std::size_t i = 0; i < half; ++i)
      atom.a.values[atom.support[atom.support.size() - 1 - i]] = -v;
  } else {
    std::vector<double> c(grid.dims());
    CellSet inner;
    for (auto i : atom.support) {
      grid.cell_center(i, c.data());
      if (detail::point_distance(grid.mode, grid.n, c.data(), center.data()) < 0.5 * radius)
        inner.push_back(i);
    }
    if (inner.empty() || inner.size() == atom.support.size())
      return make_atom(grid, center, radius, AtomPattern::two_block, q);
    double n_in = static_cast<double>(inner.size());
    double n_out = static_cast<double>(atom.support.size()) - n_in;
    for (auto i : atom.support) atom.a.values[i] = -n_in / n_out;
    for (auto i : inner) atom.a.values[i] = 1.0;
  }

  // exact mean-zero at machine precision, then the size normalization
  double s = 0.0;
  for (auto i : atom.support) s += atom.a.values[i];
  double shift = s / static_cast<double>(atom.support.size());
  for (auto i : atom.support) atom.a.values[i] -= shift;
  double norm = atom.a.lp_norm(q);
  double target = std::pow(meas, (std::isinf(q) ? 0.0 : 1.0 / q) - 1.0);
  if (norm > 0.0) {
    double scale = target / norm;
    for (auto i : atom.support) atom.a.values[i] *= scale;
  }
  return atom;
}

/// Monte-Carlo integral of |K_j(., g_tilde)| over the truncated complement
/// {r_o r_B < d(c_B, .) <= far_radius}, dyadic shell by dyadic shell.
template <class Kernel>
double kernel_tail_integral(const Kernel& kernel, const GroupPoint& g_tilde,
                            const GroupPoint& ball_center, double inner_radius,
                            double far_radius, int mc_per_shell, std::uint64_t seed) {
  if (!(far_radius > inner_radius)) return 0.0;
  const int n = g_tilde.n();
  const int Q = homogeneous_dimension(g_tilde.mode, n);
  double v1 = koranyi_unit_ball_volume(g_tilde.mode, n);
  double total = 0.0;
  double R = inner_radius;
  std::uint64_t shell_idx = 0;
  while (R < far_radius) {
    double R2 = std::min(2.0 * R, far_radius);
    double acc = 0.0;
    int kept = 0;
    auto pts = ball_sample(ball_center, R2, mc_per_shell * 2, seed + 7919 * (shell_idx + 1));
    double w[2 * 8 + 1];
    std::vector<double> pa(static_cast<std::size_t>(2 * n + 1)), pb(pa.size());
    auto flatten = [&](const GroupPoint& g, std::vector<double>& f) {
      for (int k = 0; k < n; ++k) {
        f[static_cast<std::size_t>(k)] = g.x[static_cast<std::size_t>(k)];
        if (g.mode == Mode::heisenberg)
          f[static_cast<std::size_t>(n + k)] = g.y[static_cast<std::size_t>(k)];
      }
      if (g.mode == Mode::heisenberg) f[static_cast<std::size_t>(2 * n)] = g.t;
    };
    flatten(g_tilde, pb);
    for (const auto& p : pts) {
      if (kept >= mc_per_shell) break;
      if (koranyi_distance(p, ball_center) < R) continue;
      flatten(p, pa);
      detail::relative_any(g_tilde.mode, n, pa.data(), pb.data(), w);
      acc += std::abs(kernel.eval_raw(w));
      ++kept;
    }
    if (kept > 0) {
      double shell_vol = v1 * (std::pow(R2, Q) - std::pow(R, Q));
      total += acc / kept * shell_vol;
    }
    R = R2;
    ++shell_idx;
  }
  return total;
}

struct H1bResult {
  double value = 0.0;
  double outer_integral = 0.0;  // Int over (r_o B)^c of |K(., g_tilde)|, truncated
  double pairing = 0.0;         // |Int b a|
};

/// Proposition-6.1-style quantity: the truncated complement integral of the
/// kernel against |Int b a|. For mean-zero atoms and constant b the pairing
/// vanishes exactly; for non-orthogonal pairs the value grows like
/// log(far_radius) (the integral adds a fixed amount per dyadic shell).
template <class Kernel>
H1bResult h1b_condition(const Kernel& kernel, const SampledFunction& b, const Atom& atom,
                        const GroupPoint& g_tilde, double r_o, double far_radius,
                        int mc_per_shell = 2000, std::uint64_t seed = 1) {
  H1bResult res;
  double s = 0.0;
  for (auto i : atom.support) s += b.values[i] * atom.a.values[i];
  res.pairing = std::abs(s * b.cell_measure);
  GroupPoint center = GroupPoint::identity(g_tilde.mode, g_tilde.n());
  {
    GroupPoint c = center;
    for (int k = 0; k < c.n(); ++k) c.x[static_cast<std::size_t>(k)] = atom.ball_center[static_cast<std::size_t>(k)];
    if (c.mode == Mode::heisenberg) {
      for (int k = 0; k < c.n(); ++k)
        c.y[static_cast<std::size_t>(k)] = atom.ball_center[static_cast<std::size_t>(c.n() + k)];
      c.t = atom.ball_center[static_cast<std::size_t>(2 * c.n())];
    }
    center = c;
  }
  res.outer_integral = kernel_tail_integral(kernel, g_tilde, center, r_o * atom.ball_radius,
                                            far_radius, mc_per_shell, seed);
  res.value = res.outer_integral * res.pairing;
  return res;
}

struct LbResult {
  double value = 0.0;
  double oscillation = 0.0;     // (1/|B|) Int_B |b - b_B|
  double outer_pairing = 0.0;   // |Int_{(r_o B)^c} K(g_tilde, g') f(g') dg'|
};

/// Proposition-6.2-style quantity on a sampled f with bounded support.
template <class Kernel>
LbResult lb_condition(const Kernel& kernel, const SampledFunction& b, const CellSet& ball_cells,
                      const std::vector<double>& ball_center, double ball_radius,
                      const SampledFunction& f, const GroupPoint& g_tilde, double r_o,
                      double far_radius) {
  LbResult res;
  res.oscillation = mean_oscillation(b, ball_cells);
  const int n = f.n;
  std::vector<double> gt(f.dims());
  for (int k = 0; k < n; ++k) gt[static_cast<std::size_t>(k)] = g_tilde.x[static_cast<std::size_t>(k)];
  if (f.mode == Mode::heisenberg) {
    for (int k = 0; k < n; ++k)
      gt[static_cast<std::size_t>(n + k)] = g_tilde.y[static_cast<std::size_t>(k)];
    gt[static_cast<std::size_t>(2 * n)] = g_tilde.t;
  }
  double w[2 * 8 + 1];
  std::vector<double> c(f.dims());
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.values[i] == 0.0) continue;
    f.cell_center(i, c.data());
    double d = detail::point_distance(f.mode, n, c.data(), ball_center.data());
    if (d <= r_o * ball_radius || d > far_radius) continue;
    detail::relative_any(f.mode, n, gt.data(), c.data(), w);
    acc += kernel.eval_raw(w) * f.values[i];
  }
  res.outer_pairing = std::abs(acc * f.cell_measure);
  res.value = res.oscillation * res.outer_pairing;
  return res;
}

namespace detail {

/// Density at p of the cone proposal "u uniform in B(0,eps), log s uniform on
/// [s1, s2], p = base o delta_s(g_tilde o u)": the dilation fiber through p
/// contributes Int s^{-Q} / (s L |B_eps|) ds over the s-values whose rescaled
/// point lands inside the aperture ball.
inline double sector_proposal_density(const SectorRegion& region, const GroupPoint& p, double s1,
                                      double s2) {
  const auto& spec = region.spec;
  const int n = spec.g_tilde.n();
  const int Q = 2 * n + 2;
  GroupPoint w = compose(inverse(region.base), p);
  double D = koranyi_norm(w);
  if (D <= 0.0) return 0.0;
  double lo = std::max(s1, D / spec.beta * 0.98);
  double hi = std::min(s2, D / spec.alpha * 1.02);
  if (lo >= hi) return 0.0;
  auto inside = [&](double s) {
    return koranyi_distance(dilate(1.0 / s, w), spec.g_tilde) < spec.eps;
  };
  // locate the admissible s-intervals by a dense scan + bisection refinement
  const int kScan = 160;
  std::vector<double> grid(kScan + 1);
  std::vector<char> in(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    grid[static_cast<std::size_t>(i)] =
        lo * std::pow(hi / lo, static_cast<double>(i) / kScan);
    in[static_cast<std::size_t>(i)] = inside(grid[static_cast<std::size_t>(i)]) ? 1 : 0;
  }
  auto refine = [&](double a, double b, bool a_in) {
    for (int it = 0; it < 40; ++it) {
      double mid = std::sqrt(a * b);
      if (inside(mid) == a_in)
        a = mid;
      else
        b = mid;
    }
    return std::sqrt(a * b);
  };
  double L = std::log(s2 / s1);
  double ball = std::pow(spec.eps, Q) * koranyi_unit_ball_volume(Mode::heisenberg, n);
  double density = 0.0;
  double seg_start = 0.0;
  bool open = in[0];
  if (open) seg_start = grid[0];
  for (int i = 1; i <= kScan; ++i) {
    bool cur = in[static_cast<std::size_t>(i)];
    if (cur && !open) {
      seg_start = refine(grid[static_cast<std::size_t>(i - 1)], grid[static_cast<std::size_t>(i)],
                         false);
      open = true;
    } else if (!cur && open) {
      double seg_end = refine(grid[static_cast<std::size_t>(i - 1)],
                              grid[static_cast<std::size_t>(i)], true);
      density += (std::pow(seg_start, -Q) - std::pow(seg_end, -Q)) / Q;
      open = false;
    }
  }
  if (open) density += (std::pow(seg_start, -Q) - std::pow(hi, -Q)) / Q;
  return density / (L * ball);
}

}  // namespace detail

/// f_N driver: Int_{G cap B(base, N), d > inner_radius} |K(g_tilde, g')| dg'
/// by importance sampling on the cone parametrization (plain rejection would
/// almost never hit the sector, whose spherical footprint is ~1e-4). The
/// integrand is single-signed on the sector, so |Int| = Int |.|.
template <class Kernel>
double lb_sector_pairing(const Kernel& kernel, const SectorRegion& region,
                         const GroupPoint& g_tilde, double inner_radius, double N, int mc,
                         std::uint64_t seed) {
  const auto& spec = region.spec;
  const int n = spec.g_tilde.n();
  if (!(N > inner_radius)) return 0.0;
  double s1 = std::max(spec.r_o * region.scale / spec.alpha, inner_radius / (spec.beta * 1.05));
  double s2 = N / (spec.alpha * 0.95);
  if (s2 <= s1) return 0.0;
  Rng rng(seed);
  std::vector<double> pa(static_cast<std::size_t>(2 * n + 1)), pb(pa.size());
  auto flatten = [&](const GroupPoint& g, std::vector<double>& f) {
    for (int k = 0; k < n; ++k) {
      f[static_cast<std::size_t>(k)] = g.x[static_cast<std::size_t>(k)];
      f[static_cast<std::size_t>(n + k)] = g.y[static_cast<std::size_t>(k)];
    }
    f[static_cast<std::size_t>(2 * n)] = g.t;
  };
  flatten(g_tilde, pb);
  double w[2 * 8 + 1];
  GroupPoint u = GroupPoint::identity(Mode::heisenberg, n);
  double acc = 0.0;
  for (int i = 0; i < mc; ++i) {
    double s = s1 * std::pow(s2 / s1, rng.uniform01());
    do {
      for (int k = 0; k < n; ++k) {
        u.x[static_cast<std::size_t>(k)] = rng.uniform(-spec.eps, spec.eps);
        u.y[static_cast<std::size_t>(k)] = rng.uniform(-spec.eps, spec.eps);
      }
      u.t = rng.uniform(-spec.eps * spec.eps, spec.eps * spec.eps);
    } while (koranyi_norm(u) >= spec.eps);
    GroupPoint p = compose(region.base, dilate(s, compose(spec.g_tilde, u)));
    double d = koranyi_distance(p, region.base);
    if (d <= inner_radius || d >= N) continue;
    double q = detail::sector_proposal_density(region, p, s1, s2);
    if (q <= 0.0) continue;
    flatten(p, pa);
    detail::relative_any(g_tilde.mode, n, pb.data(), pa.data(), w);  // K(g_tilde, g')
    acc += std::abs(kernel.eval_raw(w)) / q;
  }
  return acc / mc;
}

struct Weak11Report {
  std::vector<double> eps;
  std::vector<double> far_error;       // max |comm(f_eps)| - |K||b-b(g')| over far cells
  std::vector<double> far_scale;       // max |K||b-b(g')| over the same cells
  DistributionReport limit_distribution;
};

/// Dilated-bump experiment: [b, R_j](f_eps^{g'}) converges pointwise to
/// |K_j(g, g')| |b(g) - b(g')| away from g'; the report tracks the far-field
/// error per eps and the superlevel measures of the limit object.
template <class Kernel>
Weak11Report weak11_experiment(const Kernel& kernel, const SampledFunction& b,
                               std::size_t gprime_cell, const std::vector<double>& eps_list,
                               double pv_cut, double far_min,
                               const std::vector<double>& thresholds) {
  Weak11Report rep;
  const int n = b.n;
  const std::size_t dims = b.dims();
  std::vector<double> gp(dims), c(dims);
  b.cell_center(gprime_cell, gp.data());
  double bg = b.values[gprime_cell];

  // limit object on the full grid
  SampledFunction limit = b;
  std::fill(limit.values.begin(), limit.values.end(), 0.0);
  double w[2 * 8 + 1];
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i == gprime_cell) continue;
    b.cell_center(i, c.data());
    detail::relative_any(b.mode, n, c.data(), gp.data(), w);
    limit.values[i] = std::abs(kernel.eval_raw(w)) * std::abs(b.values[i] - bg);
  }
  rep.limit_distribution = weak_l1_report(limit, thresholds);

  for (double eps : eps_list) {
    auto cells = cells_in_ball(b, gp.data(), eps);
    if (cells.size() < 3)
      throw argument_error("weak11_experiment: eps below the grid resolution");
    SampledFunction f = b;
    std::fill(f.values.begin(), f.values.end(), 0.0);
    double v = 1.0 / (static_cast<double>(cells.size()) * b.cell_measure);
    for (auto i : cells) f.values[i] = v;
    SampledFunction u = commutator_apply(kernel, b, f, pv_cut);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      b.cell_center(i, c.data());
      detail::relative_any(b.mode, n, c.data(), gp.data(), w);
      if (detail::norm_any(b.mode, n, w) < far_min) continue;
      err = std::max(err, std::abs(std::abs(u.values[i]) - limit.values[i]));
      scale = std::max(scale, limit.values[i]);
    }
    rep.eps.push_back(eps);
    rep.far_error.push_back(err);
    rep.far_scale.push_back(scale);
  }
  return rep;
}

struct ThetaFit {
  double theta = 0.0;
  double residual = 0.0;  // relative L2 residual of the through-origin fit
};

/// Least-squares theta with measure(lambda) ~ theta * llogl(f, lambda) over a
/// threshold ladder.
inline ThetaFit fit_theta(const DistributionReport& rep) {
  if (rep.llogl.size() != rep.measures.size() || rep.measures.empty())
    throw argument_error("fit_theta: report lacks llogl values");
  double num = 0.0, den = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < rep.measures.size(); ++i) {
    num += rep.llogl[i] * rep.measures[i];
    den += rep.llogl[i] * rep.llogl[i];
    ss += rep.measures[i] * rep.measures[i];
  }
  if (den == 0.0) throw argument_error("fit_theta: degenerate abscissae");
  ThetaFit out;
  out.theta = num / den;
  double r2 = 0.0;
  for (std::size_t i = 0; i < rep.measures.size(); ++i) {
    double r = rep.measures[i] - out.theta * rep.llogl[i];
    r2 += r * r;
  }
  out.residual = ss > 0 ? std::sqrt(r2 / ss) : 0.0;
  return out;
}

}  // namespace heis
