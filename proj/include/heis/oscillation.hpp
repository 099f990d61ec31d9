#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "heis/dyadic.hpp"
#include "heis/sampled.hpp"
#include "heis/sector.hpp"

namespace heis {

using CellSet = std::vector<std::uint32_t>;

inline CellSet cells_in_cube(const SampledFunction& g, const DyadicSystem& sys,
                             const CubeId& cube) {
  Box b = sys.cube_bounds(cube);
  CellSet out;
  std::vector<double> c(g.dims());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.cell_center(i, c.data());
    if (b.contains(c.data())) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

inline double region_measure(const SampledFunction& g, const CellSet& region) {
  return static_cast<double>(region.size()) * g.cell_measure;
}

/// Median value of b over a region: the smallest m with
/// |{b < m}| <= |region|/2 and |{b > m}| <= |region|/2 (so both level sets
/// carry at least half the measure). Cells have equal measure, so this is
/// the (N-1)/2-th order statistic.
inline double median(const SampledFunction& b, const CellSet& region) {
  if (region.empty()) throw argument_error("median: empty region");
  std::vector<double> v;
  v.reserve(region.size());
  for (auto i : region) v.push_back(b.values[i]);
  std::size_t k = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

inline double mean_over(const SampledFunction& b, const CellSet& region) {
  if (region.empty()) throw argument_error("mean_over: empty region");
  double s = 0.0;
  for (auto i : region) s += b.values[i];
  return s / static_cast<double>(region.size());
}

/// (1/|B|) Int_B |b - b_B|.
inline double mean_oscillation(const SampledFunction& b, const CellSet& region) {
  double m = mean_over(b, region);
  double s = 0.0;
  for (auto i : region) s += std::abs(b.values[i] - m);
  return s / static_cast<double>(region.size());
}

/// A Muckenhoupt weight: strictly positive samples plus its cached A_p
/// constants.
struct Weight {
  SampledFunction w;
  std::map<double, double> ap_cache;

  void validate() const {
    for (double v : w.values)
      if (!(v > 0.0)) throw argument_error("Weight: values must be strictly positive");
  }
};

struct OscillationResult {
  double value = 0.0;
  std::size_t balls = 0;  // family size actually used
  int stride = 0;
  std::vector<double> radii;
};

/// sup over the ball family of the mean oscillation (BMO norm against the
/// stated family).
inline OscillationResult bmo_norm(const SampledFunction& b, const BallFamily& family) {
  OscillationResult out;
  out.stride = family.stride;
  out.radii = family.radii;
  for (const auto& ball : family.enumerate(b)) {
    auto region = cells_in_ball(b, ball.center.data(), ball.radius);
    if (region.empty()) continue;
    ++out.balls;
    out.value = std::max(out.value, mean_oscillation(b, region));
  }
  return out;
}

/// Weighted BMO norm: |B|-average replaced by nu(B) in the denominator.
inline OscillationResult bmo_norm_weighted(const SampledFunction& b, const Weight& nu,
                                           const BallFamily& family) {
  if (nu.w.size() != b.size()) throw argument_error("bmo_norm_weighted: grid mismatch");
  OscillationResult out;
  out.stride = family.stride;
  out.radii = family.radii;
  for (const auto& ball : family.enumerate(b)) {
    auto region = cells_in_ball(b, ball.center.data(), ball.radius);
    if (region.empty()) continue;
    ++out.balls;
    double bb = mean_over(b, region);
    double osc = 0.0, nub = 0.0;
    for (auto i : region) {
      osc += std::abs(b.values[i] - bb) * b.cell_measure;
      nub += nu.w.values[i] * b.cell_measure;
    }
    if (nub > 0.0) out.value = std::max(out.value, osc / nub);
  }
  return out;
}

/// [w]_{A_p} = sup_B (avg_B w) (avg_B w^{-1/(p-1)})^{p-1} over the family.
inline double ap_constant(Weight& w, double p, const BallFamily& family) {
  if (!(p > 1.0)) throw argument_error("ap_constant: p > 1 required");
  w.validate();
  auto it = w.ap_cache.find(p);
  if (it != w.ap_cache.end()) return it->second;
  double best = 0.0;
  for (const auto& ball : family.enumerate(w.w)) {
    auto region = cells_in_ball(w.w, ball.center.data(), ball.radius);
    if (region.empty()) continue;
    double a = 0.0, ainv = 0.0;
    for (auto i : region) {
      a += w.w.values[i];
      ainv += std::pow(w.w.values[i], -1.0 / (p - 1.0));
    }
    a /= static_cast<double>(region.size());
    ainv /= static_cast<double>(region.size());
    best = std::max(best, a * std::pow(ainv, p - 1.0));
  }
  w.ap_cache[p] = best;
  return best;
}

/// Local mean oscillation w_lambda(f; S) = inf_c ((f-c) chi_S)^*(lambda |S|).
/// On the grid this is half the length of the shortest value window holding
/// at least N - floor(lambda N) cells (the optimal c is the window centre).
inline double local_mean_oscillation(const SampledFunction& f, const CellSet& region,
                                     double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw argument_error("w_lambda: lambda in (0,1)");
  if (region.empty()) return 0.0;
  std::vector<double> v;
  v.reserve(region.size());
  for (auto i : region) v.push_back(f.values[i]);
  std::sort(v.begin(), v.end());
  const std::size_t N = v.size();
  auto drop = static_cast<std::size_t>(std::floor(lambda * static_cast<double>(N)));
  std::size_t needed = N - drop;
  if (needed < 1) needed = 1;
  double best = v.back() - v.front();
  for (std::size_t i = 0; i + needed <= N; ++i)
    best = std::min(best, v[i + needed - 1] - v[i]);
  return 0.5 * best;
}

/// Output of the E x F construction on a dyadic cube: sets certified to
/// realize the local oscillation against the kernel lower bound.
struct EfSetsResult {
  CellSet E, F;
  CellSet script_E, F_k0;
  double w_lambda = 0.0;
  double median_Fk0 = 0.0;
  double lambda = 0.0;
  bool prop2_ok = true;   // w <= |b(g)-b(g')| on E x F
  bool prop3_ok = true;   // (b(g)-b(g')) K(g,g') single-signed on E x F
  bool prop4_ok = true;   // |K(g,g')| rho^Q bounded below
  double prop4_c_est = 0.0;
  double prop1_constant = 0.0;  // |E x F| / (k0^Q |S|^2)
  std::size_t pairs_checked = 0;
};

/// The median-split construction: F_{k0} = k0 B cap G for the sector G based
/// at the cube's outer ball B, script_E the top-oscillation subset of S with
/// measure lambda |S|, E and F the sign-matched halves. lambda defaults to
/// 2^{-(Q+2)}.
///
/// The sector starts at distance r_o * r from the cube, so S and F_{k0} live
/// r_o apart in scale; they are therefore sampled on two grids of the same
/// underlying function: `b_near` resolves the cube, `b_far` covers k0 B.
/// E and script_E index b_near, F and F_k0 index b_far.
inline EfSetsResult ef_sets(VectorFieldId j, const SampledFunction& b_near,
                            const SampledFunction& b_far, const DyadicSystem& sys,
                            const CubeId& cube, double k0, const SectorSpec& spec,
                            const CalibratedKernel& kernel, double lambda = -1.0) {
  j.validate();
  if (b_near.mode != Mode::heisenberg || b_far.mode != Mode::heisenberg)
    throw argument_error("ef_sets: Heisenberg grids only");
  const int n = b_near.n;
  const int Q = 2 * n + 2;
  if (lambda <= 0.0) lambda = std::pow(2.0, -(Q + 2));
  if (!(k0 > spec.r_o)) throw argument_error("ef_sets: k0 must exceed r_o");

  EfSetsResult out;
  out.lambda = lambda;
  CellSet s_cells = cells_in_cube(b_near, sys, cube);
  if (s_cells.empty()) throw argument_error("ef_sets: cube holds no grid cells");

  auto cert = sys.certificate(cube);
  auto center = sys.cube_center(cube);
  double r = cert.r2;

  GroupPoint base = GroupPoint::identity(Mode::heisenberg, n);
  for (int k = 0; k < n; ++k) {
    base.x[static_cast<std::size_t>(k)] = center[static_cast<std::size_t>(k)];
    base.y[static_cast<std::size_t>(k)] = center[static_cast<std::size_t>(n + k)];
  }
  base.t = center[static_cast<std::size_t>(2 * n)];
  SectorRegion region = scaled_sector(spec, base, r);

  // F_{k0} = k0 B cap G, within the far grid
  auto ball_cells = cells_in_ball(b_far, center.data(), k0 * r);
  std::vector<char> in_sector(ball_cells.size(), 0);
  parallel_for(0, ball_cells.size(), [&](std::size_t i) {
    in_sector[i] = sector_contains(region, b_far.cell_point(ball_cells[i])) ? 1 : 0;
  });
  for (std::size_t i = 0; i < ball_cells.size(); ++i)
    if (in_sector[i]) out.F_k0.push_back(ball_cells[i]);
  if (out.F_k0.empty())
    throw numerical_error("ef_sets: sector does not meet the far grid; enlarge its box");

  out.median_Fk0 = median(b_far, out.F_k0);
  out.w_lambda = local_mean_oscillation(b_near, s_cells, lambda);
  const double m = out.median_Fk0;

  // script_E: top floor(lambda N)+1 cells of S by |b - m|
  std::vector<std::uint32_t> sorted = s_cells;
  std::sort(sorted.begin(), sorted.end(), [&](std::uint32_t a, std::uint32_t c) {
    double da = std::abs(b_near.values[a] - m), dc = std::abs(b_near.values[c] - m);
    if (da != dc) return da > dc;
    return a < c;
  });
  auto k_e = static_cast<std::size_t>(
                 std::floor(lambda * static_cast<double>(s_cells.size()))) +
             1;
  k_e = std::min(k_e, sorted.size());
  out.script_E.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k_e));

  CellSet e_hi, e_lo;
  for (auto i : out.script_E) (b_near.values[i] >= m ? e_hi : e_lo).push_back(i);
  bool use_hi = e_hi.size() >= e_lo.size();
  const CellSet& e_side = use_hi ? e_hi : e_lo;
  std::size_t k_half = (out.script_E.size() + 1) / 2;
  k_half = std::min(k_half, e_side.size());
  out.E.assign(e_side.begin(), e_side.begin() + static_cast<std::ptrdiff_t>(k_half));

  // F from the opposite side of the median so b(g) - b(g') keeps one sign
  CellSet f_side;
  for (auto i : out.F_k0) {
    double v = b_far.values[i];
    if (use_hi ? v <= m : v >= m) f_side.push_back(i);
  }
  std::size_t k_f = std::min(f_side.size(), out.F_k0.size() / 2 + 1);
  out.F.assign(f_side.begin(), f_side.begin() + static_cast<std::ptrdiff_t>(k_f));
  if (out.F.empty()) throw numerical_error("ef_sets: median split produced an empty F");

  // property checks, cell by cell (subsampled above a pair cap)
  const std::size_t cap = 250000;
  std::size_t total = out.E.size() * out.F.size();
  std::size_t step = std::max<std::size_t>(1, total / cap);
  out.prop4_c_est = 1e300;
  int sign = 0;
  double w_buf[2 * 8 + 1];
  std::vector<double> ge(b_near.dims()), gf(b_far.dims());
  std::size_t pair_idx = 0;
  for (auto ie : out.E) {
    for (auto jf : out.F) {
      if (pair_idx++ % step != 0) continue;
      double diff = b_near.values[ie] - b_far.values[jf];
      if (std::abs(diff) + 1e-15 < out.w_lambda) out.prop2_ok = false;
      b_near.cell_center(ie, ge.data());
      b_far.cell_center(jf, gf.data());
      relative_point_raw(n, ge.data(), gf.data(), w_buf);
      double kv = kernel.eval_raw(w_buf);
      double prod_sign = diff * kv;
      if (prod_sign != 0.0) {
        int s = prod_sign > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        if (s != sign) out.prop3_ok = false;
      }
      double rho = koranyi_norm_raw(n, w_buf);
      out.prop4_c_est = std::min(out.prop4_c_est, std::abs(kv) * std::pow(rho, Q));
      ++out.pairs_checked;
    }
  }
  if (out.prop4_c_est <= 0.0 || out.pairs_checked == 0) out.prop4_ok = false;
  double s_measure = region_measure(b_near, s_cells);
  double exf = region_measure(b_near, out.E) * region_measure(b_far, out.F);
  out.prop1_constant = exf / (std::pow(k0, Q) * s_measure * s_measure);
  return out;
}

/// Single-grid convenience overload (the grid must cover k0 B).
inline EfSetsResult ef_sets(VectorFieldId j, const SampledFunction& b, const DyadicSystem& sys,
                            const CubeId& cube, double k0, const SectorSpec& spec,
                            const CalibratedKernel& kernel, double lambda = -1.0) {
  return ef_sets(j, b, b, sys, cube, k0, spec, kernel, lambda);
}

}  // namespace heis
