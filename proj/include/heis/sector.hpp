#pragma once

#include <cmath>
#include <vector>

#include "heis/group.hpp"
#include "heis/riesz.hpp"

namespace heis {

/// Volume of the unit Koranyi ball: (pi^n / Gamma(n)) B(n/2, 3/2) on H^n
/// (= pi^2/2 for n=1), the Euclidean ball volume in abelian mode.
inline double koranyi_unit_ball_volume(Mode mode, int n) {
  if (mode == Mode::abelian)
    return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  double beta = std::tgamma(0.5 * n) * std::tgamma(1.5) / std::tgamma(0.5 * n + 1.5);
  return std::pow(M_PI, n) / std::tgamma(static_cast<double>(n)) * beta;
}

/// Constructive data of the twisted truncated sector: direction point on the
/// unit sphere, aperture, inner truncation radius and the sphere-image bounds
/// of the aperture ball.
struct SectorSpec {
  VectorFieldId j{};
  GroupPoint g_tilde;
  double eps = 0.0;
  double r_o = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double kernel_at_inv = 0.0;  // calibrated K_j(g_tilde^{-1})
  double c_rho = 1.0;
  std::uint64_t calibration_id = 0;
};

/// A translated/scaled instance of the sector: the set
/// base o union_{s >= r_o*scale/alpha} delta_s(B(g_tilde, eps)).
struct SectorRegion {
  SectorSpec spec;
  GroupPoint base;
  double scale = 1.0;
};

namespace detail {

inline std::vector<GroupPoint> sphere_grid_points(int n, int grid) {
  std::vector<GroupPoint> pts;
  if (n == 1) {
    for (int a = 0; a < grid; ++a) {
      double phi = -M_PI / 2 + M_PI * (a + 0.5) / grid;
      double zn = std::sqrt(std::cos(phi));
      for (int b = 0; b < 2 * grid; ++b) {
        double theta = 2.0 * M_PI * (b + 0.5) / (2 * grid);
        pts.push_back(GroupPoint::h1(zn * std::cos(theta), zn * std::sin(theta), std::sin(phi)));
      }
    }
    return pts;
  }
  // n >= 2: deterministic sampled sphere (fixed seed), grid^2 points
  Rng rng(0x5ec7a11dULL + static_cast<std::uint64_t>(n));
  while (static_cast<int>(pts.size()) < grid * grid) {
    GroupPoint g = GroupPoint::identity(Mode::heisenberg, n);
    for (auto& v : g.x) v = rng.normal();
    for (auto& v : g.y) v = rng.normal();
    g.t = rng.normal();
    double d = koranyi_norm(g);
    if (d < 1e-6) continue;
    pts.push_back(dilate(1.0 / d, g));
  }
  return pts;
}

}  // namespace detail

/// Direction-point search. g_tilde maximizes min(|K_j(.)|, |K_j(.^{-1})|)
/// over a unit-sphere grid, so that BOTH argument orders of the two-point
/// kernel carry the half-value bound (the pure-inverse argmax cannot control
/// the reverse order when |K(g_tilde)| is small; at the optimum for H^1 the
/// two coincide). eps is the largest dyadic 2^{-k} passing three sampled
/// gates:
///   1. half-value + constant sign on B(g_tilde^{-1}, 4 C_rho eps);
///   2. the same on points actually landed by the construction, i.e.
///      q^{-1} o delta_{1/s}(w) and delta_{1/s}(w^{-1}) o q with
///      q in B(g_tilde, eps), w in B(0,1), s >= r_o/alpha -- conjugation
///      moves these ~sqrt(eps) around the sphere while their norm stays
///      within 1 +- ~1.5 C_rho eps;
///   3. |K| d_K^Q >= 0.45 min-k0 on the landed points (the constant the
///      verification later measures).
/// r_o is the smallest power of two exceeding 1/eps.
inline SectorSpec find_direction_point(VectorFieldId j, int sphere_grid,
                                       const QuadratureConfig& cfg,
                                       const CalibratedKernel& kernel) {
  j.validate();
  (void)cfg;
  const int n = kernel.n();
  auto pts = detail::sphere_grid_points(n, sphere_grid);
  double best = 0.0;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double v = std::min(std::abs(kernel.eval(pts[i])), std::abs(kernel.eval(inverse(pts[i]))));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  if (best <= 0.0)
    throw numerical_error("find_direction_point: kernel degenerate on the sphere grid");

  SectorSpec spec;
  spec.j = j;
  spec.g_tilde = pts[best_i];
  spec.calibration_id = kernel.calib.id;
  spec.kernel_at_inv = kernel.eval(inverse(spec.g_tilde));
  spec.c_rho = metric_info(Mode::heisenberg, n).quasi_triangle_constant;
  const double k0 = best;
  const int Q = 2 * n + 2;

  GroupPoint gti = inverse(spec.g_tilde);
  const double sign_inv = spec.kernel_at_inv > 0 ? 1.0 : -1.0;
  double eps = 0.0;
  for (int k = 3; k <= 10; ++k) {
    double cand = std::pow(2.0, -k);
    double ball_r = 4.0 * spec.c_rho * cand;
    if (ball_r >= 0.95) continue;
    double r_o_cand = 2.0;
    while (r_o_cand <= 1.0 / cand) r_o_cand *= 2.0;

    bool pass = true;
    for (const auto& p :
         ball_sample(gti, ball_r, 512, 0x5ec70001ULL + static_cast<std::uint64_t>(k))) {
      double kv = kernel.eval(p);
      if (kv * sign_inv <= 0.0 || std::abs(kv) <= 0.5 * k0) {
        pass = false;
        break;
      }
    }
    if (pass) {
      Rng rng(0x5ec70003ULL + static_cast<std::uint64_t>(k));
      double s_lo = r_o_cand / std::max(0.5, 1.0 - spec.c_rho * cand);
      auto qs = ball_sample(spec.g_tilde, cand, 768, 0x5ec70004ULL + static_cast<std::uint64_t>(k));
      auto ws = ball_sample(GroupPoint::identity(Mode::heisenberg, n), 1.0, 768,
                            0x5ec70005ULL + static_cast<std::uint64_t>(k));
      double sign_f = 0.0, sign_b = 0.0;
      for (std::size_t i = 0; i < qs.size() && pass; ++i) {
        double s = s_lo * std::pow(100.0 * r_o_cand / s_lo, rng.uniform01());
        GroupPoint small = dilate(1.0 / s, ws[i]);
        GroupPoint v_f = compose(inverse(qs[i]), small);
        GroupPoint v_b = compose(inverse(small), qs[i]);
        for (int side = 0; side < 2; ++side) {
          const GroupPoint& v = side == 0 ? v_f : v_b;
          double& sgn = side == 0 ? sign_f : sign_b;
          double kv = kernel.eval(v);
          double dv = koranyi_norm(v);
          if (std::abs(kv) <= 0.5 * k0 || std::abs(kv) * std::pow(dv, Q) < 0.45 * k0) {
            pass = false;
            break;
          }
          if (sgn == 0.0) sgn = kv > 0 ? 1.0 : -1.0;
          if (kv * sgn <= 0.0) {
            pass = false;
            break;
          }
        }
      }
    }
    if (pass) {
      eps = cand;
      break;
    }
  }
  if (eps == 0.0)
    throw numerical_error("find_direction_point: no dyadic aperture satisfied the gates");
  spec.eps = eps;

  double amin = 1e300, amax = 0.0;
  for (const auto& p : ball_sample(spec.g_tilde, eps, 2048, 0x5ec70002ULL)) {
    double d = koranyi_norm(p);
    amin = std::min(amin, d);
    amax = std::max(amax, d);
  }
  spec.alpha = std::min(amin, 1.0);
  spec.beta = std::max(amax, 1.0);

  int gamma = 1;
  while (std::pow(2.0, gamma) <= 1.0 / eps) ++gamma;
  spec.r_o = std::pow(2.0, gamma);
  return spec;
}

/// Membership test: p is in the region iff p = base o delta_s(q) for some
/// s >= r_o*scale/alpha and q in B(g_tilde, eps). Solved by a bracketed 1-D
/// search over the dilation parameter.
inline bool sector_contains(const SectorRegion& region, const GroupPoint& p) {
  const auto& spec = region.spec;
  GroupPoint w = compose(inverse(region.base), p);
  double D = koranyi_norm(w);
  if (D <= 0.0) return false;
  double s_min = spec.r_o * region.scale / spec.alpha;
  double lo = std::max(s_min, D / spec.beta);
  double hi = D / spec.alpha;
  if (lo > hi * (1.0 + 1e-12)) return false;
  auto f = [&](double s) { return koranyi_distance(dilate(1.0 / s, w), spec.g_tilde); };
  // coarse log-spaced scan, then golden-section refinement around the best
  const int kScan = 48;
  double best_s = lo, best_f = f(lo);
  if (best_f < spec.eps) return true;
  for (int i = 1; i <= kScan; ++i) {
    double s = lo * std::pow(hi / lo, static_cast<double>(i) / kScan);
    double v = f(s);
    if (v < best_f) {
      best_f = v;
      best_s = s;
    }
    if (v < spec.eps) return true;
  }
  double a = std::max(lo, best_s / std::pow(hi / lo, 1.5 / kScan));
  double b = std::min(hi, best_s * std::pow(hi / lo, 1.5 / kScan));
  const double gr = 0.6180339887498949;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while ((b - a) > 1e-8 * std::max(1.0, best_s)) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
    if (std::min(f1, f2) < spec.eps) return true;
  }
  return std::min({best_f, f1, f2}) < spec.eps;
}

struct LowerBoundReport {
  double c_est = 0.0;          // min over pairs of |K| * d^Q, both orders
  bool sign_constant = false;  // each argument-order family single-signed
  double ratio_to_k0 = 0.0;    // c_est / |K_j(g_tilde^{-1})|
  int pairs = 0;
};

/// Draw points of the region, radially stratified in the dilation parameter
/// up to 100*r_o*scale.
inline std::vector<GroupPoint> sector_sample(const SectorRegion& region, int count,
                                             std::uint64_t seed) {
  const auto& spec = region.spec;
  Rng rng(seed);
  std::vector<GroupPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  double s_lo = spec.r_o * region.scale / spec.alpha;
  double s_hi = 100.0 * spec.r_o * region.scale;
  const int n = spec.g_tilde.n();
  GroupPoint q = GroupPoint::identity(Mode::heisenberg, n);
  while (static_cast<int>(out.size()) < count) {
    double s = s_lo * std::pow(s_hi / s_lo, rng.uniform01());
    for (int k = 0; k < n; ++k) {
      q.x[static_cast<std::size_t>(k)] = rng.uniform(-spec.eps, spec.eps);
      q.y[static_cast<std::size_t>(k)] = rng.uniform(-spec.eps, spec.eps);
    }
    q.t = rng.uniform(-spec.eps * spec.eps, spec.eps * spec.eps);
    if (koranyi_norm(q) >= spec.eps) continue;
    out.push_back(compose(region.base, dilate(s, compose(spec.g_tilde, q))));
  }
  return out;
}

/// Verify the kernel lower bound and sign constancy over sampled pairs
/// B(base, scale) x region, both argument orders.
inline LowerBoundReport lower_bound_verify(VectorFieldId j, const SectorRegion& region,
                                           int pair_count, std::uint64_t seed,
                                           const CalibratedKernel& kernel) {
  j.validate();
  const int n = region.spec.g_tilde.n();
  const int Q = 2 * n + 2;
  int g1_count = std::max(8, static_cast<int>(std::sqrt(static_cast<double>(pair_count) / 4.0)));
  int g2_count = std::max(8, pair_count / g1_count);
  auto g1s = ball_sample(region.base, region.scale, g1_count, seed ^ 0xabcdef12ULL);
  auto g2s = sector_sample(region, g2_count, seed ^ 0x12345678ULL);

  LowerBoundReport rep;
  rep.c_est = 1e300;
  int sign_fwd = 0, sign_bwd = 0;
  bool fwd_ok = true, bwd_ok = true;
  for (const auto& g1 : g1s) {
    for (const auto& g2 : g2s) {
      double dist = koranyi_distance(g1, g2);
      double kf = kernel.eval_pair(g1, g2);
      double kb = kernel.eval_pair(g2, g1);
      int sf = kf > 0 ? 1 : -1;
      int sb = kb > 0 ? 1 : -1;
      if (sign_fwd == 0) sign_fwd = sf;
      if (sign_bwd == 0) sign_bwd = sb;
      if (sf != sign_fwd || kf == 0.0) fwd_ok = false;
      if (sb != sign_bwd || kb == 0.0) bwd_ok = false;
      double prod = std::min(std::abs(kf), std::abs(kb)) * std::pow(dist, Q);
      rep.c_est = std::min(rep.c_est, prod);
      ++rep.pairs;
    }
  }
  rep.sign_constant = fwd_ok && bwd_ok;
  rep.ratio_to_k0 = rep.c_est / std::abs(region.spec.kernel_at_inv);
  if (!rep.sign_constant || rep.c_est <= 0.0)
    throw numerical_error("lower_bound_verify: sign violation or vanishing constant");
  return rep;
}

struct VolumeRatio {
  double radius = 0.0;
  double ratio = 0.0;    // |B(base, R) cap G| / R^Q
  double stderr_ = 0.0;  // binomial Monte-Carlo standard error
};

/// Monte-Carlo measure of B(base, R) cap G for each radius, reported as the
/// ratio against R^Q. The unit-ball volume enters in closed form.
inline std::vector<VolumeRatio> volume_regularity(const SectorRegion& region,
                                                  const std::vector<double>& radii, int mc_count,
                                                  std::uint64_t seed) {
  const int n = region.spec.g_tilde.n();
  const int Q = 2 * n + 2;
  double v1 = koranyi_unit_ball_volume(Mode::heisenberg, n);
  std::vector<VolumeRatio> out;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    double R = radii[ri];
    if (!(R > 2.0 * region.spec.r_o * region.scale))
      throw argument_error("volume_regularity: radii must exceed 2 r_o scale");
    auto pts = ball_sample(region.base, R, mc_count, seed + ri);
    std::vector<char> in(pts.size(), 0);
    parallel_for(0, pts.size(), [&](std::size_t i) {
      in[i] = sector_contains(region, pts[i]) ? 1 : 0;
    });
    std::size_t hits = 0;
    for (char c : in) hits += static_cast<std::size_t>(c);
    double frac = static_cast<double>(hits) / static_cast<double>(pts.size());
    VolumeRatio vr;
    vr.radius = R;
    // |B cap G| = frac * |B(base,R)| = frac * v1 * R^Q, so ratio = frac * v1
    vr.ratio = frac * v1;
    vr.stderr_ = v1 * std::sqrt(std::max(frac * (1.0 - frac), 1e-12) /
                                static_cast<double>(pts.size()));
    out.push_back(vr);
  }
  return out;
}

/// Corollary-style scaled region: inner truncation at r_o * r, lower-bound
/// guarantees for g1 in B(g, r) with the same constant.
inline SectorRegion scaled_sector(const SectorSpec& spec, const GroupPoint& g, double r) {
  if (!(r > 0.0)) throw argument_error("scaled_sector: r must be positive");
  return SectorRegion{spec, g, r};
}

}  // namespace heis
