#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "heis/sampled.hpp"

namespace heis {

/// Identifier of a dyadic cube: level plus per-axis indices. The x/y axes
/// halve per level and the t axis quarters, matching the group dilations, so
/// each cube has 2^Q children and |child| = 2^{-Q} |parent|.
struct CubeId {
  int level = 0;
  std::vector<std::int64_t> idx;  // size 2n+1 (Heisenberg) / n (abelian)
};

/// Inner/outer Koranyi-ball certificate of a cube: B(center, r1) inside the
/// cube, the cube inside B(center, r2).
struct CubeCertificate {
  double r1 = 0.0;
  double r2 = 0.0;
  double nominal = 0.0;  // 2^{-level} * box scale, the comparison yardstick
};

/// Implicit nested partition of a coordinate box. Cubes are never
/// materialized: geometry, parents, children and certificates are computed
/// from the integer indices, so deep systems stay cheap.
class DyadicSystem {
 public:
  DyadicSystem() = default;
  DyadicSystem(Mode mode, int n, Box box, int depth)
      : mode_(mode), n_(n), box_(std::move(box)), depth_(depth) {
    if (depth < 1) throw argument_error("DyadicSystem: depth >= 1 required");
    std::size_t expect = mode == Mode::heisenberg ? static_cast<std::size_t>(2 * n + 1)
                                                  : static_cast<std::size_t>(n);
    if (box_.lo.size() != expect) throw argument_error("DyadicSystem: box dimension mismatch");
    scale0_ = 0.0;
    for (std::size_t a = 0; a + (mode == Mode::heisenberg ? 1u : 0u) < box_.dims(); ++a)
      scale0_ = std::max(scale0_, 0.5 * box_.side(a));
    if (mode == Mode::abelian) scale0_ = 0.5 * box_.side(0);
  }

  Mode mode() const { return mode_; }
  int n() const { return n_; }
  int depth() const { return depth_; }
  const Box& box() const { return box_; }

  /// Cells per axis at a level: 2^l on x/y axes, 4^l on the t axis.
  std::int64_t axis_cells(int level, std::size_t axis) const {
    bool t_axis = mode_ == Mode::heisenberg && axis == static_cast<std::size_t>(2 * n_);
    return t_axis ? (std::int64_t{1} << (2 * level)) : (std::int64_t{1} << level);
  }

  std::size_t dims() const { return box_.dims(); }

  /// Total cube count at a level (2^{Q l} in Heisenberg mode).
  double level_count(int level) const {
    double c = 1.0;
    for (std::size_t a = 0; a < dims(); ++a)
      c *= static_cast<double>(axis_cells(level, a));
    return c;
  }

  Box cube_bounds(const CubeId& id) const {
    check(id);
    Box b;
    b.lo.resize(dims());
    b.hi.resize(dims());
    for (std::size_t a = 0; a < dims(); ++a) {
      double w = box_.side(a) / static_cast<double>(axis_cells(id.level, a));
      b.lo[a] = box_.lo[a] + w * static_cast<double>(id.idx[a]);
      b.hi[a] = b.lo[a] + w;
    }
    return b;
  }

  CubeId parent(const CubeId& id) const {
    check(id);
    if (id.level == 0) throw argument_error("DyadicSystem: root has no parent");
    CubeId p;
    p.level = id.level - 1;
    p.idx.resize(dims());
    for (std::size_t a = 0; a < dims(); ++a) {
      bool t_axis = mode_ == Mode::heisenberg && a == static_cast<std::size_t>(2 * n_);
      p.idx[a] = id.idx[a] / (t_axis ? 4 : 2);
    }
    return p;
  }

  std::vector<CubeId> children(const CubeId& id) const {
    check(id);
    if (id.level >= depth_) throw argument_error("DyadicSystem: cube at max depth");
    std::vector<CubeId> out;
    std::vector<int> radix(dims());
    std::size_t total = 1;
    for (std::size_t a = 0; a < dims(); ++a) {
      bool t_axis = mode_ == Mode::heisenberg && a == static_cast<std::size_t>(2 * n_);
      radix[a] = t_axis ? 4 : 2;
      total *= static_cast<std::size_t>(radix[a]);
    }
    for (std::size_t k = 0; k < total; ++k) {
      CubeId c;
      c.level = id.level + 1;
      c.idx.resize(dims());
      std::size_t rem = k;
      for (std::size_t a = dims(); a-- > 0;) {
        auto r = static_cast<std::size_t>(radix[a]);
        c.idx[a] = id.idx[a] * radix[a] + static_cast<std::int64_t>(rem % r);
        rem /= r;
      }
      out.push_back(std::move(c));
    }
    return out;
  }

  /// Cube at `level` containing the coordinate point, if inside the box.
  bool locate(const double* p, int level, CubeId& out) const {
    out.level = level;
    out.idx.assign(dims(), 0);
    for (std::size_t a = 0; a < dims(); ++a) {
      double w = box_.side(a) / static_cast<double>(axis_cells(level, a));
      auto i = static_cast<std::int64_t>(std::floor((p[a] - box_.lo[a]) / w));
      if (i < 0 || i >= axis_cells(level, a)) return false;
      out.idx[a] = i;
    }
    return true;
  }

  std::vector<double> cube_center(const CubeId& id) const {
    Box b = cube_bounds(id);
    std::vector<double> c(dims());
    for (std::size_t a = 0; a < dims(); ++a) c[a] = 0.5 * (b.lo[a] + b.hi[a]);
    return c;
  }

  /// Ball certificate. The outer radius is exact (d_K^4 from the centre is
  /// convex over the box, so the max sits at a vertex); the inner radius
  /// accounts for the t-shear of translated Koranyi balls and is found by
  /// bisection on the safe extent bound.
  CubeCertificate certificate(const CubeId& id) const {
    Box b = cube_bounds(id);
    std::vector<double> c = cube_center(id);
    CubeCertificate cert;
    cert.nominal = scale0_ * std::pow(2.0, -id.level);
    if (mode_ == Mode::abelian) {
      double r1 = 1e300, r2 = 0.0;
      for (std::size_t a = 0; a < dims(); ++a) {
        r1 = std::min(r1, 0.5 * b.side(a));
        r2 += 0.25 * b.side(a) * b.side(a);
      }
      cert.r1 = r1;
      cert.r2 = std::sqrt(r2);
      return cert;
    }
    // outer: max Koranyi distance centre -> vertex
    const std::size_t d = dims();
    double r2 = 0.0;
    std::vector<double> v(d);
    double w[2 * 8 + 1];
    if (n_ > 8) throw argument_error("DyadicSystem: n > 8 unsupported");
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      for (std::size_t a = 0; a < d; ++a) v[a] = (mask >> a) & 1 ? b.hi[a] : b.lo[a];
      relative_point_raw(n_, v.data(), c.data(), w);
      r2 = std::max(r2, koranyi_norm_raw(n_, w));
    }
    cert.r2 = r2;
    // inner: largest r with per-axis extent r and t-extent r^2 + 2 r ||z_c||
    // inside the half-sides
    double half_xy = 1e300;
    for (std::size_t a = 0; a + 1 < d; ++a) half_xy = std::min(half_xy, 0.5 * b.side(a));
    double half_t = 0.5 * b.side(d - 1);
    double zn = 0.0;
    for (std::size_t a = 0; a + 1 < d; ++a) zn += c[a] * c[a];
    zn = std::sqrt(zn);
    double lo = 0.0, hi = half_xy;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      if (ball_t_extent(mid, zn) <= half_t)
        lo = mid;
      else
        hi = mid;
    }
    cert.r1 = lo;
    return cert;
  }

 private:
  void check(const CubeId& id) const {
    if (id.level < 0 || id.level > depth_) throw argument_error("DyadicSystem: bad level");
    if (id.idx.size() != dims()) throw argument_error("DyadicSystem: bad index size");
    for (std::size_t a = 0; a < dims(); ++a)
      if (id.idx[a] < 0 || id.idx[a] >= axis_cells(id.level, a))
        throw argument_error("DyadicSystem: index out of range");
  }

  Mode mode_ = Mode::heisenberg;
  int n_ = 1;
  Box box_;
  int depth_ = 1;
  double scale0_ = 1.0;
};

/// Per-level certificate statistics: the (4.4)-style constants actually
/// achieved. On coordinate boxes the inner radius degrades off the t-axis
/// (the shear term 2 r ||z_c|| dominates deep levels), so the constants are
/// reported per level rather than asserted level-uniform.
struct DyadicLevelStats {
  int level = 0;
  std::int64_t cubes_checked = 0;
  double min_r1 = 0.0, max_r1 = 0.0;
  double min_r2 = 0.0, max_r2 = 0.0;
  double max_ratio = 0.0;  // r2 / r1
  double nominal = 0.0;
  bool certificates_valid = true;  // r1 <= r2, both positive
};

inline std::vector<DyadicLevelStats> dyadic_certificate_report(const DyadicSystem& sys,
                                                               int exhaustive_level,
                                                               int samples_per_level,
                                                               std::uint64_t seed) {
  std::vector<DyadicLevelStats> out;
  Rng rng(seed);
  for (int l = 0; l <= sys.depth(); ++l) {
    DyadicLevelStats st;
    st.level = l;
    st.min_r1 = st.min_r2 = 1e300;
    auto visit = [&](const CubeId& id) {
      auto cert = sys.certificate(id);
      st.nominal = cert.nominal;
      st.min_r1 = std::min(st.min_r1, cert.r1);
      st.max_r1 = std::max(st.max_r1, cert.r1);
      st.min_r2 = std::min(st.min_r2, cert.r2);
      st.max_r2 = std::max(st.max_r2, cert.r2);
      if (!(cert.r1 > 0.0) || !(cert.r2 >= cert.r1)) st.certificates_valid = false;
      st.max_ratio = std::max(st.max_ratio, cert.r2 / cert.r1);
      ++st.cubes_checked;
    };
    double count = sys.level_count(l);
    if (l <= exhaustive_level && count <= 1e6) {
      // exhaustive walk
      CubeId id;
      id.level = l;
      id.idx.assign(sys.dims(), 0);
      while (true) {
        visit(id);
        std::size_t a = sys.dims();
        bool done = true;
        while (a-- > 0) {
          if (++id.idx[a] < sys.axis_cells(l, a)) {
            done = false;
            break;
          }
          id.idx[a] = 0;
        }
        if (done) break;
      }
    } else {
      for (int s = 0; s < samples_per_level; ++s) {
        CubeId id;
        id.level = l;
        id.idx.resize(sys.dims());
        for (std::size_t a = 0; a < sys.dims(); ++a)
          id.idx[a] = static_cast<std::int64_t>(
              rng.uniform_index(static_cast<std::uint64_t>(sys.axis_cells(l, a))));
        visit(id);
      }
    }
    out.push_back(st);
  }
  return out;
}

inline DyadicSystem build_dyadic_system(Mode mode, int n, Box box, int depth) {
  return DyadicSystem(mode, n, std::move(box), depth);
}

}  // namespace heis
