#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "heis/group.hpp"

namespace heis {

/// Axis-aligned coordinate box. Heisenberg layout: axes [x_0..x_{n-1},
/// y_0..y_{n-1}, t] (2n+1 axes); abelian: n axes.
struct Box {
  std::vector<double> lo, hi;

  std::size_t dims() const { return lo.size(); }
  double side(std::size_t a) const { return hi[a] - lo[a]; }
  double volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < dims(); ++a) v *= side(a);
    return v;
  }
  bool contains(const double* p) const {
    for (std::size_t a = 0; a < dims(); ++a)
      if (p[a] < lo[a] || p[a] >= hi[a]) return false;
    return true;
  }
};

/// A function sampled at the cell centres of a regular grid over a box in
/// group coordinates. Haar measure is the lift of Lebesgue measure, so the
/// cell measure is just the product of the spacings.
struct SampledFunction {
  Mode mode = Mode::heisenberg;
  int n = 1;
  Box box;
  std::vector<int> shape;       // cells per axis
  std::vector<double> values;   // row-major, last axis fastest
  double cell_measure = 0.0;

  std::size_t size() const { return values.size(); }
  std::size_t dims() const { return shape.size(); }

  double spacing(std::size_t a) const {
    return box.side(a) / static_cast<double>(shape[a]);
  }

  void cell_index(std::size_t flat, std::vector<int>& idx) const {
    idx.resize(dims());
    for (std::size_t a = dims(); a-- > 0;) {
      idx[a] = static_cast<int>(flat % static_cast<std::size_t>(shape[a]));
      flat /= static_cast<std::size_t>(shape[a]);
    }
  }

  std::size_t flat_index(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < dims(); ++a)
      f = f * static_cast<std::size_t>(shape[a]) + static_cast<std::size_t>(idx[a]);
    return f;
  }

  /// Centre coordinates of a cell into `out` (size dims()).
  void cell_center(std::size_t flat, double* out) const {
    for (std::size_t a = dims(); a-- > 0;) {
      auto i = flat % static_cast<std::size_t>(shape[a]);
      flat /= static_cast<std::size_t>(shape[a]);
      out[a] = box.lo[a] + (static_cast<double>(i) + 0.5) * spacing(a);
    }
  }

  GroupPoint cell_point(std::size_t flat) const {
    std::vector<double> c(dims());
    cell_center(flat, c.data());
    GroupPoint g = GroupPoint::identity(mode, n);
    for (int k = 0; k < n; ++k) g.x[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k)];
    if (mode == Mode::heisenberg) {
      for (int k = 0; k < n; ++k)
        g.y[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(n + k)];
      g.t = c[static_cast<std::size_t>(2 * n)];
    }
    return g;
  }

  /// Flat index of the cell containing p (coordinates), or npos if outside.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t locate(const double* p) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < dims(); ++a) {
      double u = (p[a] - box.lo[a]) / spacing(a);
      auto i = static_cast<std::ptrdiff_t>(std::floor(u));
      if (i < 0 || i >= shape[a]) return npos;
      f = f * static_cast<std::size_t>(shape[a]) + static_cast<std::size_t>(i);
    }
    return f;
  }

  static SampledFunction zeros(Mode mode, int n, Box box, std::vector<int> shape) {
    SampledFunction f;
    f.mode = mode;
    f.n = n;
    std::size_t expect = mode == Mode::heisenberg ? static_cast<std::size_t>(2 * n + 1)
                                                  : static_cast<std::size_t>(n);
    if (box.lo.size() != expect || box.hi.size() != expect || shape.size() != expect)
      throw argument_error("SampledFunction: box/shape dimension mismatch");
    f.box = std::move(box);
    f.shape = std::move(shape);
    std::size_t total = 1;
    double cm = 1.0;
    for (std::size_t a = 0; a < f.shape.size(); ++a) {
      if (f.shape[a] < 1) throw argument_error("SampledFunction: empty axis");
      total *= static_cast<std::size_t>(f.shape[a]);
      cm *= f.box.side(a) / f.shape[a];
    }
    f.values.assign(total, 0.0);
    f.cell_measure = cm;
    return f;
  }

  template <typename F>
  static SampledFunction from_function(Mode mode, int n, Box box, std::vector<int> shape, F&& fn) {
    SampledFunction f = zeros(mode, n, std::move(box), std::move(shape));
    std::vector<double> c(f.dims());
    for (std::size_t i = 0; i < f.size(); ++i) {
      f.cell_center(i, c.data());
      f.values[i] = fn(c.data());
    }
    return f;
  }

  double integral() const {
    double s = std::accumulate(values.begin(), values.end(), 0.0);
    return s * cell_measure;
  }

  double lp_norm(double p) const {
    if (std::isinf(p)) {
      double m = 0.0;
      for (double v : values) m = std::max(m, std::abs(v));
      return m;
    }
    double s = 0.0;
    for (double v : values) s += std::pow(std::abs(v), p);
    return std::pow(s * cell_measure, 1.0 / p);
  }
};

/// d_K distance between two cell-centre coordinate vectors (flat layout).
inline double grid_distance(const SampledFunction& g, const double* a, const double* b) {
  if (g.mode == Mode::abelian) {
    double s = 0.0;
    for (int k = 0; k < g.n; ++k) {
      double d = a[k] - b[k];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double w[2 * 8 + 1];
  if (g.n > 8) throw argument_error("grid_distance: n > 8 unsupported on grids");
  relative_point_raw(g.n, a, b, w);
  return koranyi_norm_raw(g.n, w);
}

/// Safe (slightly loose) t-extent of the Koranyi ball B(c, r) in coordinates:
/// |t - t_c| <= r^2 + 2 r ||z_c||. Used for bounding boxes; membership is
/// always confirmed with the exact distance.
inline double ball_t_extent(double r, double z_norm) { return r * r + 2.0 * r * z_norm; }

/// Cells whose centres lie in the Koranyi ball B(center, r); center given as
/// flat coordinates (or Euclidean ball in abelian mode).
inline std::vector<std::uint32_t> cells_in_ball(const SampledFunction& g, const double* center,
                                                double r) {
  std::vector<std::uint32_t> out;
  const std::size_t dims = g.dims();
  std::vector<double> ext(dims, r);
  if (g.mode == Mode::heisenberg) {
    double zn = 0.0;
    for (int k = 0; k < 2 * g.n; ++k) zn += center[k] * center[k];
    ext[static_cast<std::size_t>(2 * g.n)] = ball_t_extent(r, std::sqrt(zn));
  }
  std::vector<int> lo(dims), hi(dims);
  for (std::size_t a = 0; a < dims; ++a) {
    double sp = g.spacing(a);
    lo[a] = std::max(0, static_cast<int>(std::floor((center[a] - ext[a] - g.box.lo[a]) / sp)));
    hi[a] = std::min(g.shape[a] - 1,
                     static_cast<int>(std::floor((center[a] + ext[a] - g.box.lo[a]) / sp)));
    if (lo[a] > hi[a]) return out;
  }
  std::vector<int> idx = lo;
  std::vector<double> c(dims);
  while (true) {
    std::size_t flat = g.flat_index(idx);
    g.cell_center(flat, c.data());
    if (grid_distance(g, c.data(), center) < r) out.push_back(static_cast<std::uint32_t>(flat));
    std::size_t a = dims;
    while (a-- > 0) {
      if (++idx[a] <= hi[a]) break;
      idx[a] = lo[a];
      if (a == 0) return out;
    }
    if (a == static_cast<std::size_t>(-1)) return out;
  }
}

/// A ball against a grid: centre coordinates plus radius.
struct BallSpec {
  std::vector<double> center;
  double radius = 0.0;
};

/// Deterministic family of grid-aligned balls: centres on a strided
/// sub-lattice of cell centres, radii on a dyadic ladder, only balls whose
/// (safe) bounding box sits inside the grid box. Every norm result carries
/// its family, since a sup is meaningless without it.
struct BallFamily {
  int stride = 4;
  std::vector<double> radii;

  std::vector<BallSpec> enumerate(const SampledFunction& g) const {
    std::vector<BallSpec> out;
    const std::size_t dims = g.dims();
    std::vector<int> idx(dims, 0);
    while (true) {
      std::vector<double> c(dims);
      std::vector<int> cell(dims);
      for (std::size_t a = 0; a < dims; ++a) cell[a] = idx[a];
      std::size_t flat = g.flat_index(cell);
      g.cell_center(flat, c.data());
      for (double r : radii) {
        bool inside = true;
        for (std::size_t a = 0; a < dims; ++a) {
          double ext = r;
          if (g.mode == Mode::heisenberg && a == static_cast<std::size_t>(2 * g.n)) {
            double zn = 0.0;
            for (int k = 0; k < 2 * g.n; ++k) zn += c[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(k)];
            ext = ball_t_extent(r, std::sqrt(zn));
          }
          if (c[a] - ext < g.box.lo[a] || c[a] + ext > g.box.hi[a]) {
            inside = false;
            break;
          }
        }
        if (inside) out.push_back({c, r});
      }
      std::size_t a = dims;
      bool done = true;
      while (a-- > 0) {
        idx[a] += stride;
        if (idx[a] < g.shape[a]) {
          done = false;
          break;
        }
        idx[a] = 0;
      }
      if (done) break;
    }
    return out;
  }
};

}  // namespace heis
