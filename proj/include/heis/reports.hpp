#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "heis/commutator.hpp"
#include "heis/riesz.hpp"
#include "heis/sampled.hpp"
#include "heis/sector.hpp"

namespace heis {

using json = nlohmann::ordered_json;

/// 17-significant-digit decimal rendering; round-trips doubles exactly.
inline std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// RFC-4180 CSV writer ('.' decimal, quoting only when needed).
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  CsvWriter& field(const std::string& s) {
    sep();
    bool need_quote = s.find_first_of(",\"\r\n") != std::string::npos;
    if (need_quote) {
      os_ << '"';
      for (char c : s) {
        if (c == '"') os_ << '"';
        os_ << c;
      }
      os_ << '"';
    } else {
      os_ << s;
    }
    return *this;
  }

  CsvWriter& field(double v) {
    sep();
    os_ << num17(v);
    return *this;
  }

  CsvWriter& field(long long v) {
    sep();
    os_ << v;
    return *this;
  }

  void endrow() {
    os_ << "\r\n";
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) os_ << ',';
    first_ = false;
  }
  std::ostream& os_;
  bool first_ = true;
};

inline std::uint64_t config_hash(const json& j) {
  std::string dump = j.dump();
  return detail::fnv1a(dump.data(), dump.size());
}

inline json to_json(const GroupPoint& g) {
  json j;
  j["mode"] = g.mode == Mode::heisenberg ? "heisenberg" : "abelian";
  j["x"] = g.x;
  if (g.mode == Mode::heisenberg) {
    j["y"] = g.y;
    j["t"] = g.t;
  }
  return j;
}

inline GroupPoint group_point_from_json(const json& j) {
  GroupPoint g;
  g.mode = j.at("mode").get<std::string>() == "abelian" ? Mode::abelian : Mode::heisenberg;
  g.x = j.at("x").get<std::vector<double>>();
  if (g.mode == Mode::heisenberg) {
    g.y = j.at("y").get<std::vector<double>>();
    g.t = j.at("t").get<double>();
  }
  return g;
}

inline json to_json(const SectorSpec& s) {
  json j;
  j["j_index"] = s.j.index;
  j["n"] = s.j.n;
  j["g_tilde"] = to_json(s.g_tilde);
  j["eps"] = s.eps;
  j["r_o"] = s.r_o;
  j["alpha"] = s.alpha;
  j["beta"] = s.beta;
  j["kernel_at_inv"] = s.kernel_at_inv;
  j["c_rho"] = s.c_rho;
  j["calibration_id"] = s.calibration_id;
  return j;
}

inline SectorSpec sector_spec_from_json(const json& j) {
  SectorSpec s;
  s.j = VectorFieldId{j.at("j_index").get<int>(), j.at("n").get<int>()};
  s.g_tilde = group_point_from_json(j.at("g_tilde"));
  s.eps = j.at("eps").get<double>();
  s.r_o = j.at("r_o").get<double>();
  s.alpha = j.at("alpha").get<double>();
  s.beta = j.at("beta").get<double>();
  s.kernel_at_inv = j.at("kernel_at_inv").get<double>();
  s.c_rho = j.at("c_rho").get<double>();
  s.calibration_id = j.at("calibration_id").get<std::uint64_t>();
  return s;
}

inline json to_json(const Calibration& c) {
  json j;
  j["j_index"] = c.j.index;
  j["n"] = c.j.n;
  j["c_re"] = c.c.real();
  j["c_im"] = c.c.imag();
  j["residual"] = c.residual;
  j["id"] = c.id;
  return j;
}

inline Calibration calibration_from_json(const json& j) {
  Calibration c;
  c.j = VectorFieldId{j.at("j_index").get<int>(), j.at("n").get<int>()};
  c.c = {j.at("c_re").get<double>(), j.at("c_im").get<double>()};
  c.residual = j.at("residual").get<double>();
  c.id = j.at("id").get<std::uint64_t>();
  return c;
}

/// Kernel table export: one row per point, columns
/// x..., y..., t, phi, Re raw, Im raw, calibrated.
inline void write_kernel_csv(std::ostream& os, VectorFieldId j,
                             const std::vector<GroupPoint>& points, const QuadratureConfig& cfg,
                             const KernelTable* table, const Calibration* calib) {
  CsvWriter w(os);
  int n = j.n;
  for (int k = 1; k <= n; ++k) w.field("x" + std::to_string(k));
  for (int k = 1; k <= n; ++k) w.field("y" + std::to_string(k));
  w.field("t").field("phi").field("re_raw").field("im_raw").field("calibrated");
  w.endrow();
  for (const auto& g : points) {
    auto val = riesz_formula_eval(j, g, cfg, table, calib);
    for (double v : g.x) w.field(v);
    for (double v : g.y) w.field(v);
    w.field(g.t).field(phase_of(g).phi).field(val.raw.real()).field(val.raw.imag());
    w.field(val.calibrated);
    w.endrow();
  }
}

/// Flat binary of doubles plus a JSON sidecar describing the grid.
inline void save_sampled_function(const SampledFunction& f, const std::string& path_base) {
  std::ofstream bin(path_base + ".bin", std::ios::binary);
  if (!bin) throw argument_error("save_sampled_function: cannot open " + path_base + ".bin");
  bin.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  json j;
  j["mode"] = f.mode == Mode::heisenberg ? "heisenberg" : "abelian";
  j["n"] = f.n;
  j["box_lo"] = f.box.lo;
  j["box_hi"] = f.box.hi;
  j["shape"] = f.shape;
  j["cell_measure"] = f.cell_measure;
  std::ofstream side(path_base + ".json");
  side << j.dump(2) << "\n";
}

inline SampledFunction load_sampled_function(const std::string& path_base) {
  std::ifstream side(path_base + ".json");
  if (!side) throw argument_error("load_sampled_function: cannot open " + path_base + ".json");
  json j = json::parse(side);
  Box box;
  box.lo = j.at("box_lo").get<std::vector<double>>();
  box.hi = j.at("box_hi").get<std::vector<double>>();
  SampledFunction f = SampledFunction::zeros(
      j.at("mode").get<std::string>() == "abelian" ? Mode::abelian : Mode::heisenberg,
      j.at("n").get<int>(), box, j.at("shape").get<std::vector<int>>());
  std::ifstream bin(path_base + ".bin", std::ios::binary);
  if (!bin) throw argument_error("load_sampled_function: cannot open " + path_base + ".bin");
  bin.read(reinterpret_cast<char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (static_cast<std::size_t>(bin.gcount()) != f.values.size() * sizeof(double))
    throw argument_error("load_sampled_function: binary payload size mismatch");
  return f;
}

}  // namespace heis
