// heis: batch command-line surface of the toolkit. Every command is
// deterministic under a fixed seed and embeds the effective config hash in
// its report; no timestamps, so reruns are byte-identical.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "heis/acceptance.hpp"
#include "heis/reports.hpp"

namespace fs = std::filesystem;
using namespace heis;

namespace {

struct GlobalOptions {
  std::string mode = "heisenberg";
  int n = 1;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string config_file;
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  double truncation = 80.0;
  int node_budget = 400000;

  Mode group_mode() const { return mode == "abelian" ? Mode::abelian : Mode::heisenberg; }

  QuadratureConfig quad() const {
    QuadratureConfig q;
    q.abs_tol = abs_tol;
    q.rel_tol = rel_tol;
    q.truncation = truncation;
    q.node_budget = node_budget;
    return q;
  }

  json to_json() const {
    json j;
    j["mode"] = mode;
    j["n"] = n;
    j["seed"] = seed;
    j["abs_tol"] = abs_tol;
    j["rel_tol"] = rel_tol;
    j["truncation"] = truncation;
    j["node_budget"] = node_budget;
    return j;
  }

  /// Precedence: flags > config file > defaults. The CLI11 defaults are the
  /// built-in defaults, the config file overwrites fields not set by flags.
  void merge_config_file(const CLI::App& app) {
    if (config_file.empty()) return;
    std::ifstream in(config_file);
    if (!in) throw argument_error("config file not found: " + config_file);
    json j = json::parse(in);
    auto set_if_unset = [&](const char* flag, auto& field, const char* key) {
      if (app.count(flag) == 0 && j.contains(key)) field = j.at(key);
    };
    set_if_unset("--mode", mode, "mode");
    set_if_unset("--n", n, "n");
    set_if_unset("--seed", seed, "seed");
    set_if_unset("--abs-tol", abs_tol, "abs_tol");
    set_if_unset("--rel-tol", rel_tol, "rel_tol");
    set_if_unset("--truncation", truncation, "truncation");
    set_if_unset("--node-budget", node_budget, "node_budget");
  }

  json report_header(const char* experiment) const {
    json j;
    j["experiment"] = experiment;
    j["config"] = to_json();
    j["config_hash"] = config_hash(to_json());
    return j;
  }

  void emit(const json& report, const std::string& filename) const {
    std::string dump = report.dump(2);
    std::cout << dump << "\n";
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream out(fs::path(out_dir) / filename);
      out << dump << "\n";
    }
  }

  void emit_csv(const std::string& content, const std::string& filename) const {
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream out(fs::path(out_dir) / filename, std::ios::binary);
      out << content;
    } else {
      std::cout << content;
    }
  }
};

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

/// Named sampled functions for the experiment drivers.
SampledFunction make_named_function(const std::string& spec_str, Mode mode, int n, const Box& box,
                                    const std::vector<int>& shape) {
  std::string name = spec_str;
  double param = 0.0;
  bool has_param = false;
  if (auto pos = spec_str.find(':'); pos != std::string::npos) {
    name = spec_str.substr(0, pos);
    param = std::stod(spec_str.substr(pos + 1));
    has_param = true;
  }
  auto fn = [&]() -> std::function<double(const double*)> {
    if (name == "log_dk") {
      int nn = n;
      Mode m = mode;
      return [nn, m](const double* c) {
        if (m == Mode::abelian) {
          double s = 0;
          for (int k = 0; k < nn; ++k) s += c[k] * c[k];
          return std::log(std::max(std::sqrt(s), 1e-6));
        }
        return std::log(std::max(koranyi_norm_raw(nn, c), 1e-6));
      };
    }
    if (name == "const") {
      double v = has_param ? param : 1.0;
      return [v](const double*) { return v; };
    }
    if (name == "gauss") {
      double sigma = has_param ? param : 0.5;
      std::size_t dims = mode == Mode::heisenberg ? static_cast<std::size_t>(2 * n + 1)
                                                  : static_cast<std::size_t>(n);
      return [sigma, dims](const double* c) {
        double s = 0;
        for (std::size_t k = 0; k < dims; ++k) s += c[k] * c[k];
        return std::exp(-s / (2.0 * sigma * sigma));
      };
    }
    if (name == "indicator") {
      double r = has_param ? param : 0.5;
      int nn = n;
      Mode m = mode;
      return [r, nn, m](const double* c) {
        double d = m == Mode::abelian
                       ? std::sqrt(std::inner_product(c, c + nn, c, 0.0))
                       : koranyi_norm_raw(nn, c);
        return d < r ? 1.0 : 0.0;
      };
    }
    if (name == "power") {
      double a = has_param ? param : 0.5;
      int nn = n;
      return [a, nn](const double* c) {
        return std::pow(std::max(koranyi_norm_raw(nn, c), 1e-3), a);
      };
    }
    if (name == "coord") {
      int axis = has_param ? static_cast<int>(param) : 0;
      return [axis](const double* c) { return c[axis]; };
    }
    throw argument_error("unknown function name: " + spec_str);
  }();
  return SampledFunction::from_function(mode, n, box, shape, fn);
}

Box default_box(Mode mode, int n, double xy_half, double t_half) {
  Box b;
  if (mode == Mode::abelian) {
    b.lo.assign(static_cast<std::size_t>(n), -xy_half);
    b.hi.assign(static_cast<std::size_t>(n), xy_half);
    return b;
  }
  b.lo.assign(static_cast<std::size_t>(2 * n), -xy_half);
  b.hi.assign(static_cast<std::size_t>(2 * n), xy_half);
  b.lo.push_back(-t_half);
  b.hi.push_back(t_half);
  return b;
}

std::vector<int> default_shape(Mode mode, int n, int xy_cells, int t_cells) {
  if (mode == Mode::abelian) return std::vector<int>(static_cast<std::size_t>(n), xy_cells);
  std::vector<int> s(static_cast<std::size_t>(2 * n), xy_cells);
  s.push_back(t_cells);
  return s;
}

struct KernelBundle {
  std::shared_ptr<const KernelTable> table;
  CalibratedKernel kernel;
};

KernelBundle build_kernel(const GlobalOptions& g, int j_index) {
  VectorFieldId j{j_index, g.n};
  j.validate();
  auto table = std::make_shared<KernelTable>(KernelTable::build(g.n, 2049, g.quad()));
  auto cal = calibrate_constant(j, default_calibration_sample(j, 12, g.seed + 2024, table.get()),
                                g.quad(), table.get());
  return {table, CalibratedKernel{table, cal}};
}

std::vector<GroupPoint> read_points_csv(const std::string& path, int n) {
  std::vector<GroupPoint> pts;
  if (path.empty()) return pts;
  std::ifstream in(path);
  if (!in) return pts;  // missing file behaves as the empty list
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (!line.empty() && !(std::isdigit(line[0]) || line[0] == '-' || line[0] == '+'))
        continue;  // skip a header row
    }
    auto vals = parse_list(line);
    if (static_cast<int>(vals.size()) != 2 * n + 1) continue;
    GroupPoint p = GroupPoint::identity(Mode::heisenberg, n);
    for (int k = 0; k < n; ++k) {
      p.x[static_cast<std::size_t>(k)] = vals[static_cast<std::size_t>(k)];
      p.y[static_cast<std::size_t>(k)] = vals[static_cast<std::size_t>(n + k)];
    }
    p.t = vals[static_cast<std::size_t>(2 * n)];
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical toolkit for the Heisenberg-group Riesz kernel, twisted sectors, "
               "BMO machinery and commutator experiments"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--mode", g.mode, "group mode: heisenberg | abelian")
      ->check(CLI::IsMember({"heisenberg", "abelian"}));
  app.add_option("--n", g.n, "complex dimension n");
  app.add_option("--seed", g.seed, "seed for every randomized routine");
  app.add_option("--out", g.out_dir, "output directory (reports also go to stdout)");
  app.add_option("--config", g.config_file, "JSON config file (flags take precedence)");
  app.add_option("--abs-tol", g.abs_tol, "quadrature absolute tolerance");
  app.add_option("--rel-tol", g.rel_tol, "quadrature relative tolerance");
  app.add_option("--truncation", g.truncation, "max quadrature window half-length");
  app.add_option("--node-budget", g.node_budget, "max integrand evaluations per integral");

  // ---------------------------------------------------------------- config
  auto* config_cmd = app.add_subcommand("config", "configuration utilities");
  auto* config_show = config_cmd->add_subcommand("show", "dump the effective configuration");

  // ---------------------------------------------------------------- kernel
  auto* kernel_cmd = app.add_subcommand("kernel", "Riesz kernel evaluation and diagnostics");
  int j_index = 1;
  kernel_cmd->add_option("--j", j_index, "field index in 1..2n (X_1..X_n, Y_1..Y_n)");

  std::string points_path;
  auto* kernel_eval = kernel_cmd->add_subcommand("eval", "kernel table for a point list (CSV)");
  kernel_eval->add_option("--points", points_path, "CSV of points x..,y..,t (empty -> header)");

  auto* kernel_calibrate =
      kernel_cmd->add_subcommand("calibrate", "fit the global constant against subordination");

  int zs_grid = 256;
  auto* kernel_zero = kernel_cmd->add_subcommand("zero-scan", "roots of A_n(i phi) on the segment");
  kernel_zero->add_option("--grid", zs_grid, "scan grid (>= 64)");

  int cc_count = 25;
  auto* kernel_cross =
      kernel_cmd->add_subcommand("cross-check", "formula path against subordination (CSV table)");
  kernel_cross->add_option("--count", cc_count, "number of sample points");

  // ---------------------------------------------------------------- heat
  auto* heat_cmd = app.add_subcommand("heat", "heat kernel evaluation and verification");
  std::string heat_point = "1,0,0";
  double heat_h = 1.0;
  auto* heat_eval_cmd = heat_cmd->add_subcommand("eval", "evaluate p_h at a point");
  heat_eval_cmd->add_option("--point", heat_point, "comma list x..,y..,t (abelian: x..)");
  heat_eval_cmd->add_option("--h", heat_h, "time parameter h > 0");

  int hv_pairs = 200, hv_mc = 60000;
  auto* heat_verify = heat_cmd->add_subcommand("verify", "scaling identity + MC normalization");
  heat_verify->add_option("--pairs", hv_pairs, "scaling pairs");
  heat_verify->add_option("--mc", hv_mc, "Monte-Carlo samples for the mass");

  // ---------------------------------------------------------------- sector
  auto* sector_cmd = app.add_subcommand("sector", "twisted truncated sector construction");
  int sec_j = 1, sec_grid = 48;
  std::string sector_file;
  sector_cmd->add_option("--j", sec_j, "field index");
  sector_cmd->add_option("--sector", sector_file, "sector JSON produced by `sector build`");
  auto* sector_build = sector_cmd->add_subcommand("build", "direction point and aperture");
  sector_build->add_option("--grid", sec_grid, "unit-sphere grid");
  int sec_pairs = 10000;
  auto* sector_verify =
      sector_cmd->add_subcommand("verify-lower-bound", "sampled kernel lower bound");
  sector_verify->add_option("--pairs", sec_pairs, "sample pairs");
  std::string sec_radii = "3,10,30,100";
  int sec_mc = 1000000;
  auto* sector_volume = sector_cmd->add_subcommand("volume", "|B(g,R) cap G| / R^Q ratios");
  sector_volume->add_option("--radii", sec_radii, "radii as multiples of r_o");
  sector_volume->add_option("--mc", sec_mc, "Monte-Carlo samples per radius");

  // ---------------------------------------------------------------- bmo
  auto* bmo_cmd = app.add_subcommand("bmo", "oscillation, medians, weights, dyadic sets");
  std::string bmo_fn = "log_dk";
  double box_xy = 1.0, box_t = 1.0;
  int cells_xy = 32, cells_t = 32;
  bmo_cmd->add_option("--fn", bmo_fn, "named function (log_dk, const:c, gauss:s, power:a, ...)");
  bmo_cmd->add_option("--box-xy", box_xy, "half-width of the x/y axes");
  bmo_cmd->add_option("--box-t", box_t, "half-width of the t axis");
  bmo_cmd->add_option("--cells-xy", cells_xy, "cells per x/y axis");
  bmo_cmd->add_option("--cells-t", cells_t, "cells on the t axis");

  int fam_stride = 4;
  std::string fam_radii = "0.3,0.6";
  auto* bmo_norm_cmd = bmo_cmd->add_subcommand("norm", "BMO norm over a ball family");
  bmo_norm_cmd->add_option("--stride", fam_stride, "centre stride in cells");
  bmo_norm_cmd->add_option("--radii", fam_radii, "dyadic radii ladder");

  std::string ball_spec = "0,0,0,0.5";
  auto* bmo_median = bmo_cmd->add_subcommand("median", "median over a ball");
  bmo_median->add_option("--ball", ball_spec, "cx,cy,ct,r");

  int wl_level = 1;
  std::string wl_cube = "0,0,0";
  double wl_lambda = -1.0;
  auto* bmo_wlambda = bmo_cmd->add_subcommand("wlambda", "local mean oscillation on a cube");
  bmo_wlambda->add_option("--level", wl_level, "dyadic level");
  bmo_wlambda->add_option("--cube", wl_cube, "cube index ix,iy,it");
  bmo_wlambda->add_option("--lambda", wl_lambda, "quantile parameter (default 2^-(Q+2))");

  int ef_count = 4;
  auto* bmo_ef = bmo_cmd->add_subcommand("ef-sets", "E x F construction on dyadic cubes");
  bmo_ef->add_option("--cubes", ef_count, "number of level-1 cubes to certify");
  bmo_ef->add_option("--j", sec_j, "field index");

  double ap_p = 2.0;
  auto* bmo_ap = bmo_cmd->add_subcommand("ap-constant", "Muckenhoupt constant of a weight");
  bmo_ap->add_option("--p", ap_p, "exponent p > 1");
  bmo_ap->add_option("--stride", fam_stride, "centre stride in cells");
  bmo_ap->add_option("--radii", fam_radii, "radii ladder");

  // ---------------------------------------------------------------- comm
  auto* comm_cmd = app.add_subcommand("comm", "commutator experiments");
  std::string comm_b = "log_dk", comm_f = "gauss:0.4";
  double pv_cells = 2.5;
  int comm_j = 1;
  comm_cmd->add_option("--j", comm_j, "field index");
  comm_cmd->add_option("--fn-b", comm_b, "symbol b");
  comm_cmd->add_option("--fn-f", comm_f, "input f");
  comm_cmd->add_option("--box-xy", box_xy, "half-width of the x/y axes");
  comm_cmd->add_option("--box-t", box_t, "half-width of the t axis");
  comm_cmd->add_option("--cells-xy", cells_xy, "cells per x/y axis");
  comm_cmd->add_option("--cells-t", cells_t, "cells on the t axis");
  comm_cmd->add_option("--pv-cells", pv_cells, "principal-value cut in grid spacings (>= 2)");

  std::string comm_save;
  auto* comm_apply = comm_cmd->add_subcommand("apply", "[b, R_j] f on the grid");
  comm_apply->add_option("--save", comm_save, "basename for the output function (bin+json)");

  std::string eps_list = "0.6,0.3,0.15";
  auto* comm_weak11 = comm_cmd->add_subcommand("weak11", "dilated-bump pointwise-limit study");
  comm_weak11->add_option("--eps", eps_list, "bump radii");

  double ll_lambda = 1.0;
  auto* comm_llogl = comm_cmd->add_subcommand("llogl", "L log+ L functional of f");
  comm_llogl->add_option("--lambda", ll_lambda, "threshold");

  std::string far_list = "512,1024,2048,4096";
  auto* comm_h1b = comm_cmd->add_subcommand("h1b", "atom pairing against the kernel tail");
  comm_h1b->add_option("--far", far_list, "truncation radii ladder");

  std::string n_list = "8,16,32,64";
  auto* comm_lb = comm_cmd->add_subcommand("lb", "f_N sector pairing growth");
  comm_lb->add_option("--N", n_list, "radii as multiples of r_o*r");

  // ---------------------------------------------------------------- suite
  auto* suite_cmd = app.add_subcommand("suite", "verification batteries");
  auto* suite_acceptance = suite_cmd->add_subcommand("acceptance", "run all criteria, exit 0 iff green");

  CLI11_PARSE(app, argc, argv);
  try {
    g.merge_config_file(app);

    if (config_show->parsed()) {
      json j = g.report_header("config-show");
      g.emit(j, "config.json");
      return 0;
    }

    // ------------------------------------------------------------- kernel
    if (kernel_eval->parsed()) {
      auto pts = read_points_csv(points_path, g.n);
      auto bundle = build_kernel(g, j_index);
      std::ostringstream csv;
      write_kernel_csv(csv, VectorFieldId{j_index, g.n}, pts, g.quad(), bundle.table.get(),
                       &bundle.kernel.calib);
      g.emit_csv(csv.str(), "kernel_eval.csv");
      json rep = g.report_header("riesz-kernel-evaluation");
      rep["points"] = pts.size();
      rep["calibration"] = to_json(bundle.kernel.calib);
      g.emit(rep, "kernel_eval.json");
      return 0;
    }
    if (kernel_calibrate->parsed()) {
      auto bundle = build_kernel(g, j_index);
      json rep = g.report_header("riesz-constant-calibration");
      rep["calibration"] = to_json(bundle.kernel.calib);
      g.emit(rep, "calibration.json");
      return 0;
    }
    if (kernel_zero->parsed()) {
      auto roots = zero_scan(g.n, zs_grid, g.quad());
      json rep = g.report_header("kernel-nonvanishing-zero-scan");
      rep["grid"] = zs_grid;
      json arr = json::array();
      for (auto r : roots) arr.push_back(r.phi);
      rep["a_zeros"] = arr;
      auto bundle = build_kernel(g, j_index);
      auto nv = nonvanishing_report(VectorFieldId{j_index, g.n}, 64, g.quad(), bundle.kernel);
      rep["near_zero_fraction_adaptive"] = nv.near_zero_fraction_adaptive;
      rep["near_zero_fraction_fixed"] = nv.near_zero_fraction_fixed;
      rep["max_locus_distance"] = nv.max_locus_distance;
      rep["calibration_id"] = bundle.kernel.calib.id;
      g.emit(rep, "zero_scan.json");
      return 0;
    }
    if (kernel_cross->parsed()) {
      auto bundle = build_kernel(g, j_index);
      auto pts = default_calibration_sample(VectorFieldId{j_index, g.n}, cc_count, g.seed + 77,
                                            bundle.table.get());
      std::ostringstream csv;
      CsvWriter w(csv);
      w.field("x1").field("y1").field("t").field("calibrated").field("subordination").field(
          "rel_diff");
      w.endrow();
      double worst = 0.0;
      for (const auto& p : pts) {
        double cal = bundle.kernel.eval(p);
        double sub = riesz_subordination_eval(VectorFieldId{j_index, g.n}, p, g.quad());
        double rel = std::abs(cal - sub) / std::abs(sub);
        worst = std::max(worst, rel);
        w.field(p.x[0]).field(p.y[0]).field(p.t).field(cal).field(sub).field(rel);
        w.endrow();
      }
      g.emit_csv(csv.str(), "kernel_cross_check.csv");
      json rep = g.report_header("riesz-two-path-cross-check");
      rep["points"] = pts.size();
      rep["worst_rel_diff"] = worst;
      rep["calibration_id"] = bundle.kernel.calib.id;
      g.emit(rep, "kernel_cross_check.json");
      return 0;
    }

    // --------------------------------------------------------------- heat
    if (heat_eval_cmd->parsed()) {
      auto vals = parse_list(heat_point);
      json rep = g.report_header("heat-kernel-evaluation");
      if (g.group_mode() == Mode::abelian) {
        rep["value"] = heat_eval_abelian(vals, heat_h);
      } else {
        if (static_cast<int>(vals.size()) != 2 * g.n + 1)
          throw argument_error("point needs 2n+1 coordinates");
        GroupPoint p = GroupPoint::identity(Mode::heisenberg, g.n);
        for (int k = 0; k < g.n; ++k) {
          p.x[static_cast<std::size_t>(k)] = vals[static_cast<std::size_t>(k)];
          p.y[static_cast<std::size_t>(k)] = vals[static_cast<std::size_t>(g.n + k)];
        }
        p.t = vals[static_cast<std::size_t>(2 * g.n)];
        auto hv = heat_eval(p, heat_h, g.quad());
        rep["value"] = hv.value;
        rep["estimated_error"] = hv.estimated_error;
        rep["imag_residual"] = hv.imag_residual;
        rep["positive"] = hv.positive;
        rep["within_tolerance"] = hv.within_tolerance;
      }
      rep["h"] = heat_h;
      g.emit(rep, "heat_eval.json");
      return 0;
    }
    if (heat_verify->parsed()) {
      Rng rng(g.seed);
      double worst = 0.0;
      for (int i = 0; i < hv_pairs; ++i) {
        GroupPoint p = GroupPoint::h1(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                      rng.uniform(-4, 4));
        if (koranyi_norm(p) < 0.05) continue;
        double h = std::exp(rng.uniform(-1.5, 1.5));
        double lhs = heat_eval(p, h, g.quad()).value;
        double rhs = std::pow(h, -2.0) *
                     heat_eval(dilate(1.0 / std::sqrt(h), p), 1.0, g.quad()).value;
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
      }
      auto mass = heat_normalization_mc(g.n, hv_mc, g.seed, g.quad());
      json rep = g.report_header("heat-kernel-verification");
      rep["scaling_pairs"] = hv_pairs;
      rep["scaling_worst_rel"] = worst;
      rep["mc_mass"] = mass.value;
      rep["mc_stderr"] = mass.stderr_;
      bool pass = worst < 1e-6 && std::abs(mass.value - 1.0) < 0.02;
      rep["pass"] = pass;
      g.emit(rep, "heat_verify.json");
      return pass ? 0 : 1;
    }

    // ------------------------------------------------------------- sector
    auto load_or_build_sector = [&](const KernelBundle& bundle) {
      if (!sector_file.empty()) {
        std::ifstream in(sector_file);
        if (!in) throw argument_error("sector file not found: " + sector_file);
        return sector_spec_from_json(json::parse(in));
      }
      return find_direction_point(VectorFieldId{sec_j, g.n}, sec_grid, g.quad(), bundle.kernel);
    };
    if (sector_build->parsed()) {
      auto bundle = build_kernel(g, sec_j);
      auto spec = find_direction_point(VectorFieldId{sec_j, g.n}, sec_grid, g.quad(),
                                       bundle.kernel);
      json rep = g.report_header("twisted-sector-construction");
      rep["sector"] = to_json(spec);
      g.emit(rep, "sector.json");
      return 0;
    }
    if (sector_verify->parsed()) {
      auto bundle = build_kernel(g, sec_j);
      auto spec = load_or_build_sector(bundle);
      SectorRegion region{spec, GroupPoint::identity(Mode::heisenberg, g.n), 1.0};
      auto rep0 = lower_bound_verify(VectorFieldId{sec_j, g.n}, region, sec_pairs, g.seed,
                                     bundle.kernel);
      json rep = g.report_header("sector-kernel-lower-bound");
      rep["sector"] = to_json(spec);
      rep["c_est"] = rep0.c_est;
      rep["ratio_to_k0"] = rep0.ratio_to_k0;
      rep["sign_constant"] = rep0.sign_constant;
      rep["pairs"] = rep0.pairs;
      bool pass = rep0.sign_constant && rep0.ratio_to_k0 >= 0.4;
      rep["pass"] = pass;
      g.emit(rep, "sector_lower_bound.json");
      return pass ? 0 : 1;
    }
    if (sector_volume->parsed()) {
      auto bundle = build_kernel(g, sec_j);
      auto spec = load_or_build_sector(bundle);
      SectorRegion region{spec, GroupPoint::identity(Mode::heisenberg, g.n), 1.0};
      std::vector<double> radii;
      for (double f : parse_list(sec_radii)) radii.push_back(f * spec.r_o);
      auto ratios = volume_regularity(region, radii, sec_mc, g.seed);
      std::ostringstream csv;
      CsvWriter w(csv);
      w.field("radius").field("ratio").field("stderr");
      w.endrow();
      json arr = json::array();
      for (const auto& vr : ratios) {
        w.field(vr.radius).field(vr.ratio).field(vr.stderr_);
        w.endrow();
        arr.push_back({{"radius", vr.radius}, {"ratio", vr.ratio}, {"stderr", vr.stderr_}});
      }
      g.emit_csv(csv.str(), "sector_volume.csv");
      json rep = g.report_header("sector-volume-regularity");
      rep["sector"] = to_json(spec);
      rep["ratios"] = arr;
      g.emit(rep, "sector_volume.json");
      return 0;
    }

    // ---------------------------------------------------------------- bmo
    Box bmo_box = default_box(g.group_mode(), g.n, box_xy, box_t);
    auto bmo_shape = default_shape(g.group_mode(), g.n, cells_xy, cells_t);
    if (bmo_norm_cmd->parsed()) {
      auto f = make_named_function(bmo_fn, g.group_mode(), g.n, bmo_box, bmo_shape);
      BallFamily fam{fam_stride, parse_list(fam_radii)};
      auto res = bmo_norm(f, fam);
      json rep = g.report_header("bmo-norm");
      rep["fn"] = bmo_fn;
      rep["value"] = res.value;
      rep["family"] = {{"stride", res.stride}, {"radii", res.radii}, {"balls", res.balls}};
      g.emit(rep, "bmo_norm.json");
      return 0;
    }
    if (bmo_median->parsed()) {
      auto f = make_named_function(bmo_fn, g.group_mode(), g.n, bmo_box, bmo_shape);
      auto spec4 = parse_list(ball_spec);
      if (spec4.size() != f.dims() + 1) throw argument_error("--ball needs centre + radius");
      auto cells = cells_in_ball(f, spec4.data(), spec4.back());
      if (cells.empty()) throw argument_error("ball holds no grid cells");
      json rep = g.report_header("ball-median");
      rep["median"] = median(f, cells);
      rep["cells"] = cells.size();
      rep["mean_oscillation"] = mean_oscillation(f, cells);
      g.emit(rep, "bmo_median.json");
      return 0;
    }
    if (bmo_wlambda->parsed()) {
      auto f = make_named_function(bmo_fn, g.group_mode(), g.n, bmo_box, bmo_shape);
      DyadicSystem sys(g.group_mode(), g.n, bmo_box, std::max(wl_level, 1));
      auto idx = parse_list(wl_cube);
      CubeId cube;
      cube.level = wl_level;
      for (double v : idx) cube.idx.push_back(static_cast<std::int64_t>(v));
      auto cells = cells_in_cube(f, sys, cube);
      double lambda = wl_lambda > 0 ? wl_lambda
                                    : std::pow(2.0, -(homogeneous_dimension(g.group_mode(), g.n) +
                                                      2));
      json rep = g.report_header("local-mean-oscillation");
      rep["lambda"] = lambda;
      rep["cells"] = cells.size();
      rep["w_lambda"] = local_mean_oscillation(f, cells, lambda);
      auto cert = sys.certificate(cube);
      rep["certificate"] = {{"r1", cert.r1}, {"r2", cert.r2}, {"nominal", cert.nominal}};
      g.emit(rep, "bmo_wlambda.json");
      return 0;
    }
    if (bmo_ap->parsed()) {
      Weight wgt;
      wgt.w = make_named_function(bmo_fn, g.group_mode(), g.n, bmo_box, bmo_shape);
      BallFamily fam{fam_stride, parse_list(fam_radii)};
      json rep = g.report_header("muckenhoupt-constant");
      rep["p"] = ap_p;
      rep["fn"] = bmo_fn;
      rep["ap_constant"] = ap_constant(wgt, ap_p, fam);
      g.emit(rep, "ap_constant.json");
      return 0;
    }
    if (bmo_ef->parsed()) {
      auto bundle = build_kernel(g, sec_j);
      auto spec = load_or_build_sector(bundle);
      Box dbox = default_box(Mode::heisenberg, g.n, 0.25, 0.0625);
      DyadicSystem sys(Mode::heisenberg, g.n, dbox, 3);
      auto b_near = make_named_function(bmo_fn, Mode::heisenberg, g.n, dbox,
                                        default_shape(Mode::heisenberg, g.n, 32, 64));
      double k0 = 2.0 * spec.r_o;
      json arr = json::array();
      bool all_ok = true;
      int count = 0;
      for (std::int64_t a = 0; a < 2 && count < ef_count; ++a)
        for (std::int64_t c = 0; c < 2 && count < ef_count; ++c)
          for (std::int64_t t = 0; t < 4 && count < ef_count; ++t) {
            CubeId cube{1, {a, c, t}};
            auto cert = sys.certificate(cube);
            auto center = sys.cube_center(cube);
            GroupPoint base = GroupPoint::h1(center[0], center[1], center[2]);
            double s_lo = spec.r_o * cert.r2 / spec.alpha;
            double s_hi = k0 * cert.r2 / spec.alpha;
            Rng rs(g.seed + static_cast<std::uint64_t>(count));
            Box fbox;
            fbox.lo = {1e300, 1e300, 1e300};
            fbox.hi = {-1e300, -1e300, -1e300};
            GroupPoint q = GroupPoint::identity(Mode::heisenberg, 1);
            for (int m = 0; m < 4096; ++m) {
              double s = s_lo * std::pow(s_hi / s_lo, rs.uniform01());
              do {
                q.x[0] = rs.uniform(-spec.eps, spec.eps);
                q.y[0] = rs.uniform(-spec.eps, spec.eps);
                q.t = rs.uniform(-spec.eps * spec.eps, spec.eps * spec.eps);
              } while (koranyi_norm(q) >= spec.eps);
              GroupPoint p = compose(base, dilate(s, compose(spec.g_tilde, q)));
              double coords[3] = {p.x[0], p.y[0], p.t};
              for (std::size_t ax = 0; ax < 3; ++ax) {
                fbox.lo[ax] = std::min(fbox.lo[ax], coords[ax]);
                fbox.hi[ax] = std::max(fbox.hi[ax], coords[ax]);
              }
            }
            for (std::size_t ax = 0; ax < 3; ++ax) {
              double pad = 0.1 * (fbox.hi[ax] - fbox.lo[ax]);
              fbox.lo[ax] -= pad;
              fbox.hi[ax] += pad;
            }
            auto b_far = make_named_function(bmo_fn, Mode::heisenberg, g.n, fbox, {56, 48, 96});
            auto res =
                ef_sets(VectorFieldId{sec_j, g.n}, b_near, b_far, sys, cube, k0, spec,
                        bundle.kernel);
            all_ok = all_ok && res.prop2_ok && res.prop3_ok && res.prop4_ok;
            arr.push_back({{"cube", {a, c, t}},
                           {"w_lambda", res.w_lambda},
                           {"median_Fk0", res.median_Fk0},
                           {"E_cells", res.E.size()},
                           {"F_cells", res.F.size()},
                           {"prop1_constant", res.prop1_constant},
                           {"prop2_ok", res.prop2_ok},
                           {"prop3_ok", res.prop3_ok},
                           {"prop4_ok", res.prop4_ok},
                           {"prop4_c_est", res.prop4_c_est}});
            ++count;
          }
      json rep = g.report_header("median-split-certificates");
      rep["k0"] = k0;
      rep["cubes"] = arr;
      rep["all_ok"] = all_ok;
      rep["calibration_id"] = bundle.kernel.calib.id;
      g.emit(rep, "ef_sets.json");
      return all_ok ? 0 : 1;
    }

    // --------------------------------------------------------------- comm
    Box comm_box = default_box(g.group_mode(), g.n, box_xy, box_t);
    auto comm_shape = default_shape(g.group_mode(), g.n, cells_xy, cells_t);
    auto comm_cut = [&](const SampledFunction& f) {
      double m = 0.0;
      for (std::size_t a = 0; a < f.dims(); ++a) m = std::max(m, f.spacing(a));
      return pv_cells * m;
    };
    if (comm_apply->parsed()) {
      auto b = make_named_function(comm_b, g.group_mode(), g.n, comm_box, comm_shape);
      auto f = make_named_function(comm_f, g.group_mode(), g.n, comm_box, comm_shape);
      json rep = g.report_header("commutator-application");
      if (g.group_mode() == Mode::abelian) {
        AbelianRieszKernel K{VectorFieldId{comm_j, g.n}, g.n};
        auto u = commutator_apply(K, b, f, comm_cut(f));
        rep["output_l2"] = u.lp_norm(2.0);
        rep["output_linf"] = u.lp_norm(INFINITY);
        if (!comm_save.empty()) save_sampled_function(u, comm_save);
      } else {
        auto bundle = build_kernel(g, comm_j);
        auto u = commutator_apply(bundle.kernel, b, f, comm_cut(f));
        rep["output_l2"] = u.lp_norm(2.0);
        rep["output_linf"] = u.lp_norm(INFINITY);
        rep["calibration_id"] = bundle.kernel.calib.id;
        if (!comm_save.empty()) save_sampled_function(u, comm_save);
      }
      rep["fn_b"] = comm_b;
      rep["fn_f"] = comm_f;
      g.emit(rep, "comm_apply.json");
      return 0;
    }
    if (comm_weak11->parsed()) {
      auto bundle = build_kernel(g, comm_j);
      auto b = make_named_function(comm_b, Mode::heisenberg, g.n, comm_box, comm_shape);
      std::vector<double> origin(b.dims(), 0.01);
      std::size_t gp = b.locate(origin.data());
      auto rep0 = weak11_experiment(bundle.kernel, b, gp, parse_list(eps_list), comm_cut(b), 0.6,
                                    {0.01, 0.1, 1.0});
      json rep = g.report_header("weak11-pointwise-limit");
      rep["eps"] = rep0.eps;
      rep["far_error"] = rep0.far_error;
      rep["far_scale"] = rep0.far_scale;
      rep["limit_thresholds"] = rep0.limit_distribution.thresholds;
      rep["limit_measures"] = rep0.limit_distribution.measures;
      g.emit(rep, "weak11.json");
      return 0;
    }
    if (comm_llogl->parsed()) {
      auto f = make_named_function(comm_f, g.group_mode(), g.n, comm_box, comm_shape);
      json rep = g.report_header("llogl-functional");
      rep["lambda"] = ll_lambda;
      rep["value"] = llogl_functional(f, ll_lambda);
      g.emit(rep, "llogl.json");
      return 0;
    }
    if (comm_h1b->parsed()) {
      auto bundle = build_kernel(g, comm_j);
      auto spec = load_or_build_sector(bundle);
      auto b = make_named_function(comm_b, Mode::heisenberg, g.n, comm_box, comm_shape);
      std::vector<double> c(b.dims(), 0.0);
      c[0] = 0.1;
      auto atom = make_atom(b, c, 0.5, AtomPattern::two_block, 2.0);
      GroupPoint gt = GroupPoint::h1(0.1, 0.0, 0.0);
      json rows = json::array();
      for (double far : parse_list(far_list)) {
        auto r = h1b_condition(bundle.kernel, b, atom, gt, spec.r_o, far, 1500, g.seed);
        rows.push_back({{"far_radius", far},
                        {"outer_integral", r.outer_integral},
                        {"pairing", r.pairing},
                        {"value", r.value}});
      }
      json rep = g.report_header("atom-pairing-tail-growth");
      rep["rows"] = rows;
      rep["r_o"] = spec.r_o;
      g.emit(rep, "h1b.json");
      return 0;
    }
    if (comm_lb->parsed()) {
      auto bundle = build_kernel(g, comm_j);
      auto spec = load_or_build_sector(bundle);
      auto b = make_named_function(comm_b, Mode::heisenberg, g.n, comm_box, comm_shape);
      std::vector<double> center(b.dims(), 0.0);
      auto ball = cells_in_ball(b, center.data(), 0.5);
      double osc = mean_oscillation(b, ball);
      GroupPoint base = GroupPoint::identity(Mode::heisenberg, g.n);
      SectorRegion region = scaled_sector(spec, base, 0.5);
      GroupPoint gt = GroupPoint::h1(0.05, 0.0, 0.0);
      double inner = spec.r_o * 0.5;
      json rows = json::array();
      for (double mult : parse_list(n_list)) {
        double pairing =
            lb_sector_pairing(bundle.kernel, region, gt, inner, mult * inner, 1500, g.seed);
        rows.push_back(
            {{"N", mult * inner}, {"pairing", pairing}, {"value", osc * pairing}});
      }
      json rep = g.report_header("fN-sector-pairing-growth");
      rep["oscillation"] = osc;
      rep["rows"] = rows;
      g.emit(rep, "lb.json");
      return 0;
    }

    // -------------------------------------------------------------- suite
    if (suite_acceptance->parsed()) {
      auto results = run_acceptance_criteria();
      // determinism criterion: the same pipeline twice, byte-compared
      CriterionResult det;
      det.id = 11;
      det.name = "CLI determinism";
      auto run_pipeline = [&]() {
        std::ostringstream os;
        auto roots = zero_scan(g.n, 128, g.quad());
        CsvWriter w(os);
        for (auto r : roots) w.field(r.phi);
        w.endrow();
        auto pts = ball_sample(GroupPoint::identity(Mode::heisenberg, g.n), 1.0, 50, g.seed);
        for (const auto& p : pts) {
          w.field(p.x[0]).field(p.y[0]).field(p.t);
          w.endrow();
        }
        return os.str();
      };
      auto t0 = std::chrono::steady_clock::now();
      std::string run1 = run_pipeline();
      std::string run2 = run_pipeline();
      det.pass = run1 == run2;
      det.details = det.pass ? "re-run outputs byte-identical under the fixed seed"
                             : "re-run outputs differ";
      det.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      results.push_back(det);

      bool all = true;
      json arr = json::array();
      for (const auto& r : results) {
        print_criterion(r);
        all = all && r.pass;
        arr.push_back({{"id", r.id},
                       {"name", r.name},
                       {"pass", r.pass},
                       {"details", r.details},
                       {"seconds", r.seconds}});
      }
      json rep = g.report_header("acceptance-battery");
      rep["criteria"] = arr;
      rep["pass"] = all;
      if (!g.out_dir.empty()) {
        fs::create_directories(g.out_dir);
        std::ofstream out(fs::path(g.out_dir) / "acceptance.json");
        out << rep.dump(2) << "\n";
      }
      std::printf("%s\n", all ? "ACCEPTANCE: PASS" : "ACCEPTANCE: FAIL");
      return all ? 0 : 1;
    }

    std::cerr << "no command selected\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
