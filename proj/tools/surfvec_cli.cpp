// Command-line driver for the torus vector-Laplacian experiments.
//
//   surfvec converge       refinement study, writes convergence.csv
//   surfvec beta-sweep     refinement study per penalty parameter, writes beta_sweep.csv
//   surfvec export         solves one level and writes a legacy VTK file
//   surfvec check-geometry observed orders of the geometry approximation
//
// Exit status: 0 success, 2 configuration error, 3 solver failure, 1 other errors.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "surfvec/experiment.hpp"
#include "surfvec/vtk.hpp"

namespace {

using namespace surfvec;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

const std::vector<std::string> kConfigKeys = {
    "formulation", "k_u",  "k_g",           "beta",    "levels",     "n_major", "n_minor",
    "amplitude",   "seed", "normal_source", "rel_tol", "output_dir", "load"};

/// "--key value" options for every RunConfig field, applied over the config file.
struct ConfigOptions {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    for (const auto& key : kConfigKeys) options[key] = app->add_option("--" + key, values[key]);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) {
      std::ifstream is(config_file);
      if (!is) throw ConfigError("cannot open config file: " + config_file);
      read_config(is, cfg);
    }
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_setting(cfg, key, values.at(key));
    validate(cfg);
    return cfg;
  }
};

void print_record(const ConvergenceRecord& r) {
  std::printf("level %d  h %.4f  dofs %8d  L2 %.4e (rate %5s)  energy %.4e (rate %5s)  cg %5d  %.1fs\n",
              r.level, r.h, r.dofs, r.l2_error,
              r.l2_rate ? std::to_string(*r.l2_rate).substr(0, 5).c_str() : "-", r.energy_error,
              r.energy_rate ? std::to_string(*r.energy_rate).substr(0, 5).c_str() : "-", r.cg_iters,
              r.seconds);
  std::fflush(stdout);
}

std::filesystem::path prepare_output(const RunConfig& cfg, const std::string& name) {
  std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    double v = 0.0;
    if (!(is >> v)) throw ConfigError("invalid number in list: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surface vector Laplacian on the torus: convergence studies and diagnostics"};
  app.require_subcommand(1);

  ConfigOptions converge_opts, sweep_opts, export_opts;

  auto* converge = app.add_subcommand("converge", "refinement study with observed rates");
  converge_opts.add_to(converge);

  auto* sweep = app.add_subcommand("beta-sweep", "refinement study for several penalty parameters");
  sweep_opts.add_to(sweep);
  std::string betas_text = "10,100,1000";
  sweep->add_option("--betas", betas_text, "comma-separated penalty parameters");

  auto* exporter = app.add_subcommand("export", "solve one level and write a VTK file");
  export_opts.add_to(exporter);
  int export_level = -1;
  std::string vtk_path;
  exporter->add_option("--level", export_level, "refinement level (default: finest)");
  exporter->add_option("--path", vtk_path, "output file (default: <output_dir>/solution.vtk)");

  auto* geometry = app.add_subcommand("check-geometry", "observed geometry approximation orders");
  std::string kg_text = "1,2,3";
  int geo_major = 16, geo_minor = 16, geo_levels = 4;
  geometry->add_option("--k_g", kg_text, "comma-separated geometry orders");
  geometry->add_option("--n_major", geo_major);
  geometry->add_option("--n_minor", geo_minor);
  geometry->add_option("--levels", geo_levels);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*converge) {
      const RunConfig cfg = converge_opts.resolve();
      const auto csv = prepare_output(cfg, "convergence.csv");
      run_convergence(cfg, csv, print_record);
      std::printf("wrote %s\n", csv.string().c_str());
    } else if (*sweep) {
      const RunConfig cfg = sweep_opts.resolve();
      const auto betas = parse_list(betas_text);
      const auto csv = prepare_output(cfg, "beta_sweep.csv");
      for (const auto& run : run_beta_sweep(cfg, betas, csv, print_record))
        std::printf("beta %g: finest L2 error %.4e\n", run.beta, run.records.back().l2_error);
      std::printf("wrote %s\n", csv.string().c_str());
    } else if (*exporter) {
      const RunConfig cfg = export_opts.resolve();
      const int level = export_level < 0 ? cfg.levels - 1 : export_level;
      if (level >= cfg.levels) throw ConfigError("--level must be below levels");
      const TorusSurface s;
      const LevelSolution sol = solve_level(cfg, s, level);
      print_record(sol.record);
      const std::filesystem::path path =
          vtk_path.empty() ? prepare_output(cfg, "solution.vtk") : std::filesystem::path(vtk_path);
      const ExactField exact(s);
      export_vtk(sol.mesh, cfg.k_u, sol.coeffs, &exact, path);
      std::printf("wrote %s\n", path.string().c_str());
    } else if (*geometry) {
      const TorusSurface s;
      std::printf("k_g  levels  max|rho| order  |n o p - n_h| order\n");
      for (double kg : parse_list(kg_text)) {
        const int k = static_cast<int>(kg);
        if (k < 1 || k > 4 || k != kg) throw ConfigError("--k_g entries must be integers in [1,4]");
        const auto st = check_geometry(s, k, geo_major, geo_minor, geo_levels);
        for (const auto& l : st.levels)
          std::printf("  k_g %d  h %.4f  max|rho| %.3e  max|n-n_h| %.3e\n", k, l.h, l.max_distance,
                      l.max_normal_error);
        std::printf("%d    %d       %.3f           %.3f\n", k, geo_levels, st.distance_order,
                    st.normal_order);
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
