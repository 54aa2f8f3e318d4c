#pragma once

// Batch experiments on the torus model problem: refinement sweeps with rate
// tables, penalty-parameter sweeps, and the empirical geometry-approximation
// check. Shared by the command-line driver and the acceptance suite.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "surfvec/assembly.hpp"
#include "surfvec/error.hpp"
#include "surfvec/geometry.hpp"
#include "surfvec/manufactured.hpp"
#include "surfvec/mesh.hpp"
#include "surfvec/solver.hpp"

namespace surfvec {

enum class LoadKind { Consistent, Tangential };

struct RunConfig {
  Formulation formulation = Formulation::Standard;
  int k_u = 1;
  int k_g = 2;
  double beta = 100.0;
  int levels = 4;
  int n_major = 16;
  int n_minor = 16;
  double amplitude = 0.0;  // fraction of h
  std::uint64_t seed = 1;
  NormalSource normal_source = NormalSource::Discrete;
  double rel_tol = 1e-10;
  std::string output_dir = ".";
  /// Assembled load: "consistent" adds the normal part X : kappa to the
  /// tangential load; "tangential" uses the projected load only.
  LoadKind load = LoadKind::Consistent;
};

inline void validate(const RunConfig& c) {
  if (c.k_u < 1 || c.k_u > 3) throw ConfigError("k_u must be in [1,3]");
  if (c.k_g < c.k_u || c.k_g > std::min(c.k_u + 2, 4))
    throw ConfigError("k_g must satisfy k_u <= k_g <= min(k_u + 2, 4)");
  if (!(c.beta > 0.0)) throw ConfigError("beta must be positive");
  if (c.levels < 2 || c.levels > 6) throw ConfigError("levels must be in [2,6]");
  if (c.n_major < 8 || c.n_minor < 8) throw ConfigError("n_major and n_minor must be >= 8");
  if (!(c.amplitude >= 0.0 && c.amplitude <= 0.3)) throw ConfigError("amplitude must be in [0,0.3]");
  if (!(c.rel_tol > 0.0 && c.rel_tol < 1.0)) throw ConfigError("rel_tol must be in (0,1)");
}

inline Formulation parse_formulation(const std::string& v) {
  if (v == "standard") return Formulation::Standard;
  if (v == "symmetric") return Formulation::Symmetric;
  throw ConfigError("formulation must be 'standard' or 'symmetric', got '" + v + "'");
}

inline NormalSource parse_normal_source(const std::string& v) {
  if (v == "discrete") return NormalSource::Discrete;
  if (v == "exact-interpolated") return NormalSource::ExactInterpolated;
  throw ConfigError("normal_source must be 'discrete' or 'exact-interpolated', got '" + v + "'");
}

inline LoadKind parse_load_kind(const std::string& v) {
  if (v == "consistent") return LoadKind::Consistent;
  if (v == "tangential") return LoadKind::Tangential;
  throw ConfigError("load must be 'consistent' or 'tangential', got '" + v + "'");
}

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  if (!(is >> out) || !(is >> std::ws).eof())
    throw ConfigError("invalid value for " + key + ": '" + v + "'");
  return out;
}
}  // namespace detail

/// Applies one "key = value" setting; keys are the RunConfig field names.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "formulation") c.formulation = parse_formulation(value);
  else if (key == "k_u") c.k_u = parse_number<int>(key, value);
  else if (key == "k_g") c.k_g = parse_number<int>(key, value);
  else if (key == "beta") c.beta = parse_number<double>(key, value);
  else if (key == "levels") c.levels = parse_number<int>(key, value);
  else if (key == "n_major") c.n_major = parse_number<int>(key, value);
  else if (key == "n_minor") c.n_minor = parse_number<int>(key, value);
  else if (key == "amplitude") c.amplitude = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "normal_source") c.normal_source = parse_normal_source(value);
  else if (key == "rel_tol") c.rel_tol = parse_number<double>(key, value);
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "load") c.load = parse_load_kind(value);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Line-oriented "key = value" file; '#' starts a comment.
inline void read_config(std::istream& is, RunConfig& c) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

struct ConvergenceRecord {
  int level = 0;
  double h = 0.0;
  int dofs = 0;
  double l2_error = 0.0;
  double energy_error = 0.0;
  std::optional<double> l2_rate;
  std::optional<double> energy_rate;
  int cg_iters = 0;
  double seconds = 0.0;
  /// |x . k_h| / (|x| |k_h|) of the raw deflated solution (symmetric runs only).
  double killing_inner = 0.0;
};

/// Solution of one refinement level, kept for post-processing and export.
struct LevelSolution {
  ParametricMesh mesh;
  Vector coeffs;
  ConvergenceRecord record;
};

/// Order-k_g mesh of refinement level `level` for a configuration.
inline ParametricMesh level_mesh(const RunConfig& cfg, const TorusSurface& s, int level) {
  const int scale = 1 << level;
  ParametricMesh m = build_torus_mesh(s, cfg.n_major * scale, cfg.n_minor * scale);
  if (cfg.amplitude > 0.0) m = perturb_mesh(m, cfg.amplitude, cfg.seed + level, s);
  return elevate_geometry(m, cfg.k_g, s);
}

/// Assembles and solves one level and measures its errors.
inline LevelSolution solve_level(const RunConfig& cfg, const TorusSurface& s, int level) {
  const auto t0 = std::chrono::steady_clock::now();
  LevelSolution out;
  out.mesh = level_mesh(cfg, s, level);
  const ExactField exact(s);
  const AssemblyContext ctx(out.mesh, s, cfg.k_u);
  const Formulation kind = cfg.formulation;
  const bool consistent = cfg.load == LoadKind::Consistent;
  const SparseSystem sys = assemble(
      ctx,
      [&](const Point3& x) {
        return consistent ? exact.consistent_load(x, kind) : exact.load(x, kind);
      },
      {kind, cfg.beta, cfg.normal_source});
  const SolveResult sol = solve(sys.A, sys.b, sys.nullspace, {cfg.rel_tol});
  out.coeffs = sol.x;

  const AssemblyContext ectx = error_context(out.mesh, s, cfg.k_u);
  if (!sys.nullspace.empty()) {
    const Vector& k = sys.nullspace.front();
    out.record.killing_inner = std::abs(dot(out.coeffs, k)) / (norm2(out.coeffs) * norm2(k));
    // The manufactured field is L2-orthogonal to the Killing field; pick the
    // representative of u_h + span{k_h} with the same property on Gamma_h.
    const double c = l2_inner(ectx, out.coeffs, k) / l2_inner(ectx, k, k);
    axpy(-c, k, out.coeffs);
  }
  out.record.level = level;
  out.record.h = out.mesh.h();
  out.record.dofs = ctx.dofs().num_dofs();
  out.record.cg_iters = sol.iterations;
  out.record.l2_error = l2_error(ectx, out.coeffs, exact);
  out.record.energy_error = energy_error(ectx, out.coeffs, exact, cfg.beta, cfg.normal_source);
  out.record.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// log2(e_{i-1} / e_i) between consecutive levels.
inline void fill_rates(std::vector<ConvergenceRecord>& recs) {
  for (std::size_t i = 1; i < recs.size(); ++i) {
    recs[i].l2_rate = std::log2(recs[i - 1].l2_error / recs[i].l2_error);
    recs[i].energy_rate = std::log2(recs[i - 1].energy_error / recs[i].energy_error);
  }
}

inline void write_csv_header(std::ostream& os, bool with_beta) {
  if (with_beta) os << "beta,";
  os << "level,h,dofs,l2_error,energy_error,l2_rate,energy_rate,cg_iters,seconds\n";
}

inline void write_csv_row(std::ostream& os, const ConvergenceRecord& r,
                          std::optional<double> beta = std::nullopt) {
  char buf[512];
  auto fmt = [](std::optional<double> v) {
    if (!v) return std::string();
    char b[64];
    std::snprintf(b, sizeof b, "%.6f", *v);
    return std::string(b);
  };
  if (beta) {
    std::snprintf(buf, sizeof buf, "%.10g,", *beta);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%d,%.10e,%d,%.10e,%.10e,%s,%s,%d,%.3f\n", r.level, r.h, r.dofs,
                r.l2_error, r.energy_error, fmt(r.l2_rate).c_str(), fmt(r.energy_rate).c_str(),
                r.cg_iters, r.seconds);
  os << buf;
}

using ProgressFn = std::function<void(const ConvergenceRecord&)>;

/// Refinement study: grid counts double per level. Writes `csv_path` if
/// non-empty; on solver failure the completed rows are written before rethrowing.
inline std::vector<ConvergenceRecord> run_convergence(const RunConfig& cfg,
                                                      const std::filesystem::path& csv_path = {},
                                                      const ProgressFn& progress = {}) {
  validate(cfg);
  const TorusSurface s;
  std::vector<ConvergenceRecord> recs;
  auto flush = [&] {
    if (csv_path.empty()) return;
    std::ofstream os(csv_path);
    if (!os) throw Error("cannot write CSV file: " + csv_path.string());
    write_csv_header(os, false);
    for (const auto& r : recs) write_csv_row(os, r);
  };
  try {
    for (int l = 0; l < cfg.levels; ++l) {
      recs.push_back(solve_level(cfg, s, l).record);
      fill_rates(recs);
      if (progress) progress(recs.back());
    }
  } catch (const SolverError&) {
    flush();
    throw;
  }
  flush();
  return recs;
}

struct BetaRun {
  double beta;
  std::vector<ConvergenceRecord> records;
};

inline std::vector<BetaRun> run_beta_sweep(const RunConfig& cfg, const std::vector<double>& betas,
                                           const std::filesystem::path& csv_path = {},
                                           const ProgressFn& progress = {}) {
  if (betas.empty()) throw ConfigError("beta sweep needs at least one beta");
  for (double b : betas)
    if (!(b > 0.0)) throw ConfigError("beta must be positive");
  std::vector<BetaRun> runs;
  auto flush = [&] {
    if (csv_path.empty()) return;
    std::ofstream os(csv_path);
    if (!os) throw Error("cannot write CSV file: " + csv_path.string());
    write_csv_header(os, true);
    for (const auto& run : runs)
      for (const auto& r : run.records) write_csv_row(os, r, run.beta);
  };
  for (double b : betas) {
    RunConfig c = cfg;
    c.beta = b;
    try {
      runs.push_back({b, run_convergence(c, {}, progress)});
    } catch (const SolverError&) {
      flush();
      throw;
    }
  }
  flush();
  return runs;
}

/// Geometry-approximation errors of a refinement sequence and the observed
/// orders between its last two levels.
struct GeometryStudy {
  int k_g = 1;
  std::vector<GeometryErrors> levels;
  double distance_order = 0.0;
  double normal_order = 0.0;
};

inline GeometryStudy check_geometry(const TorusSurface& s, int k_g, int n_major, int n_minor,
                                    int levels) {
  if (levels < 2) throw ConfigError("check-geometry needs at least 2 levels");
  GeometryStudy st;
  st.k_g = k_g;
  const QuadratureRule rule = quadrature_for(2 * k_g + 4);
  for (int l = 0; l < levels; ++l) {
    const auto flat = build_torus_mesh(s, n_major << l, n_minor << l);
    st.levels.push_back(geometry_errors(elevate_geometry(flat, k_g, s), rule, s));
  }
  const auto& a = st.levels[levels - 2];
  const auto& b = st.levels[levels - 1];
  const double hr = std::log(a.h / b.h);
  st.distance_order = std::log(a.max_distance / b.max_distance) / hr;
  st.normal_order = std::log(a.max_normal_error / b.max_normal_error) / hr;
  return st;
}

}  // namespace surfvec
