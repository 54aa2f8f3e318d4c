// Acceptance suite: one PASS/FAIL line per criterion, exit status = number of failures.
// Convergence runs are cached and shared between criteria; their CSV tables
// are written to the directory given as the first argument (default: acceptance_results).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "surfvec/experiment.hpp"
#include "surfvec/solver.hpp"

using namespace surfvec;

namespace {

std::filesystem::path g_out = "acceptance_results";
std::map<std::string, std::vector<ConvergenceRecord>> g_cache;
int g_failures = 0;

std::string key_of(const RunConfig& c) {
  std::ostringstream os;
  os << to_string(c.formulation) << "_ku" << c.k_u << "_kg" << c.k_g << "_b" << c.beta << "_L"
     << c.levels << "_" << c.n_major << "x" << c.n_minor << "_a" << c.amplitude << "_s" << c.seed
     << "_" << to_string(c.normal_source);
  return os.str();
}

const std::vector<ConvergenceRecord>& run(const RunConfig& c) {
  const std::string key = key_of(c);
  if (auto it = g_cache.find(key); it != g_cache.end()) return it->second;
  std::printf("  run %s\n", key.c_str());
  auto recs = run_convergence(c, g_out / (key + ".csv"), [](const ConvergenceRecord& r) {
    std::printf("    level %d h %.4f dofs %7d L2 %.4e rate %6s  energy %.4e rate %6s  cg %5d %.1fs\n",
                r.level, r.h, r.dofs, r.l2_error,
                r.l2_rate ? std::to_string(*r.l2_rate).substr(0, 6).c_str() : "-", r.energy_error,
                r.energy_rate ? std::to_string(*r.energy_rate).substr(0, 6).c_str() : "-",
                r.cg_iters, r.seconds);
    std::fflush(stdout);
  });
  return g_cache.emplace(key, std::move(recs)).first->second;
}

RunConfig config(Formulation f, int ku, int kg) {
  RunConfig c;
  c.formulation = f;
  c.k_u = ku;
  c.k_g = kg;
  c.levels = 4;
  c.n_major = 16;
  c.n_minor = 16;
  return c;
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s -- %s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

// Runs a criterion body; exceptions count as failures with the message shown.
void criterion(int id, const std::string& title, const std::function<void(std::string&, bool&)>& body) {
  std::printf("criterion %d: %s\n", id, title.c_str());
  std::fflush(stdout);
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  try {
    body(detail, pass);
  } catch (const std::exception& e) {
    pass = false;
    detail += std::string(" exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, title, pass, detail + fmt(" [%.0fs]", secs));
}

/// Optimal-order L2 checks for (1,2) and (2,3) under a given base configuration.
void optimal_rates(const RunConfig& base, double tol, std::string& detail, bool& pass) {
  for (auto [ku, kg] : {std::pair{1, 2}, std::pair{2, 3}}) {
    RunConfig c = base;
    c.k_u = ku, c.k_g = kg;
    const double rate = *run(c).back().l2_rate;
    const bool ok = within(rate, ku + 1, tol);
    pass = pass && ok;
    detail += "(" + std::to_string(ku) + "," + std::to_string(kg) + ") L2 rate " +
              fmt("%.3f", rate) + " vs " + std::to_string(ku + 1) + fmt("+-%.1f; ", tol);
  }
}

/// Equal-order stall: rate near 2 and final error at least 5x the (2,3) error.
void stall(const RunConfig& base, std::string& detail, bool& pass) {
  RunConfig c22 = base, c23 = base;
  c22.k_u = 2, c22.k_g = 2;
  c23.k_u = 2, c23.k_g = 3;
  const auto& r22 = run(c22);
  const auto& r23 = run(c23);
  const double rate = *r22.back().l2_rate;
  const double ratio = r22.back().l2_error / r23.back().l2_error;
  const bool rate_ok = within(rate, 2.0, 0.3);
  const bool ratio_ok = ratio >= 5.0;
  pass = pass && rate_ok && ratio_ok;
  detail += "(2,2) L2 rate " + fmt("%.3f", rate) + " vs 2+-0.3 (" + (rate_ok ? "ok" : "no") +
            "); error ratio (2,2)/(2,3) " + fmt("%.2f", ratio) + " vs >= 5 (" +
            (ratio_ok ? "ok" : "no") + "); ";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_out = argv[1];
  std::filesystem::create_directories(g_out);
  const TorusSurface s;
  const auto t_start = std::chrono::steady_clock::now();

  criterion(1, "L2 rate with optimal geometry (standard)", [&](std::string& d, bool& p) {
    optimal_rates(config(Formulation::Standard, 1, 2), 0.3, d, p);
  });

  criterion(2, "L2 stall with equal orders (standard)", [&](std::string& d, bool& p) {
    stall(config(Formulation::Standard, 2, 2), d, p);
  });

  criterion(3, "energy-norm rate", [&](std::string& d, bool& p) {
    for (auto [ku, kg] : {std::pair{1, 2}, std::pair{2, 3}}) {
      const double rate = *run(config(Formulation::Standard, ku, kg)).back().energy_rate;
      const bool ok = within(rate, ku, 0.3);
      p = p && ok;
      d += "(" + std::to_string(ku) + "," + std::to_string(kg) + ") energy rate " +
           fmt("%.3f", rate) + " vs " + std::to_string(ku) + "+-0.3; ";
    }
  });

  criterion(4, "symmetric formulation with Killing deflation", [&](std::string& d, bool& p) {
    const RunConfig base = config(Formulation::Symmetric, 1, 2);
    optimal_rates(base, 0.3, d, p);
    stall(base, d, p);
    double worst = 0.0;
    for (auto [ku, kg] : {std::pair{1, 2}, std::pair{2, 3}, std::pair{2, 2}}) {
      RunConfig c = base;
      c.k_u = ku, c.k_g = kg;
      for (const auto& r : run(c)) worst = std::max(worst, r.killing_inner);
    }
    const bool ok = worst < 1e-10;
    p = p && ok;
    d += "max |x.k_h|/(|x||k_h|) " + fmt("%.2e", worst) + " vs < 1e-10; ";
  });

  criterion(5, "perturbed meshes (amplitude 0.2, seed 1)", [&](std::string& d, bool& p) {
    RunConfig base = config(Formulation::Standard, 1, 2);
    base.amplitude = 0.2;
    base.seed = 1;
    optimal_rates(base, 0.4, d, p);
  });

  criterion(6, "penalty parameter insensitivity", [&](std::string& d, bool& p) {
    double lo = 1e300, hi = 0.0;
    for (double beta : {10.0, 100.0, 1000.0}) {
      RunConfig c = config(Formulation::Standard, 1, 2);
      c.beta = beta;
      const auto sol = solve_level(c, s, c.levels - 1);
      lo = std::min(lo, sol.record.l2_error);
      hi = std::max(hi, sol.record.l2_error);
      d += "beta " + fmt("%g", beta) + " L2 " + fmt("%.4e", sol.record.l2_error) + "; ";
    }
    p = hi / lo < 3.0;
    d += "max/min " + fmt("%.3f", hi / lo) + " vs < 3; ";
  });

  criterion(7, "geometry approximation orders", [&](std::string& d, bool& p) {
    for (int kg = 1; kg <= 3; ++kg) {
      const auto st = check_geometry(s, kg, 16, 16, 4);
      const bool ok = within(st.distance_order, kg + 1, 0.3) && within(st.normal_order, kg, 0.3);
      p = p && ok;
      d += "k_g " + std::to_string(kg) + ": |rho| order " + fmt("%.3f", st.distance_order) +
           ", normal order " + fmt("%.3f", st.normal_order) + "; ";
    }
  });

  criterion(8, "load oracle: weak-form consistency", [&](std::string& d, bool& p) {
    for (Formulation kind : {Formulation::Standard, Formulation::Symmetric}) {
      const auto samples = oracle::sample_torus(s, kind, 256, 256);
      std::mt19937_64 rng(2718);
      double worst = 0.0;
      for (int t = 0; t < 10; ++t) {
        const oracle::TrigTangentField v(s.major_radius(), rng);
        const auto w = oracle::weak_form(samples, v);
        worst = std::max(worst, std::abs(w.load - w.bilinear) / std::abs(w.bilinear));
      }
      p = p && worst < 1e-8;
      d += to_string(kind) + " max rel. mismatch " + fmt("%.2e", worst) + "; ";
    }
    d += "vs < 1e-8; ";
  });

  criterion(9, "kernel dichotomy at h <= 0.12, (k_u,k_g)=(2,3)", [&](std::string& d, bool& p) {
    const auto mesh = elevate_geometry(build_torus_mesh(s, 128, 48), 3, s);
    const AssemblyContext ctx(mesh, s, 2);
    d += "h " + fmt("%.4f", mesh.h()) + ", dofs " + std::to_string(ctx.dofs().num_dofs()) + "; ";
    p = mesh.h() <= 0.12;
    KernelOptions opt;
    opt.eig_tol = 1e-6;
    const auto std_sys = assemble(ctx, nullptr, {Formulation::Standard});
    const auto std_est = numerical_kernel(std_sys.A, 1, opt);
    d += "standard: lambda_min/|A|_1 " + fmt("%.2e", std_est.rayleigh[0] / std_est.norm1) + ", " +
         std::to_string(std_est.below_threshold) + " below 1e-8; ";
    p = p && std_est.below_threshold == 0;
    const auto sym_sys = assemble(ctx, nullptr, {Formulation::Symmetric});
    const auto sym_est = numerical_kernel(sym_sys.A, 2, opt);
    const Vector& k = sym_sys.nullspace.front();
    const double align = std::abs(dot(sym_est.vectors[0], k)) / norm2(k);
    d += "symmetric: lambda/|A|_1 " + fmt("%.2e", sym_est.rayleigh[0] / sym_est.norm1) + ", " +
         fmt("%.2e", sym_est.rayleigh[1] / sym_est.norm1) + ", " +
         std::to_string(sym_est.below_threshold) + " below 1e-8, Killing alignment " +
         fmt("%.6f", align) + "; ";
    p = p && sym_est.below_threshold == 1 && sym_est.rayleigh[0] < 1e-8 * sym_est.norm1 &&
        align > 0.99;
  });

  criterion(10, "exact-interpolated penalty normals, (k_u,k_g)=(1,1)", [&](std::string& d, bool& p) {
    RunConfig c = config(Formulation::Standard, 1, 1);
    c.levels = 5;
    const auto& disc = run(c);
    c.normal_source = NormalSource::ExactInterpolated;
    const auto& exact = run(c);
    const double e_disc = *disc.back().energy_rate, e_exact = *exact.back().energy_rate;
    const double l_disc = *disc.back().l2_rate, l_exact = *exact.back().l2_rate;
    const bool energy_ok = within(e_disc, 0.0, 0.3) && within(e_exact, 1.0, 0.3);
    const bool l2_ok = std::abs(l_exact - l_disc) <= 0.3;
    p = energy_ok && l2_ok;
    d += "energy rate discrete " + fmt("%.3f", e_disc) + " vs 0+-0.3, exact " +
         fmt("%.3f", e_exact) + " vs 1+-0.3 (" + (energy_ok ? "ok" : "no") + "); L2 rate discrete " +
         fmt("%.3f", l_disc) + ", exact " + fmt("%.3f", l_exact) + ", |diff| <= 0.3 (" +
         (l2_ok ? "ok" : "no") + "); ";
  });

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  std::printf("acceptance: %d of 10 criteria failed, %.0fs total\n", g_failures, total);
  return g_failures;
}
