#pragma once

// Jacobi-preconditioned conjugate gradients with explicit nullspace deflation,
// and inverse-iteration estimation of the near-kernel of a symmetric matrix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "surfvec/error.hpp"
#include "surfvec/sparse.hpp"

namespace surfvec {

struct SolverOptions {
  double rel_tol = 1e-10;
  int max_iterations = -1;  // < 0: 50 sqrt(n)
  bool confirm_residual = true;  // check b - A x before accepting the recursive residual
};

struct SolveResult {
  Vector x;
  int iterations = 0;
  double residual = 0.0;  // relative residual of the deflated system
};

/// Gram-Schmidt (applied twice) orthonormalisation; drops dependent vectors.
inline std::vector<Vector> orthonormalize(std::vector<Vector> basis) {
  std::vector<Vector> out;
  for (auto& v : basis) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : out) axpy(-dot(q, v), q, v);
    const double nv = norm2(v);
    if (nv <= 1e-14) continue;
    for (double& x : v) x /= nv;
    out.push_back(std::move(v));
  }
  return out;
}

/// Removes the components along an orthonormal set.
inline void project_out(const std::vector<Vector>& Z, std::span<double> v) {
  for (const auto& z : Z) axpy(-dot(z, v), z, v);
}

/// Solves A x = b on the orthogonal complement of `nullspace`: b is projected,
/// and residuals and preconditioned residuals are re-projected each
/// iteration, so x is orthogonal to every nullspace vector.
inline SolveResult solve(const CsrMatrix& A, std::span<const double> b_in,
                         const std::vector<Vector>& nullspace = {}, const SolverOptions& opt = {}) {
  const int n = A.rows();
  if (static_cast<int>(b_in.size()) != n) throw Error("right-hand side size mismatch");
  const auto Z = orthonormalize(nullspace);
  const int max_it =
      opt.max_iterations >= 0 ? opt.max_iterations : static_cast<int>(50.0 * std::sqrt(n)) + 1;

  SolveResult res;
  res.x.assign(n, 0.0);
  Vector r(b_in.begin(), b_in.end());
  project_out(Z, r);
  const double bnorm = norm2(r);
  if (bnorm == 0.0) return res;

  Vector inv_diag = A.diagonal();
  for (double& d : inv_diag) d = d > 0.0 ? 1.0 / d : 1.0;

  Vector z(n), p(n), Ap(n);
  auto precondition = [&] {
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    project_out(Z, z);
  };
  precondition();
  p = z;
  double rz = dot(r, z);
  double rel = 1.0;
  for (int it = 1; it <= max_it; ++it) {
    A.multiply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) throw SolverError("CG did not converge: non-positive curvature", rel, it);
    const double alpha = rz / pAp;
    axpy(alpha, p, res.x);
    axpy(-alpha, Ap, r);
    project_out(Z, r);
    rel = norm2(r) / bnorm;
    res.iterations = it;
    bool restart = false;
    if (rel <= opt.rel_tol && !opt.confirm_residual) break;
    if (rel <= opt.rel_tol) {
      // The recursive residual drifts from b - A x; confirm before stopping
      // and restart from the true residual if they disagree.
      A.multiply(res.x, Ap);
      for (int i = 0; i < n; ++i) r[i] = b_in[i] - Ap[i];
      project_out(Z, r);
      rel = norm2(r) / bnorm;
      if (rel <= opt.rel_tol) break;
      restart = true;
    }
    precondition();
    const double rz_new = dot(r, z);
    const double beta = restart ? 0.0 : rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  // Report the true deflated residual, not the recursively updated one.
  Vector Ax = A * res.x;
  for (int i = 0; i < n; ++i) Ax[i] -= b_in[i];
  project_out(Z, Ax);
  res.residual = norm2(Ax) / bnorm;
  project_out(Z, res.x);
  if (res.residual > opt.rel_tol && rel > opt.rel_tol)
    throw SolverError("CG did not converge", res.residual, res.iterations);
  return res;
}

struct KernelOptions {
  double threshold = 1e-8;  // relative to ||A||_1
  double inner_tol = 1e-10;
  int max_outer = 60;
  double eig_tol = 1e-9;  // relative Rayleigh-quotient change at convergence
  double shift = 0.0;     // solves with A - shift I; keep <= 0 for SPD inner solves
  std::uint64_t seed = 7;
};

struct KernelEstimate {
  std::vector<Vector> vectors;          // orthonormal
  std::vector<double> rayleigh;         // eigenvalue estimates, ascending order of discovery
  double norm1 = 0.0;
  int below_threshold = 0;
};

/// Approximates the dim_hint smallest eigenpairs of a symmetric positive
/// semidefinite matrix by inverse iteration with CG inner solves; each new
/// vector is deflated against the ones already found.
inline KernelEstimate numerical_kernel(const CsrMatrix& A, int dim_hint,
                                       const KernelOptions& opt = {}) {
  if (dim_hint < 1) throw Error("numerical_kernel needs dim_hint >= 1");
  const int n = A.rows();
  KernelEstimate est;
  est.norm1 = A.norm1();

  CsrMatrix shifted = A;
  if (opt.shift != 0.0)
    for (int i = 0; i < n; ++i) shifted.add(i, i, -opt.shift);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  // Near-singular solves cannot meet a true-residual test; only the direction matters.
  SolverOptions inner{opt.inner_tol, 20 * n, false};

  for (int k = 0; k < dim_hint; ++k) {
    Vector v(n);
    for (double& x : v) x = uni(rng);
    project_out(est.vectors, v);
    double nv = norm2(v);
    for (double& x : v) x /= nv;
    double lambda = dot(v, A * v);
    for (int outer = 0; outer < opt.max_outer; ++outer) {
      SolveResult y;
      try {
        y = solve(shifted, v, est.vectors, inner);
      } catch (const SolverError& e) {
        throw SolverError("kernel estimation failed", e.residual(), e.iterations());
      }
      v = std::move(y.x);
      project_out(est.vectors, v);
      nv = norm2(v);
      if (nv == 0.0) throw SolverError("kernel estimation failed", 1.0, outer);
      for (double& x : v) x /= nv;
      const double next = dot(v, A * v);
      const bool done = std::abs(next - lambda) <= opt.eig_tol * std::max(std::abs(next), 1e-300);
      lambda = next;
      if (done) break;
    }
    est.vectors.push_back(v);
    est.rayleigh.push_back(lambda);
  }
  est.vectors = orthonormalize(est.vectors);
  for (double l : est.rayleigh)
    if (l < opt.threshold * est.norm1) ++est.below_threshold;
  return est;
}

}  // namespace surfvec
