#pragma once

// Lagrange bases of orders 1-4 on the reference triangle {xi, eta >= 0, xi + eta <= 1}
// and collapsed-Gauss triangle quadrature.
//
// Node ordering of lagrange_lattice(k) (also used by the mesh dump format):
//   0, 1, 2         vertices (0,0), (1,0), (0,1)
//   edge 0 (v0->v1)  (m/k, 0)             m = 1..k-1
//   edge 1 (v1->v2)  ((k-m)/k, m/k)       m = 1..k-1
//   edge 2 (v2->v0)  (0, (k-m)/k)         m = 1..k-1
//   interior         (i/k, j/k)           j = 1..k-2 outer, i = 1..k-1-j inner

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "surfvec/error.hpp"

namespace surfvec {

using RefPoint = std::array<double, 2>;

inline constexpr int kMaxOrder = 4;
inline constexpr int kMaxQuadratureDegree = 14;

constexpr int lattice_size(int k) { return (k + 1) * (k + 2) / 2; }

/// Integer lattice coordinates (i, j) with node at (i/k, j/k), in lattice order.
inline std::vector<std::array<int, 2>> lattice_indices(int k) {
  if (k < 1 || k > kMaxOrder) throw DomainError("lattice order must be in [1,4]");
  std::vector<std::array<int, 2>> idx{{0, 0}, {k, 0}, {0, k}};
  for (int m = 1; m < k; ++m) idx.push_back({m, 0});
  for (int m = 1; m < k; ++m) idx.push_back({k - m, m});
  for (int m = 1; m < k; ++m) idx.push_back({0, k - m});
  for (int j = 1; j <= k - 2; ++j)
    for (int i = 1; i <= k - 1 - j; ++i) idx.push_back({i, j});
  return idx;
}

inline std::vector<RefPoint> lagrange_lattice(int k) {
  std::vector<RefPoint> pts;
  for (const auto& [i, j] : lattice_indices(k))
    pts.push_back({static_cast<double>(i) / k, static_cast<double>(j) / k});
  return pts;
}

struct BasisValues {
  std::vector<double> values;
  std::vector<RefPoint> gradients;  // (d/dxi, d/deta)
};

class ReferenceElement {
 public:
  explicit ReferenceElement(int order) : order_(order), indices_(lattice_indices(order)) {}

  int order() const { return order_; }
  int size() const { return static_cast<int>(indices_.size()); }
  std::vector<RefPoint> nodes() const { return lagrange_lattice(order_); }

  BasisValues eval(const RefPoint& q) const {
    constexpr double tol = 1e-12;
    if (q[0] < -tol || q[1] < -tol || q[0] + q[1] > 1.0 + tol)
      throw DomainError("evaluation point outside reference triangle");
    BasisValues out;
    out.values.resize(indices_.size());
    out.gradients.resize(indices_.size());
    eval_into(q, out.values.data(), out.gradients.data());
    return out;
  }

  /// Unchecked evaluation into caller storage.
  void eval_into(const RefPoint& q, double* values, RefPoint* gradients) const {
    const double lam[3] = {1.0 - q[0] - q[1], q[0], q[1]};
    for (std::size_t n = 0; n < indices_.size(); ++n) {
      const int i = indices_[n][0], j = indices_[n][1];
      const int m[3] = {order_ - i - j, i, j};
      double f[3], df[3];
      for (int c = 0; c < 3; ++c) factor(m[c], lam[c], f[c], df[c]);
      values[n] = f[0] * f[1] * f[2];
      const double d0 = df[0] * f[1] * f[2];  // d/dlambda0
      const double d1 = f[0] * df[1] * f[2];
      const double d2 = f[0] * f[1] * df[2];
      gradients[n] = {d1 - d0, d2 - d0};
    }
  }

 private:
  // prod_{s<m} (k lam - s) / (s + 1) and its derivative in lam.
  void factor(int m, double lam, double& f, double& df) const {
    f = 1.0;
    df = 0.0;
    for (int s = 0; s < m; ++s) {
      const double a = (order_ * lam - s) / (s + 1);
      const double da = static_cast<double>(order_) / (s + 1);
      df = df * a + f * da;
      f *= a;
    }
  }

  int order_;
  std::vector<std::array<int, 2>> indices_;
};

struct QuadratureRule {
  int degree = 0;
  std::vector<RefPoint> points;
  std::vector<double> weights;  // sum to 1/2

  std::size_t size() const { return points.size(); }
};

/// n-point Gauss-Legendre rule on [0,1] (Newton iteration on P_n).
inline void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    {
      // Recompute derivative at the converged root.
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
    }
    x[n - 1 - i] = 0.5 * (t + 1.0);
    w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

/// Positive-weight rule exact for polynomials of total degree <= `degree`.
/// Degree 1 is the centroid rule; higher degrees use a collapsed
/// (Duffy) tensor product of Gauss-Legendre rules.
inline QuadratureRule quadrature_for(int degree) {
  if (degree < 1 || degree > kMaxQuadratureDegree)
    throw DomainError("quadrature degree must be in [1,14], got " + std::to_string(degree));
  QuadratureRule rule;
  rule.degree = degree;
  if (degree == 1) {
    rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
    rule.weights = {0.5};
    return rule;
  }
  // xi = u, eta = v (1 - u), Jacobian (1 - u): degree+1 in u, degree in v.
  const int nu = (degree + 2) / 2 + ((degree + 2) % 2);
  const int nv = (degree + 1) / 2 + ((degree + 1) % 2);
  std::vector<double> xu, wu, xv, wv;
  gauss_legendre_01(nu, xu, wu);
  gauss_legendre_01(nv, xv, wv);
  for (int a = 0; a < nu; ++a)
    for (int b = 0; b < nv; ++b) {
      rule.points.push_back({xu[a], xv[b] * (1.0 - xu[a])});
      rule.weights.push_back(wu[a] * wv[b] * (1.0 - xu[a]));
    }
  return rule;
}

/// Basis values and reference gradients tabulated at the points of a rule.
struct BasisTable {
  int n_basis = 0;
  int n_points = 0;
  std::vector<double> values;       // [q * n_basis + i]
  std::vector<RefPoint> gradients;  // [q * n_basis + i]

  const double* values_at(int q) const { return values.data() + q * n_basis; }
  const RefPoint* gradients_at(int q) const { return gradients.data() + q * n_basis; }
};

inline BasisTable tabulate(const ReferenceElement& elem, const std::vector<RefPoint>& pts) {
  BasisTable t;
  t.n_basis = elem.size();
  t.n_points = static_cast<int>(pts.size());
  t.values.resize(static_cast<std::size_t>(t.n_basis) * t.n_points);
  t.gradients.resize(t.values.size());
  for (int q = 0; q < t.n_points; ++q)
    elem.eval_into(pts[q], t.values.data() + q * t.n_basis, t.gradients.data() + q * t.n_basis);
  return t;
}

}  // namespace surfvec
