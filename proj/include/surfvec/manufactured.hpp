#pragma once

// Manufactured tangential solution on the torus, its exact loads for both
// formulations (nested forward-mode differentiation of u o p), and discrete
// error norms on Gamma_h.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <span>

#include "surfvec/assembly.hpp"
#include "surfvec/dual.hpp"
#include "surfvec/error.hpp"
#include "surfvec/geometry.hpp"
#include "surfvec/reference_element.hpp"

namespace surfvec {

using D1 = Dual<double, 3>;

/// The manufactured field in toroidal angles; tangential by construction.
template <class T>
Vec3T<T> ansatz(double R, double r, const T& theta, const T& phi) {
  using std::cos;
  using std::sin;
  const T s3p = sin(3.0 * phi + theta);
  const T c3t = cos(phi + 3.0 * theta);
  const T sin3phi = sin(3.0 * phi);
  const T cp = cos(phi), sp = sin(phi), ct = cos(theta), st = sin(theta);
  const T ring = R + r * ct;
  return {-r * s3p * cp * cp * st - c3t * sin3phi * sp * ring,
          c3t * sin3phi * cp * ring - r * s3p * cp * sp * st,  //
          r * s3p * cp * ct};
}

/// Evaluates a generic field g(y) with y seeded as dual numbers; returns the
/// value and the Jacobian (i, j) = d g_i / d y_j.
template <class T, class Field>
std::pair<Vec3T<T>, std::array<Vec3T<T>, 3>> value_and_jacobian(const Field& g,
                                                               const Vec3T<T>& y) {
  const auto yd = seed<T, 3>(y);
  const auto gd = g(yd);
  Vec3T<T> val;
  std::array<Vec3T<T>, 3> J;
  for (int i = 0; i < 3; ++i) {
    val[i] = gd[i].val;
    for (int j = 0; j < 3; ++j) J[i][j] = gd[i].d[j];
  }
  return {val, J};
}

/// Covariant derivative P (grad g^e) P, or its symmetric part, at y in the
/// tube. `g` must already be the closest-point extension of a tangential field.
template <class T, class Field>
std::array<Vec3T<T>, 3> covariant_tensor(const TorusSurface& s, const Field& g, const Vec3T<T>& y,
                                         Formulation kind) {
  const auto [val, J] = value_and_jacobian<T>(g, y);
  const Vec3T<T> n = s.normal_t(y);
  std::array<Vec3T<T>, 3> P;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) P[a][b] = (a == b ? T(1.0) : T(0.0)) - n[a] * n[b];
  std::array<Vec3T<T>, 3> JP{}, X{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      T acc(0.0);
      for (int k = 0; k < 3; ++k) acc += J[i][k] * P[k][j];
      JP[i][j] = acc;
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      T acc(0.0);
      for (int k = 0; k < 3; ++k) acc += P[i][k] * JP[k][j];
      X[i][j] = acc;
    }
  if (kind == Formulation::Symmetric) {
    auto S = X;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) S[i][j] = 0.5 * (X[i][j] + X[j][i]);
    return S;
  }
  return X;
}

/// -div_Gamma(X) with X the covariant derivative (or strain) of g. Its
/// tangential part is the load of the tangential problem; its normal part
/// equals X : kappa.
template <class Field>
Point3 divergence_load(const TorusSurface& s, const Field& g, const Point3& x, Formulation kind) {
  // Outer differentiation of X: its entries carry d/dy_k.
  const auto y = seed<double, 3>(to_array(x));
  const auto X = covariant_tensor<D1>(s, g, y, kind);
  const Tensor3 P = s.tangent_projection(x);
  Point3 div = Point3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) div[i] += P(j, k) * X[i][j].d[k];
  return -div;
}

/// f = -P div_Gamma(X): the tangential load.
template <class Field>
Point3 load_from_field(const TorusSurface& s, const Field& g, const Point3& x, Formulation kind) {
  return s.tangent_projection(x) * divergence_load(s, g, x, kind);
}

inline Tensor3 to_tensor(const std::array<Vec3T<double>, 3>& a) {
  Tensor3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = a[i][j];
  return t;
}

/// Manufactured solution u and its closest-point extension u^e = u o p.
class ExactField {
 public:
  explicit ExactField(const TorusSurface& s) : s_(s) {}

  const TorusSurface& surface() const { return s_; }

  /// u^e(y) for generic (dual) scalars.
  template <class T>
  Vec3T<T> extension(const Vec3T<T>& y) const {
    const auto a = s_.angles_t(y);
    return ansatz<T>(s_.major_radius(), s_.minor_radius(), a[0], a[1]);
  }

  /// u^e at a point of the tube.
  Point3 operator()(const Point3& y) const {
    s_.closest_point(y);  // rejects ambiguous points
    return to_point(extension<double>(to_array(y)));
  }

  /// Euclidean Jacobian of u^e.
  Tensor3 gradient(const Point3& y) const {
    auto g = [this](const auto& z) { return this->extension(z); };
    const auto [v, J] = value_and_jacobian<double>(g, to_array(y));
    return to_tensor(J);
  }

  Tensor3 covariant_derivative(const Point3& y, Formulation kind) const {
    auto g = [this](const auto& z) { return this->extension(z); };
    return to_tensor(covariant_tensor<double>(s_, g, to_array(y), kind));
  }

  /// Load of the manufactured problem at x; valid on Gamma and, by
  /// closest-point extension, along normal segments.
  Point3 load(const Point3& x, Formulation kind) const {
    auto g = [this](const auto& z) { return this->extension(z); };
    return load_from_field(s_, g, x, kind);
  }

  /// Load including the normal component X : kappa, so that a(u, v) = l(v)
  /// holds for all vector fields v, not only tangential ones.
  Point3 consistent_load(const Point3& x, Formulation kind) const {
    auto g = [this](const auto& z) { return this->extension(z); };
    return divergence_load(s_, g, x, kind);
  }

 private:
  TorusSurface s_;
};

inline void require_on_surface(const TorusSurface& s, const Point3& x) {
  if (!(std::abs(s.signed_distance(x)) < 1e-10))
    throw GeometryError("point is not on the torus surface");
}

inline Point3 exact_solution(const TorusSurface& s, const Point3& x) {
  require_on_surface(s, x);
  return ExactField(s)(x);
}

inline Point3 exact_load(const TorusSurface& s, const Point3& x, Formulation kind) {
  require_on_surface(s, x);
  return ExactField(s).load(x, kind);
}

/// Periodic trapezoidal quadrature of F(x) over the exact torus in
/// (theta, phi); spectrally accurate for smooth integrands.
template <class F>
double torus_integral(const TorusSurface& s, int n_theta, int n_phi, const F& integrand) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double R = s.major_radius(), r = s.minor_radius();
  double sum = 0.0;
  for (int i = 0; i < n_theta; ++i) {
    const double theta = two_pi * (i + 0.5) / n_theta;
    const double jac = r * (R + r * std::cos(theta));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = two_pi * (j + 0.25) / n_phi;
      sum += jac * integrand(s.parametrize(theta, phi));
    }
  }
  return sum * (two_pi / n_theta) * (two_pi / n_phi);
}

/// Quadrature degree for error norms: 2 k_u + 4, capped at 14.
inline int error_quadrature_degree(int k_u) { return std::min(2 * k_u + 4, kMaxQuadratureDegree); }

inline AssemblyContext error_context(const ParametricMesh& m, const TorusSurface& s, int k_u) {
  return AssemblyContext(m, s, k_u, quadrature_for(error_quadrature_degree(k_u)));
}

/// u_h and its Gamma_h-gradient (u_h (x) grad_Gamma_h) at quadrature point q of a cell.
inline std::pair<Point3, Tensor3> discrete_value(const AssemblyContext& ctx, int cell,
                                                 const QuadPointGeometry& g, int q,
                                                 std::span<const double> coeffs) {
  const auto& tab = ctx.solution_table();
  const auto nodes = ctx.dofs().cell_nodes(cell);
  Point3 u = Point3::Zero();
  Tensor3 G = Tensor3::Zero();
  for (int i = 0; i < tab.n_basis; ++i) {
    const Point3 ui(coeffs[3 * nodes[i]], coeffs[3 * nodes[i] + 1], coeffs[3 * nodes[i] + 2]);
    const RefPoint& dr = tab.gradients_at(q)[i];
    const Point3 gi = g.JGinv * Eigen::Vector2d(dr[0], dr[1]);
    u += tab.values_at(q)[i] * ui;
    G += ui * gi.transpose();
  }
  return {u, G};
}

/// || u^e - u_h ||_{L2(Gamma_h)}; a null `exact` measures || u_h ||.
inline double l2_error(const AssemblyContext& ctx, std::span<const double> coeffs,
                       const VectorField& exact) {
  double sum = 0.0;
  for (int c = 0; c < ctx.mesh().num_cells(); ++c) {
    const auto eg = ctx.geometry(c);
    for (int q = 0; q < static_cast<int>(eg.size()); ++q) {
      const auto [uh, G] = discrete_value(ctx, c, eg[q], q, coeffs);
      const Point3 ue = exact ? exact(eg[q].x) : Point3::Zero();
      sum += ctx.rule().weights[q] * eg[q].area_factor * (ue - uh).squaredNorm();
    }
  }
  return std::sqrt(sum);
}

struct EnergyError {
  double total = 0.0;
  double gradient_part = 0.0;  // || D_h e ||^2
  double penalty_part = 0.0;   // beta h^-2 || n . e ||^2
};

/// Discrete energy norm ||D_h e||^2 + beta h^-2 ||n . e||^2 of e = u^e - u_h,
/// with n the same normal the penalty uses.
inline EnergyError energy_error_parts(const AssemblyContext& ctx, std::span<const double> coeffs,
                                      const ExactField* exact, double beta,
                                      NormalSource src = NormalSource::Discrete) {
  EnergyError e;
  const double scale = beta / (ctx.h() * ctx.h());
  for (int c = 0; c < ctx.mesh().num_cells(); ++c) {
    const auto eg = ctx.geometry(c);
    const auto normals = penalty_normals(ctx, c, eg, src);
    for (int q = 0; q < static_cast<int>(eg.size()); ++q) {
      const auto& g = eg[q];
      const auto [uh, G] = discrete_value(ctx, c, g, q, coeffs);
      Point3 diff = -uh;
      Tensor3 grad = -G;
      if (exact) {
        diff += (*exact)(g.x);
        grad += exact->gradient(g.x) * g.P_h;
      }
      const Tensor3 D = g.P_h * grad * g.P_h;
      const double w = ctx.rule().weights[q] * g.area_factor;
      e.gradient_part += w * D.squaredNorm();
      const double nd = normals[q].dot(diff);
      e.penalty_part += w * scale * nd * nd;
    }
  }
  e.total = std::sqrt(e.gradient_part + e.penalty_part);
  return e;
}

inline double energy_error(const AssemblyContext& ctx, std::span<const double> coeffs,
                           const ExactField& exact, double beta,
                           NormalSource src = NormalSource::Discrete) {
  return energy_error_parts(ctx, coeffs, &exact, beta, src).total;
}

/// L2(Gamma_h) inner product of two discrete fields.
inline double l2_inner(const AssemblyContext& ctx, std::span<const double> a,
                       std::span<const double> b) {
  double sum = 0.0;
  for (int c = 0; c < ctx.mesh().num_cells(); ++c) {
    const auto eg = ctx.geometry(c);
    for (int q = 0; q < static_cast<int>(eg.size()); ++q) {
      const Point3 ua = discrete_value(ctx, c, eg[q], q, a).first;
      const Point3 ub = discrete_value(ctx, c, eg[q], q, b).first;
      sum += ctx.rule().weights[q] * eg[q].area_factor * ua.dot(ub);
    }
  }
  return sum;
}

}  // namespace surfvec
