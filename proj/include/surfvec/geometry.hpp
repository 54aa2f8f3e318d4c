#pragma once

// Implicit torus and the tangential-calculus operators evaluated at points
// of its tubular neighbourhood. The torus axis is the z-axis.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include "surfvec/dual.hpp"
#include "surfvec/error.hpp"

namespace surfvec {

using Point3 = Eigen::Vector3d;
using Tensor3 = Eigen::Matrix3d;

template <class T>
using Vec3T = std::array<T, 3>;

inline Point3 to_point(const Vec3T<double>& a) { return {a[0], a[1], a[2]}; }
inline Vec3T<double> to_array(const Point3& p) { return {p.x(), p.y(), p.z()}; }

/// Result of the tangent-plane distortion map between a discrete facet and the torus.
struct Distortion {
  Tensor3 B;
  double det;  // surface measure ratio dGamma / dGamma_h
};

class TorusSurface {
 public:
  explicit TorusSurface(double major_radius = 1.0, double minor_radius = 0.6)
      : R_(major_radius), r_(minor_radius) {
    if (!(r_ > 0.0) || !(r_ < R_) || !std::isfinite(R_))
      throw DomainError("torus radii must satisfy 0 < r < R");
  }

  double major_radius() const { return R_; }
  double minor_radius() const { return r_; }

  /// Exact area 4 pi^2 R r.
  double area() const { return 4.0 * std::numbers::pi * std::numbers::pi * R_ * r_; }

  /// gamma(theta, phi); theta runs around the tube, phi around the z-axis.
  Point3 parametrize(double theta, double phi) const {
    const double ring = R_ + r_ * std::cos(theta);
    return {ring * std::cos(phi), ring * std::sin(phi), r_ * std::sin(theta)};
  }

  double signed_distance(const Point3& x) const {
    const double rxy = std::hypot(x.x(), x.y());
    if (rxy <= kAxisTol * R_)
      throw GeometryError("point on torus axis, closest point ambiguous");
    return std::hypot(rxy - R_, x.z()) - r_;
  }

  /// Closest point on the torus; p(x) = x - rho(x) n(x).
  Point3 closest_point(const Point3& x) const {
    check_unique(x);
    return to_point(closest_point_t(to_array(x)));
  }

  /// Exterior unit normal n = grad rho, constant along normal segments.
  Point3 normal(const Point3& x) const {
    check_unique(x);
    return to_point(normal_t(to_array(x)));
  }

  Tensor3 tangent_projection(const Point3& x) const {
    const Point3 n = normal(x);
    return Tensor3::Identity() - n * n.transpose();
  }

  /// Hessian of the signed distance: sum_i k_i / (1 + rho k_i) a_i (x) a_i with
  /// principal curvatures 1/r (meridional) and cos(theta)/(R + r cos(theta)).
  Tensor3 curvature_tensor(const Point3& x) const {
    check_unique(x);
    const double rxy = std::hypot(x.x(), x.y());
    const double q = rxy - R_;
    const double d = std::hypot(q, x.z());
    const double ct = q / d, st = x.z() / d;
    const double cp = x.x() / rxy, sp = x.y() / rxy;
    const Point3 e_theta(-st * cp, -st * sp, ct);
    const Point3 e_phi(-sp, cp, 0.0);
    // k1/(1+rho k1) = 1/d and k2/(1+rho k2) = cos(theta)/rxy.
    const double k1 = 1.0 / d, k2 = ct / rxy;
    Tensor3 K;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        K(i, j) = K(j, i) = k1 * (e_theta[i] * e_theta[j]) + k2 * (e_phi[i] * e_phi[j]);
    return K;
  }

  /// Principal curvatures of the torus at the closest point of x.
  std::array<double, 2> principal_curvatures(const Point3& x) const {
    check_unique(x);
    const double rxy = std::hypot(x.x(), x.y());
    const double ct = (rxy - R_) / std::hypot(rxy - R_, x.z());
    return {1.0 / r_, ct / (R_ + r_ * ct)};
  }

  /// B = P (I - rho kappa) P_h and the area ratio of its action on the facet plane.
  Distortion distortion_B(const Point3& x_h, const Point3& n_h) const {
    const double rho = signed_distance(x_h);
    const Tensor3 P = tangent_projection(x_h);
    const Tensor3 Ph = Tensor3::Identity() - n_h * n_h.transpose();
    const Tensor3 B = P * (Tensor3::Identity() - rho * curvature_tensor(x_h)) * Ph;

    // Orthonormal pair spanning the plane orthogonal to n_h.
    Point3 helper = std::abs(n_h.x()) < 0.9 ? Point3::UnitX() : Point3::UnitY();
    const Point3 t1 = (helper - helper.dot(n_h) * n_h).normalized();
    const Point3 t2 = n_h.cross(t1);
    const double det = (B * t1).cross(B * t2).norm();
    if (det <= 1e-12) throw GeometryError("degenerate mapping");
    return {B, det};
  }

  /// Toroidal angles (theta, phi) of the closest point.
  std::pair<double, double> angles(const Point3& x) const {
    check_unique(x);
    const auto a = angles_t(to_array(x));
    return {a[0], a[1]};
  }

  // Generic kernels, differentiable through Dual scalars. Callers are
  // responsible for staying off the ambiguity loci.

  template <class T>
  Vec3T<T> normal_t(const Vec3T<T>& x) const {
    using std::sqrt;
    const T rxy = sqrt(x[0] * x[0] + x[1] * x[1]);
    const T q = rxy - R_;
    const T d = sqrt(q * q + x[2] * x[2]);
    const T s = q / (d * rxy);
    return {s * x[0], s * x[1], x[2] / d};
  }

  template <class T>
  Vec3T<T> closest_point_t(const Vec3T<T>& x) const {
    using std::sqrt;
    const T rxy = sqrt(x[0] * x[0] + x[1] * x[1]);
    const T q = rxy - R_;
    const T d = sqrt(q * q + x[2] * x[2]);
    const T radial = (R_ + r_ * q / d) / rxy;
    return {radial * x[0], radial * x[1], r_ * x[2] / d};
  }

  template <class T>
  std::array<T, 2> angles_t(const Vec3T<T>& x) const {
    using std::atan2;
    using std::sqrt;
    const T rxy = sqrt(x[0] * x[0] + x[1] * x[1]);
    return {atan2(x[2], rxy - R_), atan2(x[1], x[0])};
  }

 private:
  static constexpr double kAxisTol = 1e-14;

  void check_unique(const Point3& x) const {
    const double rxy = std::hypot(x.x(), x.y());
    if (rxy <= kAxisTol * R_ || std::hypot(rxy - R_, x.z()) <= kAxisTol * r_)
      throw GeometryError("closest point not unique");
  }

  double R_;
  double r_;
};

}  // namespace surfvec
