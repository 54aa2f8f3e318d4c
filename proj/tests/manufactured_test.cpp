#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support/oracles.hpp"
#include "surfvec/manufactured.hpp"

namespace surfvec {
// readable parameter values in discovered test names
inline void PrintTo(Formulation f, std::ostream* os) { *os << to_string(f); }
}  // namespace surfvec

using namespace surfvec;

namespace {

const TorusSurface kTorus;

Point3 random_surface_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  return kTorus.parametrize(ang(rng), ang(rng));
}

// Closed-form ansatz in (theta, phi), written out independently.
Point3 ansatz_by_hand(double t, double p) {
  const double R = 1.0, r = 0.6;
  return {-r * std::sin(3 * p + t) * std::cos(p) * std::cos(p) * std::sin(t) -
              std::sin(3 * p) * std::cos(p + 3 * t) * std::sin(p) * (R + r * std::cos(t)),
          -r * std::sin(3 * p + t) * std::sin(p) * std::cos(p) * std::sin(t) +
              std::sin(3 * p) * std::cos(p + 3 * t) * std::cos(p) * (R + r * std::cos(t)),
          r * std::sin(3 * p + t) * std::cos(p) * std::cos(t)};
}

}  // namespace

TEST(ExactSolution, Examples) {
  EXPECT_LT(exact_solution(kTorus, {1.6, 0, 0}).norm(), 1e-15);
  EXPECT_LT((exact_solution(kTorus, {1, 0, 0.6}) - Point3(-0.6, 0, 0)).norm(), 1e-15);
  EXPECT_NEAR(exact_solution(kTorus, {1, 0, 0.6}).dot(Point3(0, 0, 1)), 0.0, 1e-15);
}

TEST(ExactSolution, MatchesClosedForm) {
  for (double t : {0.3, 1.7, 4.0})
    for (double p : {0.1, 2.2, 5.5}) {
      const Point3 x = kTorus.parametrize(t, p);
      EXPECT_LT((exact_solution(kTorus, x) - ansatz_by_hand(t, p)).norm(), 1e-14);
    }
}

TEST(ExactSolution, RejectsOffSurfacePoints) {
  EXPECT_THROW(exact_solution(kTorus, {1.7, 0, 0}), GeometryError);
  EXPECT_THROW(exact_load(kTorus, {1.6 + 1e-9, 0, 0}, Formulation::Standard), GeometryError);
}

TEST(ExactSolution, Tangential) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const Point3 x = random_surface_point(rng);
    ASSERT_LT(std::abs(exact_solution(kTorus, x).dot(kTorus.normal(x))), 1e-12);
  }
}

TEST(ExactLoad, TangentialBothKinds) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10000; ++i) {
    const Point3 x = random_surface_point(rng);
    const Point3 n = kTorus.normal(x);
    for (Formulation kind : {Formulation::Standard, Formulation::Symmetric})
      ASSERT_LT(std::abs(exact_load(kTorus, x, kind).dot(n)), 1e-10);
  }
  EXPECT_LT(std::abs(exact_load(kTorus, {1.6, 0, 0}, Formulation::Standard).x()), 1e-10);
}

TEST(ExactLoad, ConsistentLoadAddsNormalPart) {
  // The tangential part of the consistent load is the tangential load; its
  // normal part is X : kappa.
  const ExactField u(kTorus);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const Point3 x = random_surface_point(rng);
    for (Formulation kind : {Formulation::Standard, Formulation::Symmetric}) {
      const Point3 full = u.consistent_load(x, kind);
      const Tensor3 P = kTorus.tangent_projection(x);
      EXPECT_LT((P * full - u.load(x, kind)).norm(), 1e-10);
      const Tensor3 X = u.covariant_derivative(x, kind);
      const double normal_part = (X.array() * kTorus.curvature_tensor(x).array()).sum();
      EXPECT_NEAR(full.dot(kTorus.normal(x)), normal_part, 1e-9 * (1 + std::abs(normal_part)));
    }
  }
}

TEST(ExactLoad, FormulationsDiffer) {
  std::mt19937_64 rng(3);
  double diff = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Point3 x = random_surface_point(rng);
    diff = std::max(diff, (exact_load(kTorus, x, Formulation::Standard) -
                           exact_load(kTorus, x, Formulation::Symmetric))
                              .lpNorm<Eigen::Infinity>());
  }
  EXPECT_GT(diff, 1e-3);
}

TEST(ExactField, DualGradientMatchesFiniteDifferences) {
  const ExactField u(kTorus);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> off(-0.3, 0.3);
  const double step = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Point3 p = random_surface_point(rng);
    const Point3 y = p + off(rng) * kTorus.normal(p);
    const Tensor3 G = u.gradient(y);
    for (int j = 0; j < 3; ++j) {
      Point3 a = y, b = y;
      a[j] += step;
      b[j] -= step;
      const Point3 fd = (u(a) - u(b)) / (2 * step);
      worst = std::max(worst, (G.col(j) - fd).lpNorm<Eigen::Infinity>());
    }
  }
  EXPECT_LT(worst, 1e-7);
}

TEST(ExactField, CovariantDerivativeIsTangential) {
  const ExactField u(kTorus);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const Point3 x = random_surface_point(rng);
    const Point3 n = kTorus.normal(x);
    for (Formulation kind : {Formulation::Standard, Formulation::Symmetric}) {
      const Tensor3 D = u.covariant_derivative(x, kind);
      EXPECT_LT((D * n).norm(), 1e-13);
      EXPECT_LT((n.transpose() * D).norm(), 1e-13);
    }
    const Tensor3 E = u.covariant_derivative(x, Formulation::Symmetric);
    EXPECT_LT((E - E.transpose()).norm(), 1e-14);
  }
}

TEST(TorusIntegral, AreaAndSpectralAccuracy) {
  const double area = torus_integral(kTorus, 64, 64, [](const Point3&) { return 1.0; });
  EXPECT_NEAR(area, kTorus.area(), 1e-12);
  // integral of z^2 over the torus: pi^2 R r^3 * 2
  const double z2 = torus_integral(kTorus, 64, 64, [](const Point3& x) { return x.z() * x.z(); });
  EXPECT_NEAR(z2, 2 * std::numbers::pi * std::numbers::pi * 1.0 * 0.6 * 0.6 * 0.6, 1e-12);
}

// (f, v) = a(u, v) for random smooth tangential v on the exact torus.
class WeakForm : public ::testing::TestWithParam<Formulation> {};

TEST_P(WeakForm, LoadConsistentWithBilinearForm) {
  const auto samples = oracle::sample_torus(kTorus, GetParam(), 256, 256);
  std::mt19937_64 rng(42);
  for (int t = 0; t < 10; ++t) {
    const oracle::TrigTangentField v(1.0, rng);
    const auto w = oracle::weak_form(samples, v);
    EXPECT_GT(std::abs(w.bilinear), 1e-3);
    EXPECT_LT(std::abs(w.load - w.bilinear) / std::abs(w.bilinear), 1e-8)
        << "field " << t << ": (f,v)=" << w.load << " a(u,v)=" << w.bilinear;
  }
}

INSTANTIATE_TEST_SUITE_P(BothKinds, WeakForm,
                         ::testing::Values(Formulation::Standard, Formulation::Symmetric),
                         [](const auto& info) { return to_string(info.param); });

TEST(ExactLoad, SymmetricLoadOrthogonalToKillingField) {
  double fk = 0.0, ff = 0.0, kk = 0.0;
  const double two_pi = 2 * std::numbers::pi;
  const int n = 256;
  for (int i = 0; i < n; ++i) {
    const double t = two_pi * (i + 0.5) / n;
    const double w = 0.6 * (1.0 + 0.6 * std::cos(t));
    for (int j = 0; j < n; ++j) {
      const Point3 x = kTorus.parametrize(t, two_pi * (j + 0.25) / n);
      const Point3 f = exact_load(kTorus, x, Formulation::Symmetric);
      const Point3 k = killing_field(x);
      fk += w * f.dot(k), ff += w * f.squaredNorm(), kk += w * k.squaredNorm();
    }
  }
  EXPECT_LT(std::abs(fk) / std::sqrt(ff * kk), 1e-6);
}

TEST(ExactSolution, L2OrthogonalToKillingField) {
  double uk = torus_integral(kTorus, 128, 128, [](const Point3& x) {
    return exact_solution(kTorus, x).dot(killing_field(x));
  });
  EXPECT_LT(std::abs(uk), 1e-10);
}

TEST(ErrorNorms, InterpolantConvergesAtOrderKuPlusOne) {
  const ExactField u(kTorus);
  for (int ku = 1; ku <= 2; ++ku) {
    std::vector<double> hs, errs;
    for (int n : {16, 32, 64}) {
      const auto m = elevate_geometry(build_torus_mesh(kTorus, n, n), ku + 1, kTorus);
      const auto ctx = error_context(m, kTorus, ku);
      const Vector c = interpolate(ctx.dofs(), [&](const Point3& x) { return u(x); });
      hs.push_back(m.h());
      errs.push_back(l2_error(ctx, c, u));
    }
    EXPECT_NEAR(oracle::observed_order(hs[1], errs[1], hs[2], errs[2]), ku + 1, 0.3) << ku;
  }
}

TEST(ErrorNorms, SelfDistanceIsZero) {
  const ExactField u(kTorus);
  const auto m = elevate_geometry(build_torus_mesh(kTorus, 16, 16), 2, kTorus);
  const auto ctx = error_context(m, kTorus, 2);
  const Vector c = interpolate(ctx.dofs(), [&](const Point3& x) { return u(x); });
  Vector diff = c;
  axpy(-1.0, c, diff);
  EXPECT_EQ(l2_error(ctx, diff, nullptr), 0.0);
  EXPECT_EQ(energy_error_parts(ctx, diff, nullptr, 100.0).total, 0.0);
  EXPECT_NEAR(l2_inner(ctx, c, c), std::pow(l2_error(ctx, c, nullptr), 2), 1e-12);
}

TEST(ErrorNorms, ZeroCoefficientsGiveStableFieldNorm) {
  const ExactField u(kTorus);
  std::vector<double> norms;
  for (int n : {16, 32, 64}) {
    const auto m = elevate_geometry(build_torus_mesh(kTorus, n, n), 2, kTorus);
    const auto ctx = error_context(m, kTorus, 1);
    norms.push_back(l2_error(ctx, Vector(ctx.dofs().num_dofs(), 0.0), u));
  }
  for (double x : norms) EXPECT_NEAR(x / norms.back(), 1.0, 5e-4);
  // exact-torus value as regression reference
  const double exact = std::sqrt(
      torus_integral(kTorus, 128, 128, [&](const Point3& x) { return u(x).squaredNorm(); }));
  EXPECT_NEAR(norms.back(), exact, 5e-4 * exact);
}

TEST(ErrorNorms, TangentialFieldHasNoPenaltyContribution) {
  // Flat facet in the plane x = 1.6; the field (0, y, z) is tangent to it.
  const ParametricMesh m(1, {{1.6, 0, 0}, {1.6, 1, 0}, {1.6, 0, 1}}, {0, 1, 2}, 3);
  const auto ctx = error_context(m, kTorus, 1);
  const Vector c = interpolate(ctx.dofs(), [](const Point3& x) { return Point3(0, x.y(), x.z()); });
  const auto e = energy_error_parts(ctx, c, nullptr, 100.0);
  EXPECT_GT(e.gradient_part, 0.1);
  EXPECT_LT(e.penalty_part, 1e-10 * e.total * e.total);
}
