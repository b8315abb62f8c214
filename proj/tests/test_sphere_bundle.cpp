#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "finsler/catalog.hpp"
#include "finsler/grid_structure.hpp"
#include "finsler/sphere_bundle.hpp"
#include "finsler/stencil.hpp"

namespace {

using namespace finsler;

SphereBundleGrid box_grid(int n, double lo, double hi, int ntheta) {
  SphereBundleGrid g;
  g.nx1 = g.nx2 = n;
  g.ntheta = ntheta;
  g.domain.lower = {lo, lo};
  g.domain.upper = {hi, hi};
  g.domain.boundary = BoundaryMode::Pinned;
  return g;
}

TEST(Stencil, FornbergCentralWeights) {
  const auto w = fornberg_weights(0.0, {-2, -1, 0, 1, 2}, 2);
  const double d1[5] = {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
  const double d2[5] = {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12};
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(w[1][j], d1[j], 1e-15);
    EXPECT_NEAR(w[2][j], d2[j], 1e-14);
  }
}

TEST(Stencil, OneSidedStencilsAreFourthOrder) {
  // Error on x^4 must vanish to rounding only for orders <= 4 polynomials.
  const int n = 12;
  const double h = 0.1;
  for (int order = 1; order <= 2; ++order) {
    AxisStencils st(n, h, false, order, 5);
    for (int i = 0; i < n; ++i) {
      const double x = i * h;
      const double approx = st[i].apply([&](int j) { return std::pow(j * h, 4); });
      const double exact = order == 1 ? 4 * std::pow(x, 3) : 12 * x * x;
      EXPECT_NEAR(approx, exact, 1e-9) << "order " << order << " node " << i;
    }
  }
}

TEST(Stencil, AssemblyTableIsComplete) {
  int nonzero = 0;
  for (const auto& t : detail::kAssembly) nonzero += t.factor != 0.0;
  EXPECT_EQ(nonzero, detail::kAssemblyTerms);
}

TEST(Grid, Validation) {
  SphereBundleGrid g = box_grid(8, -1, 1, 64);
  EXPECT_THROW(g.validate(), FinslerError);
  g = box_grid(9, -1, 1, 15);
  EXPECT_THROW(g.validate(), FinslerError);
  g = box_grid(9, -1, 1, 18);
  EXPECT_NO_THROW(g.validate());
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.25);
}

TEST(PolarExtend, Examples) {
  SphereBundleGrid g = box_grid(9, -1, 1, 16);
  FieldOnSM ones(g);
  for (double& v : ones.values) v = 1.0;
  EXPECT_DOUBLE_EQ(polar_extend(ones, {0.1, 0.3}, {3, 4}), 5.0);

  const FieldOnSM eu = sample_structure(*catalog_structure("randers_flat"), g);
  for (int k = 0; k < g.ntheta; ++k) {
    const TangentVector u = g.direction(k);
    EXPECT_DOUBLE_EQ(polar_extend(eu, g.point(3, 5), u), eu(3, 5, k));
  }
  const FieldOnSM sp = sample_structure(*catalog_structure("round_sphere"), g);
  EXPECT_NEAR(polar_extend(sp, {0, 0}, {2, 0}), 4.0, 1e-8);
  EXPECT_THROW(polar_extend(sp, {0, 0}, {0, 0}), FinslerError);
  EXPECT_THROW(polar_extend(sp, {1.5, 0}, {1, 0}), FinslerError);
}

TEST(PolarExtend, ExactlyHomogeneous) {
  SphereBundleGrid g = box_grid(9, -1, 1, 16);
  const FieldOnSM f = sample_structure(*catalog_structure("randers_flat", {{"b", 0.4}}), g);
  const TangentVector y{0.3, -0.7};
  const double base = polar_extend(f, {0.2, 0.1}, y);
  for (double lam : {0.5, 2.0, 8.0}) {
    EXPECT_DOUBLE_EQ(polar_extend(f, {0.2, 0.1}, {lam * y.y1, lam * y.y2}), lam * base);
  }
}

TEST(PolarExtend, ThetaRefinementIsCubic) {
  auto s = catalog_structure("randers_flat", {{"b", 0.5}});
  auto max_err = [&](int ntheta) {
    const FieldOnSM f = sample_structure(*s, box_grid(9, -1, 1, ntheta));
    double e = 0.0;
    for (int j = 0; j < 997; ++j) {
      const double th = 2 * std::numbers::pi * (j + 0.37) / 997;
      const TangentVector y{std::cos(th), std::sin(th)};
      e = std::max(e, std::abs(polar_extend(f, {0, 0}, y) - eval_F(*s, {0, 0}, y)));
    }
    return e;
  };
  const double e32 = max_err(32), e64 = max_err(64);
  EXPECT_GT(e32 / e64, 8.0);
}

TEST(BerwaldFrame, Examples) {
  const BerwaldFrame eu = berwald_frame(*catalog_structure("euclidean"), {0, 0}, {1, 0});
  EXPECT_TRUE(eu.e1.isApprox(Vec2(0, -1)));
  EXPECT_TRUE(eu.e2.isApprox(Vec2(1, 0)));
  const BerwaldFrame sp = berwald_frame(*catalog_structure("round_sphere"), {0, 0}, {1, 0});
  EXPECT_NEAR((sp.e1 - Vec2(0, -0.5)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((sp.e2 - Vec2(0.5, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(sp.e1.dot(sp.g * sp.e1), 1.0, 1e-14);
}

TEST(BerwaldFrame, OrthonormalDualHorizontal) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  const char* names[] = {"round_sphere", "randers_flat", "rosenau", "torus_bump"};
  for (int n = 0; n < 50; ++n) {
    auto s = catalog_structure(names[n % 4]);
    const ChartPoint x{u(rng), u(rng)};
    const TangentVector y{u(rng), u(rng)};
    const BerwaldFrame b = berwald_frame(*s, x, y);
    const Vec2 e[2] = {b.e1, b.e2};
    const Vec2 w[2] = {b.omega1, b.omega2};
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c) {
        EXPECT_NEAR(e[a].dot(b.g * e[c]), a == c ? 1.0 : 0.0, 1e-10);
        EXPECT_NEAR(w[a].dot(e[c]), a == c ? 1.0 : 0.0, 1e-10);
      }
    Eigen::Vector4d w3;
    w3 << b.omega3_dx, b.omega3_dy;
    EXPECT_NEAR(w3.dot(b.hat_e1), 0.0, 1e-10);
    EXPECT_NEAR(w3.dot(b.hat_e2), 0.0, 1e-10);
    EXPECT_NEAR(w3.dot(b.hat_e3), 1.0, 1e-10);
    // Horizontal: the fiber part equals -N applied to the base part.
    EXPECT_NEAR((b.hat_e1.tail<2>() + b.N * b.hat_e1.head<2>()).norm(), 0.0, 1e-12);
    EXPECT_NEAR((b.hat_e2.tail<2>() + b.N * b.hat_e2.head<2>()).norm(), 0.0, 1e-12);
    EXPECT_EQ(b.hat_e3.head<2>().norm(), 0.0);
  }
}

TEST(Ellipticity, Monitor) {
  const SphereBundleGrid g = box_grid(33, -1, 1, 16);
  GridSampledStructure eu("eu", sample_structure(*catalog_structure("euclidean"), g));
  EXPECT_NEAR(ellipticity_monitor(lattice_metric(eu)), 1.0, 1e-12);
  GridSampledStructure sp("sp", sample_structure(*catalog_structure("round_sphere"), g));
  EXPECT_NEAR(ellipticity_monitor(lattice_metric(sp)), 4.0 / 9.0, 1e-6);
  auto bad = lattice_metric(sp);
  bad[100](0, 0) = -1.0;
  EXPECT_LT(ellipticity_monitor(bad), 0.0);
}

TEST(GridStructure, RoundSphereRicciFromLattice) {
  const SphereBundleGrid g = box_grid(33, -1, 1, 64);
  auto exact = catalog_structure("round_sphere");
  GridSampledStructure s("sp", sample_structure(*exact, g));
  double worst = 0.0;
  for (int i2 = 1; i2 < g.nx2 - 1; ++i2)
    for (int i1 = 1; i1 < g.nx1 - 1; ++i1)
      for (int k = 0; k < g.ntheta; k += 5) {
        const GeometryJet gj = geometry_from_jet(s.node_jet(i1, i2, k), g.direction(k).vec());
        worst = std::max(worst, std::abs(gj.ric - 1.0));
      }
  EXPECT_LT(worst, 5e-3);
}

TEST(GridStructure, NodeJetMatchesOffNodePath) {
  const SphereBundleGrid g = box_grid(17, -1, 1, 32);
  GridSampledStructure s("r", sample_structure(*catalog_structure("randers_flat"), g));
  const F2Jet a = s.node_jet(4, 7, 3);
  const F2Jet b = s.f2_jet(g.point(4, 7), g.direction(3));
  for (int i = 0; i < F2Jet::kSize; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(GridStructure, RandersLatticeJetsMatchAnalytic) {
  const SphereBundleGrid g = box_grid(9, -1, 1, 64);
  auto exact = catalog_structure("randers_flat", {{"b", 0.5}});
  GridSampledStructure s("r", sample_structure(*exact, g));
  for (int k = 0; k < g.ntheta; k += 7) {
    const GeometryJet a = geometry_jet(*exact, g.point(4, 4), g.direction(k));
    const GeometryJet b = geometry_from_jet(s.node_jet(4, 4, k), g.direction(k).vec());
    EXPECT_LT((a.g - b.g).cwiseAbs().maxCoeff(), 1e-6);
    for (int i = 0; i < 2; ++i) EXPECT_LT((a.cartan[i] - b.cartan[i]).cwiseAbs().maxCoeff(), 1e-4);
  }
}

}  // namespace
