#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "finsler/catalog.hpp"
#include "finsler/geometry.hpp"

namespace {

using namespace finsler;

TEST(EvalF, CatalogValues) {
  EXPECT_DOUBLE_EQ(eval_F(*catalog_structure("euclidean"), {0, 0}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(eval_F(*catalog_structure("randers_flat", {{"b", 0.5}}), {0, 0}, {1, 0}), 1.5);
  EXPECT_DOUBLE_EQ(eval_F(*catalog_structure("round_sphere"), {0, 0}, {1, 0}), 2.0);
}

TEST(EvalF, ErrorKinds) {
  auto s = catalog_structure("euclidean");
  try {
    eval_F(*s, {0, 0}, {0, 0});
    FAIL();
  } catch (const FinslerError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVector);
  }
  ChartDomain d;
  d.lower = {-1, -1};
  d.upper = {1, 1};
  AnalyticStructure boxed("box", d, [](const F2Jet&, const F2Jet&, const F2Jet& y1,
                                       const F2Jet& y2) { return y1 * y1 + y2 * y2; });
  try {
    metric_tensor(boxed, {2.0, 0.0}, {1, 0});
    FAIL();
  } catch (const FinslerError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfChart);
  }
}

TEST(MetricTensor, Examples) {
  EXPECT_TRUE(metric_tensor(*catalog_structure("euclidean"), {0.3, -0.2}, {1, 2})
                  .isApprox(Mat2::Identity(), 1e-15));
  EXPECT_TRUE(metric_tensor(*catalog_structure("round_sphere"), {0, 0}, {0.3, -1})
                  .isApprox(4.0 * Mat2::Identity(), 1e-14));
  const Mat2 g = metric_tensor(*catalog_structure("randers_flat", {{"b", 0.5}}), {0, 0}, {1, 0});
  EXPECT_NEAR(g(0, 0), 2.25, 1e-14);
  EXPECT_NEAR(g(1, 1), 1.5, 1e-14);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-14);
}

TEST(MetricTensor, DegenerateStructureRaises) {
  AnalyticStructure flat("flat1d", ChartDomain{.unbounded = true},
                         [](const F2Jet&, const F2Jet&, const F2Jet& y1, const F2Jet& y2) {
                           return y1 * y1 + 1e-14 * (y2 * y2);
                         });
  try {
    metric_tensor(flat, {0, 0}, {1, 1});
    FAIL();
  } catch (const FinslerError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateMetric);
  }
}

double cartan_oracle_gap(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y,
                         double* largest) {
  const Rank3 C = cartan_tensor(s, x, y);
  const double h = 1e-4;
  double gap = 0.0;
  *largest = 0.0;
  for (int k = 0; k < 2; ++k) {
    TangentVector yp = y, ym = y;
    (k == 0 ? yp.y1 : yp.y2) += h;
    (k == 0 ? ym.y1 : ym.y2) -= h;
    const Mat2 dg = (metric_tensor(s, x, yp) - metric_tensor(s, x, ym)) / (2 * h);
    gap = std::max(gap, (C[k] - dg).cwiseAbs().maxCoeff());
    *largest = std::max(*largest, C[k].cwiseAbs().maxCoeff());
  }
  return gap;
}

TEST(CartanTensor, RandersMatchesDifferenceOracle) {
  auto s = catalog_structure("randers_flat", {{"b", 0.5}});
  double largest = 0.0;
  // Along y = (1, 0) the reflection y2 -> -y2 is a symmetry, which forces C = 0 there.
  EXPECT_LT(cartan_oracle_gap(*s, {0, 0}, {1, 0}, &largest), 1e-7);
  EXPECT_LT(largest, 1e-14);
  EXPECT_LT(cartan_oracle_gap(*s, {0, 0}, {1, 1}, &largest), 1e-7);
  EXPECT_GT(largest, 0.1);
  EXPECT_LT(cartan_oracle_gap(*s, {0.3, 0.2}, {-0.4, 0.9}, &largest), 1e-7);
  const Rank3 Cs = cartan_tensor(*catalog_structure("round_sphere"), {0.2, 0.4}, {1, 3});
  for (const auto& m : Cs) EXPECT_LT(m.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Spray, RoundSphere) {
  auto s = catalog_structure("round_sphere");
  const Vec2 G = spray_coefficients(*s, {0.5, 0}, {1, 0});
  EXPECT_NEAR(G[0], -0.4, 1e-14);
  EXPECT_NEAR(G[1], 0.0, 1e-14);
  EXPECT_LT(spray_coefficients(*s, {0, 0}, {0.3, 0.8}).norm(), 1e-15);
  EXPECT_LT(spray_coefficients(*catalog_structure("randers_flat"), {0.1, 0.2}, {1, 1}).norm(),
            1e-15);
}

TEST(NonlinearConnection, RoundSphereAndHomogeneity) {
  auto s = catalog_structure("round_sphere");
  const Mat2 N = nonlinear_connection(*s, {0.5, 0}, {1, 0});
  EXPECT_NEAR(N(0, 0), -0.4, 1e-14);
  const Mat2 N2 = nonlinear_connection(*s, {0.5, 0}, {2, 0});
  EXPECT_TRUE(N2.isApprox(2.0 * N, 1e-14));
  EXPECT_LT(nonlinear_connection(*catalog_structure("euclidean"), {1, 2}, {3, 4}).norm(), 1e-15);
}

TEST(ChernConnection, RoundSphereLeviCivita) {
  auto s = catalog_structure("round_sphere");
  const Rank3 G = chern_connection(*s, {0.5, 0}, {1, 0.3});
  EXPECT_NEAR(G[0](0, 0), -0.8, 1e-14);
  EXPECT_NEAR(G[0](1, 1), 0.8, 1e-14);
  EXPECT_NEAR(G[0](0, 1), 0.0, 1e-14);
  EXPECT_NEAR(G[1](0, 0), 0.0, 1e-14);
  // Conformal factor e^{2f}: Gamma^2_12 = df/dx1 = -0.8.
  EXPECT_NEAR(G[1](0, 1), -0.8, 1e-14);
  const Rank3 gamma = formal_christoffel(*s, {0.5, 0}, {1, 0.3});
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(G[i].isApprox(gamma[i], 1e-14));
  const Rank3 R = chern_connection(*catalog_structure("randers_flat"), {0.2, 0.1}, {1, 2});
  for (const auto& m : R) EXPECT_LT(m.norm(), 1e-15);
}

TEST(HhCurvature, AntisymmetryAndContraction) {
  auto s = catalog_structure("round_sphere");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 20; ++n) {
    const ChartPoint x{u(rng), u(rng)};
    const TangentVector y{u(rng), u(rng)};
    const GeometryJet gj = geometry_jet(*s, x, y);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) EXPECT_NEAR(gj.hh[i][j](0, 1), -gj.hh[i][j](1, 0), 1e-12);
    const Mat2 c = contract_hh_curvature(gj.hh, y.vec(), gj.F * gj.F);
    EXPECT_LT((c - gj.reduced).cwiseAbs().maxCoeff(), 1e-6);
  }
  const Rank4 hh = chern_hh_curvature(*catalog_structure("euclidean"), {0.1, 0.2}, {1, 0});
  for (const auto& row : hh)
    for (const auto& m : row) EXPECT_EQ(m.norm(), 0.0);
}

TEST(RicciScalar, RoundSphereIsOne) {
  auto s = catalog_structure("round_sphere");
  EXPECT_NEAR(ricci_scalar(*s, {0.3, -0.7}, {0.2, 1.0}), 1.0, 1e-12);
  EXPECT_NEAR(reduced_curvature(*s, {0.9, 0.9}, {1, 0}).trace(), 1.0, 1e-12);
  EXPECT_EQ(ricci_scalar(*catalog_structure("euclidean"), {0.1, 0.2}, {1, 0}), 0.0);
}

TEST(RicciScalar, RosenauOrigin) {
  auto s = catalog_structure("rosenau", {{"t0", -1.0}});
  EXPECT_NEAR(ricci_scalar(*s, {0, 0}, {1, 0}), 0.656517642749666, 1e-12);
  EXPECT_NEAR(ricci_scalar(*s, {0, 0}, {1, 0}), 0.5 / std::tanh(1.0), 1e-12);
}

TEST(RicciScalar, RandersIsFlat) {
  auto s = catalog_structure("randers_flat", {{"b", 0.3}});
  EXPECT_NEAR(ricci_scalar(*s, {0.4, 0.1}, {0.3, -0.8}), 0.0, 1e-14);
}

}  // namespace
