#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "finsler/catalog.hpp"
#include "finsler/deturck.hpp"
#include "finsler/flow.hpp"
#include "finsler/geometry.hpp"

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

StructurePtr stretched() {
  // h11 = 1 + x1^2, h22 = 1
  return riemannian_structure("stretched", ChartDomain{{-3, -3}, {3, 3}, BoundaryMode::Pinned, true},
                              [](const F2Jet& x1, const F2Jet&, F2Jet& a11, F2Jet& a12, F2Jet& a22) {
                                a11 = x1 * x1 + 1.0;
                                a12 = F2Jet();
                                a22 = F2Jet(1.0);
                              });
}

TEST(DeTurckVector, VanishesWhenBackgroundEqualsStructure) {
  for (const char* name : {"euclidean", "round_sphere", "randers_flat"}) {
    const auto s = catalog_structure(name);
    const Vec2 xi = deturck_vector(*s, *s, {0.3, -0.2}, {0.6, 0.8});
    EXPECT_NEAR(xi.norm(), 0.0, 1e-12) << name;
  }
}

TEST(DeTurckVector, EuclideanAgainstStretchedBackground) {
  // Gamma(h)^1_11 = x1 / (1 + x1^2) = 1/2 at x1 = 1, all others vanish.
  const Vec2 xi = deturck_vector(*catalog_structure("euclidean"), *stretched(), {1.0, 0.0},
                                 {1.0, 0.0});
  EXPECT_NEAR(xi[0], 0.5, 1e-12);
  EXPECT_NEAR(xi[1], 0.0, 1e-12);
}

TEST(DeTurckVector, ConformalSphereAgainstEuclideanAtOrigin) {
  const Vec2 xi = deturck_vector(*catalog_structure("round_sphere"),
                                 *catalog_structure("euclidean"), {0.0, 0.0}, {0.6, 0.8});
  EXPECT_NEAR(xi.norm(), 0.0, 1e-12);
}

TEST(DeTurckVector, GridFieldMatchesAnalytic) {
  const auto g = box_grid(9, -0.5, 0.5, 32);
  const DeTurckField f = deturck_vector_field(*catalog_structure("euclidean"), *stretched(), g);
  const std::size_t n = g.index(8, 4, 5);
  EXPECT_NEAR(f.xi1[n], 0.5 / 1.25, 1e-12);
  EXPECT_NEAR(f.xi2[n], 0.0, 1e-12);
  EXPECT_NEAR(f.max_abs(), 0.4, 1e-12);
}

TEST(DeTurckVector, LatticeFieldIsZeroForMatchingBackground) {
  const auto g = box_grid(17, -1, 1, 32);
  const auto s = catalog_structure("round_sphere");
  FlowProblem p(s, g, FlowKind::DeTurck, s);
  EXPECT_LE(deturck_vector_field(p, p.initial_field()).max_abs(), 1e-8);
}

TEST(LieDerivative, Examples) {
  const auto e = catalog_structure("euclidean");
  // Zero field.
  EXPECT_NEAR(lie_derivative_F2(*e, Vec2::Zero(), Mat2::Zero(), {0.1, 0.2}, {1.0, 0.0}), 0.0,
              1e-14);
  // Translations are isometries of the flat metric.
  EXPECT_NEAR(lie_derivative_F2(*e, Vec2(1.0, 0.0), Mat2::Zero(), {0.1, 0.2}, {0.6, 0.8}), 0.0,
              1e-14);
  // Rotation generator (-x2, x1).
  Mat2 rot;
  rot << 0.0, -1.0, 1.0, 0.0;
  EXPECT_NEAR(lie_derivative_F2(*e, Vec2(-0.2, 0.1), rot, {0.1, 0.2}, {0.6, 0.8}), 0.0, 1e-14);
  // Dilation x gives 2 F^2.
  EXPECT_NEAR(lie_derivative_F2(*e, Vec2(0.1, 0.2), Mat2::Identity(), {0.1, 0.2}, {1.0, 0.0}), 2.0,
              1e-14);
}

TEST(LieDerivative, CovariantFormAgreesOnRiemannianStructures) {
  Mat2 dxi;
  dxi << 0.3, -0.7, 0.2, 0.5;
  const Vec2 xi(0.4, -0.1);
  for (const auto& s : {catalog_structure("round_sphere"), stretched()}) {
    for (const TangentVector y : {TangentVector{1.0, 0.0}, TangentVector{0.6, -0.8}}) {
      const ChartPoint x{0.3, 0.2};
      EXPECT_NEAR(lie_derivative_covariant(*s, xi, dxi, x, y), lie_derivative_F2(*s, xi, dxi, x, y),
                  1e-6);
    }
  }
}

TEST(LieDerivative, GridVersionMatchesAnalytic) {
  const auto g = box_grid(65, -1, 1, 32);
  const auto e = catalog_structure("euclidean");
  const auto h = stretched();
  const DeTurckField f = deturck_vector_field(*e, *h, g);
  // xi = (x1 / (1 + x1^2), 0): dxi^1/dx^1 = (1 - x1^2) / (1 + x1^2)^2.
  const int i1 = 48, i2 = 32, k = 3;
  const double x1 = g.x1(i1);
  Mat2 dxi = Mat2::Zero();
  dxi(0, 0) = (1 - x1 * x1) / ((1 + x1 * x1) * (1 + x1 * x1));
  const Vec2 xi(x1 / (1 + x1 * x1), 0.0);
  EXPECT_NEAR(lie_derivative_F2(*e, f, i1, i2, k),
              lie_derivative_F2(*e, xi, dxi, g.point(i1, i2), g.direction(k)), 1e-5);
}

TEST(DeTurckRhsAnalytic, Examples) {
  const auto sphere = catalog_structure("round_sphere");
  // Origin, y = (1, 0): F^2 = 4, Ric = 1, xi = 0.
  EXPECT_NEAR(deturck_rhs(*sphere, *sphere, {0.0, 0.0}, {1.0, 0.0}), -8.0, 1e-8);
  const auto e = catalog_structure("euclidean");
  EXPECT_NEAR(deturck_rhs(*e, *e, {0.4, 0.1}, {0.6, 0.8}), 0.0, 1e-10);
}

std::vector<DeTurckSample> constant_history(const SphereBundleGrid& g, double t_end, int n,
                                            const std::function<Vec2(const Vec2&)>& xi) {
  std::vector<DeTurckSample> h;
  for (int s = 0; s <= n; ++s) {
    DeTurckSample d;
    d.t = t_end * s / n;
    for (int i2 = 0; i2 < g.nx2; ++i2)
      for (int i1 = 0; i1 < g.nx1; ++i1) d.xi.push_back(xi(Vec2(g.x1(i1), g.x2(i2))));
    h.push_back(std::move(d));
  }
  return h;
}

TEST(Diffeomorphisms, ZeroFieldIsIdentity) {
  const auto g = box_grid(9, -1, 1, 16);
  const auto fam = integrate_diffeomorphisms(
      constant_history(g, 0.1, 10, [](const Vec2&) { return Vec2::Zero(); }), g, 1e-2);
  ASSERT_EQ(fam.times.size(), 11u);
  for (int c = 0; c < g.columns(); ++c) {
    const Vec2 x(g.x1(c % g.nx1), g.x2(c / g.nx1));
    EXPECT_NEAR((fam.positions.back()[c] - x).norm(), 0.0, 1e-15);
    EXPECT_NEAR((fam.jacobians.back()[c] - Mat2::Identity()).norm(), 0.0, 1e-12);
  }
}

TEST(Diffeomorphisms, ConstantFieldTranslatesInterior) {
  const auto g = box_grid(17, -1, 1, 16);
  const auto fam = integrate_diffeomorphisms(
      constant_history(g, 0.1, 10, [](const Vec2&) { return Vec2(0.5, -0.25); }), g, 1e-2);
  const int c = 8 * g.nx1 + 8;
  EXPECT_NEAR(fam.positions.back()[c][0], 0.05, 1e-12);
  EXPECT_NEAR(fam.positions.back()[c][1], -0.025, 1e-12);
  // Pinned boundary trajectories stay put.
  EXPECT_NEAR(fam.positions.back()[0][0], -1.0, 1e-15);
}

TEST(Diffeomorphisms, LinearFieldIsExponential) {
  const auto g = box_grid(17, -0.5, 0.5, 16);
  const auto hist = constant_history(g, 0.5, 50, [](const Vec2& x) { return x; });
  EXPECT_THROW(integrate_diffeomorphisms(hist, g, 1e-2), FinslerError);
  const auto fam = integrate_diffeomorphisms(hist, g, 1e-2, LeftChartPolicy::Freeze);
  const int c = 8 * g.nx1 + 10;  // x = (0.125, 0)
  const double e = std::exp(0.5);
  EXPECT_NEAR(fam.positions.back()[c][0], 0.125 * e, 1e-8);
  EXPECT_NEAR(fam.jacobians.back()[c](0, 0), e, 1e-6);
  EXPECT_NEAR(fam.jacobians.back()[c](1, 1), e, 1e-6);
  EXPECT_FALSE(fam.left_chart[c]);
  EXPECT_TRUE(fam.left_chart[8 * g.nx1 + 15]);  // x1 = 0.4375 exits at t ~ 0.13
  EXPECT_EQ(fam.sample_at(0.26), 26u);
}

TEST(Pullback, IdentityTranslationAndDilation) {
  const auto g = box_grid(9, -0.5, 0.5, 16);
  const auto sphere = catalog_structure("round_sphere");
  const auto e = catalog_structure("euclidean");

  const auto id = fixed_diffeomorphism(g, [](const Vec2& x) { return x; });
  const FieldOnSM a = pullback_field(id, 0, *sphere);
  const FieldOnSM b = sample_structure(*sphere, g);
  for (std::size_t n = 0; n < a.values.size(); ++n) EXPECT_NEAR(a.values[n], b.values[n], 1e-14);

  const auto shift = fixed_diffeomorphism(g, [](const Vec2& x) { return Vec2(x[0] + 0.2, x[1]); });
  const FieldOnSM c = pullback_field(shift, 0, *sphere);
  EXPECT_NEAR(c(4, 4, 3), eval_F(*sphere, {0.2, 0.0}, g.direction(3)), 1e-14);

  const auto twice = fixed_diffeomorphism(g, [](const Vec2& x) { return Vec2(2 * x); });
  for (double v : pullback_field(twice, 0, *e).values) EXPECT_NEAR(v, 2.0, 1e-12);
}

TEST(Pullback, ReflectionIsDegenerate) {
  const auto g = box_grid(9, -0.5, 0.5, 16);
  const auto flip = fixed_diffeomorphism(g, [](const Vec2& x) { return Vec2(-x[0], x[1]); });
  try {
    pullback_field(flip, 0, *catalog_structure("euclidean"));
    FAIL() << "expected DegeneratePullback";
  } catch (const FinslerError& err) {
    EXPECT_EQ(err.kind(), ErrorKind::DegeneratePullback);
  }
}

TEST(Pullback, LatticeFieldAgreesWithStructure) {
  const auto g = box_grid(17, -0.5, 0.5, 32);
  const auto sphere = catalog_structure("round_sphere");
  const FieldOnSM sampled = sample_structure(*sphere, g);
  const auto shrink = fixed_diffeomorphism(g, [](const Vec2& x) { return Vec2(0.5 * x); });
  const FieldOnSM a = pullback_field(shrink, 0, *sphere);
  const FieldOnSM b = pullback_field(shrink, 0, sampled);
  for (std::size_t n = 0; n < a.values.size(); ++n) EXPECT_NEAR(a.values[n], b.values[n], 1e-4);
}

TEST(Naturality, RicciScalarUnderDilation) {
  // Ric(phi^* F)(x, y) = Ric(F)(phi(x), D phi y) for phi = 2x.
  const auto g = box_grid(65, -0.25, 0.25, 32);
  const auto sphere = catalog_structure("round_sphere");
  const auto twice = fixed_diffeomorphism(g, [](const Vec2& x) { return Vec2(2 * x); });
  const auto pulled = pullback_structure(twice, 0, *sphere);
  FlowProblem p(pulled, g, FlowKind::Ricci);
  RhsResult r;
  p.evaluate(p.initial_field(), r);
  double err = 0.0;
  for (int i2 = 0; i2 < g.nx2; ++i2)
    for (int i1 = 0; i1 < g.nx1; ++i1) {
      if (!g.is_interior(i1, i2, 4)) continue;
      for (int k = 0; k < g.ntheta; ++k) {
        const ChartPoint x = g.point(i1, i2);
        const TangentVector y = g.direction(k);
        const double direct = ricci_scalar(*sphere, {2 * x.x1, 2 * x.x2}, {2 * y.y1, 2 * y.y2});
        err = std::max(err, std::abs(r.ric(i1, i2, k) - direct));
      }
    }
  EXPECT_LE(err, 1e-5);
}

TEST(DiffeoCsv, HeaderAndRowCount) {
  const auto g = box_grid(9, -0.5, 0.5, 16);
  const auto id = fixed_diffeomorphism(g, [](const Vec2& x) { return x; });
  const std::string csv = diffeo_csv(id);
  EXPECT_EQ(csv.rfind("t,i1,i2,phi1,phi2,J11,J12,J21,J22\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + g.columns());
}

}  // namespace
