#include <gtest/gtest.h>

#include <cmath>

#include "finsler/catalog.hpp"
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

FlowState start(const FlowProblem& p) { return {p.initial_field(), 0.0}; }

double max_interior(const SphereBundleGrid& g, const std::function<double(int, int, int)>& f) {
  double m = 0.0;
  for (int i2 = 0; i2 < g.nx2; ++i2)
    for (int i1 = 0; i1 < g.nx1; ++i1) {
      if (g.is_boundary(i1, i2)) continue;
      for (int k = 0; k < g.ntheta; ++k) m = std::max(m, std::abs(f(i1, i2, k)));
    }
  return m;
}

TEST(RicciRhs, EuclideanIsZero) {
  FlowProblem p(catalog_structure("euclidean"), box_grid(17, -1, 1, 32), FlowKind::Ricci);
  const FieldOnSM r = ricci_rhs(p, start(p));
  for (double v : r.values) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(RicciRhs, RoundSphereIsMinusF) {
  const auto g = box_grid(33, -1, 1, 64);
  FlowProblem p(catalog_structure("round_sphere"), g, FlowKind::Ricci);
  const FlowState s = start(p);
  const FieldOnSM r = ricci_rhs(p, s);
  EXPECT_NEAR(r(16, 16, 0), -2.0, 1e-10);
  EXPECT_NEAR(max_interior(g, [&](int a, int b, int k) { return r(a, b, k) + s.phi(a, b, k); }),
              0.0, 1e-9);
}

TEST(DeTurckRhs, MatchesRicciWhenBackgroundIsInitial) {
  const auto g = box_grid(17, -1, 1, 32);
  const auto sphere = catalog_structure("round_sphere");
  FlowProblem ricci(sphere, g, FlowKind::Ricci);
  FlowProblem deturck(sphere, g, FlowKind::DeTurck, sphere);
  const FieldOnSM a = ricci_rhs(ricci, start(ricci));
  const FieldOnSM b = deturck_step_rhs(deturck, start(deturck));
  for (std::size_t n = 0; n < a.values.size(); ++n) EXPECT_NEAR(a.values[n], b.values[n], 1e-8);
  EXPECT_NEAR(b(8, 8, 0), -2.0, 1e-10);
}

TEST(DeTurckRhs, EuclideanFixedPoint) {
  const auto e = catalog_structure("euclidean");
  FlowProblem p(e, box_grid(17, -1, 1, 32), FlowKind::DeTurck, e);
  for (double v : deturck_step_rhs(p, start(p)).values) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(DeTurckRhs, NeedsBackground) {
  EXPECT_THROW(FlowProblem(catalog_structure("euclidean"), box_grid(17, -1, 1, 32),
                           FlowKind::DeTurck),
               FinslerError);
}

TEST(Step, ZeroRhsLeavesStateUnchanged) {
  const auto g = box_grid(9, -1, 1, 16);
  FieldOnSM f(g, 1);
  for (auto& v : f.values) v = 1.5;
  const RhsProvider zero = [](const FlowState& s, FieldOnSM& out) {
    out = s.phi;
    for (auto& v : out.values) v = 0.0;
  };
  for (Integrator in : {Integrator::Euler, Integrator::RK4}) {
    const FlowState next = step({f, 0.0}, zero, 0.1, in);
    EXPECT_EQ(next.phi.values, f.values);
    EXPECT_DOUBLE_EQ(next.t, 0.1);
  }
}

TEST(Step, Rk4OnLinearDecay) {
  const auto g = box_grid(9, -1, 1, 16);
  FieldOnSM f(g, 1);
  for (auto& v : f.values) v = 1.0;
  const RhsProvider decay = [](const FlowState& s, FieldOnSM& out) {
    out = s.phi;
    for (auto& v : out.values) v = -v;
  };
  const FlowState next = step({f, 0.0}, decay, 0.1, Integrator::RK4);
  // Classical RK4 reproduces the Taylor polynomial of e^-h through h^4.
  const double h = 0.1;
  const double rk4 = 1 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24;
  for (double v : next.phi.values) {
    EXPECT_NEAR(v, rk4, 1e-15);
    EXPECT_NEAR(v, std::exp(-h), 1e-7);
  }
}

TEST(Step, NonPositiveResultIsBlowUp) {
  const auto g = box_grid(9, -1, 1, 16);
  FieldOnSM f(g, 1);
  for (auto& v : f.values) v = 1.0;
  const RhsProvider crash = [](const FlowState& s, FieldOnSM& out) {
    out = s.phi;
    for (auto& v : out.values) v = -20.0;
  };
  try {
    step({f, 0.0}, crash, 0.1, Integrator::Euler);
    FAIL() << "expected BlowUp";
  } catch (const FinslerError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BlowUp);
  }
}

TEST(Step, RoundSphereOneStepMatchesEinsteinScaling) {
  const auto entry = catalog("round_sphere");
  const auto g = box_grid(17, -1, 1, 32);
  FlowProblem p(entry.structure, g, FlowKind::Ricci);
  const RhsProvider rhs = [&](const FlowState& s, FieldOnSM& out) { out = ricci_rhs(p, s); };
  const FlowState s0 = start(p);
  const double dt = 1e-3;
  const FlowState s1 = step(s0, rhs, dt, Integrator::RK4, exact_boundary(g, entry.exact_F));
  // Boundary nodes carry exact values at the stage times while interior stage
  // values carry O(dt^2) stage error; the mismatch enters the lattice
  // derivatives near the edge and bounds the agreement at about 1e-10.
  for (std::size_t n = 0; n < s1.phi.values.size(); ++n) {
    const double ratio = s1.phi.values[n] * s1.phi.values[n] / (s0.phi.values[n] * s0.phi.values[n]);
    EXPECT_NEAR(ratio / (1.0 - 2.0 * dt), 1.0, 1e-9);
  }
}

TEST(StabilityTimestep, EuclideanUnitGrid) {
  // Spacing 0.1 on [-1, 1] needs 21 nodes.
  FlowProblem p(catalog_structure("euclidean"), box_grid(21, -1, 1, 32), FlowKind::Ricci);
  EXPECT_NEAR(stability_timestep(p, start(p)), 2e-3, 1e-15);
  FlowProblem q(catalog_structure("euclidean"), box_grid(41, -1, 1, 32), FlowKind::Ricci);
  EXPECT_NEAR(stability_timestep(q, start(q)), 0.5e-3, 1e-15);
}

TEST(StabilityTimestep, RoundSphereRegression) {
  FlowProblem p(catalog_structure("round_sphere"), box_grid(33, -1, 1, 64), FlowKind::Ricci);
  // The evolved node next to a corner, x = (15/16, 15/16), has the smallest
  // conformal factor a = 4 / (1 + |x|^2)^2; the fiber term 0.2 dtheta^2 is larger.
  const double r2 = 2.0 * (15.0 / 16) * (15.0 / 16);
  const double a = 4.0 / ((1 + r2) * (1 + r2));
  EXPECT_NEAR(stability_timestep(p, start(p)), 0.2 * a / 256.0, 1e-15);
}

TEST(Integrability, RiemannianFieldIsZero) {
  FlowProblem p(catalog_structure("round_sphere"), box_grid(17, -1, 1, 32), FlowKind::Ricci);
  EXPECT_LE(integrability_check(p, start(p)), 1e-10);
}

TEST(Integrability, RandersSampledToGrid) {
  const auto g = box_grid(9, -1, 1, 64);
  FlowProblem p(catalog_structure("randers_flat", {{"b", 0.5}}), g, FlowKind::Ricci);
  EXPECT_LE(integrability_check(p, start(p)), 1e-6);
}

TEST(Integrability, SyntheticNonIntegrableField) {
  const auto g = box_grid(9, -1, 1, 64);
  std::vector<Mat2> field(g.size());
  for (int c = 0; c < g.columns(); ++c)
    for (int k = 0; k < g.ntheta; ++k) {
      const double s = std::sin(g.theta(k));
      Mat2 m = Mat2::Identity();
      m(0, 0) += 0.5 * s * s;  // depends on y2 while g12 stays zero
      field[static_cast<std::size_t>(c) * g.ntheta + k] = m;
    }
  EXPECT_GE(integrability_residual(g, field), 1e-2);
}

FlowSetup sphere_setup(const SphereBundleGrid& g, double t_end, double dt) {
  const auto entry = catalog("round_sphere");
  FlowSetup s;
  s.initial = entry.structure;
  s.grid = g;
  s.kind = FlowKind::Ricci;
  s.integrator = Integrator::RK4;
  s.dt = dt;
  s.t_end = t_end;
  s.snapshot_stride = 10;
  s.boundary = exact_boundary(g, entry.exact_F);
  return s;
}

double einstein_error(const FlowResult& r, const FlowState& s0) {
  const double tau = 1.0 - 2.0 * r.final_state.t;
  double err = 0.0;
  for (std::size_t n = 0; n < s0.phi.values.size(); ++n) {
    const double q = r.final_state.phi.values[n] * r.final_state.phi.values[n] /
                     (s0.phi.values[n] * s0.phi.values[n]);
    err = std::max(err, std::abs(q / tau - 1.0));
  }
  return err;
}

TEST(RunFlow, EinsteinScalingSmallGrid) {
  const auto g = box_grid(13, -1, 1, 32);
  const FlowSetup s = sphere_setup(g, 0.1, 1e-3);
  FlowProblem p(s.initial, g, FlowKind::Ricci);
  const FlowResult r = run_flow(s);
  ASSERT_FALSE(r.early_stop) << r.stop_reason;
  EXPECT_NEAR(r.final_state.t, 0.1, 1e-12);
  EXPECT_LE(einstein_error(r, start(p)), 1e-6);
  EXPECT_EQ(r.snapshots.size(), 11u);
  EXPECT_EQ(r.diagnostics.size(), 11u);
  for (const auto& d : r.diagnostics) EXPECT_GT(d.min_eig_g, 0.0);
}

TEST(RunFlow, EinsteinScalingStopsAsTauVanishes) {
  const auto g = box_grid(9, -1, 1, 16);
  const FlowSetup s = sphere_setup(g, 0.6, 1e-2);
  const FlowResult r = run_flow(s);
  ASSERT_TRUE(r.early_stop);
  EXPECT_TRUE(r.stop_kind == ErrorKind::BlowUp || r.stop_kind == ErrorKind::CollapsedMetric ||
              r.stop_kind == ErrorKind::DegenerateMetric)
      << r.stop_reason;
  EXPECT_LT(r.final_state.t, 0.5 + 1e-12);
  // Every record before the stop certifies positivity; the flushed record is last.
  for (std::size_t i = 0; i + 1 < r.diagnostics.size(); ++i)
    EXPECT_GT(r.diagnostics[i].min_eig_g, 0.0);
}

TEST(RunFlow, TimeStepConvergenceRk4) {
  // Coarse lattice, no substeps: time error dominates and must drop >= 8x.
  const auto g = box_grid(9, -1, 1, 16);
  FlowProblem p(catalog_structure("round_sphere"), g, FlowKind::Ricci);
  double err[2];
  for (int i = 0; i < 2; ++i) {
    FlowSetup s = sphere_setup(g, 0.4, i == 0 ? 4e-3 : 2e-3);
    s.substep = false;
    const FlowResult r = run_flow(s);
    ASSERT_FALSE(r.early_stop) << r.stop_reason;
    err[i] = einstein_error(r, start(p));
  }
  EXPECT_GT(err[0], 1e-13);
  EXPECT_GE(err[0] / err[1], 8.0) << err[0] << " " << err[1];
}

TEST(RunFlow, RicciFlatDataIsStationary) {
  for (const char* name : {"euclidean", "randers_flat"}) {
    const auto entry = catalog(name);
    const auto g = box_grid(9, -1, 1, 32);
    FlowSetup s;
    s.initial = entry.structure;
    s.grid = g;
    s.dt = 1e-3;
    s.t_end = 0.1;
    s.snapshot_stride = 50;
    const FlowResult r = run_flow(s);
    ASSERT_FALSE(r.early_stop) << r.stop_reason;
    FlowProblem p(entry.structure, g, FlowKind::Ricci);
    const FlowState s0 = start(p);
    for (std::size_t n = 0; n < s0.phi.values.size(); ++n)
      EXPECT_NEAR(r.final_state.phi.values[n], s0.phi.values[n], 1e-9) << name;
  }
}

TEST(RunFlow, RejectsBadConfiguration) {
  FlowSetup s = sphere_setup(box_grid(9, -1, 1, 16), 0.1, -1.0);
  EXPECT_THROW(run_flow(s), FinslerError);
  s.dt = 1e-3;
  s.t_end = 0.0;
  EXPECT_THROW(run_flow(s), FinslerError);
}

TEST(RunFlow, IntegrabilityPersistsOnRoundSphere) {
  const auto g = box_grid(13, -1, 1, 32);
  const FlowResult r = run_flow(sphere_setup(g, 0.05, 1e-3));
  ASSERT_FALSE(r.early_stop);
  const double floor = std::max(10.0 * r.diagnostics.front().integrability_residual, 1e-10);
  for (const auto& d : r.diagnostics) EXPECT_LE(d.integrability_residual, floor);
}

}  // namespace
