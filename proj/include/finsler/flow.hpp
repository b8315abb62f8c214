#pragma once

#include <functional>
#include <string>
#include <vector>

#include "finsler/grid_structure.hpp"
#include "finsler/sphere_bundle.hpp"

namespace finsler {

enum class FlowKind { Ricci, DeTurck };
enum class Integrator { Euler, RK4 };

const char* to_string(FlowKind kind);
const char* to_string(Integrator integrator);

struct FlowState {
  FieldOnSM phi;  // F restricted to the unit Euclidean circle
  double t = 0.0;
};

/// Everything one right-hand-side evaluation produces, node by node.
struct RhsResult {
  FieldOnSM rhs;
  FieldOnSM ric;
  std::vector<double> xi1, xi2;  // DeTurck vector field (DeTurck flows only)
  std::vector<double> lie;       // Lie derivative of F^2 along xi (DeTurck flows only)
  double min_eig_g = 0.0;
  double max_abs_ric = 0.0;
  /// Advisory explicit step, see stability_timestep.
  double stable_dt = 0.0;
};

/// Discrete flow operator on a sphere-bundle lattice.
///
/// F is represented as F = B * psi with B the initial structure, whose F^2 jets
/// are computed once per node; only psi = F / B is differenced on the lattice.
/// Uniform rescalings and reference-matched states are therefore exact in space.
class FlowProblem {
 public:
  FlowProblem(StructurePtr initial, SphereBundleGrid grid, FlowKind kind,
              StructurePtr background = nullptr, double degeneracy = kDegeneracyThreshold);

  const SphereBundleGrid& grid() const { return grid_; }
  FlowKind kind() const { return kind_; }
  const StructurePtr& initial() const { return initial_; }
  const StructurePtr& background() const { return background_; }

  /// phi of the initial structure.
  FieldOnSM initial_field() const;

  /// Right-hand side dF/dt of the configured flow at phi. Pinned boundary
  /// nodes get zero. Throws DegenerateMetric when g loses positivity.
  /// With boundary_columns = false, pinned boundary columns are skipped (their
  /// rhs is zero anyway) and report zero curvature.
  void evaluate(const FieldOnSM& phi, RhsResult& out, bool boundary_columns = true) const;

  /// Jet of F^2 at a lattice node for the state phi.
  F2Jet node_jet(const FieldOnSM& phi, int i1, int i2, int k) const;

  /// g at every node for the state phi.
  std::vector<Mat2> metric_field(const FieldOnSM& phi) const;

  void set_threads(int n) { threads_ = n < 1 ? 1 : n; }

  /// Restrict the evolution of F^2 / F_0^2 to fiber Fourier modes |m| <= modes
  /// (negative: no restriction). The fourth-order fiber terms of the Ricci
  /// scalar carry a sign-indefinite coefficient proportional to the spray, so
  /// short fiber wavelengths grow without bound unless they are removed.
  void set_fiber_modes(int modes);
  int fiber_modes() const { return fiber_modes_; }

 private:
  struct Column;
  void ratio_theta_derivatives(const FieldOnSM& phi,
                               std::array<std::vector<double>, 5>& T) const;

  StructurePtr initial_;
  StructurePtr background_;
  SphereBundleGrid grid_;
  FlowKind kind_;
  double degeneracy_;
  int threads_ = 1;
  int fiber_modes_ = -1;
  std::vector<double> fiber_projection_;  // cos/sin rows of the retained modes
  int blocks_;  // packets per column
  LatticeDerivatives lattice_;
  std::vector<Jet<Packet, 2, 4>> base_jets_;   // [column][block]
  std::vector<double> base_f2_;                // per node
  std::vector<std::array<Jet<Packet, 2, 4>, 5>> powers_;  // per block
  std::vector<Packet> dir1_, dir2_;            // per block
  std::vector<std::array<double, 6>> h_gamma_; // background Chern, per node: (i, pq) = 111,112,122,211,212,222
};

using RhsProvider = std::function<void(const FlowState&, FieldOnSM& rhs)>;
/// Overwrites boundary values of phi with the reference at time t.
using BoundaryProvider = std::function<void(double t, FieldOnSM& phi)>;

/// One explicit Euler or classical RK4 step. Throws BlowUp when any F value
/// becomes non-positive or non-finite.
FlowState step(const FlowState& state, const RhsProvider& rhs, double dt, Integrator integrator,
               const BoundaryProvider& boundary = {});

/// Convenience wrappers over FlowProblem::evaluate.
FieldOnSM ricci_rhs(const FlowProblem& problem, const FlowState& state);
FieldOnSM deturck_step_rhs(const FlowProblem& problem, const FlowState& state);

/// dt_max = 0.2 * min over evolved nodes of min(dx^2 / lambda_max(g^-1), dtheta_g^2),
/// where dtheta_g = sqrt(det g) r^2 / F^2 * dtheta is the SM coframe length of one
/// theta step. Advisory.
double stability_timestep(const FlowProblem& problem, const FlowState& state);

/// Max over nodes of |C_ijk - C_ikj| with C_ijk = dg_ij/dy^k obtained from
/// theta-differences of the nodal metrics. Symmetry in (i, j) holds by storage.
double integrability_residual(const SphereBundleGrid& grid, const std::vector<Mat2>& g);
double integrability_check(const FlowProblem& problem, const FlowState& state);

struct DiagnosticsRecord {
  double t = 0.0;
  double min_eig_g = 0.0;
  double integrability_residual = 0.0;
  double max_abs_ric = 0.0;
  double dt = 0.0;
};

struct Snapshot {
  double t = 0.0;
  FieldOnSM phi;
  FieldOnSM ric;
};

/// Theta-averaged DeTurck field on chart nodes at one time (x1 fastest).
struct DeTurckSample {
  double t = 0.0;
  std::vector<Vec2> xi;
};

struct FlowTolerances {
  double degeneracy = kDegeneracyThreshold;
  double integrability_alarm = 1e-3;
};

struct FlowSetup {
  StructurePtr initial;
  SphereBundleGrid grid;
  FlowKind kind = FlowKind::Ricci;
  Integrator integrator = Integrator::RK4;
  double dt = 1e-3;
  double t_end = 0.1;
  int snapshot_stride = 10;
  StructurePtr background;
  /// Reference for pinned boundaries; defaults to holding the initial values.
  BoundaryProvider boundary;
  FlowTolerances tolerances;
  /// Split a step into equal substeps when dt exceeds the stability recommendation.
  bool substep = true;
  bool record_xi = false;
  int threads = 1;
  /// See FlowProblem::set_fiber_modes.
  int fiber_modes = 2;
};

struct FlowResult {
  std::vector<Snapshot> snapshots;
  std::vector<DiagnosticsRecord> diagnostics;
  std::vector<DeTurckSample> xi_history;
  FlowState final_state;
  bool early_stop = false;
  ErrorKind stop_kind = ErrorKind::BlowUp;
  std::string stop_reason;
  bool integrability_alarm = false;
};

FlowResult run_flow(const FlowSetup& setup);

/// Boundary provider that samples an exact solution F(t, x, y).
BoundaryProvider exact_boundary(const SphereBundleGrid& grid,
                                std::function<double(double, const ChartPoint&, const TangentVector&)> F);

}  // namespace finsler
