#pragma once

#include <functional>
#include <string>
#include <vector>

#include "finsler/flow.hpp"
#include "finsler/geometry.hpp"
#include "finsler/sphere_bundle.hpp"

namespace finsler {

/// xi^i = g^pq (Gamma(h)^i_pq - Gamma(g)^i_pq) at (x, y), g being the evolving
/// structure and h the background.
Vec2 deturck_vector(const FinslerStructure& g, const FinslerStructure& h, const ChartPoint& x,
                    const TangentVector& y);

/// xi at every node of a grid, from analytic structures.
struct DeTurckField {
  SphereBundleGrid grid;
  std::vector<double> xi1, xi2;  // indexed like FieldOnSM
  double max_abs() const;
};

DeTurckField deturck_vector_field(const FinslerStructure& g, const FinslerStructure& h,
                                  const SphereBundleGrid& grid);
/// xi of a lattice F-field, using the grid pipeline of the flow engine.
DeTurckField deturck_vector_field(const FlowProblem& problem, const FieldOnSM& phi);

/// Lie derivative of F^2 along the complete lift of a vector field with value
/// xi and Jacobian dxi(i, j) = d xi^i / dx^j at x:
///   xi^i dF^2/dx^i + y^j dxi^i/dx^j dF^2/dy^i.
double lie_derivative_F2(const FinslerStructure& s, const Vec2& xi, const Mat2& dxi,
                         const ChartPoint& x, const TangentVector& y);

/// The covariant form 2 y^i y^j g_ik (dxi^k/dx^j + Gamma^k_sj xi^s) with the
/// Chern connection. Equal to lie_derivative_F2 for Riemannian structures; for
/// other structures the gap is a diagnostic.
double lie_derivative_covariant(const FinslerStructure& s, const Vec2& xi, const Mat2& dxi,
                                const ChartPoint& x, const TangentVector& y);

/// Grid version: xi^i and its x-derivatives come from the lattice field at
/// node (i1, i2, k), x-derivatives by the lattice stencils.
double lie_derivative_F2(const FinslerStructure& s, const DeTurckField& xi, int i1, int i2,
                         int k);

/// -2 F^2 Ric - L_xi F^2 at (x, y) for analytic structures; x-derivatives of xi
/// by fourth-order central differences of width `step`.
double deturck_rhs(const FinslerStructure& s, const FinslerStructure& h, const ChartPoint& x,
                   const TangentVector& y, double step = 1e-3);

/// Chart maps phi_t sampled at the nodes of a grid, with Jacobians.
struct DiffeoFamily {
  SphereBundleGrid grid;
  std::vector<double> times;
  /// positions[s][c]: image of chart node c (c = i2 * nx1 + i1) at times[s].
  std::vector<std::vector<Vec2>> positions;
  std::vector<std::vector<Mat2>> jacobians;
  /// left_chart[c] != 0 when the trajectory of node c was stopped at a pinned
  /// chart edge (LeftChartPolicy::Freeze only).
  std::vector<char> left_chart;

  std::size_t sample_at(double t) const;  // index of the sample closest to t
};

/// phi_t from d phi/dt = xi(phi, t), phi_0 = identity. xi is interpolated
/// bilinearly in x over the chart nodes and linearly in t between history
/// samples; each trajectory is advanced by classical RK4 with step dt and the
/// positions are recorded at every history time. Jacobians come from
/// fourth-order differences of neighbouring trajectories.
/// Throws LeftChart when a trajectory exits a pinned chart. Trajectories that
/// start on a pinned boundary stay there.
enum class LeftChartPolicy { Throw, Freeze };
DiffeoFamily integrate_diffeomorphisms(const std::vector<DeTurckSample>& history,
                                       const SphereBundleGrid& grid, double dt,
                                       LeftChartPolicy policy = LeftChartPolicy::Throw);

/// A single fixed map sampled at the nodes (Jacobian by the same differences).
DiffeoFamily fixed_diffeomorphism(const SphereBundleGrid& grid,
                                  const std::function<Vec2(const Vec2&)>& map);

/// Values of the pullback (phi^* F)(x, u_k) = F(phi(x), D phi_x u_k) at every
/// node of the family grid. Throws DegeneratePullback when det D phi <= 0 and
/// LeftChart when phi(x) is outside the domain of F.
FieldOnSM pullback_field(const DiffeoFamily& family, std::size_t sample,
                         const FinslerStructure& F);
FieldOnSM pullback_field(const DiffeoFamily& family, std::size_t sample, const FieldOnSM& F);

/// The pullback registered as a grid-sampled structure on the family grid.
StructurePtr pullback_structure(const DiffeoFamily& family, std::size_t sample,
                                const FinslerStructure& F, StructurePtr reference = nullptr);

/// CSV: t,i1,i2,phi1,phi2,J11,J12,J21,J22 (one row per node and sample).
std::string diffeo_csv(const DiffeoFamily& family);

}  // namespace finsler
