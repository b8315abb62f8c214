#pragma once

#include <vector>

#include "finsler/geometry.hpp"
#include "finsler/structure.hpp"

namespace finsler {

/// Lattice on SM: nx1 x nx2 chart nodes times ntheta directions on the unit
/// Euclidean circle of the chart. Pinned charts include both end points of
/// each axis; periodic charts omit the upper one.
struct SphereBundleGrid {
  int nx1 = 33;
  int nx2 = 33;
  int ntheta = 64;
  ChartDomain domain;

  /// Throws FinslerError(Config) on violated size/bounds invariants.
  void validate() const;

  bool periodic() const { return domain.boundary == BoundaryMode::Periodic; }
  double spacing(int axis) const;
  double dtheta() const;
  double x1(int i1) const { return domain.lower[0] + i1 * spacing(0); }
  double x2(int i2) const { return domain.lower[1] + i2 * spacing(1); }
  ChartPoint point(int i1, int i2) const { return {x1(i1), x2(i2)}; }
  double theta(int k) const { return k * dtheta(); }
  TangentVector direction(int k) const;

  int columns() const { return nx1 * nx2; }
  std::size_t size() const { return static_cast<std::size_t>(columns()) * ntheta; }
  /// Node layout: theta fastest, then x1, then x2.
  std::size_t index(int i1, int i2, int k) const {
    return (static_cast<std::size_t>(i2) * nx1 + i1) * ntheta + k;
  }
  /// Nodes held fixed by a pinned boundary.
  bool is_boundary(int i1, int i2) const;
  /// Interior in the sense used by acceptance checks: at least `margin`
  /// nodes away from any pinned edge. Every node of a periodic grid qualifies.
  bool is_interior(int i1, int i2, int margin = 1) const;
};

/// Scalar samples on SM with a recorded homogeneity degree in y.
struct FieldOnSM {
  SphereBundleGrid grid;
  std::vector<double> values;
  int degree = 1;

  FieldOnSM() = default;
  FieldOnSM(const SphereBundleGrid& g, int deg = 1) : grid(g), values(g.size(), 0.0), degree(deg) {}

  double& operator()(int i1, int i2, int k) { return values[grid.index(i1, i2, k)]; }
  double operator()(int i1, int i2, int k) const { return values[grid.index(i1, i2, k)]; }
};

/// phi(x, theta) = F(x, (cos theta, sin theta)) at every node.
FieldOnSM sample_structure(const FinslerStructure& s, const SphereBundleGrid& grid);

/// Extends a degree-d field off SM: r^d * phi(x, theta(y)) with r = |y|.
/// phi is interpolated by cubic Lagrange in x (exact at nodes) and periodic
/// cubic Lagrange in theta. Throws ZeroVector / OutOfChart.
double polar_extend(const FieldOnSM& field, const ChartPoint& x, const TangentVector& y);

/// Berwald frame of a Finsler surface at (x, y) and the dual objects on SM.
struct BerwaldFrame {
  Vec2 e1 = Vec2::Zero();
  Vec2 e2 = Vec2::Zero();
  /// Covectors omega^1, omega^2 (dx components).
  Vec2 omega1 = Vec2::Zero();
  Vec2 omega2 = Vec2::Zero();
  /// omega^3 = omega3_dx . dx + omega3_dy . dy
  Vec2 omega3_dx = Vec2::Zero();
  Vec2 omega3_dy = Vec2::Zero();
  /// Frame of T(SM) as vectors in T(TM_0) with components (dx1, dx2, dy1, dy2).
  Eigen::Vector4d hat_e1 = Eigen::Vector4d::Zero();
  Eigen::Vector4d hat_e2 = Eigen::Vector4d::Zero();
  Eigen::Vector4d hat_e3 = Eigen::Vector4d::Zero();
  Mat2 g = Mat2::Zero();
  Mat2 N = Mat2::Zero();
  double F = 0.0;
};

BerwaldFrame berwald_frame(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);

/// Minimum over the supplied metric samples of the smallest eigenvalue of g.
double ellipticity_monitor(const std::vector<Mat2>& g_field);

}  // namespace finsler
