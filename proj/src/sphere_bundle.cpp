#include "finsler/sphere_bundle.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>

#include "finsler/stencil.hpp"

namespace finsler {

void SphereBundleGrid::validate() const {
  auto fail = [](const std::string& msg) { throw FinslerError(ErrorKind::Config, msg); };
  if (nx1 < 9 || nx2 < 9) fail("grid needs nx1, nx2 >= 9");
  if (ntheta < 16 || ntheta % 2 != 0) fail("grid needs an even ntheta >= 16");
  if (domain.unbounded) fail("grid chart must be bounded");
  for (int a = 0; a < 2; ++a) {
    if (!std::isfinite(domain.lower[a]) || !std::isfinite(domain.upper[a]) ||
        !(domain.upper[a] > domain.lower[a])) {
      fail("grid bounds must be finite with lower < upper");
    }
  }
}

double SphereBundleGrid::spacing(int axis) const {
  const int n = axis == 0 ? nx1 : nx2;
  const double length = domain.upper[axis] - domain.lower[axis];
  return periodic() ? length / n : length / (n - 1);
}

double SphereBundleGrid::dtheta() const { return 2.0 * std::numbers::pi / ntheta; }

TangentVector SphereBundleGrid::direction(int k) const {
  const double th = theta(k);
  return {std::cos(th), std::sin(th)};
}

bool SphereBundleGrid::is_boundary(int i1, int i2) const {
  if (periodic()) return false;
  return i1 == 0 || i2 == 0 || i1 == nx1 - 1 || i2 == nx2 - 1;
}

bool SphereBundleGrid::is_interior(int i1, int i2, int margin) const {
  if (periodic()) return true;
  return i1 >= margin && i2 >= margin && i1 < nx1 - margin && i2 < nx2 - margin;
}

FieldOnSM sample_structure(const FinslerStructure& s, const SphereBundleGrid& grid) {
  grid.validate();
  FieldOnSM f(grid, 1);
  for (int i2 = 0; i2 < grid.nx2; ++i2)
    for (int i1 = 0; i1 < grid.nx1; ++i1) {
      const ChartPoint x = grid.point(i1, i2);
      for (int k = 0; k < grid.ntheta; ++k) f(i1, i2, k) = eval_F(s, x, grid.direction(k));
    }
  return f;
}

double polar_extend(const FieldOnSM& field, const ChartPoint& x, const TangentVector& y) {
  if (y.is_zero()) throw FinslerError(ErrorKind::ZeroVector, "direction y must be nonzero");
  const SphereBundleGrid& g = field.grid;
  const ChartPoint p = g.domain.admit(x);
  const double r = std::hypot(y.y1, y.y2);
  double th = std::atan2(y.y2, y.y1);
  if (th < 0) th += 2.0 * std::numbers::pi;

  const double s1 = (p.x1 - g.domain.lower[0]) / g.spacing(0);
  const double s2 = (p.x2 - g.domain.lower[1]) / g.spacing(1);
  const double st = th / g.dtheta();
  int f1, f2, ft;
  std::array<double, 4> w1, w2, wt;
  cubic_lagrange_window(s1, g.nx1, g.periodic(), f1, w1);
  cubic_lagrange_window(s2, g.nx2, g.periodic(), f2, w2);
  cubic_lagrange_window(st, g.ntheta, true, ft, wt);
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };

  double acc = 0.0;
  for (int b = 0; b < 4; ++b) {
    if (w2[b] == 0.0) continue;
    const int i2 = wrap(f2 + b, g.nx2);
    for (int a = 0; a < 4; ++a) {
      if (w1[a] == 0.0) continue;
      const int i1 = wrap(f1 + a, g.nx1);
      double col = 0.0;
      for (int c = 0; c < 4; ++c) {
        if (wt[c] != 0.0) col += wt[c] * field(i1, i2, wrap(ft + c, g.ntheta));
      }
      acc += w1[a] * w2[b] * col;
    }
  }
  return std::pow(r, field.degree) * acc;
}

BerwaldFrame berwald_frame(const FinslerStructure& s, const ChartPoint& x,
                           const TangentVector& y) {
  const F2Jet P = checked_jet(s, x, y);
  const GeometryJet gj = geometry_from_jet(P, y.vec());
  BerwaldFrame b;
  b.F = gj.F;
  b.g = gj.g;
  b.N = gj.N;
  const double F = gj.F;
  const Vec2 Fy = Vec2(P.d<0, 0, 1, 0>(), P.d<0, 0, 0, 1>()) / (2.0 * F);
  const double root = std::sqrt(gj.g.determinant());
  const Vec2 yv = y.vec();

  b.e1 = Vec2(Fy[1], -Fy[0]) / root;
  b.e2 = yv / F;
  b.omega1 = (root / F) * Vec2(yv[1], -yv[0]);
  b.omega2 = Fy;
  // omega^3 = v^1_i (dy^i + N^i_j dx^j) / F with v^1 the components of omega^1.
  b.omega3_dy = b.omega1 / F;
  b.omega3_dx = gj.N.transpose() * b.omega1 / F;

  // Horizontal lifts delta/delta x^i = d/dx^i - N^j_i d/dy^j of e1, e2; vertical e3.
  const Vec2 v1 = -gj.N * b.e1;
  const Vec2 v2 = -gj.N * b.e2;
  b.hat_e1 << b.e1, v1;
  b.hat_e2 << b.e2, v2;
  b.hat_e3 << 0.0, 0.0, F * b.e1;
  return b;
}

double ellipticity_monitor(const std::vector<Mat2>& g_field) {
  double lo = std::numeric_limits<double>::infinity();
  for (const Mat2& g : g_field) lo = std::min(lo, min_eigenvalue(g));
  return lo;
}

}  // namespace finsler
