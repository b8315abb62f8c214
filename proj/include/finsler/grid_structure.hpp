#pragma once

// Jets of F^2 for structures known only on the SM lattice.
//
// With F(x, y) = B(x, y) * psi(x, theta(y)) for a smooth reference B (the
// Euclidean norm when none is given), F^2 = B^2 * rho with rho = psi^2 a
// 0-homogeneous lattice field. The jet of rho about (x0, y0) is
//   sum_{a, m} d^a_x d^m_theta rho(x0, theta0) * dx^a / a! * dtheta(y)^m / m!
// where dtheta(y) = theta(y) - theta0 is itself expanded as a jet in y. The
// 22 lattice derivatives (|a| <= 2, m <= 4 - |a|) come from finite differences.

#include <array>
#include <vector>

#include "finsler/sphere_bundle.hpp"
#include "finsler/stencil.hpp"

namespace finsler {

struct DerivativeIndex {
  int a1, a2, m;
};

inline constexpr int kDerivativeCount = 22;

inline constexpr std::array<DerivativeIndex, kDerivativeCount> kDerivatives = [] {
  std::array<DerivativeIndex, kDerivativeCount> d{};
  int n = 0;
  for (int ax = 0; ax <= 2; ++ax)
    for (int a1 = ax; a1 >= 0; --a1)
      for (int m = 0; m <= 4 - ax; ++m) d[n++] = {a1, ax - a1, m};
  return d;
}();

constexpr int derivative_slot(int a1, int a2, int m) {
  for (int i = 0; i < kDerivativeCount; ++i)
    if (kDerivatives[i].a1 == a1 && kDerivatives[i].a2 == a2 && kDerivatives[i].m == m) return i;
  return -1;
}

namespace detail {

struct AssemblyTerm {
  std::int16_t slot, m, src, dest;
  double factor;
};

inline constexpr int kAssemblyTerms = 157;

inline constexpr std::array<AssemblyTerm, kAssemblyTerms> kAssembly = [] {
  using L = JetLayout<2, 4>;
  std::array<AssemblyTerm, kAssemblyTerms> t{};
  int n = 0;
  for (int s = 0; s < kDerivativeCount; ++s) {
    const auto [a1, a2, m] = kDerivatives[s];
    for (int deg = m; deg <= 4 - a1 - a2; ++deg)
      for (int b1 = deg; b1 >= 0; --b1) {
        const int b2 = deg - b1;
        t[n++] = AssemblyTerm{static_cast<std::int16_t>(s), static_cast<std::int16_t>(m),
                              static_cast<std::int16_t>(L::index(0, 0, b1, b2)),
                              static_cast<std::int16_t>(L::index(a1, a2, b1, b2)),
                              1.0 / (factorial(a1) * factorial(a2))};
      }
  }
  return t;
}();

}  // namespace detail

/// powers[m] = (theta(y) - theta0)^m / m! as jets in y about y0 = (y1, y2).
template <typename S>
std::array<Jet<S, 2, 4>, 5> angle_powers(const S& y1, const S& y2) {
  using J = Jet<S, 2, 4>;
  const S r2 = y1 * y1 + y2 * y2;
  const S inv_r = ScalarTraits<S>::inverse(ScalarTraits<S>::sqrt(r2));
  const S u1 = y1 * inv_r, u2 = y2 * inv_r;
  const J Y1 = J::variable(2, y1), Y2 = J::variable(3, y2);
  const J cross = Y2 * u1 - Y1 * u2;
  const J dot = Y1 * u1 + Y2 * u2;
  const J dth = atan_increment(cross * reciprocal(dot));
  std::array<J, 5> p;
  p[0] = J(constant<S>(1.0));
  p[1] = dth;
  for (int m = 2; m <= 4; ++m) p[m] = p[m - 1] * dth * (1.0 / m);
  return p;
}

/// Jet of the 0-homogeneous lattice field from its 22 derivatives at the center.
template <typename S>
Jet<S, 2, 4> assemble_ratio_jet(const S* derivs, const std::array<Jet<S, 2, 4>, 5>& powers) {
  Jet<S, 2, 4> q;
  for (const auto& t : detail::kAssembly) {
    q[t.dest] += derivs[t.slot] * (t.factor * 1.0) * powers[t.m][t.src];
  }
  return q;
}

/// Euclidean y1^2 + y2^2 as a jet.
template <typename S>
Jet<S, 2, 4> euclidean_f2_jet(const S& y1, const S& y2) {
  using J = Jet<S, 2, 4>;
  const J Y1 = J::variable(2, y1), Y2 = J::variable(3, y2);
  return Y1 * Y1 + Y2 * Y2;
}

/// Finite-difference stencils of a lattice and the derivative passes over it.
class LatticeDerivatives {
 public:
  LatticeDerivatives() = default;
  explicit LatticeDerivatives(const SphereBundleGrid& grid);

  const SphereBundleGrid& grid() const { return grid_; }

  /// out[m] = d^m rho / dtheta^m for m = 0..4 over the whole lattice.
  void theta_pass(const std::vector<double>& rho, std::array<std::vector<double>, 5>& out) const;

  /// The 22 derivatives at every direction of chart node (i1, i2), written as
  /// out[slot * ntheta + k], from the theta derivatives of theta_pass.
  void column(const std::array<std::vector<double>, 5>& theta_derivs, int i1, int i2,
              double* out) const;

  /// First x-derivative (axis 0 or 1) of a lattice field at one node.
  double dx(const std::vector<double>& f, int axis, int i1, int i2, int k) const;

  /// First x-derivative of a per-chart-node field (size nx1 * nx2, x1 fastest).
  double dx_chart(const std::vector<double>& f, int axis, int i1, int i2) const;

  const AxisStencils& x_stencil(int axis, int order) const { return xs_[axis][order - 1]; }

 private:
  SphereBundleGrid grid_;
  std::array<AxisStencils, 4> ths_;              // theta orders 1..4
  std::array<std::array<AxisStencils, 2>, 2> xs_;  // [axis][order - 1]
};

/// F known on the SM lattice, optionally relative to a smooth reference structure.
class GridSampledStructure final : public FinslerStructure {
 public:
  GridSampledStructure(std::string name, FieldOnSM phi, StructurePtr reference = nullptr);

  F2Jet f2_jet(const ChartPoint& x, const TangentVector& y) const override;
  const ChartDomain& domain() const override { return phi_.grid.domain; }
  std::string name() const override { return name_; }

  const FieldOnSM& field() const { return phi_; }
  const SphereBundleGrid& grid() const { return phi_.grid; }
  /// Jet at a lattice node with no interpolation.
  F2Jet node_jet(int i1, int i2, int k) const;

 private:
  F2Jet reference_jet(const ChartPoint& x, const TangentVector& y) const;

  std::string name_;
  FieldOnSM phi_;
  StructurePtr reference_;
  LatticeDerivatives lattice_;
  std::vector<double> derivs_;  // [column][slot][k]
};

/// Interior lattice nodes' metric tensors g from the grid jets (for ellipticity_monitor).
std::vector<Mat2> lattice_metric(const GridSampledStructure& s);

}  // namespace finsler
