#pragma once

#include <array>

#include "finsler/structure.hpp"
#include "finsler/types.hpp"

namespace finsler {

/// t[i](j, k): one upper index i, two lower indices j, k.
using Rank3 = std::array<Mat2, 2>;
/// r[i][j](k, l) = R_j^i_kl.
using Rank4 = std::array<std::array<Mat2, 2>, 2>;

/// Threshold on min-eigenvalue(g) below which the metric counts as degenerate.
inline constexpr double kDegeneracyThreshold = 1e-12;

/// Every pointwise geometric quantity of a Finsler surface at one (x, y).
struct GeometryJet {
  double F = 0.0;
  Vec2 l = Vec2::Zero();  // y / F
  Mat2 g = Mat2::Zero();
  Mat2 g_inv = Mat2::Zero();
  Rank3 cartan{};  // cartan[k](i, j) = C_ijk = d g_ij / d y^k
  Vec2 spray = Vec2::Zero();
  Mat2 N = Mat2::Zero();  // N(j, i) = N^j_i = 1/2 dG^j/dy^i
  Rank3 gamma{};          // formal Christoffel symbols
  Rank3 chern{};          // Chern connection
  Rank4 hh{};             // Chern hh-curvature
  Mat2 reduced = Mat2::Zero();  // R(i, k) = R^i_k
  double ric = 0.0;
};

/// Full pipeline from a jet of F^2 about (x, y). Throws DegenerateMetric.
GeometryJet geometry_from_jet(const F2Jet& P, const Vec2& y,
                              double degeneracy = kDegeneracyThreshold);

/// Jet of F^2 after the OutOfChart / ZeroVector checks.
F2Jet checked_jet(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);

GeometryJet geometry_jet(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);

double eval_F(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
Mat2 metric_tensor(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
Rank3 cartan_tensor(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
Vec2 spray_coefficients(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
Mat2 nonlinear_connection(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
Rank3 formal_christoffel(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
Rank3 chern_connection(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
Rank4 chern_hh_curvature(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
Mat2 reduced_curvature(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);
double ricci_scalar(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y);

/// (1/F^2) y^j R_j^i_km y^m, the contraction of the hh-curvature that must
/// reproduce the reduced curvature.
Mat2 contract_hh_curvature(const Rank4& hh, const Vec2& y, double f2);

/// Smallest eigenvalue of a symmetric 2x2 matrix.
double min_eigenvalue(const Mat2& m);
double max_eigenvalue(const Mat2& m);

}  // namespace finsler
