#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "finsler/structure.hpp"

namespace finsler {

/// Named numeric parameters of a catalog entry (e.g. {"b", 0.5}).
using ParamMap = std::map<std::string, double>;

/// Riemannian metric a_ij(x) in plain doubles. Kept separate from the jet
/// expressions so oracles built on it share no code with the Finsler pipeline.
using MetricField = std::function<Mat2(const Vec2&)>;

struct CatalogEntry {
  std::string name;
  ParamMap params;
  StructurePtr structure;
  /// Present for Riemannian entries.
  MetricField metric;
  /// Suggested grid chart for flows on this entry.
  ChartDomain grid_domain;
  /// Exact Ricci-flow solution F(t) expressed as a structure, when one is known.
  std::function<StructurePtr(double t)> exact_flow;
  /// The same solution as a plain function F(t, x, y); cheap enough for
  /// refreshing boundary nodes at every stage.
  std::function<double(double t, const ChartPoint& x, const TangentVector& y)> exact_F;
};

/// Build a catalog entry. Known names: euclidean, randers_flat(b), round_sphere,
/// rosenau(t0), torus_bump(eps), round_torus(R, r), grid_sampled (see load_grid_sampled).
/// Throws UnknownEntry / InvalidParams.
CatalogEntry catalog(const std::string& name, const ParamMap& params = {});

/// Convenience: catalog(name, params).structure.
StructurePtr catalog_structure(const std::string& name, const ParamMap& params = {});

/// Riemannian structure F^2 = a_ij(x) y^i y^j from jet expressions of the entries.
using MetricExpression = std::function<void(const F2Jet& x1, const F2Jet& x2, F2Jet& a11,
                                            F2Jet& a12, F2Jet& a22)>;
StructurePtr riemannian_structure(std::string name, ChartDomain domain, MetricExpression metric);

// Closed-form solutions.

/// F^2(t) = (1 - 2 K t) F0^2. Throws CollapsedMetric when tau <= 0.
StructurePtr einstein_scaling(StructurePtr f0, double K, double t);
double einstein_tau(double K, double t);

/// a_ij(t) = 8 sinh(-t) / (1 + 2 cosh(-t) |x|^2 + |x|^4) delta_ij, t < 0.
Mat2 rosenau_metric(double t, const ChartPoint& x);
double rosenau_conformal_factor(double t, const Vec2& x);
/// Scalar curvature R(a(t)) of the Rosenau metric; the Ricci scalar is R/2.
double rosenau_curvature(double t, const ChartPoint& x);

/// Gaussian curvature of a Riemannian metric field by the Brioschi formula,
/// with x-derivatives from eighth-order central differences of `metric`.
double brioschi_gauss_curvature(const MetricField& metric, const ChartPoint& x,
                                double step = 1e-2);

}  // namespace finsler
