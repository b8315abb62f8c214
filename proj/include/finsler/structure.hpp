#pragma once

#include <functional>
#include <memory>
#include <string>

#include "finsler/jet.hpp"
#include "finsler/types.hpp"

namespace finsler {

/// Jet of F^2 about a point of TM_0: mixed x-order <= 2, total order <= 4.
/// That is exactly what the spray, its first x-derivative, two y-derivatives,
/// and the Chern connection's first horizontal derivative consume.
using F2Jet = Jet<double, 2, 4>;

/// A Finsler structure on a chart. Implementations are immutable after
/// construction and safe to share between threads.
class FinslerStructure {
 public:
  virtual ~FinslerStructure() = default;

  /// Taylor jet of F^2 about (x, y). Callers guarantee y != 0 and x admitted by domain().
  virtual F2Jet f2_jet(const ChartPoint& x, const TangentVector& y) const = 0;

  /// F^2(x, y) alone. Defaults to the constant term of f2_jet.
  virtual double f2(const ChartPoint& x, const TangentVector& y) const {
    return f2_jet(x, y).value();
  }

  virtual const ChartDomain& domain() const = 0;
  virtual std::string name() const = 0;
};

using StructurePtr = std::shared_ptr<const FinslerStructure>;

/// F^2 written once against jet arithmetic. The four arguments are the seeded
/// coordinate jets x1, x2, y1, y2; the result is the jet of F^2.
using F2Expression =
    std::function<F2Jet(const F2Jet& x1, const F2Jet& x2, const F2Jet& y1, const F2Jet& y2)>;

/// Structure given by a closed-form expression; jets are exact up to rounding.
class AnalyticStructure final : public FinslerStructure {
 public:
  AnalyticStructure(std::string name, ChartDomain domain, F2Expression expr)
      : name_(std::move(name)), domain_(domain), expr_(std::move(expr)) {}

  F2Jet f2_jet(const ChartPoint& x, const TangentVector& y) const override;
  const ChartDomain& domain() const override { return domain_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  ChartDomain domain_;
  F2Expression expr_;
};

/// F^2 = factor * F0^2 for a constant factor > 0.
class ScaledStructure final : public FinslerStructure {
 public:
  ScaledStructure(StructurePtr base, double factor) : base_(std::move(base)), factor_(factor) {}

  F2Jet f2_jet(const ChartPoint& x, const TangentVector& y) const override {
    F2Jet j = base_->f2_jet(x, y);
    j *= factor_;
    return j;
  }
  double f2(const ChartPoint& x, const TangentVector& y) const override {
    return factor_ * base_->f2(x, y);
  }
  const ChartDomain& domain() const override { return base_->domain(); }
  std::string name() const override { return base_->name() + "*scaled"; }
  double factor() const { return factor_; }

 private:
  StructurePtr base_;
  double factor_;
};

/// Jet of the Riemannian F^2 = a_ij(x) y^i y^j from jets of the metric entries.
F2Jet quadratic_form(const F2Jet& a11, const F2Jet& a12, const F2Jet& a22, const F2Jet& y1,
                     const F2Jet& y2);

}  // namespace finsler
