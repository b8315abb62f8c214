#include "finsler/structure.hpp"

#include <cmath>

namespace finsler {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfChart: return "OutOfChart";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::DegenerateMetric: return "DegenerateMetric";
    case ErrorKind::CollapsedMetric: return "CollapsedMetric";
    case ErrorKind::InvalidTime: return "InvalidTime";
    case ErrorKind::UnknownEntry: return "UnknownEntry";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::LeftChart: return "LeftChart";
    case ErrorKind::DegeneratePullback: return "DegeneratePullback";
    case ErrorKind::BlowUp: return "BlowUp";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Unknown";
}

bool ChartDomain::contains(const ChartPoint& x) const {
  if (!std::isfinite(x.x1) || !std::isfinite(x.x2)) return false;
  if (unbounded || boundary == BoundaryMode::Periodic) return true;
  return x.x1 >= lower[0] && x.x1 <= upper[0] && x.x2 >= lower[1] && x.x2 <= upper[1];
}

ChartPoint ChartDomain::admit(const ChartPoint& x) const {
  if (!contains(x)) {
    throw FinslerError(ErrorKind::OutOfChart,
                       "point (" + std::to_string(x.x1) + ", " + std::to_string(x.x2) +
                           ") outside chart");
  }
  if (boundary != BoundaryMode::Periodic || unbounded) return x;
  auto wrap = [](double v, double lo, double hi) {
    const double period = hi - lo;
    double r = std::fmod(v - lo, period);
    if (r < 0) r += period;
    return lo + r;
  };
  return {wrap(x.x1, lower[0], upper[0]), wrap(x.x2, lower[1], upper[1])};
}

F2Jet AnalyticStructure::f2_jet(const ChartPoint& x, const TangentVector& y) const {
  return expr_(F2Jet::variable(0, x.x1), F2Jet::variable(1, x.x2), F2Jet::variable(2, y.y1),
               F2Jet::variable(3, y.y2));
}

F2Jet quadratic_form(const F2Jet& a11, const F2Jet& a12, const F2Jet& a22, const F2Jet& y1,
                     const F2Jet& y2) {
  return a11 * (y1 * y1) + 2.0 * (a12 * (y1 * y2)) + a22 * (y2 * y2);
}

}  // namespace finsler
