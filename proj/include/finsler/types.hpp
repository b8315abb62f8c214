#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace finsler {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class ErrorKind {
  OutOfChart,
  ZeroVector,
  DegenerateMetric,
  CollapsedMetric,
  InvalidTime,
  UnknownEntry,
  InvalidParams,
  LeftChart,
  DegeneratePullback,
  BlowUp,
  Config,
};

const char* to_string(ErrorKind kind);

class FinslerError : public std::runtime_error {
 public:
  FinslerError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ChartPoint {
  double x1 = 0.0;
  double x2 = 0.0;
  Vec2 vec() const { return {x1, x2}; }
};

struct TangentVector {
  double y1 = 0.0;
  double y2 = 0.0;
  Vec2 vec() const { return {y1, y2}; }
  bool is_zero() const { return y1 == 0.0 && y2 == 0.0; }
};

enum class BoundaryMode { Periodic, Pinned };

/// Axis-aligned chart rectangle. Periodic charts identify the upper bound with
/// the lower one; pinned charts reject points outside the closed rectangle.
struct ChartDomain {
  Vec2 lower{-1.0, -1.0};
  Vec2 upper{1.0, 1.0};
  BoundaryMode boundary = BoundaryMode::Pinned;
  /// Unbounded charts (analytic entries defined on all of R^2) skip the bounds check.
  bool unbounded = false;

  bool contains(const ChartPoint& x) const;
  /// Throws OutOfChart for pinned charts when x lies outside; wraps periodic ones.
  ChartPoint admit(const ChartPoint& x) const;
};

}  // namespace finsler
