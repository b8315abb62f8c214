#pragma once

#include <cmath>

#include <Eigen/Core>

namespace finsler {

/// Lane-parallel scalar used by the batched flow kernels: eight directions of
/// one fiber are evaluated side by side.
using Packet = Eigen::Array<double, 8, 1>;
inline constexpr int kPacketWidth = 8;

template <typename Scalar>
struct ScalarTraits {
  static Scalar constant(double v) { return Scalar(v); }
  static Scalar sqrt(const Scalar& v) { return std::sqrt(v); }
  static Scalar inverse(const Scalar& v) { return Scalar(1) / v; }
  static double max_abs(const Scalar& v) { return std::abs(v); }
};

template <int N>
struct ScalarTraits<Eigen::Array<double, N, 1>> {
  using Type = Eigen::Array<double, N, 1>;
  static Type constant(double v) { return Type::Constant(v); }
  static Type sqrt(const Type& v) { return v.sqrt(); }
  static Type inverse(const Type& v) { return v.inverse(); }
  static double max_abs(const Type& v) { return v.abs().maxCoeff(); }
};

template <typename Scalar>
inline Scalar constant(double v) {
  return ScalarTraits<Scalar>::constant(v);
}

}  // namespace finsler
