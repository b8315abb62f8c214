#include <gtest/gtest.h>

#include <cmath>

#include "finsler/jet.hpp"

using finsler::Jet;
using finsler::Packet;

namespace {

using J24 = Jet<double, 2, 4>;

TEST(Jet, LayoutSizes) {
  EXPECT_EQ(J24::kSize, 53);
  EXPECT_EQ((Jet<double, 1, 1>::kSize), 5);
  EXPECT_EQ((Jet<double, 0, 0>::kSize), 1);
}

TEST(Jet, PolynomialPartials) {
  // f = x1^2 y1 y2 + 3 x2 y1^3 about (1, 2, 3, 4)
  const auto x1 = J24::variable(0, 1.0), x2 = J24::variable(1, 2.0);
  const auto y1 = J24::variable(2, 3.0), y2 = J24::variable(3, 4.0);
  const J24 f = x1 * x1 * y1 * y2 + 3.0 * (x2 * y1 * y1 * y1);
  EXPECT_DOUBLE_EQ(f.value(), 12.0 + 162.0);
  EXPECT_DOUBLE_EQ(f.partial(1, 0, 0, 0), 2.0 * 12.0);
  EXPECT_DOUBLE_EQ(f.partial(0, 1, 0, 0), 81.0);
  EXPECT_DOUBLE_EQ(f.partial(0, 0, 2, 0), 18.0 * 2.0 * 3.0);
  EXPECT_DOUBLE_EQ(f.partial(1, 0, 1, 1), 2.0);
  EXPECT_DOUBLE_EQ(f.partial(0, 1, 3, 0), 18.0);
  EXPECT_DOUBLE_EQ((f.d<2, 0, 1, 1>()), 2.0);
  // Truncated monomials report zero.
  EXPECT_DOUBLE_EQ(f.partial(2, 1, 0, 0), 0.0);
}

TEST(Jet, DifferentiationLowersOrder) {
  const auto x1 = J24::variable(0, 0.5), y1 = J24::variable(2, 2.0);
  const J24 f = x1 * x1 * y1 * y1;
  const auto fx = f.dx(0);
  static_assert(decltype(fx)::kXMax == 1 && decltype(fx)::kTMax == 3);
  EXPECT_DOUBLE_EQ(fx.value(), 2.0 * 0.5 * 4.0);
  const auto fy = f.dy(0);
  static_assert(decltype(fy)::kXMax == 2 && decltype(fy)::kTMax == 3);
  EXPECT_DOUBLE_EQ(fy.partial(1, 0, 0, 0), 2.0 * 0.5 * 2.0 * 2.0);
}

TEST(Jet, ElementaryFunctionsMatchClosedForms) {
  const double a = 0.7;
  const auto x = J24::variable(0, a);
  const auto r = finsler::reciprocal(x * x + 1.0);
  // d/dx 1/(1+x^2) = -2x/(1+x^2)^2
  EXPECT_NEAR(r.partial(1, 0, 0, 0), -2.0 * a / std::pow(1 + a * a, 2), 1e-15);
  EXPECT_NEAR(r.partial(2, 0, 0, 0), (6 * a * a - 2) / std::pow(1 + a * a, 3), 1e-14);
  const auto s = finsler::sqrt(x);
  EXPECT_NEAR(s.partial(2, 0, 0, 0), -0.25 * std::pow(a, -1.5), 1e-14);
  const auto c = finsler::cos(x);
  EXPECT_NEAR(c.partial(2, 0, 0, 0), -std::cos(a), 1e-15);
  const auto y = J24::variable(2, 0.0);
  const auto t = finsler::atan_increment(y);
  EXPECT_NEAR(t.partial(0, 0, 3, 0), -2.0, 1e-15);
}

TEST(Jet, PacketLanesAreIndependent) {
  using JP = Jet<Packet, 1, 2>;
  Packet centers;
  for (int k = 0; k < finsler::kPacketWidth; ++k) centers[k] = 1.0 + k;
  const JP y = JP::variable(2, centers);
  const JP inv = finsler::reciprocal(y);
  for (int k = 0; k < finsler::kPacketWidth; ++k) {
    EXPECT_DOUBLE_EQ(inv.value()[k], 1.0 / centers[k]);
    EXPECT_DOUBLE_EQ(inv.partial(0, 0, 2, 0)[k], 2.0 / std::pow(centers[k], 3));
  }
}

}  // namespace
