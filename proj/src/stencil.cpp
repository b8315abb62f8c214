#include "finsler/stencil.hpp"

#include <cmath>
#include <stdexcept>

namespace finsler {

std::vector<std::vector<double>> fornberg_weights(double z, const std::vector<double>& x,
                                                  int max_order) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, max_order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        }
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

AxisStencils::AxisStencils(int n, double h, bool periodic, int order, int width) {
  if (width % 2 == 0 || width + 1 > Stencil1D::kMaxPoints) {
    throw std::invalid_argument("stencil width must be odd and fit Stencil1D");
  }
  if (n < width + 1) throw std::invalid_argument("lattice too small for stencil");
  const int half = width / 2;
  stencils_.resize(n);
  std::vector<double> offsets(width);
  for (int j = 0; j < width; ++j) offsets[j] = j - half;
  const auto central = fornberg_weights(0.0, offsets, order)[order];
  const double scale = std::pow(h, -order);
  for (int i = 0; i < n; ++i) {
    Stencil1D& s = stencils_[i];
    if (periodic || (i >= half && i < n - half)) {
      s.count = width;
      for (int j = 0; j < width; ++j) {
        s.index[j] = ((i + j - half) % n + n) % n;
        s.weight[j] = central[j] * scale;
      }
      continue;
    }
    const int points = width + 1;
    const int first = i < half ? 0 : n - points;
    std::vector<double> nodes(points);
    for (int j = 0; j < points; ++j) nodes[j] = first + j - i;
    const auto w = fornberg_weights(0.0, nodes, order)[order];
    s.count = points;
    for (int j = 0; j < points; ++j) {
      s.index[j] = first + j;
      s.weight[j] = w[j] * scale;
    }
  }
}

void cubic_lagrange_window(double s, int n, bool periodic, int& first,
                           std::array<double, 4>& weight) {
  int base = static_cast<int>(std::floor(s));
  first = base - 1;
  if (!periodic) {
    if (first < 0) first = 0;
    if (first > n - 4) first = n - 4;
  }
  const double t = s - first;  // position relative to node `first`
  for (int j = 0; j < 4; ++j) {
    double w = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != j) w *= (t - m) / static_cast<double>(j - m);
    weight[j] = w;
  }
}

}  // namespace finsler
