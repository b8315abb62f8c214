#pragma once

#include <array>
#include <vector>

namespace finsler {

/// Finite-difference weights (Fornberg's recursion). Returns w with
/// w[k][j] = weight of node x[j] in the k-th derivative at z, k = 0..max_order.
std::vector<std::vector<double>> fornberg_weights(double z, const std::vector<double>& x,
                                                  int max_order);

/// One stencil: sum_j weight[j] * f[index[j]].
struct Stencil1D {
  static constexpr int kMaxPoints = 8;
  int count = 0;
  std::array<int, kMaxPoints> index{};
  std::array<double, kMaxPoints> weight{};

  template <typename F>
  auto apply(F&& f) const {
    auto acc = weight[0] * f(index[0]);
    for (int j = 1; j < count; ++j) acc += weight[j] * f(index[j]);
    return acc;
  }
};

/// Stencils for the `order`-th derivative at every node of a uniform 1-D lattice
/// of n nodes with spacing h. Periodic lattices use centered stencils of
/// `width` points throughout; bounded lattices fall back to a window of
/// width + 1 points kept inside [0, n) near the ends.
class AxisStencils {
 public:
  AxisStencils() = default;
  AxisStencils(int n, double h, bool periodic, int order, int width);

  const Stencil1D& operator[](int i) const { return stencils_[i]; }
  int size() const { return static_cast<int>(stencils_.size()); }

 private:
  std::vector<Stencil1D> stencils_;
};

/// Lagrange interpolation weights on the 4 nodes surrounding a fractional
/// lattice position s (in units of the spacing). `first` receives the index
/// of the leftmost node; bounded lattices clamp the window into [0, n).
void cubic_lagrange_window(double s, int n, bool periodic, int& first,
                           std::array<double, 4>& weight);

}  // namespace finsler
