#include "finsler/grid_structure.hpp"

#include <cmath>
#include <numbers>

namespace finsler {

LatticeDerivatives::LatticeDerivatives(const SphereBundleGrid& grid) : grid_(grid) {
  grid.validate();
  for (int m = 1; m <= 4; ++m) ths_[m - 1] = AxisStencils(grid.ntheta, grid.dtheta(), true, m, 7);
  for (int axis = 0; axis < 2; ++axis) {
    const int n = axis == 0 ? grid.nx1 : grid.nx2;
    for (int order = 1; order <= 2; ++order) {
      xs_[axis][order - 1] = AxisStencils(n, grid.spacing(axis), grid.periodic(), order, 5);
    }
  }
}

void LatticeDerivatives::theta_pass(const std::vector<double>& rho,
                                    std::array<std::vector<double>, 5>& out) const {
  const int nt = grid_.ntheta;
  out[0] = rho;
  for (int m = 1; m <= 4; ++m) {
    out[m].assign(rho.size(), 0.0);
    const AxisStencils& st = ths_[m - 1];
    for (int c = 0; c < grid_.columns(); ++c) {
      const double* src = rho.data() + static_cast<std::size_t>(c) * nt;
      double* dst = out[m].data() + static_cast<std::size_t>(c) * nt;
      for (int k = 0; k < nt; ++k) dst[k] = st[k].apply([&](int j) { return src[j]; });
    }
  }
}

void LatticeDerivatives::column(const std::array<std::vector<double>, 5>& T, int i1, int i2,
                                double* out) const {
  const int nt = grid_.ntheta;
  auto col = [&](int m, int j1, int j2) {
    return T[m].data() + (static_cast<std::size_t>(j2) * grid_.nx1 + j1) * nt;
  };
  for (int s = 0; s < kDerivativeCount; ++s) {
    const auto [a1, a2, m] = kDerivatives[s];
    double* dst = out + static_cast<std::size_t>(s) * nt;
    if (a1 + a2 == 0) {
      const double* src = col(m, i1, i2);
      for (int k = 0; k < nt; ++k) dst[k] = src[k];
      continue;
    }
    for (int k = 0; k < nt; ++k) dst[k] = 0.0;
    if (a1 == 1 && a2 == 1) {
      const Stencil1D& s1 = xs_[0][0][i1];
      const Stencil1D& s2 = xs_[1][0][i2];
      for (int j = 0; j < s1.count; ++j)
        for (int l = 0; l < s2.count; ++l) {
          const double w = s1.weight[j] * s2.weight[l];
          const double* src = col(m, s1.index[j], s2.index[l]);
          for (int k = 0; k < nt; ++k) dst[k] += w * src[k];
        }
      continue;
    }
    const int axis = a1 > 0 ? 0 : 1;
    const Stencil1D& st = xs_[axis][a1 + a2 - 1][axis == 0 ? i1 : i2];
    for (int j = 0; j < st.count; ++j) {
      const double* src = axis == 0 ? col(m, st.index[j], i2) : col(m, i1, st.index[j]);
      const double w = st.weight[j];
      for (int k = 0; k < nt; ++k) dst[k] += w * src[k];
    }
  }
}

double LatticeDerivatives::dx(const std::vector<double>& f, int axis, int i1, int i2,
                              int k) const {
  const Stencil1D& st = xs_[axis][0][axis == 0 ? i1 : i2];
  return st.apply([&](int j) {
    return axis == 0 ? f[grid_.index(j, i2, k)] : f[grid_.index(i1, j, k)];
  });
}

double LatticeDerivatives::dx_chart(const std::vector<double>& f, int axis, int i1,
                                    int i2) const {
  const Stencil1D& st = xs_[axis][0][axis == 0 ? i1 : i2];
  return st.apply([&](int j) {
    return axis == 0 ? f[static_cast<std::size_t>(i2) * grid_.nx1 + j]
                     : f[static_cast<std::size_t>(j) * grid_.nx1 + i1];
  });
}

GridSampledStructure::GridSampledStructure(std::string name, FieldOnSM phi,
                                           StructurePtr reference)
    : name_(std::move(name)), phi_(std::move(phi)), reference_(std::move(reference)) {
  const SphereBundleGrid& g = phi_.grid;
  lattice_ = LatticeDerivatives(g);
  if (phi_.degree != 1) {
    throw FinslerError(ErrorKind::InvalidParams, "grid-sampled F must be 1-homogeneous");
  }
  std::vector<double> rho(g.size());
  for (int i2 = 0; i2 < g.nx2; ++i2)
    for (int i1 = 0; i1 < g.nx1; ++i1)
      for (int k = 0; k < g.ntheta; ++k) {
        const double v = phi_(i1, i2, k);
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw FinslerError(ErrorKind::InvalidParams, "grid-sampled F must be positive");
        }
        const double ref =
            reference_ ? reference_->f2(g.point(i1, i2), g.direction(k)) : 1.0;
        rho[g.index(i1, i2, k)] = v * v / ref;
      }
  std::array<std::vector<double>, 5> T;
  lattice_.theta_pass(rho, T);
  derivs_.resize(g.size() * kDerivativeCount);
  for (int i2 = 0; i2 < g.nx2; ++i2)
    for (int i1 = 0; i1 < g.nx1; ++i1) {
      const std::size_t c = static_cast<std::size_t>(i2) * g.nx1 + i1;
      lattice_.column(T, i1, i2, derivs_.data() + c * kDerivativeCount * g.ntheta);
    }
}

F2Jet GridSampledStructure::reference_jet(const ChartPoint& x, const TangentVector& y) const {
  if (reference_) return reference_->f2_jet(x, y);
  return euclidean_f2_jet(y.y1, y.y2);
}

F2Jet GridSampledStructure::node_jet(int i1, int i2, int k) const {
  const SphereBundleGrid& g = phi_.grid;
  const std::size_t c = static_cast<std::size_t>(i2) * g.nx1 + i1;
  double d[kDerivativeCount];
  for (int s = 0; s < kDerivativeCount; ++s) {
    d[s] = derivs_[(c * kDerivativeCount + s) * g.ntheta + k];
  }
  const TangentVector u = g.direction(k);
  const F2Jet q = assemble_ratio_jet(d, angle_powers(u.y1, u.y2));
  return reference_jet(g.point(i1, i2), u) * q;
}

F2Jet GridSampledStructure::f2_jet(const ChartPoint& x, const TangentVector& y) const {
  const SphereBundleGrid& g = phi_.grid;
  double th = std::atan2(y.y2, y.y1);
  if (th < 0) th += 2.0 * std::numbers::pi;
  const double s1 = (x.x1 - g.domain.lower[0]) / g.spacing(0);
  const double s2 = (x.x2 - g.domain.lower[1]) / g.spacing(1);
  const double st = th / g.dtheta();
  int f1, f2, ft;
  std::array<double, 4> w1, w2, wt;
  cubic_lagrange_window(s1, g.nx1, g.periodic(), f1, w1);
  cubic_lagrange_window(s2, g.nx2, g.periodic(), f2, w2);
  cubic_lagrange_window(st, g.ntheta, true, ft, wt);
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };

  double d[kDerivativeCount] = {};
  for (int b = 0; b < 4; ++b) {
    if (w2[b] == 0.0) continue;
    const int i2 = wrap(f2 + b, g.nx2);
    for (int a = 0; a < 4; ++a) {
      if (w1[a] == 0.0) continue;
      const int i1 = wrap(f1 + a, g.nx1);
      const std::size_t c = static_cast<std::size_t>(i2) * g.nx1 + i1;
      for (int t = 0; t < 4; ++t) {
        if (wt[t] == 0.0) continue;
        const int k = wrap(ft + t, g.ntheta);
        const double w = w1[a] * w2[b] * wt[t];
        for (int s = 0; s < kDerivativeCount; ++s) {
          d[s] += w * derivs_[(c * kDerivativeCount + s) * g.ntheta + k];
        }
      }
    }
  }
  const F2Jet q = assemble_ratio_jet(d, angle_powers(y.y1, y.y2));
  return reference_jet(x, y) * q;
}

std::vector<Mat2> lattice_metric(const GridSampledStructure& s) {
  const SphereBundleGrid& g = s.grid();
  std::vector<Mat2> out;
  out.reserve(g.size());
  for (int i2 = 0; i2 < g.nx2; ++i2)
    for (int i1 = 0; i1 < g.nx1; ++i1)
      for (int k = 0; k < g.ntheta; ++k) {
        const F2Jet P = s.node_jet(i1, i2, k);
        Mat2 m;
        m(0, 0) = 0.5 * P.d<0, 0, 2, 0>();
        m(0, 1) = m(1, 0) = 0.5 * P.d<0, 0, 1, 1>();
        m(1, 1) = 0.5 * P.d<0, 0, 0, 2>();
        out.push_back(m);
      }
  return out;
}

}  // namespace finsler
