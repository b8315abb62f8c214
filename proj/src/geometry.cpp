#include "finsler/geometry.hpp"

#include <cmath>

#include "finsler/geometry_kernels.hpp"

namespace finsler {

double min_eigenvalue(const Mat2& m) {
  const double mean = 0.5 * (m(0, 0) + m(1, 1));
  const double diff = 0.5 * (m(0, 0) - m(1, 1));
  const double off = 0.5 * (m(0, 1) + m(1, 0));
  return mean - std::hypot(diff, off);
}

double max_eigenvalue(const Mat2& m) {
  const double mean = 0.5 * (m(0, 0) + m(1, 1));
  const double diff = 0.5 * (m(0, 0) - m(1, 1));
  const double off = 0.5 * (m(0, 1) + m(1, 0));
  return mean + std::hypot(diff, off);
}

GeometryJet geometry_from_jet(const F2Jet& P, const Vec2& y, double degeneracy) {
  using J11 = Jet<double, 1, 1>;
  GeometryJet out;
  const double f2 = P.value();
  if (!(f2 > 0.0) || !std::isfinite(f2)) {
    throw FinslerError(ErrorKind::DegenerateMetric, "F^2 not positive");
  }
  out.F = std::sqrt(f2);
  out.l = y / out.F;

  const auto spray = kernels::spray_jets(P, y[0], y[1]);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.g(i, j) = spray.g[i][j].value();
  const double lam = min_eigenvalue(out.g);
  if (!(lam > degeneracy)) {
    throw FinslerError(ErrorKind::DegenerateMetric,
                       "min eigenvalue of g is " + std::to_string(lam));
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.g_inv(i, j) = spray.ginv[i][j].value();

  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        int b[2] = {0, 0};
        ++b[i];
        ++b[j];
        ++b[k];
        out.cartan[k](i, j) = 0.5 * P.partial(0, 0, b[0], b[1]);
      }

  const auto sd = kernels::spray_derivatives(spray);
  for (int i = 0; i < 2; ++i) {
    out.spray[i] = sd.G[i];
    for (int j = 0; j < 2; ++j) out.N(i, j) = 0.5 * sd.Gy[i][j];
  }

  // Formal Christoffel symbols from plain x-derivatives of g.
  double dgx[2][2][2];
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        int b[2] = {0, 0};
        ++b[i];
        ++b[j];
        dgx[k][i][j] = 0.5 * P.partial(k == 0, k == 1, b[0], b[1]);
      }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        double acc = 0.0;
        for (int h = 0; h < 2; ++h)
          acc += out.g_inv(i, h) * (dgx[j][h][k] + dgx[k][j][h] - dgx[h][j][k]);
        out.gamma[i](j, k) = 0.5 * acc;
      }

  // Chern connection as a jet, so its horizontal derivatives are available.
  J11 N[2][2];
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k) N[l][k] = (spray.G[l].dy(k) * 0.5).template truncate<1, 1>();
  Jet<double, 2, 2> g2[2][2];
  {
    const auto Py0 = P.dy(0);
    const auto Py1 = P.dy(1);
    g2[0][0] = Py0.dy(0) * 0.5;
    g2[0][1] = Py0.dy(1) * 0.5;
    g2[1][1] = Py1.dy(1) * 0.5;
    g2[1][0] = g2[0][1];
  }
  J11 dg[2][2][2];
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        J11 acc = g2[i][j].dx(k);
        for (int l = 0; l < 2; ++l) acc -= N[l][k] * g2[i][j].dy(l).template truncate<1, 1>();
        dg[k][i][j] = acc;
      }
  J11 ginv[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) ginv[i][j] = spray.ginv[i][j].template truncate<1, 1>();
  J11 chern[2][2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        J11 acc;
        for (int h = 0; h < 2; ++h)
          acc += ginv[i][h] * (dg[j][h][k] + dg[k][j][h] - dg[h][j][k]);
        chern[i][j][k] = acc * 0.5;
        out.chern[i](j, k) = chern[i][j][k].value();
      }

  // delta_k Gamma^i_jl at the center.
  auto delta = [&](const J11& f, int k) {
    double v = f.partial(k == 0, k == 1, 0, 0);
    for (int m = 0; m < 2; ++m) v -= out.N(m, k) * f.partial(0, 0, m == 0, m == 1);
    return v;
  };
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          double r = delta(chern[i][j][l], k) - delta(chern[i][j][k], l);
          for (int h = 0; h < 2; ++h)
            r += out.chern[i](h, k) * out.chern[h](j, l) - out.chern[i](h, l) * out.chern[h](j, k);
          out.hh[i][j](k, l) = r;
        }

  double R[2][2];
  kernels::reduced_curvature(sd, f2, y[0], y[1], R);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) out.reduced(i, k) = R[i][k];
  out.ric = R[0][0] + R[1][1];
  return out;
}

Mat2 contract_hh_curvature(const Rank4& hh, const Vec2& y, double f2) {
  Mat2 r = Mat2::Zero();
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      double acc = 0.0;
      for (int j = 0; j < 2; ++j)
        for (int m = 0; m < 2; ++m) acc += y[j] * hh[i][j](k, m) * y[m];
      r(i, k) = acc / f2;
    }
  return r;
}

F2Jet checked_jet(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  if (y.is_zero()) throw FinslerError(ErrorKind::ZeroVector, "direction y must be nonzero");
  if (!std::isfinite(y.y1) || !std::isfinite(y.y2)) {
    throw FinslerError(ErrorKind::ZeroVector, "direction y must be finite");
  }
  const ChartPoint p = s.domain().admit(x);
  return s.f2_jet(p, y);
}

GeometryJet geometry_jet(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  return geometry_from_jet(checked_jet(s, x, y), y.vec());
}

double eval_F(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  if (y.is_zero()) throw FinslerError(ErrorKind::ZeroVector, "direction y must be nonzero");
  const ChartPoint p = s.domain().admit(x);
  const double f2 = s.f2(p, y);
  if (!(f2 > 0.0)) throw FinslerError(ErrorKind::DegenerateMetric, "F^2 not positive");
  return std::sqrt(f2);
}

Mat2 metric_tensor(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  const F2Jet P = checked_jet(s, x, y);
  Mat2 g;
  g(0, 0) = 0.5 * P.d<0, 0, 2, 0>();
  g(0, 1) = g(1, 0) = 0.5 * P.d<0, 0, 1, 1>();
  g(1, 1) = 0.5 * P.d<0, 0, 0, 2>();
  const double lam = min_eigenvalue(g);
  if (!(lam > kDegeneracyThreshold)) {
    throw FinslerError(ErrorKind::DegenerateMetric,
                       "min eigenvalue of g is " + std::to_string(lam));
  }
  return g;
}

Rank3 cartan_tensor(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  return geometry_jet(s, x, y).cartan;
}
Vec2 spray_coefficients(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  return geometry_jet(s, x, y).spray;
}
Mat2 nonlinear_connection(const FinslerStructure& s, const ChartPoint& x,
                          const TangentVector& y) {
  return geometry_jet(s, x, y).N;
}
Rank3 formal_christoffel(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  return geometry_jet(s, x, y).gamma;
}
Rank3 chern_connection(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  return geometry_jet(s, x, y).chern;
}
Rank4 chern_hh_curvature(const FinslerStructure& s, const ChartPoint& x,
                         const TangentVector& y) {
  return geometry_jet(s, x, y).hh;
}
Mat2 reduced_curvature(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  return geometry_jet(s, x, y).reduced;
}
double ricci_scalar(const FinslerStructure& s, const ChartPoint& x, const TangentVector& y) {
  return geometry_jet(s, x, y).ric;
}

}  // namespace finsler
