#pragma once

// Scalar-generic pointwise kernels shared by the analytic evaluator (double)
// and the batched grid evaluators (Packet). Everything starts from the jet P
// of F^2 about (x, y).

#include "finsler/jet.hpp"

namespace finsler::kernels {

template <typename S>
using F2JetT = Jet<S, 2, 4>;

/// Metric, inverse metric and spray as jets valid to x-order 1, total order 2.
template <typename S>
struct SprayJets {
  using J = Jet<S, 1, 2>;
  J g[2][2];
  J ginv[2][2];
  J G[2];
};

template <typename S>
SprayJets<S> spray_jets(const F2JetT<S>& P, const S& y1, const S& y2) {
  using J = Jet<S, 1, 2>;
  SprayJets<S> s;
  const auto Py0 = P.dy(0);
  const auto Py1 = P.dy(1);
  s.g[0][0] = (Py0.dy(0) * 0.5).template truncate<1, 2>();
  s.g[0][1] = (Py0.dy(1) * 0.5).template truncate<1, 2>();
  s.g[1][1] = (Py1.dy(1) * 0.5).template truncate<1, 2>();
  s.g[1][0] = s.g[0][1];

  const J det = s.g[0][0] * s.g[1][1] - s.g[0][1] * s.g[0][1];
  const J inv_det = reciprocal(det);
  s.ginv[0][0] = s.g[1][1] * inv_det;
  s.ginv[1][1] = s.g[0][0] * inv_det;
  s.ginv[0][1] = -(s.g[0][1] * inv_det);
  s.ginv[1][0] = s.ginv[0][1];

  const J Y0 = J::variable(2, y1);
  const J Y1 = J::variable(3, y2);
  // w_h = d^2F^2/dy^h dx^j y^j - dF^2/dx^h
  J w[2];
  const decltype(Py0)* Py[2] = {&Py0, &Py1};
  for (int h = 0; h < 2; ++h) {
    w[h] = Py[h]->dx(0) * Y0 + Py[h]->dx(1) * Y1 - P.dx(h).template truncate<1, 2>();
  }
  for (int i = 0; i < 2; ++i) {
    s.G[i] = (s.ginv[i][0] * w[0] + s.ginv[i][1] * w[1]) * 0.25;
  }
  return s;
}

/// Center values of the spray and its first/second derivatives.
template <typename S>
struct SprayDerivatives {
  S G[2];
  S Gx[2][2];      // dG^i/dx^k
  S Gy[2][2];      // dG^i/dy^j
  S Gxy[2][2][2];  // d^2G^i/dx^j dy^k
  S Gyy[2][2][2];  // d^2G^i/dy^j dy^k
};

template <typename S>
SprayDerivatives<S> spray_derivatives(const SprayJets<S>& s) {
  SprayDerivatives<S> d;
  for (int i = 0; i < 2; ++i) {
    const auto& G = s.G[i];
    d.G[i] = G.value();
    d.Gx[i][0] = G.template d<1, 0, 0, 0>();
    d.Gx[i][1] = G.template d<0, 1, 0, 0>();
    d.Gy[i][0] = G.template d<0, 0, 1, 0>();
    d.Gy[i][1] = G.template d<0, 0, 0, 1>();
    d.Gxy[i][0][0] = G.template d<1, 0, 1, 0>();
    d.Gxy[i][0][1] = G.template d<1, 0, 0, 1>();
    d.Gxy[i][1][0] = G.template d<0, 1, 1, 0>();
    d.Gxy[i][1][1] = G.template d<0, 1, 0, 1>();
    d.Gyy[i][0][0] = G.template d<0, 0, 2, 0>();
    d.Gyy[i][0][1] = G.template d<0, 0, 1, 1>();
    d.Gyy[i][1][0] = d.Gyy[i][0][1];
    d.Gyy[i][1][1] = G.template d<0, 0, 0, 2>();
  }
  return d;
}

/// Spray derivatives straight from partials of F^2, without intermediate jets.
/// Differentiating g G = w / 4 once and twice gives
///   G_a  = g^-1 (w_a / 4 - g_a G)
///   G_ab = g^-1 (w_ab / 4 - g_ab G - g_a G_b - g_b G_a)
/// for a, b among x1, x2, y1, y2.
template <typename S>
struct DirectSpray {
  SprayDerivatives<S> d;
  S g[2][2];
  S ginv[2][2];
};

template <typename S>
DirectSpray<S> spray_direct(const F2JetT<S>& P, const S& y1, const S& y2) {
  // All partials in a dense table D[a1][a2][b1][b2]; the small integer index
  // arithmetic below folds away once the fixed-size loops are unrolled.
  using Layout = typename F2JetT<S>::Layout;
  S D[3][3][5][5];
  for (int m = 0; m < Layout::size; ++m) {
    const auto& e = Layout::monomials[m];
    D[e.e[0]][e.e[1]][e.e[2]][e.e[3]] =
        P[m] * (detail::factorial(e.e[0]) * detail::factorial(e.e[1]) *
                detail::factorial(e.e[2]) * detail::factorial(e.e[3]));
  }
  const S y[2] = {y1, y2};
  DirectSpray<S> out;

  // Partial with x-indices xa, xb and y-indices ya..yd (-1 = absent).
  auto py = [&D](int xa, int xb, int ya = -1, int yb = -1, int yc = -1, int yd = -1) -> const S& {
    const int a0 = (xa == 0) + (xb == 0), a1 = (xa == 1) + (xb == 1);
    const int b0 = (ya == 0) + (yb == 0) + (yc == 0) + (yd == 0);
    const int b1 = (ya == 1) + (yb == 1) + (yc == 1) + (yd == 1);
    return D[a0][a1][b0][b1];
  };

  S g[2][2], gx[2][2][2], gy[2][2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j) {
      g[i][j] = 0.5 * py(-1, -1, i, j);
      for (int k = 0; k < 2; ++k) {
        gx[k][i][j] = 0.5 * py(k, -1, i, j);
        gy[k][i][j] = 0.5 * py(-1, -1, i, j, k);
      }
    }
  auto sym = [](S m[2][2]) { m[1][0] = m[0][1]; };
  sym(g);
  for (int k = 0; k < 2; ++k) {
    sym(gx[k]);
    sym(gy[k]);
  }
  const S inv_det = ScalarTraits<S>::inverse(g[0][0] * g[1][1] - g[0][1] * g[0][1]);
  S M[2][2];
  M[0][0] = g[1][1] * inv_det;
  M[1][1] = g[0][0] * inv_det;
  M[0][1] = -(g[0][1] * inv_det);
  M[1][0] = M[0][1];
  auto solve = [&M](const S v[2], S r[2]) {
    r[0] = M[0][0] * v[0] + M[0][1] * v[1];
    r[1] = M[1][0] * v[0] + M[1][1] * v[1];
  };

  // w_h = F^2_{y^h x^j} y^j - F^2_{x^h}
  S w[2], G[2];
  for (int h = 0; h < 2; ++h) w[h] = py(0, -1, h) * y[0] + py(1, -1, h) * y[1] - py(h, -1);
  {
    const S q[2] = {0.25 * w[0], 0.25 * w[1]};
    solve(q, G);
  }

  // First derivatives along x^k (slot k) and y^k (slot 2 + k).
  S Ga[4][2];
  const S (*ga[4])[2] = {gx[0], gx[1], gy[0], gy[1]};
  for (int a = 0; a < 4; ++a) {
    S wa[2];
    for (int h = 0; h < 2; ++h) {
      if (a < 2) {
        const int k = a;
        wa[h] = py(0, k, h) * y[0] + py(1, k, h) * y[1] - py(h, k);
      } else {
        const int k = a - 2;
        wa[h] = py(0, -1, h, k) * y[0] + py(1, -1, h, k) * y[1] + py(k, -1, h) -
                py(h, -1, k);
      }
    }
    S q[2];
    for (int i = 0; i < 2; ++i) q[i] = 0.25 * wa[i] - (ga[a][i][0] * G[0] + ga[a][i][1] * G[1]);
    solve(q, Ga[a]);
  }

  // Second derivatives: (x^k, y^l) and (y^k, y^l).
  auto second = [&](int a, int b, S out2[2]) {
    S wab[2], gab[2][2];
    for (int h = 0; h < 2; ++h) {
      if (a < 2) {
        const int k = a, l = b - 2;
        wab[h] = py(0, k, h, l) * y[0] + py(1, k, h, l) * y[1] + py(l, k, h) -
                 py(h, k, l);
      } else {
        const int k = a - 2, l = b - 2;
        wab[h] = py(0, -1, h, k, l) * y[0] + py(1, -1, h, k, l) * y[1] +
                 py(l, -1, h, k) + py(k, -1, h, l) - py(h, -1, k, l);
      }
    }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        gab[i][j] = a < 2 ? 0.5 * py(a, -1, i, j, b - 2) : 0.5 * py(-1, -1, i, j, a - 2, b - 2);
      }
    S q[2];
    for (int i = 0; i < 2; ++i) {
      q[i] = 0.25 * wab[i];
      for (int j = 0; j < 2; ++j)
        q[i] = q[i] - gab[i][j] * G[j] - ga[a][i][j] * Ga[b][j] - ga[b][i][j] * Ga[a][j];
    }
    solve(q, out2);
  };

  SprayDerivatives<S>& d = out.d;
  for (int i = 0; i < 2; ++i) {
    d.G[i] = G[i];
    for (int k = 0; k < 2; ++k) {
      d.Gx[i][k] = Ga[k][i];
      d.Gy[i][k] = Ga[2 + k][i];
    }
  }
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      S r[2];
      second(j, 2 + k, r);
      for (int i = 0; i < 2; ++i) d.Gxy[i][j][k] = r[i];
    }
  for (int j = 0; j < 2; ++j)
    for (int k = j; k < 2; ++k) {
      S r[2];
      second(2 + j, 2 + k, r);
      for (int i = 0; i < 2; ++i) {
        d.Gyy[i][j][k] = r[i];
        d.Gyy[i][k][j] = r[i];
      }
    }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      out.g[i][j] = g[i][j];
      out.ginv[i][j] = M[i][j];
    }
  return out;
}

/// Reduced hh-curvature R^i_k from spray derivatives:
/// F^2 R^i_k = 2 dG^i/dx^k - y^j d^2G^i/dx^j dy^k + 2 G^j d^2G^i/dy^j dy^k
///             - dG^i/dy^j dG^j/dy^k
template <typename S>
void reduced_curvature(const SprayDerivatives<S>& d, const S& f2, const S& y1, const S& y2,
                       S out[2][2]) {
  const S inv_f2 = ScalarTraits<S>::inverse(f2);
  const S y[2] = {y1, y2};
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      S acc = 2.0 * d.Gx[i][k];
      for (int j = 0; j < 2; ++j) {
        acc = acc - d.Gxy[i][j][k] * y[j] + 2.0 * d.G[j] * d.Gyy[i][j][k] -
              d.Gy[i][j] * d.Gy[j][k];
      }
      out[i][k] = acc * inv_f2;
    }
  }
}

template <typename S>
S ricci_scalar(const F2JetT<S>& P, const S& y1, const S& y2) {
  const auto spray = spray_jets(P, y1, y2);
  const auto d = spray_derivatives(spray);
  S R[2][2];
  reduced_curvature(d, P.value(), y1, y2, R);
  return R[0][0] + R[1][1];
}

/// Chern connection coefficients at the center, Gamma[i][j][k] = Gamma^i_jk,
/// together with the inverse metric there.
template <typename S>
struct ChernAtCenter {
  S gamma[2][2][2];
  S ginv[2][2];
};

template <typename S>
ChernAtCenter<S> chern_at_center(const F2JetT<S>& P, const S (&ginv)[2][2],
                                 const SprayDerivatives<S>& sd);

template <typename S>
ChernAtCenter<S> chern_at_center(const F2JetT<S>& P, const SprayJets<S>& spray,
                                 const SprayDerivatives<S>& sd) {
  S ginv[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) ginv[i][j] = spray.ginv[i][j].value();
  return chern_at_center(P, ginv, sd);
}

template <typename S>
ChernAtCenter<S> chern_at_center(const F2JetT<S>& P, const S (&ginv)[2][2],
                                 const SprayDerivatives<S>& sd) {
  // dgx[k][i][j] = d g_ij / dx^k, dgy[l][i][j] = d g_ij / dy^l, from third partials of F^2/2.
  S dgx[2][2][2], dgy[2][2][2];
  dgx[0][0][0] = 0.5 * P.template d<1, 0, 2, 0>();
  dgx[0][0][1] = 0.5 * P.template d<1, 0, 1, 1>();
  dgx[0][1][1] = 0.5 * P.template d<1, 0, 0, 2>();
  dgx[1][0][0] = 0.5 * P.template d<0, 1, 2, 0>();
  dgx[1][0][1] = 0.5 * P.template d<0, 1, 1, 1>();
  dgx[1][1][1] = 0.5 * P.template d<0, 1, 0, 2>();
  dgy[0][0][0] = 0.5 * P.template d<0, 0, 3, 0>();
  dgy[0][0][1] = 0.5 * P.template d<0, 0, 2, 1>();
  dgy[0][1][1] = 0.5 * P.template d<0, 0, 1, 2>();
  dgy[1][0][0] = dgy[0][0][1];
  dgy[1][0][1] = dgy[0][1][1];
  dgy[1][1][1] = 0.5 * P.template d<0, 0, 0, 3>();
  for (int k = 0; k < 2; ++k) {
    dgx[k][1][0] = dgx[k][0][1];
    dgy[k][1][0] = dgy[k][0][1];
  }
  // delta_k g_ij = dg_ij/dx^k - N^l_k dg_ij/dy^l with N^l_k = 1/2 dG^l/dy^k.
  S dg[2][2][2];
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        dg[k][i][j] = dgx[k][i][j] - 0.5 * (sd.Gy[0][k] * dgy[0][i][j] + sd.Gy[1][k] * dgy[1][i][j]);

  ChernAtCenter<S> c;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c.ginv[i][j] = ginv[i][j];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = j; k < 2; ++k) {
        S acc = c.ginv[i][0] * (dg[j][0][k] + dg[k][j][0] - dg[0][j][k]) +
                c.ginv[i][1] * (dg[j][1][k] + dg[k][j][1] - dg[1][j][k]);
        c.gamma[i][j][k] = 0.5 * acc;
        c.gamma[i][k][j] = c.gamma[i][j][k];
      }
  return c;
}

}  // namespace finsler::kernels
