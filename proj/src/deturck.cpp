#include "finsler/deturck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "finsler/grid_structure.hpp"
#include "finsler/stencil.hpp"

#include <Eigen/LU>

namespace finsler {

Vec2 deturck_vector(const FinslerStructure& g, const FinslerStructure& h, const ChartPoint& x,
                    const TangentVector& y) {
  const GeometryJet gg = geometry_jet(g, x, y);
  const GeometryJet hh = geometry_jet(h, x, y);
  Vec2 xi = Vec2::Zero();
  for (int i = 0; i < 2; ++i)
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) xi[i] += gg.g_inv(p, q) * (hh.chern[i](p, q) - gg.chern[i](p, q));
  return xi;
}

double DeTurckField::max_abs() const {
  double m = 0.0;
  for (std::size_t n = 0; n < xi1.size(); ++n)
    m = std::max({m, std::abs(xi1[n]), std::abs(xi2[n])});
  return m;
}

DeTurckField deturck_vector_field(const FinslerStructure& g, const FinslerStructure& h,
                                  const SphereBundleGrid& grid) {
  grid.validate();
  DeTurckField f;
  f.grid = grid;
  f.xi1.resize(grid.size());
  f.xi2.resize(grid.size());
  for (int i2 = 0; i2 < grid.nx2; ++i2)
    for (int i1 = 0; i1 < grid.nx1; ++i1)
      for (int k = 0; k < grid.ntheta; ++k) {
        const Vec2 v = deturck_vector(g, h, grid.point(i1, i2), grid.direction(k));
        const std::size_t n = grid.index(i1, i2, k);
        f.xi1[n] = v[0];
        f.xi2[n] = v[1];
      }
  return f;
}

DeTurckField deturck_vector_field(const FlowProblem& problem, const FieldOnSM& phi) {
  if (problem.kind() != FlowKind::DeTurck) {
    throw FinslerError(ErrorKind::Config, "problem was not built for the DeTurck flow");
  }
  RhsResult r;
  problem.evaluate(phi, r);
  DeTurckField f;
  f.grid = problem.grid();
  f.xi1 = std::move(r.xi1);
  f.xi2 = std::move(r.xi2);
  return f;
}

double lie_derivative_F2(const FinslerStructure& s, const Vec2& xi, const Mat2& dxi,
                         const ChartPoint& x, const TangentVector& y) {
  const F2Jet P = checked_jet(s, x, y);
  const double fx[2] = {P.d<1, 0, 0, 0>(), P.d<0, 1, 0, 0>()};
  const double fy[2] = {P.d<0, 0, 1, 0>(), P.d<0, 0, 0, 1>()};
  const Vec2 yv = y.vec();
  double out = 0.0;
  for (int i = 0; i < 2; ++i) out += xi[i] * fx[i] + dxi.row(i).dot(yv) * fy[i];
  return out;
}

double lie_derivative_covariant(const FinslerStructure& s, const Vec2& xi, const Mat2& dxi,
                                const ChartPoint& x, const TangentVector& y) {
  const GeometryJet gj = geometry_jet(s, x, y);
  const Vec2 yv = y.vec();
  double out = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        double nabla = dxi(k, j);
        for (int m = 0; m < 2; ++m) nabla += gj.chern[k](m, j) * xi[m];
        out += 2.0 * yv[i] * yv[j] * gj.g(i, k) * nabla;
      }
  return out;
}

double lie_derivative_F2(const FinslerStructure& s, const DeTurckField& xi, int i1, int i2,
                         int k) {
  const SphereBundleGrid& grid = xi.grid;
  const LatticeDerivatives lattice(grid);
  const std::size_t n = grid.index(i1, i2, k);
  Mat2 dxi;
  for (int axis = 0; axis < 2; ++axis) {
    dxi(0, axis) = lattice.dx(xi.xi1, axis, i1, i2, k);
    dxi(1, axis) = lattice.dx(xi.xi2, axis, i1, i2, k);
  }
  return lie_derivative_F2(s, Vec2(xi.xi1[n], xi.xi2[n]), dxi, grid.point(i1, i2),
                           grid.direction(k));
}

double deturck_rhs(const FinslerStructure& s, const FinslerStructure& h, const ChartPoint& x,
                   const TangentVector& y, double step) {
  static constexpr double w[2] = {8.0 / 12.0, -1.0 / 12.0};
  Mat2 dxi = Mat2::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    for (int j = 1; j <= 2; ++j) {
      ChartPoint plus = x, minus = x;
      (axis == 0 ? plus.x1 : plus.x2) += j * step;
      (axis == 0 ? minus.x1 : minus.x2) -= j * step;
      dxi.col(axis) += w[j - 1] * (deturck_vector(s, h, plus, y) - deturck_vector(s, h, minus, y));
    }
    dxi.col(axis) /= step;
  }
  const GeometryJet gj = geometry_jet(s, x, y);
  const Vec2 xi = deturck_vector(s, h, x, y);
  return -2.0 * gj.F * gj.F * gj.ric - lie_derivative_F2(s, xi, dxi, x, y);
}

std::size_t DiffeoFamily::sample_at(double t) const {
  if (times.empty()) throw FinslerError(ErrorKind::Config, "empty diffeomorphism family");
  std::size_t best = 0;
  for (std::size_t s = 1; s < times.size(); ++s)
    if (std::abs(times[s] - t) < std::abs(times[best] - t)) best = s;
  return best;
}

namespace {

/// Jacobians I + d(displacement)/dx by fourth-order lattice differences.
std::vector<Mat2> jacobians(const SphereBundleGrid& grid, const std::vector<Vec2>& pos) {
  const AxisStencils d1(grid.nx1, grid.spacing(0), grid.periodic(), 1, 5);
  const AxisStencils d2(grid.nx2, grid.spacing(1), grid.periodic(), 1, 5);
  auto disp = [&](int i1, int i2) {
    const std::size_t c = static_cast<std::size_t>(i2) * grid.nx1 + i1;
    return Vec2(pos[c] - grid.point(i1, i2).vec());
  };
  std::vector<Mat2> J(pos.size());
  for (int i2 = 0; i2 < grid.nx2; ++i2)
    for (int i1 = 0; i1 < grid.nx1; ++i1) {
      Vec2 a = Vec2::Zero(), b = Vec2::Zero();
      const Stencil1D& s1 = d1[i1];
      for (int j = 0; j < s1.count; ++j) a += s1.weight[j] * disp(s1.index[j], i2);
      const Stencil1D& s2 = d2[i2];
      for (int j = 0; j < s2.count; ++j) b += s2.weight[j] * disp(i1, s2.index[j]);
      Mat2 m = Mat2::Identity();
      m.col(0) += a;
      m.col(1) += b;
      J[static_cast<std::size_t>(i2) * grid.nx1 + i1] = m;
    }
  return J;
}

}  // namespace

DiffeoFamily integrate_diffeomorphisms(const std::vector<DeTurckSample>& history,
                                       const SphereBundleGrid& grid, double dt,
                                       LeftChartPolicy policy) {
  grid.validate();
  if (history.empty()) throw FinslerError(ErrorKind::Config, "empty xi history");
  if (!(dt > 0.0)) throw FinslerError(ErrorKind::Config, "diffeomorphism step must be positive");
  const std::size_t columns = static_cast<std::size_t>(grid.columns());
  for (std::size_t s = 0; s < history.size(); ++s) {
    if (history[s].xi.size() != columns) {
      throw FinslerError(ErrorKind::Config, "xi sample does not match the grid");
    }
    if (s > 0 && !(history[s].t > history[s - 1].t)) {
      throw FinslerError(ErrorKind::Config, "xi samples must have increasing times");
    }
  }

  const bool periodic = grid.periodic();
  const double h1 = grid.spacing(0), h2 = grid.spacing(1);
  const Vec2 lo = grid.domain.lower, hi = grid.domain.upper;

  auto bilinear = [&](const std::vector<Vec2>& f, const Vec2& x) -> Vec2 {
    if (!periodic && (x[0] < lo[0] || x[0] > hi[0] || x[1] < lo[1] || x[1] > hi[1])) {
      throw FinslerError(ErrorKind::LeftChart, "trajectory left the chart at (" +
                                                   std::to_string(x[0]) + ", " +
                                                   std::to_string(x[1]) + ")");
    }
    const double s1 = (x[0] - lo[0]) / h1, s2 = (x[1] - lo[1]) / h2;
    int j1 = static_cast<int>(std::floor(s1)), j2 = static_cast<int>(std::floor(s2));
    double f1 = s1 - j1, f2 = s2 - j2;
    if (!periodic) {
      if (j1 >= grid.nx1 - 1) { j1 = grid.nx1 - 2; f1 = 1.0; }
      if (j2 >= grid.nx2 - 1) { j2 = grid.nx2 - 2; f2 = 1.0; }
    }
    auto at = [&](int a, int b) -> const Vec2& {
      a = ((a % grid.nx1) + grid.nx1) % grid.nx1;
      b = ((b % grid.nx2) + grid.nx2) % grid.nx2;
      return f[static_cast<std::size_t>(b) * grid.nx1 + a];
    };
    return (1 - f1) * (1 - f2) * at(j1, j2) + f1 * (1 - f2) * at(j1 + 1, j2) +
           (1 - f1) * f2 * at(j1, j2 + 1) + f1 * f2 * at(j1 + 1, j2 + 1);
  };

  DiffeoFamily fam;
  fam.grid = grid;
  std::vector<Vec2> pos(columns);
  for (int i2 = 0; i2 < grid.nx2; ++i2)
    for (int i1 = 0; i1 < grid.nx1; ++i1)
      pos[static_cast<std::size_t>(i2) * grid.nx1 + i1] = grid.point(i1, i2).vec();
  std::vector<char> frozen(columns, 0);
  fam.left_chart.assign(columns, 0);
  if (!periodic) {
    for (int i2 = 0; i2 < grid.nx2; ++i2)
      for (int i1 = 0; i1 < grid.nx1; ++i1)
        frozen[static_cast<std::size_t>(i2) * grid.nx1 + i1] = grid.is_boundary(i1, i2);
  }

  auto record = [&](double t) {
    fam.times.push_back(t);
    fam.positions.push_back(pos);
    fam.jacobians.push_back(jacobians(grid, pos));
  };
  record(history.front().t);

  for (std::size_t s = 0; s + 1 < history.size(); ++s) {
    const DeTurckSample& A = history[s];
    const DeTurckSample& B = history[s + 1];
    const double span = B.t - A.t;
    const int n = std::max(1, static_cast<int>(std::lround(span / dt)));
    const double h = span / n;
    auto field = [&](const Vec2& x, double t) -> Vec2 {
      const double w = (t - A.t) / span;
      return (1.0 - w) * bilinear(A.xi, x) + w * bilinear(B.xi, x);
    };
    for (int step = 0; step < n; ++step) {
      const double t = A.t + step * h;
      for (std::size_t c = 0; c < columns; ++c) {
        if (frozen[c]) continue;
        const Vec2 x = pos[c];
        try {
          const Vec2 k1 = field(x, t);
          const Vec2 k2 = field(x + 0.5 * h * k1, t + 0.5 * h);
          const Vec2 k3 = field(x + 0.5 * h * k2, t + 0.5 * h);
          const Vec2 k4 = field(x + h * k3, t + h);
          pos[c] = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } catch (const FinslerError& e) {
          if (e.kind() != ErrorKind::LeftChart || policy == LeftChartPolicy::Throw) throw;
          frozen[c] = 1;
          fam.left_chart[c] = 1;
        }
      }
    }
    record(B.t);
  }
  return fam;
}

DiffeoFamily fixed_diffeomorphism(const SphereBundleGrid& grid,
                                  const std::function<Vec2(const Vec2&)>& map) {
  grid.validate();
  DiffeoFamily fam;
  fam.grid = grid;
  std::vector<Vec2> pos(grid.columns());
  for (int i2 = 0; i2 < grid.nx2; ++i2)
    for (int i1 = 0; i1 < grid.nx1; ++i1)
      pos[static_cast<std::size_t>(i2) * grid.nx1 + i1] = map(grid.point(i1, i2).vec());
  fam.times.push_back(0.0);
  fam.left_chart.assign(pos.size(), 0);
  fam.jacobians.push_back(jacobians(grid, pos));
  fam.positions.push_back(std::move(pos));
  return fam;
}

namespace {

template <typename Eval>
FieldOnSM pullback_impl(const DiffeoFamily& family, std::size_t sample, Eval&& eval) {
  if (sample >= family.times.size()) {
    throw FinslerError(ErrorKind::Config, "diffeomorphism sample out of range");
  }
  const SphereBundleGrid& grid = family.grid;
  FieldOnSM out(grid, 1);
  for (int i2 = 0; i2 < grid.nx2; ++i2)
    for (int i1 = 0; i1 < grid.nx1; ++i1) {
      const std::size_t c = static_cast<std::size_t>(i2) * grid.nx1 + i1;
      const Mat2& J = family.jacobians[sample][c];
      if (!(J.determinant() > 0.0)) {
        throw FinslerError(ErrorKind::DegeneratePullback,
                           "det D phi = " + std::to_string(J.determinant()) + " at node (" +
                               std::to_string(i1) + ", " + std::to_string(i2) + ")");
      }
      const Vec2& p = family.positions[sample][c];
      for (int k = 0; k < grid.ntheta; ++k) {
        const Vec2 v = J * grid.direction(k).vec();
        try {
          out(i1, i2, k) = eval(ChartPoint{p[0], p[1]}, TangentVector{v[0], v[1]});
        } catch (const FinslerError& e) {
          if (e.kind() != ErrorKind::OutOfChart) throw;
          throw FinslerError(ErrorKind::LeftChart, e.what());
        }
      }
    }
  return out;
}

}  // namespace

FieldOnSM pullback_field(const DiffeoFamily& family, std::size_t sample,
                         const FinslerStructure& F) {
  return pullback_impl(family, sample, [&F](const ChartPoint& x, const TangentVector& y) {
    return eval_F(F, x, y);
  });
}

FieldOnSM pullback_field(const DiffeoFamily& family, std::size_t sample, const FieldOnSM& F) {
  if (F.degree != 1) throw FinslerError(ErrorKind::InvalidParams, "pullback needs an F-field");
  return pullback_impl(family, sample, [&F](const ChartPoint& x, const TangentVector& y) {
    return polar_extend(F, x, y);
  });
}

StructurePtr pullback_structure(const DiffeoFamily& family, std::size_t sample,
                                const FinslerStructure& F, StructurePtr reference) {
  return std::make_shared<GridSampledStructure>("pullback(" + F.name() + ")",
                                                pullback_field(family, sample, F),
                                                std::move(reference));
}

std::string diffeo_csv(const DiffeoFamily& family) {
  std::string out = "t,i1,i2,phi1,phi2,J11,J12,J21,J22\n";
  char line[512];
  const SphereBundleGrid& g = family.grid;
  for (std::size_t s = 0; s < family.times.size(); ++s)
    for (int i2 = 0; i2 < g.nx2; ++i2)
      for (int i1 = 0; i1 < g.nx1; ++i1) {
        const std::size_t c = static_cast<std::size_t>(i2) * g.nx1 + i1;
        const Vec2& p = family.positions[s][c];
        const Mat2& J = family.jacobians[s][c];
        std::snprintf(line, sizeof line, "%.17g,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      family.times[s], i1, i2, p[0], p[1], J(0, 0), J(0, 1), J(1, 0), J(1, 1));
        out += line;
      }
  return out;
}

}  // namespace finsler
