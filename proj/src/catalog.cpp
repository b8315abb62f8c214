#include "finsler/catalog.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/LU>

namespace finsler {

namespace {

ChartDomain unbounded_domain() {
  ChartDomain d;
  d.unbounded = true;
  return d;
}

ChartDomain pinned_box(double lo, double hi) {
  ChartDomain d;
  d.lower = {lo, lo};
  d.upper = {hi, hi};
  d.boundary = BoundaryMode::Pinned;
  return d;
}

ChartDomain periodic_torus() {
  ChartDomain d;
  d.lower = {0.0, 0.0};
  d.upper = {2.0 * std::numbers::pi, 2.0 * std::numbers::pi};
  d.boundary = BoundaryMode::Periodic;
  return d;
}

double param(const ParamMap& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::string& name, const ParamMap& params,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw FinslerError(ErrorKind::InvalidParams, name + ": unknown parameter " + key);
    if (!std::isfinite(value)) {
      throw FinslerError(ErrorKind::InvalidParams, name + ": parameter " + key + " not finite");
    }
  }
}

StructurePtr rosenau_structure(double t) {
  const double s = -t;
  const double amp = 8.0 * std::sinh(s);
  const double c = std::cosh(s);
  return riemannian_structure(
      "rosenau", unbounded_domain(),
      [amp, c](const F2Jet& x1, const F2Jet& x2, F2Jet& a11, F2Jet& a12, F2Jet& a22) {
        const F2Jet r2 = x1 * x1 + x2 * x2;
        const F2Jet den = (r2 * (2.0 * c) + r2 * r2) + 1.0;
        a11 = reciprocal(den) * amp;
        a22 = a11;
        a12 = F2Jet();
      });
}

}  // namespace

StructurePtr riemannian_structure(std::string name, ChartDomain domain, MetricExpression metric) {
  return std::make_shared<AnalyticStructure>(
      std::move(name), domain,
      [metric = std::move(metric)](const F2Jet& x1, const F2Jet& x2, const F2Jet& y1,
                                   const F2Jet& y2) {
        F2Jet a11, a12, a22;
        metric(x1, x2, a11, a12, a22);
        return quadratic_form(a11, a12, a22, y1, y2);
      });
}

double einstein_tau(double K, double t) { return 1.0 - 2.0 * K * t; }

StructurePtr einstein_scaling(StructurePtr f0, double K, double t) {
  const double tau = einstein_tau(K, t);
  if (!(tau > 0.0)) {
    throw FinslerError(ErrorKind::CollapsedMetric,
                       "tau = 1 - 2Kt = " + std::to_string(tau) + " is not positive");
  }
  if (tau == 1.0) return f0;
  return std::make_shared<ScaledStructure>(std::move(f0), tau);
}

double rosenau_conformal_factor(double t, const Vec2& x) {
  if (!(t < 0.0)) throw FinslerError(ErrorKind::InvalidTime, "Rosenau family needs t < 0");
  const double s = -t;
  const double r2 = x.squaredNorm();
  return 8.0 * std::sinh(s) / (1.0 + 2.0 * std::cosh(s) * r2 + r2 * r2);
}

Mat2 rosenau_metric(double t, const ChartPoint& x) {
  return rosenau_conformal_factor(t, x.vec()) * Mat2::Identity();
}

double rosenau_curvature(double t, const ChartPoint& x) {
  if (!(t < 0.0)) throw FinslerError(ErrorKind::InvalidTime, "Rosenau family needs t < 0");
  const double s = -t;
  const double r2 = x.vec().squaredNorm();
  const double den = 1.0 + 2.0 * std::cosh(s) * r2 + r2 * r2;
  return std::cosh(s) / std::sinh(s) - 2.0 * std::sinh(s) * r2 / den;
}

double brioschi_gauss_curvature(const MetricField& metric, const ChartPoint& x, double step) {
  static constexpr double d1[5] = {0.0, 4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  static constexpr double d2[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0,
                                   -1.0 / 560.0};
  const Vec2 p = x.vec();
  const Mat2 a = metric(p);
  auto at = [&](int i, int j) { return metric(p + Vec2(i * step, j * step)); };
  // Derivatives of the three entries E = a11, F = a12, G = a22.
  Mat2 du = Mat2::Zero(), dv = Mat2::Zero(), duu = d2[0] * a, dvv = d2[0] * a, duv = Mat2::Zero();
  for (int k = 1; k <= 4; ++k) {
    du += d1[k] * (at(k, 0) - at(-k, 0));
    dv += d1[k] * (at(0, k) - at(0, -k));
    duu += d2[k] * (at(k, 0) + at(-k, 0));
    dvv += d2[k] * (at(0, k) + at(0, -k));
  }
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= 4; ++j)
      duv += d1[i] * d1[j] * (at(i, j) - at(-i, j) - at(i, -j) + at(-i, -j));
  du /= step;
  dv /= step;
  duu /= step * step;
  dvv /= step * step;
  duv /= step * step;

  const double E = a(0, 0), F = a(0, 1), G = a(1, 1);
  const double Eu = du(0, 0), Ev = dv(0, 0), Fu = du(0, 1), Fv = dv(0, 1), Gu = du(1, 1),
               Gv = dv(1, 1);
  const double Evv = dvv(0, 0), Guu = duu(1, 1), Fuv = duv(0, 1);
  Eigen::Matrix3d A, B;
  A << -0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev,  //
      Fv - 0.5 * Gu, E, F,                                     //
      0.5 * Gv, F, G;
  B << 0.0, 0.5 * Ev, 0.5 * Gu,  //
      0.5 * Ev, E, F,            //
      0.5 * Gu, F, G;
  const double w = E * G - F * F;
  if (!(w > 0.0)) throw FinslerError(ErrorKind::DegenerateMetric, "Brioschi: det a <= 0");
  return (A.determinant() - B.determinant()) / (w * w);
}

CatalogEntry catalog(const std::string& name, const ParamMap& params) {
  CatalogEntry e;
  e.name = name;
  e.params = params;
  if (name == "euclidean") {
    reject_unknown(name, params, {});
    e.structure = riemannian_structure(
        name, unbounded_domain(),
        [](const F2Jet&, const F2Jet&, F2Jet& a11, F2Jet& a12, F2Jet& a22) {
          a11 = F2Jet(1.0);
          a12 = F2Jet();
          a22 = F2Jet(1.0);
        });
    e.metric = [](const Vec2&) { return Mat2::Identity().eval(); };
    e.grid_domain = pinned_box(-1.0, 1.0);
    auto s = e.structure;
    e.exact_flow = [s](double) { return s; };
    e.exact_F = [](double, const ChartPoint&, const TangentVector& y) { return y.vec().norm(); };
  } else if (name == "randers_flat") {
    reject_unknown(name, params, {"b"});
    const double b = param(params, "b", 0.5);
    if (!(std::abs(b) < 1.0)) {
      throw FinslerError(ErrorKind::InvalidParams, "randers_flat requires |b| < 1");
    }
    e.params["b"] = b;
    e.structure = std::make_shared<AnalyticStructure>(
        name, unbounded_domain(),
        [b](const F2Jet&, const F2Jet&, const F2Jet& y1, const F2Jet& y2) {
          const F2Jet F = sqrt(y1 * y1 + y2 * y2) + y1 * b;
          return F * F;
        });
    e.grid_domain = pinned_box(-1.0, 1.0);
    auto s = e.structure;
    e.exact_flow = [s](double) { return s; };
    e.exact_F = [b](double, const ChartPoint&, const TangentVector& y) {
      return y.vec().norm() + b * y.y1;
    };
  } else if (name == "round_sphere") {
    reject_unknown(name, params, {});
    e.structure = riemannian_structure(
        name, unbounded_domain(),
        [](const F2Jet& x1, const F2Jet& x2, F2Jet& a11, F2Jet& a12, F2Jet& a22) {
          const F2Jet q = x1 * x1 + x2 * x2 + 1.0;
          a11 = reciprocal(q * q) * 4.0;
          a12 = F2Jet();
          a22 = a11;
        });
    e.metric = [](const Vec2& x) {
      const double q = 1.0 + x.squaredNorm();
      return (4.0 / (q * q) * Mat2::Identity()).eval();
    };
    e.grid_domain = pinned_box(-1.0, 1.0);
    auto s = e.structure;
    e.exact_flow = [s](double t) { return einstein_scaling(s, 1.0, t); };
    e.exact_F = [](double t, const ChartPoint& x, const TangentVector& y) {
      const double tau = einstein_tau(1.0, t);
      if (!(tau > 0.0)) throw FinslerError(ErrorKind::CollapsedMetric, "tau <= 0");
      return std::sqrt(tau) * 2.0 * y.vec().norm() / (1.0 + x.vec().squaredNorm());
    };
  } else if (name == "rosenau") {
    reject_unknown(name, params, {"t0"});
    const double t0 = param(params, "t0", -1.0);
    if (!(t0 < 0.0)) throw FinslerError(ErrorKind::InvalidParams, "rosenau requires t0 < 0");
    e.params["t0"] = t0;
    e.structure = rosenau_structure(t0);
    e.metric = [t0](const Vec2& x) {
      return (rosenau_conformal_factor(t0, x) * Mat2::Identity()).eval();
    };
    e.grid_domain = pinned_box(-3.0, 3.0);
    e.exact_flow = [t0](double t) { return rosenau_structure(t0 + t); };
    e.exact_F = [t0](double t, const ChartPoint& x, const TangentVector& y) {
      return std::sqrt(rosenau_conformal_factor(t0 + t, x.vec())) * y.vec().norm();
    };
  } else if (name == "torus_bump") {
    reject_unknown(name, params, {"eps"});
    const double eps = param(params, "eps", 0.1);
    if (!(std::abs(eps) < 1.0)) {
      throw FinslerError(ErrorKind::InvalidParams, "torus_bump requires |eps| < 1");
    }
    e.params["eps"] = eps;
    e.structure = riemannian_structure(
        name, periodic_torus(),
        [eps](const F2Jet& x1, const F2Jet& x2, F2Jet& a11, F2Jet& a12, F2Jet& a22) {
          a11 = (cos(x1) * cos(x2)) * eps + 1.0;
          a12 = F2Jet();
          a22 = a11;
        });
    e.metric = [eps](const Vec2& x) {
      return ((1.0 + eps * std::cos(x[0]) * std::cos(x[1])) * Mat2::Identity()).eval();
    };
    e.grid_domain = periodic_torus();
  } else if (name == "round_torus") {
    reject_unknown(name, params, {"R", "r"});
    const double R = param(params, "R", 2.0);
    const double r = param(params, "r", 1.0);
    if (!(r > 0.0 && R > r)) {
      throw FinslerError(ErrorKind::InvalidParams, "round_torus requires R > r > 0");
    }
    e.params["R"] = R;
    e.params["r"] = r;
    e.structure = riemannian_structure(
        name, periodic_torus(),
        [R, r](const F2Jet&, const F2Jet& x2, F2Jet& a11, F2Jet& a12, F2Jet& a22) {
          const F2Jet w = cos(x2) * r + R;
          a11 = w * w;
          a12 = F2Jet();
          a22 = F2Jet(r * r);
        });
    e.metric = [R, r](const Vec2& x) {
      const double w = R + r * std::cos(x[1]);
      Mat2 a = Mat2::Zero();
      a(0, 0) = w * w;
      a(1, 1) = r * r;
      return a;
    };
    e.grid_domain = periodic_torus();
  } else {
    throw FinslerError(ErrorKind::UnknownEntry, "no catalog entry named '" + name + "'");
  }
  return e;
}

StructurePtr catalog_structure(const std::string& name, const ParamMap& params) {
  return catalog(name, params).structure;
}

}  // namespace finsler
