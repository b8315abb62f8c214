#include "finsler/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "finsler/geometry_kernels.hpp"

namespace finsler {

const char* to_string(FlowKind kind) { return kind == FlowKind::Ricci ? "ricci" : "deturck"; }
const char* to_string(Integrator integrator) {
  return integrator == Integrator::Euler ? "euler" : "rk4";
}

namespace {

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

Packet min_eig(const Packet& a, const Packet& b, const Packet& d) {
  const Packet mean = 0.5 * (a + d);
  const Packet diff = 0.5 * (a - d);
  return mean - (diff * diff + b * b).sqrt();
}

}  // namespace

FlowProblem::FlowProblem(StructurePtr initial, SphereBundleGrid grid, FlowKind kind,
                         StructurePtr background, double degeneracy)
    : initial_(std::move(initial)),
      background_(std::move(background)),
      grid_(std::move(grid)),
      kind_(kind),
      degeneracy_(degeneracy) {
  grid_.validate();
  if (!initial_) throw FinslerError(ErrorKind::Config, "flow needs an initial structure");
  if (kind_ == FlowKind::DeTurck && !background_) {
    throw FinslerError(ErrorKind::Config, "DeTurck flow needs a background structure");
  }
  lattice_ = LatticeDerivatives(grid_);
  const int nt = grid_.ntheta;
  blocks_ = (nt + kPacketWidth - 1) / kPacketWidth;
  auto lane_k = [&](int b, int lane) { return std::min(b * kPacketWidth + lane, nt - 1); };

  dir1_.resize(blocks_);
  dir2_.resize(blocks_);
  powers_.resize(blocks_);
  for (int b = 0; b < blocks_; ++b) {
    for (int lane = 0; lane < kPacketWidth; ++lane) {
      const TangentVector u = grid_.direction(lane_k(b, lane));
      dir1_[b][lane] = u.y1;
      dir2_[b][lane] = u.y2;
    }
    powers_[b] = angle_powers(dir1_[b], dir2_[b]);
  }

  base_jets_.resize(static_cast<std::size_t>(grid_.columns()) * blocks_);
  base_f2_.resize(grid_.size());
  for (int i2 = 0; i2 < grid_.nx2; ++i2)
    for (int i1 = 0; i1 < grid_.nx1; ++i1) {
      const std::size_t c = static_cast<std::size_t>(i2) * grid_.nx1 + i1;
      const ChartPoint x = initial_->domain().admit(grid_.point(i1, i2));
      for (int b = 0; b < blocks_; ++b) {
        Jet<Packet, 2, 4>& J = base_jets_[c * blocks_ + b];
        for (int lane = 0; lane < kPacketWidth; ++lane) {
          const int k = lane_k(b, lane);
          const F2Jet P = initial_->f2_jet(x, grid_.direction(k));
          for (int m = 0; m < F2Jet::kSize; ++m) J[m][lane] = P[m];
          base_f2_[grid_.index(i1, i2, k)] = P.value();
        }
      }
    }

  if (background_) {
    h_gamma_.resize(grid_.size());
    for (int i2 = 0; i2 < grid_.nx2; ++i2)
      for (int i1 = 0; i1 < grid_.nx1; ++i1)
        for (int k = 0; k < nt; ++k) {
          const ChartPoint x = background_->domain().admit(grid_.point(i1, i2));
          const Rank3 G = chern_connection(*background_, x, grid_.direction(k));
          h_gamma_[grid_.index(i1, i2, k)] = {G[0](0, 0), G[0](0, 1), G[0](1, 1),
                                              G[1](0, 0), G[1](0, 1), G[1](1, 1)};
        }
  }
}

void FlowProblem::set_fiber_modes(int modes) {
  const int nt = grid_.ntheta;
  fiber_modes_ = modes;
  fiber_projection_.clear();
  if (modes < 0 || 2 * modes >= nt) {
    fiber_modes_ = -1;
    return;
  }
  // Rows: cos(m theta_k), sin(m theta_k) for m = 1..modes.
  fiber_projection_.resize(static_cast<std::size_t>(2 * modes) * nt);
  for (int m = 1; m <= modes; ++m)
    for (int k = 0; k < nt; ++k) {
      fiber_projection_[static_cast<std::size_t>(2 * (m - 1)) * nt + k] = std::cos(m * grid_.theta(k));
      fiber_projection_[static_cast<std::size_t>(2 * m - 1) * nt + k] = std::sin(m * grid_.theta(k));
    }
}

FieldOnSM FlowProblem::initial_field() const {
  FieldOnSM f(grid_, 1);
  for (std::size_t n = 0; n < f.values.size(); ++n) f.values[n] = std::sqrt(base_f2_[n]);
  return f;
}

void FlowProblem::ratio_theta_derivatives(const FieldOnSM& phi,
                                          std::array<std::vector<double>, 5>& T) const {
  std::vector<double> rho(phi.values.size());
  for (std::size_t n = 0; n < rho.size(); ++n) {
    const double v = phi.values[n];
    rho[n] = v * v / base_f2_[n];
  }
  lattice_.theta_pass(rho, T);
}

F2Jet FlowProblem::node_jet(const FieldOnSM& phi, int i1, int i2, int k) const {
  std::array<std::vector<double>, 5> T;
  ratio_theta_derivatives(phi, T);
  std::vector<double> buf(static_cast<std::size_t>(kDerivativeCount) * grid_.ntheta);
  lattice_.column(T, i1, i2, buf.data());
  double d[kDerivativeCount];
  for (int s = 0; s < kDerivativeCount; ++s) d[s] = buf[s * grid_.ntheta + k];
  const TangentVector u = grid_.direction(k);
  const F2Jet q = assemble_ratio_jet(d, angle_powers(u.y1, u.y2));
  const ChartPoint x = initial_->domain().admit(grid_.point(i1, i2));
  return initial_->f2_jet(x, u) * q;
}

std::vector<Mat2> FlowProblem::metric_field(const FieldOnSM& phi) const {
  std::array<std::vector<double>, 5> T;
  ratio_theta_derivatives(phi, T);
  const int nt = grid_.ntheta;
  std::vector<Mat2> out(grid_.size());
  std::vector<double> buf(static_cast<std::size_t>(kDerivativeCount) * nt);
  Packet D[kDerivativeCount];
  for (int i2 = 0; i2 < grid_.nx2; ++i2)
    for (int i1 = 0; i1 < grid_.nx1; ++i1) {
      const std::size_t c = static_cast<std::size_t>(i2) * grid_.nx1 + i1;
      lattice_.column(T, i1, i2, buf.data());
      for (int b = 0; b < blocks_; ++b) {
        for (int s = 0; s < kDerivativeCount; ++s)
          for (int lane = 0; lane < kPacketWidth; ++lane)
            D[s][lane] = buf[s * nt + std::min(b * kPacketWidth + lane, nt - 1)];
        const auto P = base_jets_[c * blocks_ + b] * assemble_ratio_jet(D, powers_[b]);
        const Packet g11 = 0.5 * P.template d<0, 0, 2, 0>();
        const Packet g12 = 0.5 * P.template d<0, 0, 1, 1>();
        const Packet g22 = 0.5 * P.template d<0, 0, 0, 2>();
        for (int lane = 0; lane < kPacketWidth && b * kPacketWidth + lane < nt; ++lane) {
          Mat2& m = out[grid_.index(i1, i2, b * kPacketWidth + lane)];
          m << g11[lane], g12[lane], g12[lane], g22[lane];
        }
      }
    }
  return out;
}

void FlowProblem::evaluate(const FieldOnSM& phi, RhsResult& out, bool boundary_columns) const {
  const int nt = grid_.ntheta;
  const std::size_t N = grid_.size();
  const bool deturck = kind_ == FlowKind::DeTurck;
  std::array<std::vector<double>, 5> T;
  ratio_theta_derivatives(phi, T);

  out.rhs = FieldOnSM(grid_, 1);
  out.ric = FieldOnSM(grid_, 0);
  std::vector<double> f2(N), f2x1, f2x2, f2y1, f2y2;
  if (deturck) {
    out.xi1.assign(N, 0.0);
    out.xi2.assign(N, 0.0);
    out.lie.assign(N, 0.0);
    f2x1.resize(N);
    f2x2.resize(N);
    f2y1.resize(N);
    f2y2.resize(N);
  }

  const double dx2 = std::min(grid_.spacing(0), grid_.spacing(1));
  const double hx2 = dx2 * dx2;
  const double dth2 = grid_.dtheta() * grid_.dtheta();

  // Per-column minima, reduced after the parallel pass for determinism.
  const int columns = grid_.columns();
  std::vector<double> col_min_eig(columns), col_max_ric(columns), col_stable(columns);

  parallel_for(grid_.nx2, threads_, [&](int i2) {
    std::vector<double> buf(static_cast<std::size_t>(kDerivativeCount) * nt);
    Packet D[kDerivativeCount];
    for (int i1 = 0; i1 < grid_.nx1; ++i1) {
      const int c = i2 * grid_.nx1 + i1;
      const bool evolved = !grid_.is_boundary(i1, i2);
      if (!evolved && !boundary_columns) {
        col_min_eig[c] = std::numeric_limits<double>::infinity();
        col_max_ric[c] = 0.0;
        col_stable[c] = std::numeric_limits<double>::infinity();
        for (int k = 0; k < nt; ++k) f2[grid_.index(i1, i2, k)] = phi(i1, i2, k) * phi(i1, i2, k);
        continue;
      }
      lattice_.column(T, i1, i2, buf.data());
      double min_eig_c = std::numeric_limits<double>::infinity();
      double max_ric_c = 0.0;
      double stable_c = std::numeric_limits<double>::infinity();
      for (int b = 0; b < blocks_; ++b) {
        if ((b + 1) * kPacketWidth <= nt) {
          for (int s = 0; s < kDerivativeCount; ++s)
            D[s] = Eigen::Map<const Packet>(buf.data() + static_cast<std::size_t>(s) * nt +
                                            b * kPacketWidth);
        } else {
          for (int s = 0; s < kDerivativeCount; ++s) {
            const double* src = buf.data() + static_cast<std::size_t>(s) * nt;
            for (int lane = 0; lane < kPacketWidth; ++lane)
              D[s][lane] = src[std::min(b * kPacketWidth + lane, nt - 1)];
          }
        }
        const auto P = base_jets_[static_cast<std::size_t>(c) * blocks_ + b] *
                       assemble_ratio_jet(D, powers_[b]);
        const Packet& y1 = dir1_[b];
        const Packet& y2 = dir2_[b];
        const auto spray = kernels::spray_direct(P, y1, y2);
        const auto& sd = spray.d;
        Packet R[2][2];
        const Packet F2 = P.value();
        kernels::reduced_curvature(sd, F2, y1, y2, R);
        const Packet ric = R[0][0] + R[1][1];
        const Packet g11 = spray.g[0][0], g12 = spray.g[0][1], g22 = spray.g[1][1];
        const Packet lam = min_eig(g11, g12, g22);
        const Packet det = g11 * g22 - g12 * g12;
        const Packet stable_x = hx2 * lam;
        const Packet stable_t = dth2 * det / (F2 * F2);
        const Packet stable = stable_x.min(stable_t);

        Packet xi1, xi2;
        if (deturck) {
          const auto ch = kernels::chern_at_center(P, spray.ginv, sd);
          xi1 = Packet::Zero();
          xi2 = Packet::Zero();
          for (int lane = 0; lane < kPacketWidth; ++lane) {
            const int k = std::min(b * kPacketWidth + lane, nt - 1);
            const auto& hg = h_gamma_[grid_.index(i1, i2, k)];
            // xi^i = g^pq (Gamma_h^i_pq - Gamma_g^i_pq)
            double x[2];
            for (int i = 0; i < 2; ++i) {
              const double d11 = hg[3 * i + 0] - ch.gamma[i][0][0][lane];
              const double d12 = hg[3 * i + 1] - ch.gamma[i][0][1][lane];
              const double d22 = hg[3 * i + 2] - ch.gamma[i][1][1][lane];
              x[i] = ch.ginv[0][0][lane] * d11 + 2.0 * ch.ginv[0][1][lane] * d12 +
                     ch.ginv[1][1][lane] * d22;
            }
            xi1[lane] = x[0];
            xi2[lane] = x[1];
          }
        }

        for (int lane = 0; lane < kPacketWidth; ++lane) {
          const int k = b * kPacketWidth + lane;
          if (k >= nt) break;
          const std::size_t n = grid_.index(i1, i2, k);
          out.ric.values[n] = ric[lane];
          f2[n] = F2[lane];
          min_eig_c = std::min(min_eig_c, lam[lane]);
          max_ric_c = std::max(max_ric_c, std::abs(ric[lane]));
          if (evolved) stable_c = std::min(stable_c, stable[lane]);
          if (deturck) {
            out.xi1[n] = xi1[lane];
            out.xi2[n] = xi2[lane];
            f2x1[n] = P.template d<1, 0, 0, 0>()[lane];
            f2x2[n] = P.template d<0, 1, 0, 0>()[lane];
            f2y1[n] = P.template d<0, 0, 1, 0>()[lane];
            f2y2[n] = P.template d<0, 0, 0, 1>()[lane];
          }
        }
      }
      col_min_eig[c] = min_eig_c;
      col_max_ric[c] = max_ric_c;
      col_stable[c] = stable_c;
    }
  });

  out.min_eig_g = *std::min_element(col_min_eig.begin(), col_min_eig.end());
  out.max_abs_ric = *std::max_element(col_max_ric.begin(), col_max_ric.end());
  out.stable_dt = 0.2 * *std::min_element(col_stable.begin(), col_stable.end());
  if (!(out.min_eig_g > degeneracy_)) {
    const auto worst = std::min_element(col_min_eig.begin(), col_min_eig.end()) - col_min_eig.begin();
    throw FinslerError(ErrorKind::DegenerateMetric,
                       "min eigenvalue of g is " + std::to_string(out.min_eig_g) +
                           " at chart node (" + std::to_string(worst % grid_.nx1) + ", " +
                           std::to_string(worst / grid_.nx1) + ")");
  }

  for (int i2 = 0; i2 < grid_.nx2; ++i2)
    for (int i1 = 0; i1 < grid_.nx1; ++i1) {
      const bool evolved = !grid_.is_boundary(i1, i2);
      for (int k = 0; k < nt; ++k) {
        const std::size_t n = grid_.index(i1, i2, k);
        const double F = phi.values[n];
        double value;
        if (!deturck) {
          value = -F * out.ric.values[n];
        } else {
          const TangentVector u = grid_.direction(k);
          // Complete lift: xi^i dF^2/dx^i + y^j (dxi^i/dx^j) dF^2/dy^i.
          const double d11 = lattice_.dx(out.xi1, 0, i1, i2, k);
          const double d12 = lattice_.dx(out.xi1, 1, i1, i2, k);
          const double d21 = lattice_.dx(out.xi2, 0, i1, i2, k);
          const double d22 = lattice_.dx(out.xi2, 1, i1, i2, k);
          const double lie = out.xi1[n] * f2x1[n] + out.xi2[n] * f2x2[n] +
                             (u.y1 * d11 + u.y2 * d12) * f2y1[n] +
                             (u.y1 * d21 + u.y2 * d22) * f2y2[n];
          out.lie[n] = lie;
          value = (-2.0 * f2[n] * out.ric.values[n] - lie) / (2.0 * F);
        }
        out.rhs.values[n] = evolved ? value : 0.0;
      }
    }

  if (fiber_modes_ >= 0) {
    // Project d(F^2/F_0^2)/dt column by column and convert back to dF/dt.
    std::vector<double> rate(nt), projected(nt);
    for (int c = 0; c < grid_.columns(); ++c) {
      const std::size_t base = static_cast<std::size_t>(c) * nt;
      for (int k = 0; k < nt; ++k)
        rate[k] = 2.0 * phi.values[base + k] * out.rhs.values[base + k] / base_f2_[base + k];
      double mean = 0.0;
      for (int k = 0; k < nt; ++k) mean += rate[k];
      mean /= nt;
      for (int k = 0; k < nt; ++k) projected[k] = mean;
      for (int r = 0; r < 2 * fiber_modes_; ++r) {
        const double* basis = fiber_projection_.data() + static_cast<std::size_t>(r) * nt;
        double coeff = 0.0;
        for (int k = 0; k < nt; ++k) coeff += basis[k] * rate[k];
        coeff *= 2.0 / nt;
        for (int k = 0; k < nt; ++k) projected[k] += coeff * basis[k];
      }
      for (int k = 0; k < nt; ++k)
        out.rhs.values[base + k] =
            base_f2_[base + k] * projected[k] / (2.0 * phi.values[base + k]);
    }
  }
}

FieldOnSM ricci_rhs(const FlowProblem& problem, const FlowState& state) {
  if (problem.kind() != FlowKind::Ricci) {
    FlowProblem ricci(problem.initial(), problem.grid(), FlowKind::Ricci);
    return ricci_rhs(ricci, state);
  }
  RhsResult r;
  problem.evaluate(state.phi, r);
  return r.rhs;
}

FieldOnSM deturck_step_rhs(const FlowProblem& problem, const FlowState& state) {
  if (problem.kind() != FlowKind::DeTurck) {
    throw FinslerError(ErrorKind::Config, "problem was not built for the DeTurck flow");
  }
  RhsResult r;
  problem.evaluate(state.phi, r);
  return r.rhs;
}

double stability_timestep(const FlowProblem& problem, const FlowState& state) {
  RhsResult r;
  problem.evaluate(state.phi, r);
  return r.stable_dt;
}

namespace {

void check_finite_positive(const FieldOnSM& f) {
  for (std::size_t n = 0; n < f.values.size(); ++n) {
    const double v = f.values[n];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw FinslerError(ErrorKind::BlowUp, "F = " + std::to_string(v) + " at node " +
                                                std::to_string(n));
    }
  }
}

void axpy(FieldOnSM& out, const FieldOnSM& x, double a, const FieldOnSM& y) {
  const std::size_t n = x.values.size();
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = x.values[i] + a * y.values[i];
}

}  // namespace

FlowState step(const FlowState& state, const RhsProvider& rhs, double dt, Integrator integrator,
               const BoundaryProvider& boundary) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw FinslerError(ErrorKind::Config, "time step must be positive");
  }
  FlowState next;
  next.t = state.t + dt;
  next.phi = state.phi;
  if (integrator == Integrator::Euler) {
    FieldOnSM k1;
    rhs(state, k1);
    axpy(next.phi, state.phi, dt, k1);
  } else {
    FieldOnSM k1, k2, k3, k4;
    FlowState stage = state;
    rhs(state, k1);
    axpy(stage.phi, state.phi, 0.5 * dt, k1);
    stage.t = state.t + 0.5 * dt;
    if (boundary) boundary(stage.t, stage.phi);
    check_finite_positive(stage.phi);
    rhs(stage, k2);
    axpy(stage.phi, state.phi, 0.5 * dt, k2);
    if (boundary) boundary(stage.t, stage.phi);
    check_finite_positive(stage.phi);
    rhs(stage, k3);
    axpy(stage.phi, state.phi, dt, k3);
    stage.t = state.t + dt;
    if (boundary) boundary(stage.t, stage.phi);
    check_finite_positive(stage.phi);
    rhs(stage, k4);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < next.phi.values.size(); ++i) {
      next.phi.values[i] = state.phi.values[i] +
                           w * (k1.values[i] + 2.0 * k2.values[i] + 2.0 * k3.values[i] +
                                k4.values[i]);
    }
  }
  if (boundary) boundary(next.t, next.phi);
  check_finite_positive(next.phi);
  return next;
}

double integrability_residual(const SphereBundleGrid& grid, const std::vector<Mat2>& g) {
  const int nt = grid.ntheta;
  // Periodic spectral differentiation in theta (nt is even): the residual of a
  // smooth integrable field then sits at roundoff instead of a stencil floor.
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nt, nt);
  for (int k = 0; k < nt; ++k)
    for (int j = 0; j < nt; ++j)
      if (j != k) {
        const double sign = ((k - j) % 2 == 0) ? 1.0 : -1.0;
        D(k, j) = 0.5 * sign / std::tan(0.5 * (k - j) * grid.dtheta());
      }
  Eigen::MatrixXd col(nt, 3), gt(nt, 3);
  double worst = 0.0;
  for (int c = 0; c < grid.columns(); ++c) {
    const Mat2* m = g.data() + static_cast<std::size_t>(c) * nt;
    for (int k = 0; k < nt; ++k) col.row(k) << m[k](0, 0), m[k](0, 1), m[k](1, 1);
    gt.noalias() = D * col;
    for (int k = 0; k < nt; ++k) {
      // g is 0-homogeneous: dg/dy = (dg/dtheta) * (-sin theta, cos theta) on r = 1.
      const double th = grid.theta(k);
      const double t[2] = {-std::sin(th), std::cos(th)};
      const double gk[2][2] = {{gt(k, 0), gt(k, 1)}, {gt(k, 1), gt(k, 2)}};
      double C[2][2][2];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int l = 0; l < 2; ++l) C[i][j][l] = gk[i][j] * t[l];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int l = 0; l < 2; ++l) {
            worst = std::max(worst, std::abs(C[i][j][l] - C[l][j][i]));
            worst = std::max(worst, std::abs(C[i][j][l] - C[i][l][j]));
          }
    }
  }
  return worst;
}

double integrability_check(const FlowProblem& problem, const FlowState& state) {
  return integrability_residual(problem.grid(), problem.metric_field(state.phi));
}

BoundaryProvider exact_boundary(
    const SphereBundleGrid& grid,
    std::function<double(double, const ChartPoint&, const TangentVector&)> F) {
  if (grid.periodic()) return {};
  return [grid, F = std::move(F)](double t, FieldOnSM& phi) {
    for (int i2 = 0; i2 < grid.nx2; ++i2)
      for (int i1 = 0; i1 < grid.nx1; ++i1) {
        if (!grid.is_boundary(i1, i2)) continue;
        const ChartPoint x = grid.point(i1, i2);
        for (int k = 0; k < grid.ntheta; ++k) phi(i1, i2, k) = F(t, x, grid.direction(k));
      }
  };
}

namespace {

std::vector<Vec2> theta_average(const SphereBundleGrid& grid, const RhsResult& r) {
  std::vector<Vec2> xi(grid.columns(), Vec2::Zero());
  for (int c = 0; c < grid.columns(); ++c) {
    Vec2 acc = Vec2::Zero();
    for (int k = 0; k < grid.ntheta; ++k) {
      const std::size_t n = static_cast<std::size_t>(c) * grid.ntheta + k;
      acc += Vec2(r.xi1[n], r.xi2[n]);
    }
    xi[c] = acc / grid.ntheta;
  }
  return xi;
}

}  // namespace

FlowResult run_flow(const FlowSetup& setup) {
  if (!(setup.dt > 0.0) || !(setup.t_end > 0.0) || setup.snapshot_stride < 1) {
    throw FinslerError(ErrorKind::Config, "flow needs dt > 0, t_end > 0, snapshot_stride >= 1");
  }
  FlowProblem problem(setup.initial, setup.grid, setup.kind, setup.background,
                      setup.tolerances.degeneracy);
  problem.set_threads(setup.threads);
  problem.set_fiber_modes(setup.fiber_modes);
  const SphereBundleGrid& grid = problem.grid();

  FlowResult result;
  FlowState state{problem.initial_field(), 0.0};
  BoundaryProvider boundary = setup.boundary;
  if (!boundary && !grid.periodic()) {
    const FieldOnSM held = state.phi;
    boundary = [held, grid](double, FieldOnSM& phi) {
      for (int i2 = 0; i2 < grid.nx2; ++i2)
        for (int i1 = 0; i1 < grid.nx1; ++i1)
          if (grid.is_boundary(i1, i2))
            for (int k = 0; k < grid.ntheta; ++k) phi(i1, i2, k) = held(i1, i2, k);
    };
  }

  RhsResult last;
  bool have_last = false;
  RhsProvider rhs = [&](const FlowState& s, FieldOnSM& out) {
    problem.evaluate(s.phi, last, false);
    have_last = true;
    if (setup.record_xi && setup.kind == FlowKind::DeTurck && s.t == state.t) {
      result.xi_history.push_back({s.t, theta_average(grid, last)});
    }
    out = std::move(last.rhs);
  };

  const long steps = std::lround(setup.t_end / setup.dt);
  double residual0 = 0.0;
  double used_dt = setup.dt;

  auto record = [&](bool snapshot) {
    RhsResult now;
    problem.evaluate(state.phi, now);
    DiagnosticsRecord d;
    d.t = state.t;
    d.min_eig_g = now.min_eig_g;
    d.integrability_residual = integrability_check(problem, state);
    d.max_abs_ric = now.max_abs_ric;
    d.dt = used_dt;
    if (d.integrability_residual > setup.tolerances.integrability_alarm) {
      result.integrability_alarm = true;
    }
    result.diagnostics.push_back(d);
    if (snapshot) result.snapshots.push_back({state.t, state.phi, now.ric});
    return now;
  };

  try {
    const RhsResult first = record(true);
    residual0 = result.diagnostics.front().integrability_residual;
    (void)residual0;
    double stable = first.stable_dt;
    for (long n = 1; n <= steps; ++n) {
      int sub = 1;
      if (setup.substep && setup.dt > stable) sub = static_cast<int>(std::ceil(setup.dt / stable));
      const double h = setup.dt / sub;
      used_dt = h;
      const double t_target = n * setup.dt;
      for (int s = 0; s < sub; ++s) {
        state = step(state, rhs, h, setup.integrator, boundary);
        if (s + 1 == sub) state.t = t_target;
      }
      if (have_last) stable = std::min(stable, last.stable_dt);
      if (n % setup.snapshot_stride == 0 || n == steps) record(true);
    }
    if (setup.record_xi && setup.kind == FlowKind::DeTurck) {
      RhsResult end;
      problem.evaluate(state.phi, end);
      result.xi_history.push_back({state.t, theta_average(grid, end)});
    }
  } catch (const FinslerError& e) {
    if (e.kind() != ErrorKind::BlowUp && e.kind() != ErrorKind::DegenerateMetric &&
        e.kind() != ErrorKind::LeftChart) {
      throw;
    }
    result.early_stop = true;
    result.stop_kind = e.kind();
    result.stop_reason = e.what();
    DiagnosticsRecord d;
    d.t = state.t;
    d.dt = used_dt;
    try {
      RhsResult now;
      problem.evaluate(state.phi, now);
      d.min_eig_g = now.min_eig_g;
      d.max_abs_ric = now.max_abs_ric;
      d.integrability_residual = integrability_check(problem, state);
    } catch (const FinslerError&) {
      d.min_eig_g = std::nan("");
      d.max_abs_ric = std::nan("");
      d.integrability_residual = std::nan("");
    }
    result.diagnostics.push_back(d);
  }
  result.final_state = state;
  return result;
}

}  // namespace finsler
