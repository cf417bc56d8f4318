// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "qsc/classical_control.hpp"

#include <cmath>

namespace qsc {

namespace {

RMat sym(const RMat& a) { return 0.5 * (a + a.transpose()); }

bool is_psd_real(const RMat& a, double tol = 1e-10) {
  if ((a - a.transpose()).norm() > tol * std::max(1.0, a.norm())) return false;
  Eigen::SelfAdjointEigenSolver<RMat> es(sym(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, a.norm());
}

double max_real_eig(const RMat& a) {
  return Eigen::EigenSolver<RMat>(a, false).eigenvalues().real().maxCoeff();
}

// A'X + XA + C = 0 for real data.
RMat lyapunov_real(const RMat& a, const RMat& c) {
  const Mat x = solve_lyapunov(a.cast<cplx>(), c.cast<cplx>());
  return sym(x.real());
}

RMat riccati_rhs_reverse(const LqProblem& p, const RMat& Pi) {
  return p.A.transpose() * Pi + Pi * p.A + p.Q - Pi * Pi;
}

RMat gain(const FeedbackLaw& law, const RMat& Pi) {
  RMat K = law.scale * Pi;
  if (law.delta.size() != 0) K += law.delta;
  return K;
}

}  // namespace

void LqProblem::validate() const {
  const Eigen::Index n = A.rows();
  require(n >= 1 && A.cols() == n, "A must be square");
  require(Q.rows() == n && Q.cols() == n, "Q must match A");
  require(Pi_T.rows() == n && Pi_T.cols() == n, "Pi_T must match A");
  require(is_psd_real(Q), "Q must be symmetric PSD");
  require(is_psd_real(Pi_T), "Pi_T must be symmetric PSD");
  if (C) require(C->rows() == n, "C must have n rows");
  if (H_obs) require(H_obs->cols() == n, "H_obs must have n columns");
  require(obs_noise >= 0.0, "obs_noise must be nonnegative");
  require(T > 0.0, "horizon must be positive");
}

RiccatiSolution solve_riccati_ode(const LqProblem& problem, int steps) {
  problem.validate();
  require(steps >= 10, "solve_riccati_ode needs at least 10 steps");
  const double h = problem.T / steps;
  RiccatiSolution sol;
  sol.grid.resize(steps + 1);
  sol.Pi.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) sol.grid[k] = k == steps ? problem.T : k * h;
  sol.Pi[steps] = problem.Pi_T;
  RMat Pi = problem.Pi_T;
  auto f = [&](const RMat& p) { return riccati_rhs_reverse(problem, p); };
  for (int k = steps; k > 0; --k) {
    const RMat k1 = f(Pi);
    const RMat k2 = f(Pi + 0.5 * h * k1);
    const RMat k3 = f(Pi + 0.5 * h * k2);
    const RMat k4 = f(Pi + h * k3);
    Pi = sym(Pi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!Pi.allFinite() || Pi.norm() > 1e12) {
      throw NumericalError("Riccati solution escapes (norm > 1e12) at t = " + std::to_string(sol.grid[k - 1]));
    }
    sol.Pi[k - 1] = Pi;
  }
  return sol;
}

double are_residual(const RMat& A, const RMat& Q, const RMat& Pi) {
  return (A.transpose() * Pi + Pi * A + Q - Pi * Pi).norm();
}

RMat solve_are(const RMat& A, const RMat& Q) {
  require(A.rows() == A.cols() && A.rows() >= 1, "A must be square");
  require(Q.rows() == A.rows() && Q.cols() == A.cols(), "Q must match A");
  require(is_psd_real(Q), "Q must be symmetric PSD");
  const Eigen::Index n = A.rows();
  // with unit input matrix, any shift beyond the spectral abscissa stabilizes
  const double c = std::max(0.0, max_real_eig(A)) + 1.0;
  RMat Pi = c * RMat::Identity(n, n);
  for (int it = 0; it < 100; ++it) {
    const RMat Ak = A - Pi;
    if (!(max_real_eig(Ak) < 0.0)) throw NumericalError("Newton–Kleinman lost stability at iteration " + std::to_string(it));
    const RMat next = lyapunov_real(Ak, Q + Pi * Pi);
    const double change = (next - Pi).norm();
    Pi = next;
    if (change <= 1e-14 * std::max(1.0, Pi.norm())) break;
  }
  if (!Pi.allFinite()) throw NumericalError("no stabilizing solution found");
  return Pi;
}

RVec FeedbackLaw::apply(const RMat& Pi, const RVec& x) const { return -gain(*this, Pi) * x; }

LqrResult lqr_simulate(const LqProblem& problem, const FeedbackLaw& law, const RVec& x0, int steps) {
  require(!problem.C || problem.C->norm() == 0.0, "lqr_simulate needs a deterministic problem");
  require(x0.size() == problem.dim(), "x0 must match the state dimension");
  const RiccatiSolution ric = solve_riccati_ode(problem, steps);
  const double h = problem.T / steps;
  LqrResult out;
  out.t = ric.grid;
  RVec x = x0;
  double cost = 0.0;
  for (int k = 0; k < steps; ++k) {
    const RMat K = gain(law, ric.Pi[k]);
    const RMat Acl = problem.A - K;
    const RMat W = problem.Q + K.transpose() * K;
    out.x.push_back(x);
    out.u.push_back(-K * x);
    auto fx = [&](const RVec& y) -> RVec { return Acl * y; };
    auto fc = [&](const RVec& y) -> double { return y.dot(W * y); };
    const RVec k1 = fx(x);
    const RVec y2 = x + 0.5 * h * k1;
    const RVec k2 = fx(y2);
    const RVec y3 = x + 0.5 * h * k2;
    const RVec k3 = fx(y3);
    const RVec y4 = x + h * k3;
    const RVec k4 = fx(y4);
    cost += (h / 6.0) * (fc(x) + 2.0 * fc(y2) + 2.0 * fc(y3) + fc(y4));
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  out.x.push_back(x);
  out.u.push_back(-gain(law, ric.Pi[steps]) * x);
  out.cost = cost + x.dot(problem.Pi_T * x);
  return out;
}

SdePath simulate_sde(const LqProblem& problem, const RVec& x0, double dt, const std::vector<RVec>& dB,
                     const std::function<RVec(int, const RVec&)>& control) {
  require(x0.size() == problem.dim(), "x0 must match the state dimension");
  SdePath out;
  RVec x = x0;
  double cost = 0.0;
  for (std::size_t k = 0; k < dB.size(); ++k) {
    const RVec u = control(static_cast<int>(k), x);
    out.x.push_back(x);
    out.u.push_back(u);
    cost += (x.dot(problem.Q * x) + u.squaredNorm()) * dt;
    RVec dx = dt * (problem.A * x + u);
    if (problem.C) dx += *problem.C * dB[k];
    x += dx;
  }
  out.x.push_back(x);
  out.cost = cost + x.dot(problem.Pi_T * x);
  return out;
}

std::vector<RMat> filter_covariance(const LqProblem& problem, int steps) {
  problem.validate();
  require(problem.H_obs.has_value(), "the filter needs an observation matrix");
  const Eigen::Index n = problem.dim();
  const RMat& H = *problem.H_obs;
  const RMat CC = problem.C ? RMat(*problem.C * problem.C->transpose()) : RMat::Zero(n, n);
  const double v2 = problem.obs_noise * problem.obs_noise;
  if (v2 == 0.0) require(CC.norm() == 0.0, "noise-free observations need a noise-free state");
  auto f = [&](const RMat& P) -> RMat {
    RMat d = problem.A * P + P * problem.A.transpose() + CC;
    if (v2 > 0.0) d -= P * H.transpose() * H * P / v2;
    return d;
  };
  const double h = problem.T / steps;
  std::vector<RMat> P(steps + 1, RMat::Zero(n, n));
  for (int k = 0; k < steps; ++k) {
    const RMat& p = P[k];
    const RMat k1 = f(p), k2 = f(p + 0.5 * h * k1), k3 = f(p + 0.5 * h * k2), k4 = f(p + h * k3);
    P[k + 1] = sym(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
  return P;
}

LqgResult lqg_simulate(const LqProblem& problem, const RVec& x0, const LqgOptions& options) {
  problem.validate();
  require(problem.H_obs.has_value(), "lqg_simulate needs an observation matrix");
  require(options.n_paths >= 1, "n_paths must be at least 1");
  require(x0.size() == problem.dim(), "x0 must match the state dimension");
  const RiccatiSolution ric = solve_riccati_ode(problem, options.steps);
  const std::vector<RMat> P = filter_covariance(problem, options.steps);
  const RMat& H = *problem.H_obs;
  const double v2 = problem.obs_noise * problem.obs_noise;
  const double dt = problem.T / options.steps;
  const Eigen::Index nb = problem.C ? problem.C->cols() : 0;

  std::vector<RMat> kalman(options.steps);
  for (int k = 0; k < options.steps; ++k) {
    kalman[k] = v2 > 0.0 ? RMat(P[k] * H.transpose() / v2) : RMat::Zero(problem.dim(), H.rows());
  }

  LqgResult out;
  out.path_costs.reserve(options.n_paths);
  double mse = 0.0;
  for (int p = 0; p < options.n_paths; ++p) {
    auto rng = path_rng(options.seed, static_cast<std::uint64_t>(p));
    RVec x = x0, xh = x0;
    double cost = 0.0;
    for (int k = 0; k < options.steps; ++k) {
      const RVec u = options.law.apply(ric.Pi[k], xh);
      cost += (x.dot(problem.Q * x) + u.squaredNorm()) * dt;
      RVec dx = dt * (problem.A * x + u);
      if (nb > 0) dx += *problem.C * gaussian_vector(rng, nb, dt);
      RVec dy = dt * (H * x);
      if (v2 > 0.0) dy += problem.obs_noise * gaussian_vector(rng, H.rows(), dt);
      xh += dt * (problem.A * xh + u) + kalman[k] * (dy - dt * (H * xh));
      x += dx;
    }
    cost += x.dot(problem.Pi_T * x);
    mse += (x - xh).squaredNorm();
    out.path_costs.push_back(cost);
  }
  double mean = 0.0;
  for (double c : out.path_costs) mean += c;
  mean /= options.n_paths;
  double var = 0.0;
  for (double c : out.path_costs) var += (c - mean) * (c - mean);
  out.mean_cost = mean;
  out.std_error = options.n_paths > 1 ? std::sqrt(var / (options.n_paths - 1) / options.n_paths) : 0.0;
  out.filter_mse_T = mse / options.n_paths;
  out.P_T = P.back();
  return out;
}

}  // namespace qsc
