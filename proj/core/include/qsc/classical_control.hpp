// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
//
// Finite-horizon linear-quadratic regulation with unit control weight:
//   dx = (Ax + u)dt + C dB,   J = ∫ (x'Qx + u'u) dt + x_T' Π_T x_T,
// with optional partial observation dy = Hx dt + v dW and a Kalman–Bucy estimate.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qsc/linalg.hpp"
#include "qsc/random.hpp"

namespace qsc {

struct LqProblem {
  RMat A, Q, Pi_T;
  std::optional<RMat> C;      ///< state noise; absent for the deterministic problem
  std::optional<RMat> H_obs;  ///< observation matrix; required by lqg_simulate
  double obs_noise = 1.0;     ///< v in dy = Hx dt + v dW
  double T = 1.0;

  Eigen::Index dim() const { return A.rows(); }
  /// Throws InvalidArgument on shape errors, non-PSD Q or Π_T, or T ≤ 0.
  void validate() const;
};

struct RiccatiSolution {
  std::vector<double> grid;  ///< t_0 = 0 < ... < t_N = T
  std::vector<RMat> Pi;      ///< Π(t_k); Pi.back() is Π_T exactly

  const RMat& at_step(std::size_t k) const { return Pi[k]; }
};

/// Π' = Π² − A'Π − ΠA − Q backward from Π(T) = Π_T, RK4, symmetrized each step.
/// Throws NumericalError with the escape time if ‖Π‖ exceeds 1e12.
RiccatiSolution solve_riccati_ode(const LqProblem& problem, int steps);

/// Stabilizing solution of A'Π + ΠA + Q − Π² = 0 by Newton–Kleinman.
RMat solve_are(const RMat& A, const RMat& Q);
double are_residual(const RMat& A, const RMat& Q, const RMat& Pi);

/// u = −(scale·Π_t + delta) x; the default is the optimal law.
struct FeedbackLaw {
  double scale = 1.0;
  RMat delta;  ///< empty means zero

  static FeedbackLaw optimal() { return {}; }
  RVec apply(const RMat& Pi, const RVec& x) const;
};

struct LqrResult {
  std::vector<double> t;
  std::vector<RVec> x, u;
  double cost = 0.0;
};

/// RK4 on the state and the running cost with step-function gains Π(t_k) on [t_k, t_{k+1}).
LqrResult lqr_simulate(const LqProblem& problem, const FeedbackLaw& law, const RVec& x0, int steps);

/// Left-point Euler–Maruyama on dx = (Ax + u)dt + C dB along given increments dB_k.
/// Cost is the left-point quadrature of the running term plus the terminal term.
struct SdePath {
  std::vector<RVec> x, u;
  double cost = 0.0;
};
SdePath simulate_sde(const LqProblem& problem, const RVec& x0, double dt, const std::vector<RVec>& dB,
                     const std::function<RVec(int, const RVec&)>& control);

struct LqgOptions {
  int steps = 1000;
  int n_paths = 2000;
  std::uint64_t seed = 1;
  FeedbackLaw law;
};

struct LqgResult {
  double mean_cost = 0.0;
  double std_error = 0.0;
  std::vector<double> path_costs;
  double filter_mse_T = 0.0;  ///< mean |x_T − x̂_T|²
  RMat P_T;                   ///< filter error covariance at T
};

/// Kalman–Bucy filter (P(0) = 0) with u = −Π_t x̂_t; Euler–Maruyama for x and x̂, RK4 for P and Π.
LqgResult lqg_simulate(const LqProblem& problem, const RVec& x0, const LqgOptions& options);

/// P' = AP + PA' + CC' − PH'HP/v² forward from P(0) = 0, RK4.
std::vector<RMat> filter_covariance(const LqProblem& problem, int steps);

}  // namespace qsc
