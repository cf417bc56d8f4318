// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
//
// Linear-quadratic control of evolutions driven by a Boson Lévy pair (M₁, M₂)
// with ρ = id, at finite dimension:
//
//   dX = ±{dt(FX + Gu + L) + Σ_a dM_a F_a(wX + z)},
//
// forward (+, X(0) = C, terminal cost Q_T, m_T) or backward (−, X(T) = C,
// initial cost Q₀, m₀), the stochastic Riccati equation for Π, its monotone
// iteration, the affine term r and the feedback u = −R⁻¹(G*(ΠX + r) + η*).
// Everything is realized pathwise on one sampled noise path.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qsc/linalg.hpp"

namespace qsc {

enum class LevyKind { PlanarBrownian, TruncatedFockVacuum };

struct LevyPath {
  LevyKind kind = LevyKind::PlanarBrownian;
  int n_steps = 0;
  double dt = 0.0;
  std::vector<cplx> dM1, dM2;          ///< scalar increments (PlanarBrownian)
  std::vector<Mat> fock_dM1, fock_dM2; ///< per-step local increments on levels {0,1} (Fock kind)
  Mat sigma;                           ///< sigma(b−1, a−1) = σ_ba with dM_b* dM_a = σ_ba dt
  int rho_sign = 1;

  double horizon() const { return n_steps * dt; }
  /// PlanarBrownian-typed path with all increments zero.
  static LevyPath zero(int n_steps, double dt);
};

/// PlanarBrownian: dM₁ = (ΔB¹ + iΔB²)/√2, dM₂ = conj(dM₁), σ = I; the per-path stream is
/// path_rng(seed, path_index). TruncatedFockVacuum: dM₁ = √dt a†, dM₂ = √dt a on {|0⟩, |1⟩},
/// σ₁₁ = 1 and the other entries 0.
LevyPath build_levy_surrogate(LevyKind kind, int n_steps, double dt, std::uint64_t seed,
                              std::uint64_t path_index = 0);

/// Σ_k dM_b* dM_a as sigma is laid out (vacuum expectation for the Fock kind).
Mat quadratic_variation(const LevyPath& path);

/// Sums adjacent increment pairs; n_steps must be even.
LevyPath coarsen(const LevyPath& path);

/// (f̄ f̄)·σ·(f f)ᵗ / |f|², the positivity form of a Lévy pair table.
double levy_positivity(const Mat& sigma);

enum class Direction { Forward, Backward };

struct RfProblem {
  Mat F, G, L, w, z, F1, F2, Q, R, m, eta;
  Mat Q_b, m_b;  ///< Q_T and m_T for Forward, Q₀ and m₀ for Backward
  Mat C;
  double T = 1.0;
  Direction direction = Direction::Backward;

  Eigen::Index dim() const { return F.rows(); }
  /// Shapes, R ≻ 0, Q and Q_b PSD, F₂ = F₁*, w = w*. Throws InvalidArgument listing the first failure.
  void validate() const;
  /// All coefficients zero, every matrix n × n, R = I.
  static RfProblem zero(Eigen::Index n, Direction direction = Direction::Backward, double T = 1.0);
};

struct RiccatiPath {
  std::vector<Mat> Pi;  ///< Π(t_k), k = 0..n_steps
  double dt = 0.0;
  int iteration = 1;
};

enum class RiccatiScheme {
  /// Exact drift flow per step and the discrete-optimal gain; monotone by construction.
  DiscreteOptimal,
  /// Euler with the gain Π_n, kept for comparison.
  LiteralEuler,
};

struct RiccatiOptions {
  int n_max = 30;
  double tol = 1e-6;
  RiccatiScheme scheme = RiccatiScheme::DiscreteOptimal;
  std::optional<Mat> start;  ///< Π₁ ≡ start instead of the boundary matrix
};

struct RiccatiIteration {
  std::vector<RiccatiPath> iterates;  ///< Π₁, Π₂, ...
  bool converged = false;
  double last_change = 0.0;           ///< sup_t ‖Π_{n+1} − Π_n‖_F of the last update
  double monotonicity_margin = 0.0;   ///< min over n ≥ 2, t of λ_min(Π_n − Π_{n+1})
  double psd_margin = 0.0;            ///< min over n, t of λ_min(Π_n)
  double hermiticity_defect = 0.0;    ///< max ‖Π − Π*‖ before symmetrization

  const RiccatiPath& limit() const { return iterates.back(); }
  int updates() const { return static_cast<int>(iterates.size()) - 1; }
};

/// Backward problems integrate forward from Π(0) = Q₀; forward problems integrate backward from
/// Π(T) = Q_T. The Fock kind is rejected: its increments do not commute with the coefficients.
RiccatiIteration iterate_riccati(const RfProblem& problem, const LevyPath& path, const RiccatiOptions& options = {});

/// Π_{n+1} from Π_n by evaluating K_n(t,0)Q₀K_n(t,0)* + Σ K_n(t,s)·source(s)·K_n(t,s)* on the full
/// triangle s ≤ t. Backward problems only; bounded by n_steps ≤ 2000 and dim ≤ 4 (ResourceLimit).
RiccatiPath kernel_update(const RfProblem& problem, const LevyPath& path, const RiccatiPath& Pi_n,
                          RiccatiScheme scheme = RiccatiScheme::DiscreteOptimal);

/// sup_t ‖Π(t) − Φ(t,0)Π_b Φ(t,0)* − ∫ Φ(t,s)(Q − ΠGR⁻¹G*Π)(s)Φ(t,s)* ds‖_F with the gain-free
/// propagator Φ, trapezoid quadrature per step.
double residual_integral(const RfProblem& problem, const RiccatiPath& Pi, const LevyPath& path);

/// Allowance for residual_integral at a converged iterate: 10·tol + T·dt.
double residual_budget(const RfProblem& problem, const LevyPath& path, double tol);

/// Pathwise Euler for r with r(0) = m₀* (backward) or r(T) = m_T* (forward).
std::vector<Mat> solve_r(const RfProblem& problem, const RiccatiPath& Pi, const LevyPath& path);

/// u = gain_k X + offset_k on [t_k, t_{k+1}).
struct AffineControl {
  std::vector<Mat> gain, offset;
  Mat at(std::size_t k, const Mat& X) const;
  static AffineControl zero(Eigen::Index n, int n_steps);
};

/// −R⁻¹(G*(ΠX + r) + η*).
Mat feedback_control(const RfProblem& problem, const Mat& Pi, const Mat& r, const Mat& X);
/// The feedback law as an AffineControl on the grid.
AffineControl optimal_control(const RfProblem& problem, const RiccatiPath& Pi, const std::vector<Mat>& r);

struct StatePath {
  std::vector<Mat> X, u;  ///< X at k = 0..n, u at k = 0..n−1
};

/// Forward: X_{k+1} = X_k + dt(FX_k + Gu_k + L) + Σ_a dM_a F_a(wX_k + z).
/// Backward: the same left-point relation solved for X_k given X_{k+1}, starting at X(T) = C.
StatePath simulate_state(const RfProblem& problem, const AffineControl& control, const LevyPath& path);

/// Left-point quadrature of the running cost plus the boundary terms, evaluated on Xξ and uξ.
double path_cost(const RfProblem& problem, const StatePath& state, const Vec& xi, double dt);

struct CostEstimate {
  double mean = 0.0, std_error = 0.0;
  std::vector<double> per_path;
};

using ControlRule = std::function<AffineControl(const LevyPath&)>;
CostEstimate cost_tilde(const RfProblem& problem, const ControlRule& rule, const Vec& xi,
                        const std::vector<LevyPath>& paths);

struct Perturbation {
  std::string label;
  double gain_scale = 1.0;  ///< gain ← gain_scale·gain
  Mat offset;               ///< added to every offset; empty means zero
};

struct OptimalityOptions {
  int n_paths = 2000;
  int n_steps = 1000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  double significance = 2.0;  ///< dominance requires mean difference > significance·SE
  std::vector<Perturbation> perturbations;
  RiccatiOptions riccati;
};

struct PerturbationOutcome {
  std::string label;
  double mean_cost = 0.0, mean_diff = 0.0, se_diff = 0.0;
  bool dominated = false;
  double K_mean = 0.0, K_se = 0.0;         ///< 2·Re K of the cross term
  double quad_mean = 0.0;                  ///< mean of the quadratic excess
  double decomposition_residual = 0.0;     ///< max |J(u) − J(u*) − quad − 2Re K|
};

struct OptimalityReport {
  double optimal_mean = 0.0, optimal_se = 0.0;
  std::vector<PerturbationOutcome> outcomes;
  int max_riccati_updates = 0;
  bool all_converged = true;
  bool all_dominated() const;
};

/// Monte Carlo comparison of u* against perturbed controls on shared paths.
OptimalityReport verify_feedback_optimality(const RfProblem& problem, const Vec& xi, const OptimalityOptions& options);

/// Six offsets and four gain scalings.
std::vector<Perturbation> default_perturbations(Eigen::Index n);

/// s = T − t: constant coefficients carried over, Q_T → Q₀, m_T → m₀, increments in reverse order
/// (N(s) = −M(T−s)), σ → −σ. Forward → Backward; a backward problem maps back to forward.
std::pair<RfProblem, LevyPath> time_reverse(const RfProblem& problem, const LevyPath& path);
RiccatiPath reverse(const RiccatiPath& Pi);

struct CoefficientCheck {
  bool matches = false;
  std::string derived_A, derived_B1, derived_B2;
  std::string stated_A, stated_B1, stated_B2;
  std::string report;
};

/// Substitutes dΠ = dt·A + dM₁B₁ + dM₂B₂ into the generalized Riccati equation with the scalar table
/// dM_a dM_b = c₀(a,b)dt, solves for A and B_a by matching the dt, dM₁, dM₂ coefficients in a free
/// algebra over F, Π, w, F₁, F₂, G, R⁻¹, Q, and compares with the expanded two-noise form.
/// `drop_noise` zeroes F₁, F₂; `drop_w` zeroes w; `transpose_stated` swaps σ₁₂ and σ₂₁ in the
/// stated form only (a deliberate mismatch).
CoefficientCheck riccati_coefficient_check(Direction direction, const Mat& sigma, bool drop_noise = false,
                                           bool drop_w = false, bool transpose_stated = false);

}  // namespace qsc
