// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
//
// Quadratic cost control of quantum flows: the operator Riccati conditions,
// simulated costs, synthesis of optimal HP coefficients, and symbolic
// derivations of the flow generators.
#pragma once

#include <string>

#include "qsc/fock_sim.hpp"
#include "qsc/free_algebra.hpp"
#include "qsc/ito_algebra.hpp"

namespace qsc {

struct RiccatiResiduals {
  double r1 = 0.0, r2 = 0.0, r3 = 0.0;
  double max() const { return std::max({r1, r2, r3}); }
};

/// Frobenius norms of
///   ΠF + F*Π + Φ*ΠΦ − Π² + X²,   ΠΨ + Φ*Π + Φ*ΠZ,   ΠZ + Z*Π + Z*ΠZ.
RiccatiResiduals check_hp_riccati_system(const Mat& Pi, const Mat& F, const Mat& Psi, const Mat& Phi,
                                         const Mat& Z, const Mat& X);

/// Coefficients satisfying all three conditions exactly for a given Π ≻ 0:
/// Z = W − 1, Ψ = −Π⁻¹Φ*ΠW, F = Π⁻¹(½(Π² − X² − Φ*ΠΦ) + iA).
/// W must be unitary and commute with Π; A must be Hermitian.
GenericQsdeSpec riccati_consistent_spec(const Mat& Pi, const Mat& X, const Mat& Phi, const Mat& W,
                                        const Mat& A);

struct CostBreakdown {
  double running = 0.0;   ///< ∫ of the state and control terms
  double terminal = 0.0;
  double total() const { return running + terminal; }
};

/// Q = ∫ ⟨Uξ, X²Uξ⟩ + ‖uξ‖² dt − ⟨u_T ξ, U_T ξ⟩ with u = −ΠU, for ξ = v ⊗ ψ(f).
/// The integrand is sampled on the dt grid and integrated by composite Simpson.
CostBreakdown cost_Q(const GenericQsdeSpec& spec, const Mat& X, const Vec& v, const TruncationConfig& config,
                     const StepFunction& f = StepFunction::zero());

struct HpControlProblem {
  Mat H, X;
  Vec xi;            ///< system part of ξ
  StepFunction f;    ///< exponential-vector part of ξ
  double T = 1.0;

  HpControlProblem(Mat h, Mat x, Vec xi_sys, double horizon, StepFunction fv = StepFunction::zero());
};

/// J = ∫ ‖j_t(X)ξ‖² + ¼‖j_t(L*L)ξ‖² dt + ½‖j_T(L)ξ‖² under dU = −((iH + ½L*L)dt + L*W dA − L dA† + (1−W)dΛ)U.
/// Squared norms are evaluated as ⟨ξ, j_t(Y*Y) ξ⟩. dt and levels come from config; T from the problem.
CostBreakdown cost_J_hp(const HpControlProblem& problem, const Mat& L, const Mat& W, const TruncationConfig& config);

struct HpSynthesis {
  Mat L, W;
};

/// L = √2 Π^{1/2} W₁, W = W₂. Rejects W₁ or W₂ that fail to commute with Π (reports the commutator norm).
HpSynthesis synthesize_hp(const Mat& Pi, const Mat& W1, const Mat& W2);

struct SynthesisReport {
  double stationarity = 0.0;      ///< ‖i[H,Π] + L*ΠL − Π² + X²‖
  double cross = 0.0;             ///< ‖L*Π − ΠL*W + L*Π(W − 1)‖
  double conservation = 0.0;      ///< ‖(W* − 1)Π + Π(W − 1) + (W* − 1)Π(W − 1)‖
  double comm_L = 0.0;            ///< max(‖[L,Π]‖, ‖[L*,Π]‖)
  double comm_W = 0.0;            ///< max(‖[W,Π]‖, ‖[W*,Π]‖)
  double gram = 0.0;              ///< ‖L*L − 2Π‖
  double normality = 0.0;         ///< ‖[L,L*]‖
  /// Largest of the algebraic conditions that synthesis guarantees (everything except stationarity).
  double structural_max() const { return std::max({cross, conservation, comm_L, comm_W, gram, normality}); }
};
SynthesisReport check_hp_synthesis(const Mat& Pi, const HpSynthesis& s, const Mat& H, const Mat& X);

struct ObstructionResult {
  double bound = 0.0;         ///< tr(X²)/√n
  double minimized = 0.0;     ///< best ‖i[H,Π] + Π² + X²‖ found by gradient descent from Π = 0
  Mat minimizer;
  int iterations = 0;
};

/// ‖i[H,Π] + Π² + X²‖_F ≥ |tr(Π² + X²)|/√n ≥ tr(X²)/√n for every Hermitian Π.
ObstructionResult stationary_riccati_obstruction(const Mat& H, const Mat& X, int max_iterations = 5000);
double stationary_riccati_residual(const Mat& H, const Mat& X, const Mat& Pi);

/// Module analogue of the three conditions:
///   ΠF + F*Π + (Φ|ΠΦ) − Π² + X²,   ΠΨ + Φ*Π + l(ΠZ)Φ*,   ΠZ + Z*Π + (Z*Π)∘Z,
/// with Ψ Ann-, Φ Cre- and Z Cons-labelled. Module norms are Frobenius over all labels.
/// Rejects labels with any index above `window`.
RiccatiResiduals check_swn_riccati_system(const Mat& Pi, const Mat& F, const ModuleOperator& Psi,
                                          const ModuleOperator& Phi, const ModuleOperator& Z, const Mat& X,
                                          int window = 2);

/// (α|β) = Σ α_n* β_n for Cre-labelled α, β.
Mat bracket(const ModuleOperator& alpha, const ModuleOperator& beta);
double module_norm(const ModuleOperator& a);

// ---------------------------------------------------------------------------
// Flow generators
// ---------------------------------------------------------------------------

/// Coefficients of dj_t(X) = j_t(dt·a + dA·b + dA†·c + dΛ·d).
struct FlowGenerator {
  FreeElement dt, dA, dAdag, dLambda;
};

struct HpFlowDerivation {
  FlowGenerator derived;  ///< from dU*·X·U + U*·X·dU + dU*·X·dU and the HP table
  FlowGenerator stated;   ///< i[H,X] − ½(L*LX + XL*L − 2L*XL), [L*,X]W, W*[X,L], W*XW − X
  bool matches = false;
  std::string report;
};

/// Symbolic expansion in `alg`; H, L, W, X are elements (use alg.one() or 0 for trivial data).
HpFlowDerivation derive_flow_hp(const FreeAlgebra& alg, const FreeElement& H, const FreeElement& L,
                                const FreeElement& W, const FreeElement& X);

struct SwnFlowDerivation {
  ModuleDifferential derived;  ///< from the module Itô product
  ModuleDifferential full;     ///< r(W*X)r(W)D*, l(XW)l(W*)D martingale terms
  ModuleDifferential compact;  ///< r(W*X∘W)D*, l(W*∘XW)D martingale terms
  double distance_full = 0.0;
  double distance_compact = 0.0;
  bool matches_full = false;
  bool matches_compact = false;
  std::string report;
};

/// dU = ((−½(D*|D*) + iH)dt + d𝒜(D) + d𝒜†(−r(W)D*) + dℒ(W − I))U; rejects indices above `window`.
SwnFlowDerivation derive_flow_swn(const Mat& H, const ModuleOperator& Dminus, const ModuleOperator& W,
                                  const Mat& X, int window = 2, double tol = 1e-12);

/// Componentwise ModuleDifferential helpers.
ModuleDifferential adjoint(const ModuleDifferential& x);
ModuleDifferential right_mul(const ModuleDifferential& x, const Mat& a);
ModuleDifferential operator+(const ModuleDifferential& a, const ModuleDifferential& b);

}  // namespace qsc
