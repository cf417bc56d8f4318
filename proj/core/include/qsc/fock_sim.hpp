// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
//
// Truncated-Fock and ODE-reduction simulation of quantum stochastic evolutions
//   dU = (Σ E_ij dΛ_ij + Σ F_i dA_i + Σ G_i dA†_i + K dt) U.
// Matrix elements between exponential vectors reduce to system-space ODEs;
// the step-tensor path is a direct discretization kept as an oracle.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qsc/ito_algebra.hpp"
#include "qsc/linalg.hpp"

namespace qsc {

struct TruncationConfig {
  int levels = 2;          ///< d, levels per fresh mode
  double dt = 1e-3;        ///< step of every fixed-step integrator
  double horizon = 1.0;    ///< T
  int swn_modes = 1;       ///< K, multiplicity truncation for SWN
  std::size_t max_amplitudes = std::size_t{1} << 22;  ///< budget for the tensor oracle

  /// Throws InvalidArgument unless d ≥ 2, K ≥ 1, and T is an integer multiple of dt.
  void validate() const;
  int steps() const;
};

/// Single-mode coefficients: dU = (E dΛ + F dA + G dA† + K dt) U.
struct QsdeCoefficients {
  Mat E, F, G, K;
  Eigen::Index dim() const { return K.rows(); }
};

/// Multi-mode coefficients on K channels; E[i][j] multiplies dΛ_ij.
struct MultiModeQsde {
  std::vector<std::vector<Mat>> E;
  std::vector<Mat> F, G;
  Mat K;

  int modes() const { return static_cast<int>(F.size()); }
  Eigen::Index dim() const { return K.rows(); }
  static MultiModeQsde from(const QsdeCoefficients& c);
};

/// dU = −((iH + ½L*L)dt + L*W dA − L dA† + (1−W) dΛ) U.
struct HpEvolutionSpec {
  Mat H, L, W;

  HpEvolutionSpec(Mat h, Mat l, Mat w);
  QsdeCoefficients coefficients() const;
  Eigen::Index dim() const { return H.rows(); }
};

/// dU = (F U + u) dt + Ψ U dA + Φ U dA† + Z U dΛ with u = −Π U when Π is present.
struct GenericQsdeSpec {
  Mat F, Psi, Phi, Z;
  std::optional<Mat> Pi;

  GenericQsdeSpec(Mat f, Mat psi, Mat phi, Mat z, std::optional<Mat> pi = std::nullopt);
  QsdeCoefficients coefficients() const;
  Eigen::Index dim() const { return F.rows(); }
};

/// Piecewise-constant C^K-valued function on [knots.front(), knots.back()), zero elsewhere.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> knots, std::vector<Vec> values);
  static StepFunction zero(int modes = 1);
  static StepFunction constant(cplx c, double T);

  int modes() const { return modes_; }
  Vec at(double t) const;
  const std::vector<double>& knots() const { return knots_; }
  /// ⟨f, g⟩ = ∫ conj(f)·g.
  friend cplx inner(const StepFunction& f, const StepFunction& g);

 private:
  std::vector<double> knots_;
  std::vector<Vec> values_;
  int modes_ = 1;
};

struct ExpectationSeries {
  std::vector<double> times;
  std::vector<cplx> values;

  std::string to_csv() const;
};

/// ⟨u⊗ψ(f), U_t v⊗ψ(g)⟩ via the system-space ODE w' = (f̄g E + g F + f̄ G + K) w, RK4.
ExpectationSeries matrix_element_evolution(const MultiModeQsde& q, const StepFunction& f,
                                           const StepFunction& g, const Vec& u, const Vec& v,
                                           double T, double dt);
ExpectationSeries matrix_element_evolution(const QsdeCoefficients& q, const StepFunction& f,
                                           const StepFunction& g, const Vec& u, const Vec& v,
                                           double T, double dt);

/// Linear functional Y ↦ ⟨U_t ξ_f, Y U_t ξ_g⟩ represented as tr(S_t Y), sampled on the grid.
struct BilinearFlow {
  std::vector<double> times;
  std::vector<Mat> S;

  cplx expectation(std::size_t k, const Mat& Y) const { return (S[k] * Y).trace(); }
  ExpectationSeries series(const Mat& Y) const;
};

/// Integrates the dual of the Heisenberg generator of U*YU (Schrödinger picture), RK4.
BilinearFlow bilinear_flow(const MultiModeQsde& q, const StepFunction& f, const StepFunction& g,
                           const Vec& u, const Vec& v, double T, double dt);
BilinearFlow bilinear_flow(const QsdeCoefficients& q, const Vec& u, const Vec& v, double T,
                           double dt);

struct TensorRun {
  ExpectationSeries vacuum;     ///< ⟨u⊗vac, U_k v⊗vac⟩ per step
  std::vector<double> defects;  ///< ‖V_k* V_k − 1‖ on the vacuum-input sector per step
  std::size_t amplitudes = 0;   ///< peak number of stored amplitudes
};

/// Oracle: one fresh d-level mode per step, U ← (1 + contracted increments) U.
TensorRun step_tensor_evolution(const QsdeCoefficients& q, const TruncationConfig& config,
                                int n_steps_max, const Vec& u, const Vec& v);

/// Truncated ladder operators on d levels: a and a†.
Mat ladder_annihilation(int d);
/// [ΔA, ΔA†] − dt(1 − d P_top); zero up to rounding.
double ccr_truncation_defect(int d, double dt);

struct CharacteristicResult {
  cplx simulated;
  cplx closed_form;
  double relative_error() const { return std::abs(simulated - closed_form) / std::abs(closed_form); }
};

enum class NoiseKind { Brownian, Poisson };

/// ⟨ψ(0), e^{isB_t} ψ(0)⟩ or ⟨ψ(0), e^{isP_t} ψ(0)⟩ through the Poisson–Weyl differential.
CharacteristicResult characteristic_functional(NoiseKind kind, double s, double lambda, double t,
                                               const TruncationConfig& config);

/// Closed-form differential of e^{iE(t)} for E = λt + zA + z̄A† + kΛ (coefficients of U⁻¹dU).
HpDifferential weyl_increment(double lambda, cplx z, double k);
/// Σ_{n=1}^{n_max} (i dE)ⁿ/n! evaluated with the HP table.
HpDifferential weyl_series(double lambda, cplx z, double k, int n_max);

/// Vacuum ⟨j_t(X)⟩ via the Lindblad-adjoint ODE d⟨X⟩ = ⟨i[H,X] − ½(L*LX + XL*L − 2L*XL)⟩.
ExpectationSeries flow_expectation(const HpEvolutionSpec& spec, const Mat& X, const Vec& state,
                                   double T, const TruncationConfig& config);

/// max_k ‖V_k* V_k − 1‖ on the vacuum-input sector of the step-tensor evolution.
double unitarity_defect(const HpEvolutionSpec& spec, const TruncationConfig& config,
                        int n_steps_max = 12);

/// dU = ((−½(D₋*|D₋*) + iH)dt + d𝒜(D₋) + d𝒜†(−r(W)D₋*) + dℒ(W − I)) U.
struct SwnEvolutionSpec {
  Mat H;
  ModuleOperator Dminus;  ///< Ann-labelled
  ModuleOperator W;       ///< Cons-labelled

  SwnEvolutionSpec(Mat h, ModuleOperator dminus, ModuleOperator w);
  Eigen::Index dim() const { return H.rows(); }
  /// Multiplicity-K HP coefficients; rejects any index escaping the truncation.
  MultiModeQsde to_multimode(int K) const;
};

/// Vacuum ⟨j_t(X)⟩ for the SWN evolution through its multiplicity-K HP image.
ExpectationSeries swn_simulate(const SwnEvolutionSpec& spec, const Mat& X, const Vec& state,
                               const TruncationConfig& config);

}  // namespace qsc
