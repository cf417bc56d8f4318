// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "qsc/classical_control.hpp"
#include "qsc/fock_sim.hpp"
#include "qsc/ito_algebra.hpp"
#include "qsc/quantum_control.hpp"
#include "qsc/rf_riccati.hpp"

using namespace qsc;

namespace {

Mat m2(cplx a, cplx b, cplx c, cplx d) { return (Mat(2, 2) << a, b, c, d).finished(); }

RfProblem stochastic_2x2() {
  RfProblem p = RfProblem::zero(2, Direction::Backward, 1.0);
  p.F = m2(0.1, cplx(0.3, 0.1), -0.2, -0.4);
  p.G = m2(1, 0.2, 0, 0.8);
  p.w = m2(0.5, cplx(0.1, 0.2), cplx(0.1, -0.2), -0.3);
  p.z = m2(0.2, 0, 0.1, 0.3);
  p.F1 = m2(0.4, 0.1, cplx(0, 0.2), 0.3);
  p.F2 = p.F1.adjoint();
  p.Q = m2(1, 0.2, 0.2, 0.5);
  p.R = m2(1, 0, 0, 2);
  p.Q_b = m2(0.5, 0, 0, 0.3);
  return p;
}

}  // namespace

static void BM_HpTable(benchmark::State& state) {
  const std::vector<HpLabel> L = {HpLabel::dt(), HpLabel::dA(), HpLabel::dAdag(), HpLabel::dLambda()};
  for (auto _ : state)
    for (const auto& a : L)
      for (const auto& b : L) benchmark::DoNotOptimize(hp_basis_product(a, b));
}
BENCHMARK(BM_HpTable);

static void BM_SwnConsProduct(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const SwnLabel a = SwnLabel::cons(m, m, m), b = SwnLabel::cons(m, 1, m);
  for (auto _ : state) benchmark::DoNotOptimize(swn_basis_product(a, b));
}
BENCHMARK(BM_SwnConsProduct)->DenseRange(0, 3);

static void BM_RhoPlus(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rho_plus_matrix(2, 1, 2, N));
}
BENCHMARK(BM_RhoPlus)->RangeMultiplier(2)->Range(16, 128);

static void BM_WeylSeries(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(weyl_series(0.6, cplx(0.4, -0.8), 0.3, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_WeylSeries)->Arg(10)->Arg(40);

static void BM_FlowExpectation(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Mat H(n, n), L(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      H(i, j) = cplx(g(rng), g(rng));
      L(i, j) = cplx(g(rng), g(rng));
    }
  const HpEvolutionSpec spec(herm(H), 0.3 * L, Mat::Identity(n, n));
  TruncationConfig cfg;
  cfg.dt = 1e-3;
  const Vec psi = Vec::Unit(n, 0);
  for (auto _ : state) benchmark::DoNotOptimize(flow_expectation(spec, herm(H), psi, 1.0, cfg));
}
BENCHMARK(BM_FlowExpectation)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_RiccatiOde(benchmark::State& state) {
  LqProblem pr;
  pr.A = (RMat(2, 2) << 0.2, 1.0, -1.0, -0.4).finished();
  pr.Q = (RMat(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
  pr.Pi_T = RMat::Identity(2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_riccati_ode(pr, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_RiccatiOde)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_LqgEnsemble(benchmark::State& state) {
  LqProblem pr;
  pr.A = RMat::Constant(1, 1, 0.5);
  pr.Q = pr.Pi_T = RMat::Constant(1, 1, 1.0);
  pr.C = RMat::Constant(1, 1, 0.5);
  pr.H_obs = RMat::Constant(1, 1, 1.0);
  pr.obs_noise = 0.5;
  LqgOptions opt;
  opt.steps = 500;
  opt.n_paths = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lqg_simulate(pr, RVec::Ones(1), opt));
  state.SetItemsProcessed(state.iterations() * opt.n_paths);
}
BENCHMARK(BM_LqgEnsemble)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_CostQ(benchmark::State& state) {
  const Mat Pi = m2(0.5, 0, 0, 1), X = m2(0.3, 0.2, 0.2, -0.1);
  const Mat W = m2(std::exp(kI * 1.0), 0, 0, std::exp(kI * 2.0));
  const auto spec = riccati_consistent_spec(Pi, X, m2(0.2, 0.1, 0, 0.3), W, m2(0.1, 0, 0, -0.2));
  TruncationConfig cfg;
  cfg.dt = 1e-3;
  const Vec xi = (Vec(2) << 0.6, 0.8).finished();
  for (auto _ : state) benchmark::DoNotOptimize(cost_Q(spec, X, xi, cfg));
}
BENCHMARK(BM_CostQ)->Unit(benchmark::kMillisecond);

static void BM_RiccatiIteration(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RfProblem p = stochastic_2x2();
  const LevyPath path = build_levy_surrogate(LevyKind::PlanarBrownian, n, 1.0 / n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(iterate_riccati(p, path));
  state.SetComplexityN(n);
}
BENCHMARK(BM_RiccatiIteration)->Arg(250)->Arg(1000)->Arg(4000)->Complexity(benchmark::oN)->Unit(benchmark::kMillisecond);

static void BM_KernelUpdate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RfProblem p = stochastic_2x2();
  const LevyPath path = build_levy_surrogate(LevyKind::PlanarBrownian, n, 1.0 / n, 1);
  const RiccatiPath start = iterate_riccati(p, path).iterates.front();
  for (auto _ : state) benchmark::DoNotOptimize(kernel_update(p, path, start));
  state.SetComplexityN(n);
}
BENCHMARK(BM_KernelUpdate)->Arg(125)->Arg(250)->Arg(500)->Arg(1000)->Complexity(benchmark::oNSquared)->Unit(benchmark::kMillisecond);

static void BM_FeedbackOptimality(benchmark::State& state) {
  const RfProblem p = stochastic_2x2();
  OptimalityOptions o;
  o.n_paths = static_cast<int>(state.range(0));
  o.perturbations = default_perturbations(2);
  const Vec xi = (Vec(2) << 1.0, 0.5).finished();
  for (auto _ : state) benchmark::DoNotOptimize(verify_feedback_optimality(p, xi, o));
  state.SetItemsProcessed(state.iterations() * o.n_paths);
}
BENCHMARK(BM_FeedbackOptimality)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
