// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "qsc/quantum_control.hpp"

using namespace qsc;

namespace {

Mat random_complex(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

Mat random_hermitian(std::mt19937_64& rng, int n, double scale = 1.0) { return herm(random_complex(rng, n, scale)); }

Mat random_unitary(std::mt19937_64& rng, int n) { return expm(kI * random_hermitian(rng, n)); }

// V diag(d) V* for a fixed unitary V
Mat in_basis(const Mat& V, const Eigen::VectorXcd& d) { return V * d.asDiagonal() * V.adjoint(); }

Mat sigma_x() { return (Mat(2, 2) << 0, 1, 1, 0).finished(); }
Mat sigma_z() { return (Mat(2, 2) << 1, 0, 0, -1).finished(); }

TruncationConfig config(double T, double dt) {
  TruncationConfig c;
  c.horizon = T;
  c.dt = dt;
  return c;
}

}  // namespace

TEST_CASE("HP Riccati conditions") {
  std::mt19937_64 rng(5);
  const int n = 3;
  const Mat Zero = Mat::Zero(n, n), I = Mat::Identity(n, n);

  SUBCASE("trivial data") {
    const Mat F = random_complex(rng, n), Psi = random_complex(rng, n), Phi = random_complex(rng, n);
    CHECK(check_hp_riccati_system(Zero, F, Psi, Phi, Zero, Zero).max() == 0.0);
    CHECK(check_hp_riccati_system(I, Zero, Zero, Zero, Zero, I).max() == 0.0);
  }
  SUBCASE("synthesis substitution") {
    const Mat H = random_hermitian(rng, n);
    const Mat X = random_hermitian(rng, n);
    const Mat M = random_complex(rng, n);
    const Mat Pi = M * M.adjoint();
    const Mat L = std::sqrt(2.0) * psd_sqrt(Pi);
    const auto r = check_hp_riccati_system(Pi, -kI * H, -L.adjoint(), L, Zero, X);
    CHECK(std::abs(r.r1 - (kI * commutator(H, Pi) + Pi * Pi + X * X).norm()) <= 1e-10);
    CHECK(r.r2 <= 1e-10);
    CHECK(r.r3 == 0.0);
  }
  SUBCASE("consistent coefficient sets") {
    for (int trial = 0; trial < 5; ++trial) {
      const Mat V = random_unitary(rng, n);
      Eigen::VectorXcd ev(n), ph(n);
      std::uniform_real_distribution<double> u(0.2, 2.0), a(0.0, 6.0);
      for (int i = 0; i < n; ++i) {
        ev(i) = u(rng);
        ph(i) = std::exp(kI * a(rng));
      }
      const Mat Pi = in_basis(V, ev);
      const auto spec = riccati_consistent_spec(Pi, random_hermitian(rng, n), random_complex(rng, n, 0.5),
                                                in_basis(V, ph), random_hermitian(rng, n));
      CHECK(check_hp_riccati_system(Pi, spec.F, spec.Psi, spec.Phi, spec.Z, Mat::Zero(n, n)).r2 <= 1e-12);
    }
    const Mat X = random_hermitian(rng, n);
    const Mat Pi = I;
    const auto spec = riccati_consistent_spec(Pi, X, random_complex(rng, n), I, Zero);
    CHECK(check_hp_riccati_system(Pi, spec.F, spec.Psi, spec.Phi, spec.Z, X).max() <= 1e-12);
    CHECK_THROWS_AS(riccati_consistent_spec(Zero, X, I, I, Zero), InvalidArgument);
    CHECK_THROWS_AS(riccati_consistent_spec(I, X, I, 2.0 * I, Zero), InvalidArgument);
  }
}

TEST_CASE("simulated cost Q") {
  std::mt19937_64 rng(17);
  const int n = 3;
  const auto cfg = config(1.0, 1e-3);

  SUBCASE("closed forms") {
    const Mat Z = Mat::Zero(n, n), I = Mat::Identity(n, n);
    Vec xi = Vec::Zero(n);
    xi(0) = 1.0;
    CHECK(std::abs(cost_Q(GenericQsdeSpec(Z, Z, Z, Z, I), I, xi, cfg).total() - 1.0) <= 1e-10);
    const GenericQsdeSpec null(random_complex(rng, n), random_complex(rng, n), random_complex(rng, n), Z, Z);
    CHECK(std::abs(cost_Q(null, Z, xi, cfg).total()) <= 1e-14);
  }

  const Mat V = random_unitary(rng, n);
  Eigen::VectorXcd ev(n), ph(n);
  for (int i = 0; i < n; ++i) {
    ev(i) = 0.5 + 0.5 * i;
    ph(i) = std::exp(kI * (1.0 + i));
  }
  const Mat Pi = in_basis(V, ev);
  const Mat X = random_hermitian(rng, n);
  const auto spec = riccati_consistent_spec(Pi, X, random_complex(rng, n, 0.5), in_basis(V, ph),
                                            random_hermitian(rng, n));
  REQUIRE(check_hp_riccati_system(Pi, spec.F, spec.Psi, spec.Phi, spec.Z, X).max() <= 1e-9);
  Vec xi = random_complex(rng, n).col(0);
  xi.normalize();
  const double value = (xi.adjoint() * Pi * xi)(0).real();

  SUBCASE("value identity in the vacuum and on an exponential vector") {
    const double e1 = std::abs(cost_Q(spec, X, xi, cfg).total() - value);
    const double e2 = std::abs(cost_Q(spec, X, xi, config(1.0, 5e-4)).total() - value);
    CHECK(e1 <= 1e-6);
    CHECK(e2 <= e1 / 8.0);
    const StepFunction f({0.0, 0.5, 1.0}, {Vec::Constant(1, cplx(0.3, 0.1)), Vec::Constant(1, cplx(-0.2, 0.4))});
    const double scale = std::exp(inner(f, f).real());
    CHECK(std::abs(cost_Q(spec, X, xi, cfg, f).total() - scale * value) <= 1e-6);
  }
  SUBCASE("perturbed feedback costs more") {
    for (int k = 0; k < 10; ++k) {
      const Mat M = random_complex(rng, n);
      const Mat E = M * M.adjoint();
      GenericQsdeSpec other = spec;
      other.Pi = herm(Pi + 0.1 * E);
      CHECK(cost_Q(other, X, xi, cfg).total() > value + 1e-6);
    }
  }
}

TEST_CASE("HP cost functional") {
  std::mt19937_64 rng(23);
  const int n = 2;
  const Mat Z = Mat::Zero(n, n), I = Mat::Identity(n, n);
  const auto cfg = config(1.0, 1e-3);
  Vec xi(n);
  xi << cplx(0.6, 0.0), cplx(0.0, 0.8);

  SUBCASE("trivial and commuting cases") {
    CHECK(cost_J_hp(HpControlProblem(random_hermitian(rng, n), Z, xi, 1.0), Z, I, cfg).total() == 0.0);
    const Mat H = (Mat(2, 2) << 1.0, 0.0, 0.0, -0.5).finished();
    const Mat X = (Mat(2, 2) << 2.0, 0.0, 0.0, 0.7).finished();
    for (double T : {0.5, 1.0, 2.0}) {
      const double J = cost_J_hp(HpControlProblem(H, X, xi, T), Z, I, cfg).total();
      CHECK(std::abs(J - T * (X * xi).squaredNorm()) <= 1e-10);
    }
    CHECK_THROWS_AS(cost_J_hp(HpControlProblem(H, X, xi, 1.0), Z, 2.0 * I, cfg), InvalidArgument);
    CHECK_THROWS_AS(HpControlProblem(H, X, Vec::Zero(n), 1.0), InvalidArgument);
  }
  SUBCASE("agrees with the Lindblad expectation of each term") {
    const Mat H = random_hermitian(rng, n), X = random_hermitian(rng, n);
    const Mat L = random_complex(rng, n, 0.5), W = random_unitary(rng, n);
    const Mat LL = L.adjoint() * L;
    const HpEvolutionSpec hp(H, L, W);
    const auto run = flow_expectation(hp, X * X + 0.25 * LL * LL, xi, 1.0, cfg);
    const auto term = flow_expectation(hp, 0.5 * LL, xi, 1.0, cfg);
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < run.values.size(); ++k)
      integral += 0.5 * cfg.dt * (run.values[k] + run.values[k + 1]).real();
    const auto J = cost_J_hp(HpControlProblem(H, X, xi, 1.0), L, W, cfg);
    CHECK(std::abs(J.running - integral) <= 1e-6);
    CHECK(std::abs(J.terminal - term.values.back().real()) <= 1e-10);
  }
  SUBCASE("synthesized coefficients: cost equals the value plus the residual integral") {
    // J = <xi,Pi xi> + ∫ <xi, j_t(R) xi>, R = i[H,Pi] + Pi^2 + X^2
    const Mat V = random_unitary(rng, n);
    const Mat Pi = in_basis(V, (Eigen::VectorXcd(2) << 0.3, 0.8).finished());
    const Mat W1 = in_basis(V, (Eigen::VectorXcd(2) << std::exp(kI * 0.4), std::exp(kI * 2.0)).finished());
    const Mat W2 = in_basis(V, (Eigen::VectorXcd(2) << std::exp(kI * -1.0), 1.0).finished());
    const Mat H = random_hermitian(rng, n), X = random_hermitian(rng, n, 0.5);
    const auto s = synthesize_hp(Pi, W1, W2);
    const StepFunction f = StepFunction::constant(cplx(0.2, -0.3), 1.0);
    const HpControlProblem problem(H, X, xi, 1.0, f);
    const double J = cost_J_hp(problem, s.L, s.W, cfg).total();
    const Mat R = kI * commutator(H, Pi) + Pi * Pi + X * X;
    const auto flow = bilinear_flow(MultiModeQsde::from(HpEvolutionSpec(H, s.L, s.W).coefficients()), f, f, xi, xi,
                                    1.0, cfg.dt);
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < flow.S.size(); ++k)
      integral += 0.5 * cfg.dt * (flow.expectation(k, R) + flow.expectation(k + 1, R)).real();
    const double value = std::exp(inner(f, f).real()) * (xi.adjoint() * Pi * xi)(0).real();
    CHECK(std::abs(J - value - integral) <= 1e-6);
  }
  SUBCASE("null sector: X = 0 and Pi = 0 give zero cost for every horizon") {
    for (double T : {0.25, 1.0, 3.0}) {
      const auto s = synthesize_hp(Z, I, I);
      CHECK(cost_J_hp(HpControlProblem(random_hermitian(rng, n), Z, xi, T), s.L, s.W, cfg).total() == 0.0);
    }
  }
}

TEST_CASE("HP synthesis") {
  std::mt19937_64 rng(29);
  const Mat I2 = Mat::Identity(2, 2);
  auto s = synthesize_hp(I2, I2, I2);
  CHECK((s.L - std::sqrt(2.0) * I2).norm() <= 1e-15);
  CHECK((s.W - I2).norm() == 0.0);

  const Mat Pi = (Mat(2, 2) << 1, 0, 0, 4).finished();
  s = synthesize_hp(Pi, sigma_z(), I2);
  CHECK((s.L - (Mat(2, 2) << std::sqrt(2.0), 0, 0, -2.0 * std::sqrt(2.0)).finished()).norm() <= 1e-14);
  CHECK((s.L.adjoint() * s.L - (Mat(2, 2) << 2, 0, 0, 8).finished()).norm() <= 1e-13);
  CHECK_THROWS_AS(synthesize_hp(Pi, sigma_x(), I2), InvalidArgument);

  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    const Mat V = random_unitary(rng, n);
    Eigen::VectorXcd ev(n), p1(n), p2(n);
    std::uniform_real_distribution<double> u(0.0, 3.0), a(0.0, 6.2);
    for (int i = 0; i < n; ++i) {
      ev(i) = u(rng);
      p1(i) = std::exp(kI * a(rng));
      p2(i) = std::exp(kI * a(rng));
    }
    const Mat P = in_basis(V, ev);
    const auto out = synthesize_hp(P, in_basis(V, p1), in_basis(V, p2));
    const auto rep = check_hp_synthesis(P, out, random_hermitian(rng, n), random_hermitian(rng, n));
    CHECK(rep.structural_max() <= 1e-10);
  }
}

TEST_CASE("finite-dimensional obstruction") {
  std::mt19937_64 rng(31);
  const Mat Z = Mat::Zero(2, 2), I = Mat::Identity(2, 2);
  auto r = stationary_riccati_obstruction(sigma_x(), Z);
  CHECK(r.bound == 0.0);
  CHECK(r.minimized == 0.0);
  CHECK(r.minimizer.norm() == 0.0);

  r = stationary_riccati_obstruction(Z, I);
  CHECK(std::abs(r.bound - std::sqrt(2.0)) <= 1e-15);
  CHECK(r.minimized >= std::sqrt(2.0) - 1e-12);

  r = stationary_riccati_obstruction(sigma_x(), sigma_z());
  CHECK(r.minimized >= std::sqrt(2.0) - 1e-12);

  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 4;
    const Mat H = random_hermitian(rng, n), X = random_hermitian(rng, n);
    const Mat P = random_hermitian(rng, n, 2.0);
    const double bound = (X * X).trace().real() / std::sqrt(static_cast<double>(n));
    CHECK(stationary_riccati_residual(H, X, P) >= bound);
  }
  const Mat H = random_hermitian(rng, 3), X = random_hermitian(rng, 3);
  r = stationary_riccati_obstruction(H, X, 2000);
  CHECK(r.minimized >= r.bound);
  CHECK(r.minimized <= stationary_riccati_residual(H, X, Mat::Zero(3, 3)));
}

TEST_CASE("SWN Riccati conditions") {
  std::mt19937_64 rng(37);
  const int n = 2;
  const Mat Zero = Mat::Zero(n, n);

  SUBCASE("zero data") {
    const auto r = check_swn_riccati_system(Zero, Zero, ModuleOperator(n), ModuleOperator(n), ModuleOperator(n), Zero);
    CHECK(r.max() == 0.0);
  }

  // commuting families: diagonal D_{-,n} and a diagonal unitary W coefficient
  std::uniform_real_distribution<double> u(-1.0, 1.0), a(0.0, 6.2);
  ModuleOperator D(n);
  for (int m = 0; m < 2; ++m) {
    Mat d = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) d(i, i) = cplx(u(rng), u(rng));
    D.add(SwnLabel::ann(m), d);
  }
  Mat w = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) w(i, i) = std::exp(kI * a(rng));
  const ModuleOperator W = ModuleOperator::single(w, SwnLabel::cons(0, 0, 0));
  const ModuleOperator I = ModuleOperator::identity(n);
  const Mat Pi = 0.5 * pairing(D, D.adjoint());
  const Mat H = random_hermitian(rng, n), X = random_hermitian(rng, n);
  const ModuleOperator rWDs = r_map(W, D.adjoint());
  const ModuleOperator Phi = cplx(-1.0) * rWDs;

  SUBCASE("optimal substitution cancels the martingale conditions") {
    const auto r = check_swn_riccati_system(Pi, kI * H, D, Phi, W - I, X);
    CHECK(r.r2 <= 1e-12);
    CHECK(r.r3 <= 1e-12);
    const Mat expected = kI * commutator(Pi, H) + bracket(rWDs, rWDs.left_mul(Pi)) - Pi * Pi + X * X;
    CHECK(std::abs(r.r1 - expected.norm()) <= 1e-12);
    CHECK((bracket(rWDs, rWDs) - pairing(D, D.adjoint())).norm() <= 1e-12);
  }
  SUBCASE("middle condition matches the specialized form") {
    // Pi D - l(W*)D Pi - l(Pi(W - I)) l(W*)D, evaluated on non-commuting data
    ModuleOperator Dg(n);
    Dg.add(SwnLabel::ann(0), random_complex(rng, n));
    Dg.add(SwnLabel::ann(1), random_complex(rng, n));
    ModuleOperator Wg(n);
    Wg.add(SwnLabel::cons(0, 0, 0), random_unitary(rng, n));
    Wg.add(SwnLabel::cons(0, 1, 0), random_complex(rng, n, 0.1));
    const Mat P = random_hermitian(rng, n);
    const ModuleOperator lWD = l_map(Wg.adjoint(), Dg);
    const ModuleOperator special = Dg.left_mul(P) - lWD.right_mul(P) - l_map((Wg - I).left_mul(P), lWD);
    const auto r = check_swn_riccati_system(P, Zero, Dg, cplx(-1.0) * r_map(Wg, Dg.adjoint()), Wg - I, Zero);
    CHECK(std::abs(r.r2 - module_norm(special)) <= 1e-12);
    CHECK(r.r2 > 1e-3);
  }
  SUBCASE("rejections") {
    ModuleOperator far(n);
    far.add(SwnLabel::ann(3), Mat::Identity(n, n));
    CHECK_THROWS_AS(check_swn_riccati_system(Pi, Zero, far, Phi, W - I, X), InvalidArgument);
    CHECK_THROWS_AS(check_swn_riccati_system(Pi, Zero, Phi, Phi, W - I, X), InvalidArgument);
  }
}

TEST_CASE("free *-algebra") {
  FreeAlgebra alg;
  alg.hermitian("X");
  alg.general("L");
  alg.unitary("W");
  const auto X = alg.gen("X"), L = alg.gen("L"), W = alg.gen("W");
  CHECK(alg.normal_form(alg.adjoint(W) * W) == alg.one());
  CHECK(alg.normal_form(W * X * alg.adjoint(W) * W * alg.adjoint(W)) == W * X * alg.adjoint(W));
  CHECK_FALSE(alg.equal(alg.adjoint(L) * L, alg.one()));
  CHECK(alg.adjoint(cplx(0, 2) * L * X) == cplx(0, -2) * X * alg.gen("L*"));
  CHECK(alg.str(W * alg.adjoint(W) - alg.one()) == "0");
  CHECK(alg.str(L * X) == "(1+0i)L.X");
  CHECK_THROWS_AS(alg.gen("Y"), InvalidArgument);
  CHECK_THROWS_AS(alg.hermitian("X"), InvalidArgument);
}

TEST_CASE("HP flow generator") {
  FreeAlgebra alg;
  alg.hermitian("H");
  alg.hermitian("X");
  alg.general("L");
  alg.unitary("W");
  const auto H = alg.gen("H"), X = alg.gen("X"), L = alg.gen("L"), W = alg.gen("W");

  SUBCASE("general symbols") {
    const auto d = derive_flow_hp(alg, H, L, W, X);
    CHECK(d.matches);
    CHECK(d.report.find("MISMATCH") == std::string::npos);
    CHECK(alg.str(d.derived.dA) == "(-1+0i)X.L*.W + (1+0i)L*.X.W");
    CHECK(alg.str(d.derived.dLambda) == "(-1+0i)X + (1+0i)W*.X.W");
  }
  SUBCASE("unitality") {
    const auto d = derive_flow_hp(alg, H, L, W, alg.one());
    CHECK(d.matches);
    for (const auto* e : {&d.derived.dt, &d.derived.dA, &d.derived.dAdag, &d.derived.dLambda}) CHECK(e->is_zero());
  }
  SUBCASE("Heisenberg case") {
    const auto d = derive_flow_hp(alg, H, FreeElement(), alg.one(), X);
    CHECK(d.matches);
    CHECK(alg.equal(d.derived.dt, kI * (H * X - X * H)));
    CHECK(d.derived.dA.is_zero());
    CHECK(d.derived.dAdag.is_zero());
    CHECK(d.derived.dLambda.is_zero());
  }
  SUBCASE("without the unitary rule the conservation term survives") {
    FreeAlgebra plain;
    plain.hermitian("H");
    plain.hermitian("X");
    plain.general("L");
    plain.general("W");
    const auto d = derive_flow_hp(plain, plain.gen("H"), plain.gen("L"), plain.gen("W"), plain.one());
    CHECK(d.matches);
    CHECK_FALSE(d.derived.dLambda.is_zero());
  }
}

TEST_CASE("SWN flow generator") {
  std::mt19937_64 rng(41);
  SUBCASE("unitality and the Heisenberg case") {
    const int n = 2;
    const Mat H = random_hermitian(rng, n), X = random_hermitian(rng, n);
    ModuleOperator D(n);
    D.add(SwnLabel::ann(0), random_complex(rng, n));
    D.add(SwnLabel::ann(2), random_complex(rng, n));
    ModuleOperator W = ModuleOperator::single(random_unitary(rng, n), SwnLabel::cons(0, 0, 0));
    auto d = derive_flow_swn(H, D, W, Mat::Identity(n, n));
    CHECK(d.derived.dt.norm() <= 1e-12);
    CHECK(module_norm(d.derived.ann) <= 1e-12);
    CHECK(module_norm(d.derived.cre) <= 1e-12);
    CHECK(module_norm(d.derived.cons.pruned(1e-14)) <= 1e-12);

    d = derive_flow_swn(H, ModuleOperator(n), ModuleOperator::identity(n), X);
    CHECK((d.derived.dt - kI * commutator(X, H)).norm() <= 1e-13);
    CHECK(module_norm(d.derived.ann) + module_norm(d.derived.cre) + module_norm(d.derived.cons) <= 1e-13);
    CHECK(d.matches_full);
  }
  SUBCASE("single mode with W = I") {
    const Mat h = Mat::Constant(1, 1, 0.7), x = Mat::Constant(1, 1, -1.3);
    const Mat dm = Mat::Constant(1, 1, cplx(0.4, -0.9));
    const ModuleOperator D = ModuleOperator::single(dm, SwnLabel::ann(0));
    const auto d = derive_flow_swn(h, D, ModuleOperator::identity(1), x);
    const ModuleOperator Ds = D.adjoint();
    const Mat P = pairing(D, Ds);
    const Mat expected = kI * commutator(x, h) - 0.5 * (P * x + x * P) + bracket(Ds, Ds.left_mul(x));
    CHECK((d.derived.dt - expected).norm() <= 1e-14);
    CHECK(d.matches_full);
  }
  SUBCASE("general labels: both stated forms are compared") {
    const int n = 2;
    const Mat H = random_hermitian(rng, n), X = random_hermitian(rng, n);
    ModuleOperator D(n);
    D.add(SwnLabel::ann(0), random_complex(rng, n));
    D.add(SwnLabel::ann(1), random_complex(rng, n));
    ModuleOperator W(n);
    W.add(SwnLabel::cons(0, 0, 0), random_complex(rng, n));
    W.add(SwnLabel::cons(1, 0, 0), random_complex(rng, n, 0.3));
    W.add(SwnLabel::cons(0, 1, 1), random_complex(rng, n, 0.3));
    const auto d = derive_flow_swn(H, D, W, X, 2, 1e-9);
    CHECK(d.matches_full);
    CHECK(d.matches_compact);
    CHECK(d.report.find("full form") != std::string::npos);
    CHECK(d.report.find("compact form") != std::string::npos);
  }
  SUBCASE("index window") {
    ModuleOperator D = ModuleOperator::single(Mat::Identity(1, 1), SwnLabel::ann(3));
    CHECK_THROWS_AS(derive_flow_swn(Mat::Zero(1, 1), D, ModuleOperator::identity(1), Mat::Zero(1, 1)), InvalidArgument);
  }
}
