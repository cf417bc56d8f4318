// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "qsc/classical_control.hpp"
#include "qsc/rf_riccati.hpp"

using namespace qsc;

namespace {

Mat m2(cplx a, cplx b, cplx c, cplx d) { return (Mat(2, 2) << a, b, c, d).finished(); }
Mat m1(cplx a) { return Mat::Constant(1, 1, a); }

// Generic 2×2 data with F₂ = F₁*, w = w*.
RfProblem generic(Direction d) {
  RfProblem p = RfProblem::zero(2, d, 1.0);
  p.F = m2(0.1, cplx(0.3, 0.1), -0.2, -0.4);
  p.G = m2(1, 0.2, 0, 0.8);
  p.L = m2(0.1, 0, 0.05, -0.1);
  p.w = m2(0.5, cplx(0.1, 0.2), cplx(0.1, -0.2), -0.3);
  p.z = m2(0.2, 0, 0.1, 0.3);
  p.F1 = m2(0.4, 0.1, cplx(0, 0.2), 0.3);
  p.F2 = p.F1.adjoint();
  p.Q = m2(1, 0.2, 0.2, 0.5);
  p.R = m2(1, 0, 0, 2);
  p.m = m2(0.1, 0, 0, 0.2);
  p.eta = m2(0.05, 0, 0, 0.1);
  p.Q_b = m2(0.5, 0, 0, 0.3);
  p.m_b = m2(0.1, 0.1, 0, 0);
  return p;
}

// Real scalar with w = 0, z = 1, F₁ = F₂ = c/√2: dx = (ax + u)dt + c dB.
RfProblem classical_scalar(Direction d, double a, double q, double qb, double c, double x0, double T = 1.0) {
  RfProblem p = RfProblem::zero(1, d, T);
  p.F = m1(a);
  p.G = m1(1.0);
  p.z = m1(1.0);
  p.F1 = p.F2 = m1(c / std::sqrt(2.0));
  p.Q = m1(q);
  p.Q_b = m1(qb);
  p.C = m1(x0);
  return p;
}

LevyPath brownian(int n, double T, std::uint64_t seed, std::uint64_t idx = 0) {
  return build_levy_surrogate(LevyKind::PlanarBrownian, n, T / n, seed, idx);
}

double sup_diff(const RiccatiPath& a, const RiccatiPath& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.Pi.size(); ++k) m = std::max(m, (a.Pi[k] - b.Pi[k]).norm());
  return m;
}

}  // namespace

TEST_CASE("Levy surrogate tables") {
  SUBCASE("sample quadratic variation over 1e4 paths") {
    const int paths = 10000;
    std::vector<double> qv11(paths), qv21(paths);
    for (int p = 0; p < paths; ++p) {
      const Mat qv = quadratic_variation(brownian(50, 1.0, 17, p));
      qv11[p] = qv(0, 0).real();
      qv21[p] = qv(1, 0).real();
    }
    auto stats = [](const std::vector<double>& v) {
      double m = 0.0, s = 0.0;
      for (double x : v) m += x;
      m /= v.size();
      for (double x : v) s += (x - m) * (x - m);
      return std::pair{m, std::sqrt(s / (v.size() - 1) / v.size())};
    };
    const auto [mu11, se11] = stats(qv11);
    const auto [mu21, se21] = stats(qv21);
    CHECK(std::abs(mu11 - 1.0) <= 3 * se11);
    CHECK(std::abs(mu21) <= 3 * se21);
  }
  SUBCASE("pathwise conjugate pairing and positivity") {
    const LevyPath p = brownian(20, 1.0, 3);
    for (int k = 0; k < p.n_steps; ++k) CHECK(p.dM2[k] == std::conj(p.dM1[k]));
    CHECK(p.sigma == Mat::Identity(2, 2));
    CHECK(levy_positivity(p.sigma) == 2.0);
  }
  SUBCASE("Fock vacuum table") {
    const LevyPath f = build_levy_surrogate(LevyKind::TruncatedFockVacuum, 4, 0.25, 1);
    const Mat qv = quadratic_variation(f);
    CHECK(std::abs(qv(0, 0) - 1.0) <= 1e-14);
    CHECK(std::abs(qv(0, 1)) + std::abs(qv(1, 0)) + std::abs(qv(1, 1)) == 0.0);
    CHECK(f.sigma(0, 0) == 1.0);
    CHECK(levy_positivity(f.sigma) >= 0.0);
  }
  SUBCASE("coarsening keeps the horizon and sums increments") {
    const LevyPath p = brownian(8, 1.0, 5);
    const LevyPath c = coarsen(p);
    CHECK(c.n_steps == 4);
    CHECK(c.horizon() == doctest::Approx(1.0));
    CHECK(c.dM1[1] == p.dM1[2] + p.dM1[3]);
    CHECK_THROWS_AS(coarsen(brownian(5, 1.0, 5)), InvalidArgument);
  }
}

TEST_CASE("RfProblem validation") {
  RfProblem p = generic(Direction::Backward);
  CHECK_NOTHROW(p.validate());
  RfProblem bad = p;
  bad.R = m2(1, 0, 0, -1);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = p;
  bad.F2 = p.F1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = p;
  bad.w(0, 1) = 3.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = p;
  bad.Q = m2(1, 0, 0, -0.1);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("Riccati iteration") {
  SUBCASE("zero fixed point") {
    const RfProblem p = RfProblem::zero(2);
    const auto it = iterate_riccati(p, brownian(100, 1.0, 1));
    CHECK(it.converged);
    for (const auto& P : it.iterates)
      for (const Mat& M : P.Pi) CHECK(M.norm() == 0.0);
  }
  SUBCASE("noise-free scalar matches the classical Riccati ODE") {
    // Π(0) = q0 forward in t is the terminal problem run in s = T − t.
    const RfProblem p = classical_scalar(Direction::Backward, 0.4, 1.0, 0.2, 0.0, 1.0);
    const int n = 1000;
    const auto it = iterate_riccati(p, brownian(n, 1.0, 2));
    REQUIRE(it.converged);
    LqProblem lq;
    lq.A = RMat::Constant(1, 1, 0.4);
    lq.Q = RMat::Constant(1, 1, 1.0);
    lq.Pi_T = RMat::Constant(1, 1, 0.2);
    const RiccatiSolution ref = solve_riccati_ode(lq, n);
    double err = 0.0;
    for (int k = 0; k <= n; ++k) err = std::max(err, std::abs(it.limit().Pi[k](0, 0).real() - ref.Pi[n - k](0, 0)));
    CHECK(err <= 1e-6);

    RfProblem fwd = p;
    fwd.direction = Direction::Forward;
    const auto itf = iterate_riccati(fwd, brownian(n, 1.0, 2));
    err = 0.0;
    for (int k = 0; k <= n; ++k) err = std::max(err, std::abs(itf.limit().Pi[k](0, 0).real() - ref.Pi[k](0, 0)));
    CHECK(err <= 1e-6);
  }
  SUBCASE("generic 2x2 paths are monotone, positive and Hermitian") {
    for (auto d : {Direction::Backward, Direction::Forward}) {
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto it = iterate_riccati(generic(d), brownian(1000, 1.0, seed));
        CHECK(it.converged);
        CHECK(it.updates() <= 30);
        CHECK(it.monotonicity_margin >= -1e-8);
        CHECK(it.psd_margin >= -1e-8);
        CHECK(it.hermiticity_defect <= 1e-12);
      }
    }
  }
  SUBCASE("non-convergence is flagged, not thrown") {
    RiccatiOptions o;
    o.n_max = 1;
    const auto it = iterate_riccati(generic(Direction::Backward), brownian(200, 1.0, 4), o);
    CHECK_FALSE(it.converged);
    CHECK(it.updates() == 1);
  }
  SUBCASE("uniqueness probe from a larger start") {
    const RfProblem p = generic(Direction::Backward);
    const LevyPath path = brownian(1000, 1.0, 9);
    RiccatiOptions o;
    const auto a = iterate_riccati(p, path, o);
    o.start = Mat(p.Q_b + Mat::Identity(2, 2));
    const auto b = iterate_riccati(p, path, o);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(b.monotonicity_margin >= -1e-8);
    CHECK(sup_diff(a.limit(), b.limit()) <= 10 * o.tol);
  }
  SUBCASE("literal Euler converges to the same limit up to O(dt)") {
    const RfProblem p = generic(Direction::Backward);
    const LevyPath path = brownian(1000, 1.0, 6);
    RiccatiOptions o;
    o.scheme = RiccatiScheme::LiteralEuler;
    const auto lit = iterate_riccati(p, path, o);
    const auto opt = iterate_riccati(p, path);
    CHECK(lit.converged);
    CHECK(sup_diff(lit.limit(), opt.limit()) <= 10 * path.dt);
  }
  SUBCASE("the Fock kind is rejected") {
    const LevyPath f = build_levy_surrogate(LevyKind::TruncatedFockVacuum, 10, 0.1, 1);
    CHECK_THROWS_AS(iterate_riccati(generic(Direction::Backward), f), InvalidArgument);
  }
}

TEST_CASE("Triangular kernel update") {
  const RfProblem p = generic(Direction::Backward);
  const LevyPath path = brownian(200, 1.0, 12);
  for (auto scheme : {RiccatiScheme::DiscreteOptimal, RiccatiScheme::LiteralEuler}) {
    RiccatiOptions o;
    o.scheme = scheme;
    o.n_max = 3;
    const auto it = iterate_riccati(p, path, o);
    for (int n = 0; n + 1 < static_cast<int>(it.iterates.size()); ++n) {
      const RiccatiPath k = kernel_update(p, path, it.iterates[n], scheme);
      CHECK(sup_diff(k, it.iterates[n + 1]) <= 1e-10);
      CHECK(k.iteration == it.iterates[n + 1].iteration);
    }
  }
  const LevyPath big = brownian(2001, 1.0, 1);
  CHECK_THROWS_AS(kernel_update(p, big, RiccatiPath{std::vector<Mat>(2002, p.Q_b), big.dt, 1}), ResourceLimit);
  const RfProblem five = RfProblem::zero(5);
  CHECK_THROWS_AS(kernel_update(five, path, RiccatiPath{std::vector<Mat>(201, Mat::Zero(5, 5)), path.dt, 1}),
                  ResourceLimit);
  CHECK_THROWS_AS(kernel_update(generic(Direction::Forward), path, RiccatiPath{std::vector<Mat>(201, p.Q_b), path.dt, 1}),
                  InvalidArgument);
}

TEST_CASE("Integral residual") {
  SUBCASE("zero data") {
    const RfProblem p = RfProblem::zero(2);
    const LevyPath path = brownian(100, 1.0, 1);
    CHECK(residual_integral(p, iterate_riccati(p, path).limit(), path) == 0.0);
  }
  SUBCASE("converged iterate is within budget, in both directions") {
    for (auto d : {Direction::Backward, Direction::Forward}) {
      const RfProblem p = generic(d);
      const LevyPath path = brownian(1000, 1.0, 21);
      const auto it = iterate_riccati(p, path);
      const double res = residual_integral(p, it.limit(), path);
      CHECK(res <= residual_budget(p, path, 1e-6));
      CHECK(res <= 1e-6);  // second order in dt for the exact-drift step
    }
  }
  SUBCASE("perturbation by 0.1 I is detected") {
    const RfProblem p = generic(Direction::Backward);
    const LevyPath path = brownian(1000, 1.0, 22);
    RiccatiPath P = iterate_riccati(p, path).limit();
    for (Mat& M : P.Pi) M += 0.1 * Mat::Identity(2, 2);
    CHECK(residual_integral(p, P, path) >= 0.05);
  }
}

TEST_CASE("Affine term r") {
  SUBCASE("homogeneous data gives r = 0") {
    RfProblem p = generic(Direction::Backward);
    p.m = p.eta = p.L = p.z = p.m_b = Mat::Zero(2, 2);
    const LevyPath path = brownian(500, 1.0, 2);
    for (const Mat& r : solve_r(p, iterate_riccati(p, path).limit(), path)) CHECK(r.norm() == 0.0);
  }
  SUBCASE("Pi = 0, noise-free scalar against the linear ODE") {
    const double a = -0.7, m = 0.3, mb = 0.5;
    const int n = 10000;
    const LevyPath path = brownian(n, 1.0, 3);
    for (auto d : {Direction::Backward, Direction::Forward}) {
      RfProblem p = RfProblem::zero(1, d);
      p.F = m1(a);
      p.m = m1(m);
      p.m_b = m1(mb);
      const auto Pi = iterate_riccati(p, path).limit();
      const auto r = solve_r(p, Pi, path);
      // r' = ±(a r + m) from the boundary value mb over the whole horizon
      const double exact = std::exp(a) * (mb + m / a) - m / a;
      const double got = (d == Direction::Backward ? r.back() : r.front())(0, 0).real();
      CHECK(std::abs(got - exact) <= 1e-4);
    }
  }
  SUBCASE("Richardson: halving dt halves the error (noise-free full data)") {
    for (auto d : {Direction::Backward, Direction::Forward}) {
      RfProblem p = generic(d);
      p.F1 = p.F2 = Mat::Zero(2, 2);
      std::vector<Mat> ends;
      for (int n : {1000, 2000, 4000, 8000}) {
        const LevyPath path = brownian(n, 1.0, 4);
        const auto r = solve_r(p, iterate_riccati(p, path).limit(), path);
        ends.push_back(d == Direction::Backward ? r.back() : r.front());
      }
      for (int i = 0; i + 2 < 4; ++i) {
        const double ratio = (ends[i + 1] - ends[i]).norm() / (ends[i + 2] - ends[i + 1]).norm();
        CHECK(ratio == doctest::Approx(2.0).epsilon(0.05));
      }
    }
  }
  SUBCASE("noisy full data: the mean defect against the fine grid shrinks") {
    const RfProblem p = generic(Direction::Backward);
    double d1 = 0.0, d3 = 0.0;
    for (std::uint64_t idx = 0; idx < 20; ++idx) {
      const LevyPath fine = brownian(2048, 1.0, 3, idx);
      const LevyPath c1 = coarsen(fine), c2 = coarsen(c1), c3 = coarsen(c2);
      auto end = [&](const LevyPath& q) { return Mat(solve_r(p, iterate_riccati(p, q).limit(), q).back()); };
      const Mat ref = end(fine);
      d1 += (end(c1) - ref).norm();
      d3 += (end(c3) - ref).norm();
    }
    CHECK(d1 < d3);
  }
}

TEST_CASE("State simulation") {
  SUBCASE("all coefficients zero keeps X = C") {
    for (auto d : {Direction::Backward, Direction::Forward}) {
      RfProblem p = RfProblem::zero(2, d);
      p.C = m2(1, 2, 3, 4);
      const LevyPath path = brownian(50, 1.0, 1);
      const StatePath s = simulate_state(p, AffineControl::zero(2, 50), path);
      for (const Mat& X : s.X) CHECK((X - p.C).norm() == 0.0);
    }
  }
  SUBCASE("deterministic linear flow") {
    const int n = 10000;
    const LevyPath path = brownian(n, 1.0, 1);
    for (auto d : {Direction::Backward, Direction::Forward}) {
      RfProblem p = RfProblem::zero(2, d);
      p.F = m2(0.2, cplx(0.5, 0.1), -0.3, -0.1);
      p.C = m2(1, 0.5, 0, 1);
      const StatePath s = simulate_state(p, AffineControl::zero(2, n), path);
      if (d == Direction::Forward) {
        CHECK((s.X.back() - expm(p.F) * p.C).norm() <= 1e-4);
      } else {
        CHECK((s.X.front() - expm(p.F) * p.C).norm() <= 1e-4);  // dX = −FX dt from X(T) = C
      }
    }
  }
  SUBCASE("classical mutual oracle on shared paths") {
    const double a = 0.3, c = 0.6, x0 = 1.2;
    const int n = 500;
    const RfProblem p = classical_scalar(Direction::Forward, a, 1.0, 0.4, c, x0);
    LqProblem lq;
    lq.A = RMat::Constant(1, 1, a);
    lq.Q = RMat::Constant(1, 1, 1.0);
    lq.Pi_T = RMat::Constant(1, 1, 0.4);
    lq.C = RMat::Constant(1, 1, c);
    AffineControl u = AffineControl::zero(1, n);
    for (int k = 0; k < n; ++k) {
      u.gain[k] = m1(-0.7 - 0.1 * std::sin(k * 0.01));
      u.offset[k] = m1(0.2);
    }
    const Vec xi = Vec::Ones(1);
    for (std::uint64_t idx = 0; idx < 5; ++idx) {
      const LevyPath path = brownian(n, 1.0, 31, idx);
      std::vector<RVec> dB(n, RVec(1));
      for (int k = 0; k < n; ++k) dB[k](0) = std::sqrt(2.0) * path.dM1[k].real();
      const SdePath ref = simulate_sde(lq, RVec::Constant(1, x0), path.dt, dB, [&](int k, const RVec& x) {
        return RVec::Constant(1, u.gain[k](0, 0).real() * x(0) + 0.2);
      });
      const StatePath s = simulate_state(p, u, path);
      double err = 0.0;
      for (int k = 0; k <= n; ++k) err = std::max(err, std::abs(s.X[k](0, 0) - ref.x[k](0)));
      CHECK(err <= 1e-10);
      CHECK(std::abs(path_cost(p, s, xi, path.dt) - ref.cost) <= 1e-10);
    }
  }
  SUBCASE("Fock paths are rejected") {
    const LevyPath f = build_levy_surrogate(LevyKind::TruncatedFockVacuum, 10, 0.1, 1);
    CHECK_THROWS_AS(simulate_state(generic(Direction::Forward), AffineControl::zero(2, 10), f), InvalidArgument);
  }
}

TEST_CASE("Cost functional") {
  const int n = 100;
  std::vector<LevyPath> paths;
  for (std::uint64_t i = 0; i < 4; ++i) paths.push_back(brownian(n, 1.0, 8, i));
  const Vec xi = (Vec(2) << 1.0, cplx(0.0, 0.5)).finished();
  const ControlRule none = [&](const LevyPath&) { return AffineControl::zero(2, n); };
  SUBCASE("zero weights with u = 0") {
    RfProblem p = generic(Direction::Forward);
    p.Q = p.m = p.eta = p.Q_b = p.m_b = Mat::Zero(2, 2);
    const CostEstimate c = cost_tilde(p, none, xi, paths);
    CHECK(c.mean == 0.0);
    CHECK(c.std_error == 0.0);
  }
  SUBCASE("X = 0 path with m = 0") {
    RfProblem p = generic(Direction::Forward);
    p.C = p.L = p.z = p.m = Mat::Zero(2, 2);
    CHECK(cost_tilde(p, none, xi, paths).mean == 0.0);
  }
  SUBCASE("classical ensemble mean") {
    const RfProblem p = classical_scalar(Direction::Forward, 0.3, 1.0, 0.4, 0.6, 1.2);
    LqProblem lq;
    lq.A = RMat::Constant(1, 1, 0.3);
    lq.Q = RMat::Constant(1, 1, 1.0);
    lq.Pi_T = RMat::Constant(1, 1, 0.4);
    lq.C = RMat::Constant(1, 1, 0.6);
    const ControlRule rule = [&](const LevyPath&) {
      AffineControl u = AffineControl::zero(1, n);
      for (auto& g : u.gain) g = m1(-0.5);
      return u;
    };
    double ref = 0.0;
    for (const auto& path : paths) {
      std::vector<RVec> dB(n, RVec(1));
      for (int k = 0; k < n; ++k) dB[k](0) = std::sqrt(2.0) * path.dM1[k].real();
      ref += simulate_sde(lq, RVec::Constant(1, 1.2), path.dt, dB, [](int, const RVec& x) { return RVec(-0.5 * x); })
                 .cost;
    }
    CHECK(std::abs(cost_tilde(p, rule, Vec::Ones(1), paths).mean - ref / 4) <= 1e-10);
  }
  CHECK_THROWS_AS(cost_tilde(generic(Direction::Forward), none, Vec::Zero(2), paths), InvalidArgument);
}

TEST_CASE("Feedback law") {
  const RfProblem p = generic(Direction::Forward);
  const Mat X = m2(1, 2, cplx(0, 1), 0.5);
  const Mat Z = Mat::Zero(2, 2);
  SUBCASE("zero data") {
    RfProblem q = p;
    q.eta = Z;
    CHECK(feedback_control(q, Z, Z, X).norm() == 0.0);
  }
  SUBCASE("scalar G = R = 1 is the LQR law") {
    const RfProblem q = classical_scalar(Direction::Forward, 0.1, 1.0, 0.0, 0.0, 1.0);
    CHECK(std::abs(feedback_control(q, m1(0.8), m1(0.0), m1(2.0))(0, 0) + 1.6) <= 1e-15);
  }
  SUBCASE("general formula") {
    const Mat Pi = m2(1, 0.1, 0.1, 2), r = m2(0.3, cplx(0, 1), 0, 0.2);
    const Mat want = -p.R.inverse() * (p.G.adjoint() * (Pi * X + r) + p.eta.adjoint());
    CHECK((feedback_control(p, Pi, r, X) - want).norm() <= 1e-14);
  }
  SUBCASE("classical gain path") {
    const int n = 1000;
    const RfProblem q = classical_scalar(Direction::Forward, 0.3, 1.0, 0.4, 0.6, 1.2);
    const LevyPath path = brownian(n, 1.0, 5);
    const auto Pi = iterate_riccati(q, path).limit();
    const AffineControl u = optimal_control(q, Pi, solve_r(q, Pi, path));
    LqProblem lq;
    lq.A = RMat::Constant(1, 1, 0.3);
    lq.Q = RMat::Constant(1, 1, 1.0);
    lq.Pi_T = RMat::Constant(1, 1, 0.4);
    const RiccatiSolution ref = solve_riccati_ode(lq, n);
    double err = 0.0;
    for (int k = 0; k < n; ++k) err = std::max(err, std::abs(u.gain[k](0, 0) + ref.Pi[k](0, 0)));
    CHECK(err <= 1e-6);
  }
}

TEST_CASE("Feedback optimality") {
  SUBCASE("noise-free classical value identity and exact dominance") {
    const double x0 = 1.5;
    const RfProblem p = classical_scalar(Direction::Forward, 0.3, 1.0, 0.5, 0.0, x0);
    OptimalityOptions o;
    o.n_paths = 2;
    o.n_steps = 100000;
    o.dt = 1e-5;
    o.perturbations = default_perturbations(1);
    const OptimalityReport rep = verify_feedback_optimality(p, Vec::Ones(1), o);
    LqProblem lq;
    lq.A = RMat::Constant(1, 1, 0.3);
    lq.Q = RMat::Constant(1, 1, 1.0);
    lq.Pi_T = RMat::Constant(1, 1, 0.5);
    const double value = x0 * x0 * solve_riccati_ode(lq, 1000).Pi.front()(0, 0);
    CHECK(std::abs(rep.optimal_mean - value) <= 1e-4);
    CHECK(rep.optimal_se == 0.0);
    CHECK(rep.all_dominated());
    for (const auto& q : rep.outcomes) {
      CHECK(std::abs(q.K_mean) <= 1e-3);
      CHECK(q.decomposition_residual <= 1e-10);
    }
  }
  SUBCASE("null perturbation leaves the cost unchanged") {
    OptimalityOptions o;
    o.n_paths = 20;
    o.n_steps = 200;
    o.dt = 5e-3;
    o.perturbations = {{"null", 1.0, Mat()}};
    const OptimalityReport rep = verify_feedback_optimality(generic(Direction::Backward), Vec::Ones(2), o);
    CHECK(rep.outcomes[0].mean_diff == 0.0);
    CHECK(rep.outcomes[0].mean_cost == rep.optimal_mean);
    CHECK_FALSE(rep.outcomes[0].dominated);
  }
  SUBCASE("stochastic 2x2 dominance on a reduced ensemble") {
    OptimalityOptions o;
    o.n_paths = 200;
    o.perturbations = default_perturbations(2);
    const Vec xi = (Vec(2) << 1.0, 0.5).finished();
    const OptimalityReport rep = verify_feedback_optimality(generic(Direction::Backward), xi, o);
    CHECK(rep.all_converged);
    CHECK(rep.all_dominated());
    for (const auto& q : rep.outcomes) {
      CHECK(q.decomposition_residual <= 1e-10);
      // the cross term vanishes up to the O(dt) pathwise discretization error
      CHECK(std::abs(q.K_mean) <= 2 * o.dt + 3 * q.K_se);
    }
  }
}

TEST_CASE("Time reversal") {
  const RfProblem p = generic(Direction::Forward);
  const LevyPath path = brownian(300, 1.0, 41);
  SUBCASE("constants carried over, increments reversed, table negated") {
    const auto [rp, rpath] = time_reverse(p, path);
    CHECK(rp.direction == Direction::Backward);
    CHECK(rp.F == p.F);
    CHECK(rp.Q_b == p.Q_b);
    CHECK(rp.m_b == p.m_b);
    CHECK(rpath.sigma == Mat(-path.sigma));
    for (int k = 0; k < 300; ++k) CHECK(rpath.dM1[k] == path.dM1[299 - k]);
  }
  SUBCASE("double reversal is the identity") {
    const auto [rp, rpath] = time_reverse(p, path);
    const auto [pp, ppath] = time_reverse(rp, rpath);
    CHECK(pp.direction == p.direction);
    CHECK(pp.F1 == p.F1);
    CHECK(ppath.dM1 == path.dM1);
    CHECK(ppath.dM2 == path.dM2);
    CHECK(ppath.sigma == path.sigma);
  }
  SUBCASE("noise-free: reversed problem solved forward matches direct iteration") {
    RfProblem q = p;
    q.F1 = q.F2 = Mat::Zero(2, 2);
    const auto direct = iterate_riccati(q, path).limit();
    const auto [rp, rpath] = time_reverse(q, path);
    const auto via = reverse(iterate_riccati(rp, rpath).limit());
    CHECK(sup_diff(direct, via) <= 1e-8);
  }
}

TEST_CASE("Riccati coefficient check") {
  // real basis of the Hermitian 2x2 tables
  const std::vector<Mat> tables = {Mat::Identity(2, 2), m2(1, 0, 0, 0), m2(0, 1, 1, 0), m2(0, cplx(0, 1), cplx(0, -1), 0)};
  for (auto d : {Direction::Backward, Direction::Forward}) {
    for (const Mat& s : tables) {
      const CoefficientCheck c = riccati_coefficient_check(d, s);
      CHECK_MESSAGE(c.matches, c.report);
    }
    const CoefficientCheck silent = riccati_coefficient_check(d, Mat::Identity(2, 2), true);
    CHECK(silent.matches);
    CHECK(silent.derived_B1 == "0");
    CHECK(silent.derived_B2 == "0");
    const CoefficientCheck no_w = riccati_coefficient_check(d, m2(0, cplx(0, 1), cplx(0, -1), 0), false, true);
    CHECK(no_w.matches);
    CHECK(no_w.derived_B1 == "0");
  }
  SUBCASE("drift without noise is the deterministic Riccati right side") {
    const CoefficientCheck f = riccati_coefficient_check(Direction::Forward, Mat::Identity(2, 2), true);
    const CoefficientCheck b = riccati_coefficient_check(Direction::Backward, Mat::Identity(2, 2), true);
    CHECK(f.derived_A != b.derived_A);
    CHECK(f.derived_A.find("Pi.G.Rinv.G*.Pi") != std::string::npos);
  }
  SUBCASE("mismatches are reported with both coefficient sets") {
    const CoefficientCheck c =
        riccati_coefficient_check(Direction::Backward, m2(0, cplx(0, 1), cplx(0, -1), 0), false, false, true);
    CHECK_FALSE(c.matches);
    CHECK(c.report.find("stated A") != std::string::npos);
    CHECK(c.derived_B1 == c.stated_B1);
  }
}
