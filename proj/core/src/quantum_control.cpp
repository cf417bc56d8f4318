// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "qsc/quantum_control.hpp"

#include <cmath>
#include <cstdio>

namespace qsc {

namespace {

double simpson(const std::vector<double>& y, double h) {
  const std::size_t n = y.size() - 1;
  if (n == 0) return 0.0;
  if (n == 1) return 0.5 * h * (y[0] + y[1]);
  auto composite = [&](std::size_t a, std::size_t b) {
    double s = y[a] + y[b];
    for (std::size_t k = a + 1; k < b; ++k) s += ((k - a) % 2 == 1 ? 4.0 : 2.0) * y[k];
    return s * h / 3.0;
  };
  if (n % 2 == 0) return composite(0, n);
  // odd panel count: Simpson 3/8 on the last three panels
  const double tail = 3.0 * h / 8.0 * (y[n - 3] + 3.0 * y[n - 2] + 3.0 * y[n - 1] + y[n]);
  return (n > 3 ? composite(0, n - 3) : 0.0) + tail;
}

CostBreakdown quadratic_cost(const BilinearFlow& flow, const Mat& running, const Mat& terminal, double dt) {
  std::vector<double> y(flow.S.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = flow.expectation(k, running).real();
  CostBreakdown out;
  out.running = simpson(y, dt);
  out.terminal = flow.expectation(flow.S.size() - 1, terminal).real();
  return out;
}

void require_window(const ModuleOperator& op, int window, const char* what) {
  if (op.max_index() > window) {
    throw InvalidArgument(std::string(what) + ": label index " + std::to_string(op.max_index()) +
                          " exceeds the oracle window " + std::to_string(window));
  }
}

ModuleDifferential left_mul(const Mat& a, const ModuleDifferential& x) {
  ModuleDifferential out(x.dim());
  out.dt = a * x.dt;
  out.ann = x.ann.left_mul(a);
  out.cre = x.cre.left_mul(a);
  out.cons = x.cons.left_mul(a);
  return out;
}

std::string fmt(const char* f, double a, const char* tag) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, tag);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

using SymbolicHp = std::map<HpLabel, FreeElement>;

SymbolicHp sym_mul(const SymbolicHp& a, const FreeElement& mid, const SymbolicHp& b) {
  SymbolicHp out;
  for (const auto& [la, ea] : a) {
    for (const auto& [lb, eb] : b) {
      const HpDifferential p = hp_basis_product(la, lb);
      for (const auto& [l, c] : p.terms()) out[l] += c * (ea * mid * eb);
    }
  }
  return out;
}

FreeElement get(const SymbolicHp& s, HpLabel l) {
  auto it = s.find(l);
  return it == s.end() ? FreeElement() : it->second;
}

}  // namespace

RiccatiResiduals check_hp_riccati_system(const Mat& Pi, const Mat& F, const Mat& Psi, const Mat& Phi,
                                         const Mat& Z, const Mat& X) {
  for (const Mat* m : {&F, &Psi, &Phi, &Z, &X}) require_same_dim(Pi, *m, "check_hp_riccati_system");
  RiccatiResiduals r;
  r.r1 = (Pi * F + F.adjoint() * Pi + Phi.adjoint() * Pi * Phi - Pi * Pi + X * X).norm();
  r.r2 = (Pi * Psi + Phi.adjoint() * Pi + Phi.adjoint() * Pi * Z).norm();
  r.r3 = (Pi * Z + Z.adjoint() * Pi + Z.adjoint() * Pi * Z).norm();
  return r;
}

GenericQsdeSpec riccati_consistent_spec(const Mat& Pi, const Mat& X, const Mat& Phi, const Mat& W,
                                        const Mat& A) {
  for (const Mat* m : {&X, &Phi, &W, &A}) require_same_dim(Pi, *m, "riccati_consistent_spec");
  require(is_hermitian(Pi) && min_eigenvalue(Pi) > 1e-12, "Pi must be Hermitian positive definite");
  require(is_hermitian(X), "X must be Hermitian");
  require(is_hermitian(A), "A must be Hermitian");
  require(is_unitary(W), "W must be unitary");
  require(commutator(W, Pi).norm() <= 1e-10, "W must commute with Pi");
  const Eigen::Index n = Pi.rows();
  const Mat inv = Pi.ldlt().solve(Mat::Identity(n, n));
  const Mat S = Pi * Pi - X * X - Phi.adjoint() * Pi * Phi;
  const Mat F = inv * (0.5 * S + kI * A);
  const Mat Psi = -inv * Phi.adjoint() * Pi * W;
  return GenericQsdeSpec(F, Psi, Phi, W - Mat::Identity(n, n), herm(Pi));
}

CostBreakdown cost_Q(const GenericQsdeSpec& spec, const Mat& X, const Vec& v, const TruncationConfig& config,
                     const StepFunction& f) {
  require(spec.Pi.has_value(), "cost_Q needs a feedback operator Pi");
  require_same_dim(spec.F, X, "cost_Q");
  require(is_hermitian(X), "X must be Hermitian");
  require(v.size() == spec.dim(), "state dimension mismatch");
  config.validate();
  const Mat& Pi = *spec.Pi;
  const BilinearFlow flow =
      bilinear_flow(MultiModeQsde::from(spec.coefficients()), f, f, v, v, config.horizon, config.dt);
  return quadratic_cost(flow, X * X + Pi * Pi, Pi, config.dt);
}

HpControlProblem::HpControlProblem(Mat h, Mat x, Vec xi_sys, double horizon, StepFunction fv)
    : H(std::move(h)), X(std::move(x)), xi(std::move(xi_sys)), f(std::move(fv)), T(horizon) {
  require_same_dim(H, X, "HpControlProblem");
  require(is_hermitian(H), "H must be Hermitian");
  require(is_hermitian(X), "X must be Hermitian");
  require(xi.size() == H.rows() && xi.norm() > 0.0, "xi must be a nonzero system vector");
  require(T > 0.0, "horizon must be positive");
}

CostBreakdown cost_J_hp(const HpControlProblem& problem, const Mat& L, const Mat& W, const TruncationConfig& config) {
  const HpEvolutionSpec spec(problem.H, L, W);
  const Mat LL = L.adjoint() * L;
  const BilinearFlow flow =
      bilinear_flow(MultiModeQsde::from(spec.coefficients()), problem.f, problem.f, problem.xi, problem.xi,
                    problem.T, config.dt);
  return quadratic_cost(flow, problem.X * problem.X + 0.25 * LL * LL, 0.5 * LL, config.dt);
}

HpSynthesis synthesize_hp(const Mat& Pi, const Mat& W1, const Mat& W2) {
  require_same_dim(Pi, W1, "synthesize_hp");
  require_same_dim(Pi, W2, "synthesize_hp");
  require(is_psd(Pi), "Pi must be Hermitian PSD");
  require(is_unitary(W1) && is_unitary(W2), "W1 and W2 must be unitary");
  for (const Mat* w : {&W1, &W2}) {
    const double c = commutator(*w, Pi).norm();
    if (c > 1e-10) {
      char msg[128];
      std::snprintf(msg, sizeof msg, "unitary does not commute with Pi: commutator norm %.3e", c);
      throw InvalidArgument(msg);
    }
  }
  return {std::sqrt(2.0) * psd_sqrt(Pi) * W1, W2};
}

SynthesisReport check_hp_synthesis(const Mat& Pi, const HpSynthesis& s, const Mat& H, const Mat& X) {
  const Mat& L = s.L;
  const Mat& W = s.W;
  const Mat Ls = L.adjoint();
  const Mat one = Mat::Identity(Pi.rows(), Pi.cols());
  SynthesisReport r;
  r.stationarity = (kI * commutator(H, Pi) + Ls * Pi * L - Pi * Pi + X * X).norm();
  r.cross = (Ls * Pi - Pi * Ls * W + Ls * Pi * (W - one)).norm();
  r.conservation = ((W.adjoint() - one) * Pi + Pi * (W - one) + (W.adjoint() - one) * Pi * (W - one)).norm();
  r.comm_L = std::max(commutator(L, Pi).norm(), commutator(Ls, Pi).norm());
  r.comm_W = std::max(commutator(W, Pi).norm(), commutator(W.adjoint(), Pi).norm());
  r.gram = (Ls * L - 2.0 * Pi).norm();
  r.normality = commutator(L, Ls).norm();
  return r;
}

double stationary_riccati_residual(const Mat& H, const Mat& X, const Mat& Pi) {
  return (kI * commutator(H, Pi) + Pi * Pi + X * X).norm();
}

ObstructionResult stationary_riccati_obstruction(const Mat& H, const Mat& X, int max_iterations) {
  require_same_dim(H, X, "stationary_riccati_obstruction");
  require(is_hermitian(H) && is_hermitian(X), "H and X must be Hermitian");
  const Eigen::Index n = H.rows();
  ObstructionResult out;
  out.bound = (X * X).trace().real() / std::sqrt(static_cast<double>(n));
  Mat Pi = Mat::Zero(n, n);
  auto value = [&](const Mat& P) {
    const double r = stationary_riccati_residual(H, X, P);
    return r * r;
  };
  double fv = value(Pi);
  double step = 1.0;
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Mat R = kI * commutator(H, Pi) + Pi * Pi + X * X;
    const Mat G = 2.0 * herm(kI * commutator(R, H) + R * Pi + Pi * R);
    const double g2 = G.squaredNorm();
    if (g2 < 1e-24) break;
    step *= 2.0;
    bool moved = false;
    while (step > 1e-16) {
      const Mat trial = herm(Pi - step * G);
      const double ft = value(trial);
      if (ft <= fv - 1e-4 * step * g2) {
        Pi = trial;
        fv = ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  out.minimizer = Pi;
  out.minimized = std::sqrt(fv);
  out.iterations = it;
  return out;
}

Mat bracket(const ModuleOperator& alpha, const ModuleOperator& beta) { return pairing(alpha.adjoint(), beta); }

double module_norm(const ModuleOperator& a) {
  double s = 0.0;
  for (const auto& [label, m] : a.terms()) s += m.squaredNorm();
  return std::sqrt(s);
}

RiccatiResiduals check_swn_riccati_system(const Mat& Pi, const Mat& F, const ModuleOperator& Psi,
                                          const ModuleOperator& Phi, const ModuleOperator& Z, const Mat& X,
                                          int window) {
  require_same_dim(Pi, F, "check_swn_riccati_system");
  require_same_dim(Pi, X, "check_swn_riccati_system");
  for (const ModuleOperator* m : {&Psi, &Phi, &Z}) {
    require(m->dim() == Pi.rows(), "check_swn_riccati_system: module dimension mismatch");
  }
  require(Psi.only(SwnTag::Ann), "Psi must be Ann-labelled");
  require(Phi.only(SwnTag::Cre), "Phi must be Cre-labelled");
  require(Z.only(SwnTag::Cons), "Z must be Cons-labelled");
  require_window(Psi, window, "Psi");
  require_window(Phi, window, "Phi");
  require_window(Z, window, "Z");
  RiccatiResiduals r;
  r.r1 = (Pi * F + F.adjoint() * Pi + bracket(Phi, Phi.left_mul(Pi)) - Pi * Pi + X * X).norm();
  const ModuleOperator Phis = Phi.adjoint();
  r.r2 = module_norm(Psi.left_mul(Pi) + Phis.right_mul(Pi) + l_map(Z.left_mul(Pi), Phis));
  const ModuleOperator ZsPi = Z.adjoint().right_mul(Pi);
  r.r3 = module_norm(Z.left_mul(Pi) + ZsPi + circ(ZsPi, Z));
  return r;
}

// ---------------------------------------------------------------------------

ModuleDifferential adjoint(const ModuleDifferential& x) {
  ModuleDifferential out(x.dim());
  out.dt = x.dt.adjoint();
  out.ann = x.cre.adjoint();
  out.cre = x.ann.adjoint();
  out.cons = x.cons.adjoint();
  return out;
}

ModuleDifferential right_mul(const ModuleDifferential& x, const Mat& a) {
  ModuleDifferential out(x.dim());
  out.dt = x.dt * a;
  out.ann = x.ann.right_mul(a);
  out.cre = x.cre.right_mul(a);
  out.cons = x.cons.right_mul(a);
  return out;
}

ModuleDifferential operator+(const ModuleDifferential& a, const ModuleDifferential& b) {
  ModuleDifferential out(a.dim());
  out.dt = a.dt + b.dt;
  out.ann = a.ann + b.ann;
  out.cre = a.cre + b.cre;
  out.cons = a.cons + b.cons;
  return out;
}

HpFlowDerivation derive_flow_hp(const FreeAlgebra& alg, const FreeElement& H, const FreeElement& L,
                                const FreeElement& W, const FreeElement& X) {
  const FreeElement one = alg.one();
  const FreeElement Ls = alg.adjoint(L);
  const FreeElement Ws = alg.adjoint(W);
  const FreeElement LsL = Ls * L;

  SymbolicHp dU;
  dU[HpLabel::dt()] = -(kI * H + 0.5 * LsL);
  dU[HpLabel::dA()] = -(Ls * W);
  dU[HpLabel::dAdag()] = L;
  dU[HpLabel::dLambda()] = W - one;
  SymbolicHp dUs;
  for (const auto& [l, e] : dU) dUs[l.adjoint()] = alg.adjoint(e);

  SymbolicHp total;
  for (const auto& [l, e] : dUs) total[l] += e * X;
  for (const auto& [l, e] : dU) total[l] += X * e;
  for (const auto& [l, e] : sym_mul(dUs, X, dU)) total[l] += e;

  HpFlowDerivation out;
  out.derived = {alg.normal_form(get(total, HpLabel::dt())), alg.normal_form(get(total, HpLabel::dA())),
                 alg.normal_form(get(total, HpLabel::dAdag())), alg.normal_form(get(total, HpLabel::dLambda()))};
  out.stated.dt = alg.normal_form(kI * (H * X - X * H) - 0.5 * (LsL * X + X * LsL - 2.0 * (Ls * X * L)));
  out.stated.dA = alg.normal_form((Ls * X - X * Ls) * W);
  out.stated.dAdag = alg.normal_form(Ws * (X * L - L * X));
  out.stated.dLambda = alg.normal_form(Ws * X * W - X);

  const std::pair<const char*, std::pair<const FreeElement*, const FreeElement*>> rows[] = {
      {"dt", {&out.derived.dt, &out.stated.dt}},
      {"dA", {&out.derived.dA, &out.stated.dA}},
      {"dA+", {&out.derived.dAdag, &out.stated.dAdag}},
      {"dL", {&out.derived.dLambda, &out.stated.dLambda}}};
  out.matches = true;
  for (const auto& [name, pair] : rows) {
    const bool eq = alg.equal(*pair.first, *pair.second);
    out.matches = out.matches && eq;
    out.report += std::string(name) + (eq ? ": match\n" : ": MISMATCH\n");
    out.report += "  derived: " + alg.str(*pair.first) + "\n";
    out.report += "  stated:  " + alg.str(*pair.second) + "\n";
  }
  return out;
}

SwnFlowDerivation derive_flow_swn(const Mat& H, const ModuleOperator& Dminus, const ModuleOperator& W,
                                  const Mat& X, int window, double tol) {
  require_same_dim(H, X, "derive_flow_swn");
  require(is_hermitian(H) && is_hermitian(X), "H and X must be Hermitian");
  require(Dminus.dim() == H.rows() && W.dim() == H.rows(), "derive_flow_swn: module dimension mismatch");
  require(Dminus.only(SwnTag::Ann), "D- must be Ann-labelled");
  require(W.only(SwnTag::Cons), "W must be Cons-labelled");
  require_window(Dminus, window, "D-");
  require_window(W, window, "W");
  const Eigen::Index n = H.rows();

  const ModuleOperator Ds = Dminus.adjoint();
  const ModuleOperator Ws = W.adjoint();
  const ModuleOperator I = ModuleOperator::identity(n);
  const ModuleOperator rWDs = r_map(W, Ds);
  const Mat P = pairing(Dminus, Ds);

  ModuleDifferential C(n);
  C.dt = -0.5 * P + kI * H;
  C.ann = Dminus;
  C.cre = cplx(-1.0) * rWDs;
  C.cons = W - I;
  const ModuleDifferential Cs = adjoint(C);
  const ModuleDifferential CsX = right_mul(Cs, X);

  SwnFlowDerivation out;
  out.derived = CsX + left_mul(X, C) + module_ito_mul(CsX, C);

  const Mat dt = kI * commutator(X, H) - 0.5 * (P * X + X * P) + bracket(rWDs, rWDs.left_mul(X));
  const ModuleOperator XI = I.left_mul(X);
  out.full = ModuleDifferential(n);
  out.full.dt = dt;
  out.full.cre = Ds.right_mul(X) - r_map(Ws.right_mul(X), rWDs);
  out.full.ann = Dminus.left_mul(X) - l_map(W.left_mul(X), l_map(Ws, Dminus));
  out.full.cons = circ(Ws.right_mul(X), W) - XI;

  out.compact = ModuleDifferential(n);
  out.compact.dt = dt;
  out.compact.cre = Ds.right_mul(X) - r_map(circ(Ws.right_mul(X), W), Ds);
  out.compact.ann = Dminus.left_mul(X) - l_map(circ(Ws, W.left_mul(X)), Dminus);
  out.compact.cons = out.full.cons;

  out.distance_full = out.derived.distance(out.full);
  out.distance_compact = out.derived.distance(out.compact);
  out.matches_full = out.distance_full <= tol;
  out.matches_compact = out.distance_compact <= tol;

  ModuleDifferential flipped = out.full;
  flipped.dt = out.full.dt - 2.0 * kI * commutator(X, H);
  const double d_flip = (out.derived.dt - flipped.dt).norm();
  const double d_keep = (out.derived.dt - out.full.dt).norm();

  out.report += fmt("full form (r(W*X)r(W)D*, l(XW)l(W*)D): distance %.3e, %s\n", out.distance_full,
                    out.matches_full ? "match" : "MISMATCH");
  out.report += fmt("compact form (r(W*X o W)D*, l(W* o XW)D): distance %.3e, %s\n", out.distance_compact,
                    out.matches_compact ? "match" : "MISMATCH");
  out.report += fmt2("dt commutator: |derived - i[X,H] form| = %.3e, |derived - i[H,X] form| = %.3e\n", d_keep,
                     d_flip);
  out.report += "  the evolution carries +iH in its dt coefficient, so the flow generator has i[X,H]\n";
  return out;
}

}  // namespace qsc
