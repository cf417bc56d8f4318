// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "qsc/classical_control.hpp"
#include "qsc/fock_sim.hpp"
#include "qsc/ito_algebra.hpp"
#include "qsc/quantum_control.hpp"
#include "qsc/rf_riccati.hpp"
#include "qsc/serialization.hpp"

namespace qsc::cli {

namespace {

// ---------------------------------------------------------------------------
// Parameter tables
// ---------------------------------------------------------------------------

json jm(const char* text) { return json::parse(text); }

ParamInfo opt(std::string key, std::string type, json def, std::string help) {
  return {std::move(key), std::move(type), false, std::move(def), std::move(help)};
}

std::vector<KindInfo> build_kinds() {
  const json id2 = jm("[[1,0],[0,1]]");
  std::vector<KindInfo> k;
  k.push_back({"ito-table",
               "16 products of dt, dA, dA+, dLambda against the quantum Ito table",
               "Hudson-Parthasarathy quantum stochastic calculus, first-order Ito table",
               {},
               false,
               false});
  k.push_back({"swn-table",
               "square-of-white-noise Ito table checked against the sl(2) representation",
               "renormalized square of white noise; Stirling-number structure constants",
               {opt("max_index", "int", 2, "largest Cons index compared (0..3)"),
                opt("levels", "int", 30, "truncation size of the representation"),
                opt("stirling", "string", "signed", "signed or unsigned Stirling convention")},
               false,
               false});
  k.push_back({"characteristic",
               "vacuum characteristic functional of Brownian or Poisson noise",
               "vacuum expectations of exponentials of Fock-space noises",
               {opt("noise", "string", "brownian", "brownian or poisson"), opt("s", "real", 1.0, "frequency"),
                opt("lambda", "real", 1.0, "Poisson intensity"), opt("t", "real", 1.0, "time"),
                opt("dt", "real", 1e-3, "integrator step")},
               false,
               true});
  k.push_back({"weyl",
               "closed-form Weyl increment against the summed exponential series",
               "Poisson-Weyl operators and the exponential of a quantum stochastic differential",
               {opt("lambda", "real", 0.6, "dt coefficient"), opt("z", "complex", jm("[0.4,-0.8]"), "annihilator weight"),
                opt("k", "real", 0.3, "gauge coefficient"), opt("n_max", "int", 40, "series terms")},
               false,
               false});
  k.push_back({"flow",
               "vacuum expectation of an HP flow: symbolic generator, Lindblad ODE, bilinear engine",
               "quantum flows driven by a unitary Hudson-Parthasarathy evolution",
               {opt("H", "matrix", jm("[[0,1],[1,0]]"), "Hamiltonian"), opt("L", "matrix", jm("[[0,0],[1,0]]"), "coupling"),
                opt("W", "matrix", id2, "scattering unitary"), opt("X", "matrix", jm("[[1,0],[0,-1]]"), "observable"),
                opt("state", "vector", jm("[0.6,[0,0.8]]"), "system vector"), opt("T", "real", 1.0, "horizon"),
                opt("dt", "real", 1e-3, "integrator step"),
                opt("oracle_steps", "int", 0, "steps of the truncated-Fock tensor cross-check (at most 12); 0 skips"),
                opt("levels", "int", 2, "levels per fresh mode in the tensor cross-check")},
               false,
               true});
  k.push_back({"lqr",
               "deterministic linear regulator: value identity and perturbed gains",
               "classical finite-horizon linear-quadratic regulator",
               {opt("A", "matrix", jm("[[0.2,1],[-1,-0.4]]"), "drift"), opt("Q", "matrix", jm("[[2,0.5],[0.5,1]]"), "state weight"),
                opt("Pi_T", "matrix", id2, "terminal weight"), opt("x0", "vector", jm("[1,-0.5]"), "initial state"),
                opt("T", "real", 2.0, "horizon"), opt("steps", "int", 4000, "RK4 steps"),
                opt("perturbations", "int", 20, "random gain offsets")},
               false,
               false});
  k.push_back({"lqg",
               "partially observed regulator with a Kalman-Bucy filter: gain dominance",
               "classical linear-quadratic-Gaussian control",
               {opt("A", "matrix", jm("[[0.5]]"), "drift"), opt("Q", "matrix", jm("[[1]]"), "state weight"),
                opt("Pi_T", "matrix", jm("[[1]]"), "terminal weight"), opt("C", "matrix", jm("[[0.5]]"), "state noise"),
                opt("H_obs", "matrix", jm("[[1]]"), "observation"), opt("obs_noise", "real", 0.5, "observation noise"),
                opt("x0", "vector", jm("[1]"), "initial state"), opt("T", "real", 1.0, "horizon"),
                opt("steps", "int", 500, "Euler steps"), opt("paths", "int", 2000, "Monte Carlo paths")},
               true,
               false});
  k.push_back({"hp-control",
               "quadratic cost of a feedback-controlled HP evolution against the value <xi, Pi xi>",
               "operator Riccati conditions for quantum feedback control",
               {opt("Pi", "matrix", jm("[[0.5,0],[0,1]]"), "value operator, positive definite"),
                opt("X", "matrix", jm("[[0.3,0.2],[0.2,-0.1]]"), "cost observable"),
                opt("Phi", "matrix", jm("[[0.2,0.1],[0,0.3]]"), "creation coefficient"),
                opt("W", "matrix", jm("[[[0.5403023058681398,0.8414709848078965],0],[0,[-0.4161468365471424,0.9092974268256817]]]"),
                    "unitary commuting with Pi"),
                opt("A", "matrix", jm("[[0.1,0],[0,-0.2]]"), "Hermitian part of F"),
                opt("xi", "vector", jm("[0.6,0.8]"), "system vector"), opt("T", "real", 1.0, "horizon"),
                opt("dt", "real", 1e-3, "integrator step"), opt("perturbations", "int", 10, "feedback perturbations")},
               false,
               true});
  k.push_back({"swn-control",
               "square-of-white-noise Riccati conditions at the optimal substitution",
               "quadratic control of evolutions driven by the square of white noise",
               {opt("D0", "matrix", jm("[[[0.3,0.1],0],[0,[-0.2,0.4]]]"), "Ann(0) coefficient"),
                opt("D1", "matrix", jm("[[0.5,0],[0,[0,-0.3]]]"), "Ann(1) coefficient"),
                opt("W", "matrix", jm("[[[0.7648421872844885,0.6442176872376910],0],[0,[-0.4161468365471424,0.9092974268256817]]]"),
                    "Cons(0,0,0) unitary"),
                opt("H", "matrix", jm("[[0,0.5],[0.5,0]]"), "Hamiltonian"), opt("X", "matrix", jm("[[1,0],[0,-1]]"), "cost observable")},
               false,
               false});
  k.push_back({"rf-riccati",
               "stochastic Riccati iteration along a Levy-pair path, optional feedback dominance",
               "linear-quadratic control driven by a Boson Levy pair; monotone Picard iteration",
               {opt("F", "matrix", jm("[[0,0],[0,0]]"), "drift; fixes the dimension"),
                opt("G", "matrix", json(), "control coefficient"), opt("L", "matrix", json(), "constant forcing"),
                opt("w", "matrix", json(), "Hermitian noise coupling"), opt("z", "matrix", json(), "additive noise coupling"),
                opt("F1", "matrix", json(), "dM1 coefficient; F2 = F1*"), opt("Q", "matrix", json(), "state weight, PSD"),
                opt("R", "matrix", json(), "control weight, positive definite; default I"),
                opt("m", "matrix", json(), "linear state weight"), opt("eta", "matrix", json(), "linear control weight"),
                opt("Q_b", "matrix", json(), "boundary weight, PSD"), opt("m_b", "matrix", json(), "linear boundary weight"),
                opt("C", "matrix", json(), "boundary state; default I"),
                opt("direction", "string", "backward", "backward (X(T)=C, weight at 0) or forward (X(0)=C, weight at T)"),
                opt("T", "real", 1.0, "horizon"), opt("n_steps", "int", 1000, "grid steps"),
                opt("dt", "real", json(), "step; sets n_steps = T/dt"), opt("tol", "real", 1e-6, "iteration tolerance"),
                opt("n_max", "int", 30, "iteration cap"), opt("paths", "int", 0, "Monte Carlo paths for dominance; 0 skips"),
                opt("xi", "vector", json(), "cost vector; default all ones")},
               true,
               true});
  return k;
}

const KindInfo* find_kind(const std::string& name) {
  for (const auto& k : kinds())
    if (k.name == name) return &k;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Typed access and validation
// ---------------------------------------------------------------------------

class Params {
 public:
  explicit Params(const json& j) : j_(j) {}
  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  Mat mat(const std::string& k) const { return matrix_from_json(j_.at(k)); }
  Mat mat_or(const std::string& k, const Mat& d) const { return has(k) ? mat(k) : d; }
  Vec vec(const std::string& k) const { return vector_from_json(j_.at(k)); }
  double real(const std::string& k) const { return j_.at(k).get<double>(); }
  int integer(const std::string& k) const { return j_.at(k).get<int>(); }
  cplx complex(const std::string& k) const { return complex_from_json(j_.at(k)); }
  std::string str(const std::string& k) const { return j_.at(k).get<std::string>(); }
  RMat rmat(const std::string& k) const { return mat(k).real(); }
  RVec rvec(const std::string& k) const { return vec(k).real(); }

 private:
  const json& j_;
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

class Validator {
 public:
  Validator(const Params& p, std::vector<std::string>& errors) : p_(p), e_(errors) {}

  void fail(const std::string& key, const std::string& what) { e_.push_back("params." + key + ": " + what); }

  // The accessors return nullopt after recording a failure so that later checks can be skipped.
  std::optional<Mat> square(const std::string& k) {
    if (!p_.has(k)) return std::nullopt;
    const Mat m = p_.mat(k);
    if (m.rows() == 0 || m.rows() != m.cols()) {
      fail(k, "must be a nonempty square matrix (got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
      return std::nullopt;
    }
    return m;
  }
  std::optional<Mat> sized(const std::string& k, Eigen::Index n) {
    auto m = square(k);
    if (m && m->rows() != n) {
      fail(k, "must be " + std::to_string(n) + "x" + std::to_string(n) + " (got " + std::to_string(m->rows()) + "x" +
                  std::to_string(m->cols()) + ")");
      return std::nullopt;
    }
    return m;
  }
  void hermitian(const std::string& k, const std::optional<Mat>& m) {
    if (m && hermitian_defect(*m) > 1e-10) fail(k, "must be Hermitian (defect " + fmt(hermitian_defect(*m)) + ")");
  }
  void psd(const std::string& k, const std::optional<Mat>& m) {
    if (!m) return;
    if (hermitian_defect(*m) > 1e-10) {
      fail(k, "must be Hermitian PSD (Hermitian defect " + fmt(hermitian_defect(*m)) + ")");
      return;
    }
    const double ev = min_eigenvalue(*m);
    if (ev < -1e-10) fail(k, "must be PSD (minimum eigenvalue " + fmt(ev) + ")");
  }
  void positive_definite(const std::string& k, const std::optional<Mat>& m) {
    if (!m) return;
    if (hermitian_defect(*m) > 1e-10) {
      fail(k, "must be Hermitian positive definite (Hermitian defect " + fmt(hermitian_defect(*m)) + ")");
      return;
    }
    const double ev = min_eigenvalue(*m);
    if (ev <= 1e-12) fail(k, "must be positive definite (minimum eigenvalue " + fmt(ev) + ")");
  }
  void unitary(const std::string& k, const std::optional<Mat>& m) {
    if (m && unitary_defect(*m) > 1e-10) fail(k, "must be unitary (defect " + fmt(unitary_defect(*m)) + ")");
  }
  void real(const std::string& k, const std::optional<Mat>& m) {
    if (m && m->imag().cwiseAbs().maxCoeff() > 0.0) fail(k, "must be real");
  }
  void vector(const std::string& k, Eigen::Index n, bool real_only = false) {
    if (!p_.has(k)) return;
    const Vec v = p_.vec(k);
    if (v.size() != n) fail(k, "must have length " + std::to_string(n) + " (got " + std::to_string(v.size()) + ")");
    if (real_only && v.imag().cwiseAbs().maxCoeff() > 0.0) fail(k, "must be real");
  }
  void positive(const std::string& k) {
    if (p_.has(k) && !(p_.real(k) > 0.0)) fail(k, "must be positive (got " + fmt(p_.real(k)) + ")");
  }
  void nonnegative(const std::string& k) {
    if (p_.has(k) && p_.real(k) < 0.0) fail(k, "must be nonnegative (got " + fmt(p_.real(k)) + ")");
  }
  void int_range(const std::string& k, int lo, int hi) {
    if (!p_.has(k)) return;
    const int v = p_.integer(k);
    if (v < lo || v > hi) fail(k, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] (got " +
                                      std::to_string(v) + ")");
  }
  void one_of(const std::string& k, const std::vector<std::string>& allowed) {
    if (!p_.has(k)) return;
    const std::string v = p_.str(k);
    if (std::find(allowed.begin(), allowed.end(), v) != allowed.end()) return;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(k, "'" + v + "' is not one of: " + list);
  }
  void multiple(const std::string& horizon, const std::string& step) {
    if (!p_.has(horizon) || !p_.has(step)) return;
    const double T = p_.real(horizon), dt = p_.real(step);
    if (!(T > 0.0) || !(dt > 0.0)) return;
    const double n = T / dt;
    if (std::abs(n - std::round(n)) > 1e-9 * n)
      fail(step, horizon + " = " + fmt(T) + " is not an integer multiple of " + fmt(dt));
  }

 private:
  const Params& p_;
  std::vector<std::string>& e_;
};

void validate_kind(const std::string& kind, const Params& p, std::vector<std::string>& errors) {
  Validator v(p, errors);
  if (kind == "swn-table") {
    v.int_range("max_index", 0, 3);
    if (p.has("max_index") && p.has("levels")) {
      const int need = std::max(2 * p.integer("max_index"), 6) + 1;
      v.int_range("levels", need, 200);
    }
    v.one_of("stirling", {"signed", "unsigned"});
  } else if (kind == "characteristic") {
    v.one_of("noise", {"brownian", "poisson"});
    v.nonnegative("lambda");
    v.positive("t");
    v.positive("dt");
    v.multiple("t", "dt");
  } else if (kind == "weyl") {
    v.int_range("n_max", 1, 200);
  } else if (kind == "flow") {
    const auto H = v.square("H");
    if (!H) return;
    const auto n = H->rows();
    v.hermitian("H", H);
    v.sized("L", n);
    v.unitary("W", v.sized("W", n));
    v.hermitian("X", v.sized("X", n));
    v.vector("state", n);
    v.positive("T");
    v.positive("dt");
    v.multiple("T", "dt");
    // oracle_steps beyond the tensor budget is a resource rejection at run time, not a config error
    v.int_range("oracle_steps", 0, 1000000);
    v.int_range("levels", 2, 16);
  } else if (kind == "lqr" || kind == "lqg") {
    const auto A = v.square("A");
    v.real("A", A);
    if (!A) return;
    const auto n = A->rows();
    const auto Q = v.sized("Q", n);
    v.real("Q", Q);
    v.psd("Q", Q);
    const auto P = v.sized("Pi_T", n);
    v.real("Pi_T", P);
    v.psd("Pi_T", P);
    v.vector("x0", n, true);
    v.positive("T");
    v.int_range("steps", 10, 10000000);
    if (kind == "lqr") v.int_range("perturbations", 0, 1000);
    if (kind == "lqg") {
      const auto C = v.sized("C", n);
      v.real("C", C);
      if (p.has("H_obs")) {
        const Mat Hm = p.mat("H_obs");
        if (Hm.cols() != n) v.fail("H_obs", "must have " + std::to_string(n) + " columns");
        if (Hm.imag().cwiseAbs().maxCoeff() > 0.0) v.fail("H_obs", "must be real");
      }
      v.positive("obs_noise");
      v.int_range("paths", 2, 10000000);
    }
  } else if (kind == "hp-control") {
    const auto Pi = v.square("Pi");
    v.positive_definite("Pi", Pi);
    if (!Pi) return;
    const auto n = Pi->rows();
    v.hermitian("X", v.sized("X", n));
    v.sized("Phi", n);
    const auto W = v.sized("W", n);
    v.unitary("W", W);
    if (W && commutator(*W, *Pi).norm() > 1e-10)
      v.fail("W", "must commute with Pi (commutator norm " + fmt(commutator(*W, *Pi).norm()) + ")");
    v.hermitian("A", v.sized("A", n));
    v.vector("xi", n);
    v.positive("T");
    v.positive("dt");
    v.multiple("T", "dt");
    v.int_range("perturbations", 0, 1000);
  } else if (kind == "swn-control") {
    const auto H = v.square("H");
    v.hermitian("H", H);
    if (!H) return;
    const auto n = H->rows();
    v.hermitian("X", v.sized("X", n));
    const auto D0 = v.sized("D0", n), D1 = v.sized("D1", n), W = v.sized("W", n);
    v.unitary("W", W);
    if (D0 && D1 && W) {
      // the optimal substitution cancels the martingale conditions only for a commuting normal family
      const std::vector<std::pair<std::string, Mat>> fam = {{"D0", *D0}, {"D1", *D1}, {"W", *W}};
      for (std::size_t i = 0; i < fam.size(); ++i)
        for (std::size_t j = 0; j < fam.size(); ++j) {
          const double c = std::max(commutator(fam[i].second, fam[j].second).norm(),
                                    commutator(fam[i].second, fam[j].second.adjoint()).norm());
          if (i <= j && c > 1e-10)
            v.fail(fam[j].first, "must commute with " + fam[i].first + " and its adjoint (commutator norm " + fmt(c) + ")");
        }
    }
  } else if (kind == "rf-riccati") {
    const auto F = v.square("F");
    if (!F) return;
    const auto n = F->rows();
    for (const char* k : {"G", "L", "z", "F1", "m", "eta", "m_b", "C"}) v.sized(k, n);
    v.hermitian("w", v.sized("w", n));
    v.psd("Q", v.sized("Q", n));
    v.psd("Q_b", v.sized("Q_b", n));
    v.positive_definite("R", v.sized("R", n));
    v.one_of("direction", {"backward", "forward"});
    v.positive("T");
    v.int_range("n_steps", 1, 10000000);
    if (p.has("dt")) {
      v.positive("dt");
      v.multiple("T", "dt");
    }
    v.positive("tol");
    v.int_range("n_max", 1, 10000);
    v.int_range("paths", 0, 10000000);
    v.vector("xi", n);
  }
}

bool type_ok(const std::string& type, const json& j, std::string& why) {
  try {
    if (type == "real") return j.is_number();
    if (type == "int") return j.is_number_integer();
    if (type == "string") return j.is_string();
    if (type == "complex") {
      complex_from_json(j);
      return true;
    }
    if (type == "matrix") {
      matrix_from_json(j);
      return true;
    }
    if (type == "vector") {
      vector_from_json(j);
      return true;
    }
  } catch (const std::exception& e) {
    why = e.what();
    return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

Check le(std::string name, double value, double tol) { return {std::move(name), value, std::nullopt, tol, "<=", value <= tol}; }
Check ge(std::string name, double value, double tol) { return {std::move(name), value, std::nullopt, tol, ">=", value >= tol}; }
Check gt(std::string name, double value, double tol) { return {std::move(name), value, std::nullopt, tol, ">", value > tol}; }
Check near(std::string name, double value, double ref, double tol) {
  return {std::move(name), value, ref, tol, "abs<=", std::abs(value - ref) <= tol};
}
Check rel(std::string name, double value, double ref, double tol) {
  return {std::move(name), value, ref, tol, "rel<=", std::abs(value - ref) <= tol * std::abs(ref)};
}

struct Outcome {
  std::vector<Check> checks;
  std::optional<Series> series;
  json estimates = json::object();

  void estimate(const std::string& name, double mean, double se) { estimates[name] = {{"mean", mean}, {"std_error", se}}; }
};

// ---------------------------------------------------------------------------
// Kinds
// ---------------------------------------------------------------------------

Outcome run_ito_table(const Params&, std::uint64_t) {
  Outcome o;
  const std::vector<HpLabel> L = {HpLabel::dt(), HpLabel::dA(), HpLabel::dAdag(), HpLabel::dLambda()};
  auto expected = [](const HpLabel& a, const HpLabel& b) {
    if (a == HpLabel::dA() && b == HpLabel::dAdag()) return HpDifferential::basis(HpLabel::dt());
    if (a == HpLabel::dLambda() && b == HpLabel::dAdag()) return HpDifferential::basis(HpLabel::dAdag());
    if (a == HpLabel::dA() && b == HpLabel::dLambda()) return HpDifferential::basis(HpLabel::dA());
    if (a == HpLabel::dLambda() && b == HpLabel::dLambda()) return HpDifferential::basis(HpLabel::dLambda());
    return HpDifferential();
  };
  for (const auto& a : L)
    for (const auto& b : L)
      o.checks.push_back(le(a.str() + "*" + b.str(), hp_basis_product(a, b).distance(expected(a, b)), 0.0));
  double assoc = 0.0, adj = 0.0;
  for (const auto& a : L)
    for (const auto& b : L) {
      const auto x = HpDifferential::basis(a), y = HpDifferential::basis(b);
      adj = std::max(adj, hp_mul(x, y).adjoint().distance(hp_mul(y.adjoint(), x.adjoint())));
      for (const auto& c : L) {
        const auto z = HpDifferential::basis(c);
        assoc = std::max(assoc, hp_mul(hp_mul(x, y), z).distance(hp_mul(x, hp_mul(y, z))));
      }
    }
  o.checks.push_back(le("associativity defect", assoc, 0.0));
  o.checks.push_back(le("adjoint anti-homomorphism defect", adj, 0.0));
  return o;
}

Outcome run_swn_table(const Params& p, std::uint64_t) {
  Outcome o;
  const int M = p.integer("max_index"), N = p.integer("levels");
  const auto conv = p.str("stirling") == "signed" ? StirlingConvention::Signed : StirlingConvention::Unsigned;
  std::vector<SwnLabel> labels;
  for (int n = 0; n <= M; ++n)
    for (int k = 0; k <= M; ++k)
      for (int l = 0; l <= M; ++l) labels.push_back(SwnLabel::cons(n, k, l));
  auto rho_of = [N](const SwnDifferential& d) {
    Mat r = Mat::Zero(N, N);
    for (const auto& [label, c] : d.terms())
      if (label.tag == SwnTag::Cons) r += c * rho_plus_matrix(label.n, label.k, label.l, N);
    return r;
  };
  double worst = 0.0;
  for (const auto& a : labels)
    for (const auto& b : labels) {
      const int win = N - std::max(a.n + b.n, 6);
      const Mat expect = rho_plus_matrix(a.n, a.k, a.l, N) * rho_plus_matrix(b.n, b.k, b.l, N);
      const Mat got = rho_of(swn_basis_product(a, b, conv));
      for (int j = 0; j < win; ++j)
        for (int i = 0; i < N; ++i)
          worst = std::max(worst, std::abs(got(i, j) - expect(i, j)) / std::max(1.0, std::abs(expect(i, j))));
    }
  o.checks.push_back(le("representation homomorphism, worst relative error on the safe window", worst, 1e-8));
  const auto bracket = swn_mul(swn_dBminus(), swn_dBplus(), conv) - swn_mul(swn_dBplus(), swn_dBminus(), conv);
  o.checks.push_back(le("[dB-, dB+] - dM", bracket.distance(swn_dM()), 1e-12));
  return o;
}

Outcome run_characteristic(const Params& p, std::uint64_t) {
  Outcome o;
  TruncationConfig cfg;
  cfg.dt = p.real("dt");
  cfg.horizon = p.real("t");
  const auto kind = p.str("noise") == "brownian" ? NoiseKind::Brownian : NoiseKind::Poisson;
  const auto r = characteristic_functional(kind, p.real("s"), p.real("lambda"), p.real("t"), cfg);
  const double tol = 1e-2 * std::abs(r.closed_form);
  o.checks.push_back(near("simulated (real part) vs closed form", r.simulated.real(), r.closed_form.real(), tol));
  o.checks.push_back(near("simulated (imaginary part) vs closed form", r.simulated.imag(), r.closed_form.imag(), tol));
  o.checks.push_back(le("relative error", r.relative_error(), 1e-2));
  return o;
}

Outcome run_weyl(const Params& p, std::uint64_t) {
  Outcome o;
  const auto closed = weyl_increment(p.real("lambda"), p.complex("z"), p.real("k"));
  const auto series = weyl_series(p.real("lambda"), p.complex("z"), p.real("k"), p.integer("n_max"));
  const std::vector<HpLabel> L = {HpLabel::dt(), HpLabel::dA(), HpLabel::dAdag(), HpLabel::dLambda()};
  for (const auto& l : L) {
    o.checks.push_back(near("series coefficient of " + l.str() + " (real)", series.coeff(l).real(), closed.coeff(l).real(), 1e-12));
    o.checks.push_back(near("series coefficient of " + l.str() + " (imag)", series.coeff(l).imag(), closed.coeff(l).imag(), 1e-12));
  }
  o.checks.push_back(le("max coefficient distance", closed.distance(series), 1e-12));
  return o;
}

Outcome run_flow(const Params& p, std::uint64_t) {
  Outcome o;
  const HpEvolutionSpec spec(p.mat("H"), p.mat("L"), p.mat("W"));
  const Mat X = p.mat("X");
  const Vec psi = p.vec("state");
  TruncationConfig cfg;
  cfg.dt = p.real("dt");
  cfg.horizon = p.real("T");
  const auto lind = flow_expectation(spec, X, psi, cfg.horizon, cfg);
  const auto bil = bilinear_flow(spec.coefficients(), psi, psi, cfg.horizon, cfg.dt).series(X);
  const auto unit = flow_expectation(spec, Mat::Identity(spec.dim(), spec.dim()), psi, cfg.horizon, cfg);
  double d = 0.0, u = 0.0;
  for (std::size_t k = 0; k < lind.values.size(); ++k) {
    d = std::max(d, std::abs(lind.values[k] - bil.values[k]));
    u = std::max(u, std::abs(unit.values[k] - psi.squaredNorm()));
  }
  FreeAlgebra alg;
  alg.hermitian("H");
  alg.hermitian("X");
  alg.general("L");
  alg.unitary("W");
  const auto sym = derive_flow_hp(alg, alg.gen("H"), alg.gen("L"), alg.gen("W"), alg.gen("X"));
  o.checks.push_back(le("symbolic generator mismatches", sym.matches ? 0.0 : 1.0, 0.0));
  o.checks.push_back(le("unitality defect", u, 1e-9));
  o.checks.push_back(le("Lindblad ODE vs bilinear engine", d, 1e-10));
  if (const int steps = p.integer("oracle_steps"); steps > 0) {
    TruncationConfig small = cfg;
    small.levels = p.integer("levels");
    small.horizon = steps * cfg.dt;
    const auto q = spec.coefficients();
    const auto tensor = step_tensor_evolution(q, small, 12, psi, psi);
    const auto ode = matrix_element_evolution(q, StepFunction::zero(), StepFunction::zero(), psi, psi, small.horizon, small.dt);
    double w = 0.0;
    for (std::size_t k = 0; k < ode.values.size(); ++k) w = std::max(w, std::abs(tensor.vacuum.values[k] - ode.values[k]));
    o.checks.push_back(le("tensor oracle vs ODE reduction, vacuum matrix element", w, 5e-3));
  }
  Series s{{"t", "re", "im"}, {}};
  for (std::size_t k = 0; k < lind.values.size(); ++k)
    s.rows.push_back({lind.times[k], lind.values[k].real(), lind.values[k].imag()});
  o.series = std::move(s);
  return o;
}

LqProblem lq_problem(const Params& p) {
  LqProblem pr;
  pr.A = p.rmat("A");
  pr.Q = p.rmat("Q");
  pr.Pi_T = p.rmat("Pi_T");
  pr.T = p.real("T");
  return pr;
}

Outcome run_lqr(const Params& p, std::uint64_t seed) {
  Outcome o;
  const LqProblem pr = lq_problem(p);
  const RVec x0 = p.rvec("x0");
  const int steps = p.integer("steps");
  const auto sol = solve_riccati_ode(pr, steps);
  const auto best = lqr_simulate(pr, FeedbackLaw::optimal(), x0, steps);
  o.checks.push_back(near("J(optimal) vs x0' Pi(0) x0", best.cost, x0.dot(sol.Pi[0] * x0), 1e-6));
  auto rng = path_rng(seed, 0);
  std::normal_distribution<double> g(0.0, 0.5);
  for (int i = 0; i < p.integer("perturbations"); ++i) {
    FeedbackLaw law;
    law.delta = RMat(pr.dim(), pr.dim());
    for (Eigen::Index r = 0; r < pr.dim(); ++r)
      for (Eigen::Index c = 0; c < pr.dim(); ++c) law.delta(r, c) = g(rng);
    o.checks.push_back(ge("J(perturbation " + std::to_string(i + 1) + ") - J(optimal)",
                          lqr_simulate(pr, law, x0, steps).cost - best.cost, 0.0));
  }
  Series s;
  s.columns.push_back("t");
  for (Eigen::Index i = 0; i < pr.dim(); ++i) s.columns.push_back("x" + std::to_string(i));
  for (Eigen::Index i = 0; i < pr.dim(); ++i) s.columns.push_back("u" + std::to_string(i));
  for (std::size_t k = 0; k < best.u.size(); ++k) {
    std::vector<double> row{best.t[k]};
    for (Eigen::Index i = 0; i < pr.dim(); ++i) row.push_back(best.x[k](i));
    for (Eigen::Index i = 0; i < pr.dim(); ++i) row.push_back(best.u[k](i));
    s.rows.push_back(std::move(row));
  }
  o.series = std::move(s);
  return o;
}

Outcome run_lqg(const Params& p, std::uint64_t seed) {
  Outcome o;
  LqProblem pr = lq_problem(p);
  pr.C = p.rmat("C");
  pr.H_obs = p.rmat("H_obs");
  pr.obs_noise = p.real("obs_noise");
  const RVec x0 = p.rvec("x0");
  LqgOptions opt;
  opt.steps = p.integer("steps");
  opt.n_paths = p.integer("paths");
  opt.seed = seed;
  const auto best = lqg_simulate(pr, x0, opt);
  o.estimate("J(optimal)", best.mean_cost, best.std_error);
  for (double scale : {0.8, 1.2}) {
    LqgOptions other = opt;
    other.law.scale = scale;
    const auto r = lqg_simulate(pr, x0, other);
    std::ostringstream label;
    label << "J(gain x" << scale << ")";
    o.estimate(label.str(), r.mean_cost, r.std_error);
    const int n = opt.n_paths;
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < n; ++i) mean += r.path_costs[i] - best.path_costs[i];
    mean /= n;
    for (int i = 0; i < n; ++i) var += std::pow(r.path_costs[i] - best.path_costs[i] - mean, 2);
    const double se = std::sqrt(var / (n - 1) / n);
    std::ostringstream name;
    name << "mean J(gain x" << scale << ") - J(optimal), tolerance 2 SE";
    o.checks.push_back(gt(name.str(), mean, 2.0 * se));
  }
  o.checks.push_back(rel("terminal filter error vs covariance", best.filter_mse_T, best.P_T.trace(), 0.15));
  Series s{{"path", "cost"}, {}};
  for (std::size_t i = 0; i < best.path_costs.size(); ++i) s.rows.push_back({static_cast<double>(i), best.path_costs[i]});
  o.series = std::move(s);
  return o;
}

Outcome run_hp_control(const Params& p, std::uint64_t seed) {
  Outcome o;
  const Mat Pi = p.mat("Pi"), X = p.mat("X");
  const auto spec = riccati_consistent_spec(Pi, X, p.mat("Phi"), p.mat("W"), p.mat("A"));
  TruncationConfig cfg;
  cfg.dt = p.real("dt");
  cfg.horizon = p.real("T");
  Vec xi = p.vec("xi");
  const double value = xi.dot(Pi * xi).real();
  o.checks.push_back(le("Riccati condition residual (max of three)",
                        check_hp_riccati_system(Pi, spec.F, spec.Psi, spec.Phi, spec.Z, X).max(), 1e-9));
  o.checks.push_back(near("cost_Q vs <xi, Pi xi>", cost_Q(spec, X, xi, cfg).total(), value, 1e-3));
  auto rng = path_rng(seed, 0);
  std::normal_distribution<double> g;
  const auto n = Pi.rows();
  for (int i = 0; i < p.integer("perturbations"); ++i) {
    Mat M(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) M(r, c) = cplx(g(rng), g(rng));
    GenericQsdeSpec other = spec;
    other.Pi = herm(Pi + 0.1 * M * M.adjoint());
    o.checks.push_back(gt("cost(perturbation " + std::to_string(i + 1) + ") - <xi, Pi xi>",
                          cost_Q(other, X, xi, cfg).total() - value, 0.0));
  }
  return o;
}

Outcome run_swn_control(const Params& p, std::uint64_t) {
  Outcome o;
  const Mat H = p.mat("H"), X = p.mat("X");
  const auto n = H.rows();
  ModuleOperator D(n);
  D.add(SwnLabel::ann(0), p.mat("D0"));
  D.add(SwnLabel::ann(1), p.mat("D1"));
  const ModuleOperator W = ModuleOperator::single(p.mat("W"), SwnLabel::cons(0, 0, 0));
  const ModuleOperator I = ModuleOperator::identity(n);
  const Mat Pi = 0.5 * pairing(D, D.adjoint());
  const ModuleOperator rWDs = r_map(W, D.adjoint());
  const auto r = check_swn_riccati_system(Pi, kI * H, D, cplx(-1.0) * rWDs, W - I, X);
  const Mat expected = kI * commutator(Pi, H) + bracket(rWDs, rWDs.left_mul(Pi)) - Pi * Pi + X * X;
  o.checks.push_back(le("martingale condition residual", r.r2, 1e-12));
  o.checks.push_back(le("conservation condition residual", r.r3, 1e-12));
  o.checks.push_back(near("stationarity residual vs its reduced form", r.r1, expected.norm(), 1e-12));
  o.checks.push_back(le("(r(W)D*|r(W)D*) - (D|D*)", (bracket(rWDs, rWDs) - pairing(D, D.adjoint())).norm(), 1e-12));
  return o;
}

Outcome run_rf_riccati(const Params& p, std::uint64_t seed) {
  Outcome o;
  const Mat F = p.mat("F");
  const auto n = F.rows();
  const Mat Z = Mat::Zero(n, n), I = Mat::Identity(n, n);
  RfProblem pr;
  pr.F = F;
  pr.G = p.mat_or("G", Z);
  pr.L = p.mat_or("L", Z);
  pr.w = p.mat_or("w", Z);
  pr.z = p.mat_or("z", Z);
  pr.F1 = p.mat_or("F1", Z);
  pr.F2 = pr.F1.adjoint();
  pr.Q = p.mat_or("Q", Z);
  pr.R = p.mat_or("R", I);
  pr.m = p.mat_or("m", Z);
  pr.eta = p.mat_or("eta", Z);
  pr.Q_b = p.mat_or("Q_b", Z);
  pr.m_b = p.mat_or("m_b", Z);
  pr.C = p.mat_or("C", I);
  pr.T = p.real("T");
  pr.direction = p.str("direction") == "forward" ? Direction::Forward : Direction::Backward;
  const int steps = p.has("dt") ? static_cast<int>(std::lround(pr.T / p.real("dt"))) : p.integer("n_steps");
  RiccatiOptions ro;
  ro.tol = p.real("tol");
  ro.n_max = p.integer("n_max");
  const LevyPath path = build_levy_surrogate(LevyKind::PlanarBrownian, steps, pr.T / steps, seed, 0);
  const auto it = iterate_riccati(pr, path, ro);
  o.checks.push_back(le("last iteration change", it.last_change, ro.tol));
  o.checks.push_back(le("iteration updates", it.updates(), ro.n_max));
  o.checks.push_back(ge("monotonicity margin", it.monotonicity_margin, -1e-8));
  o.checks.push_back(ge("PSD margin", it.psd_margin, -1e-8));
  o.checks.push_back(le("Hermiticity defect before symmetrization", it.hermiticity_defect, 1e-12));
  o.checks.push_back(le("integral identity defect", residual_integral(pr, it.limit(), path), residual_budget(pr, path, ro.tol)));
  if (p.integer("paths") > 0) {
    OptimalityOptions oo;
    oo.n_paths = p.integer("paths");
    oo.n_steps = steps;
    oo.dt = pr.T / steps;
    oo.seed = seed;
    oo.riccati = ro;
    oo.perturbations = default_perturbations(n);
    const Vec xi = p.has("xi") ? p.vec("xi") : Vec(Vec::Ones(n));
    const auto rep = verify_feedback_optimality(pr, xi, oo);
    o.estimate("J(u*)", rep.optimal_mean, rep.optimal_se);
    for (const auto& q : rep.outcomes) {
      o.estimate("J(" + q.label + ") - J(u*)", q.mean_diff, q.se_diff);
      o.checks.push_back(gt("mean J(" + q.label + ") - J(u*), tolerance 2 SE", q.mean_diff, 2.0 * q.se_diff));
    }
  }
  Series s{{"t", "trace_Pi", "min_eig_Pi"}, {}};
  const auto& P = it.limit().Pi;
  for (std::size_t k = 0; k < P.size(); ++k)
    s.rows.push_back({static_cast<double>(k) * path.dt, P[k].trace().real(), min_eigenvalue(P[k])});
  o.series = std::move(s);
  return o;
}

using Runner = std::function<Outcome(const Params&, std::uint64_t)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r = {
      {"ito-table", run_ito_table},   {"swn-table", run_swn_table},     {"characteristic", run_characteristic},
      {"weyl", run_weyl},             {"flow", run_flow},               {"lqr", run_lqr},
      {"lqg", run_lqg},               {"hp-control", run_hp_control},   {"swn-control", run_swn_control},
      {"rf-riccati", run_rf_riccati}};
  return r;
}

std::string csv_number(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Public interface
// ---------------------------------------------------------------------------

const std::vector<KindInfo>& kinds() {
  static const std::vector<KindInfo> k = build_kinds();
  return k;
}

ParseResult parse_config(const json& raw, const Overrides& ov) {
  ParseResult res;
  auto& err = res.errors;
  if (!raw.is_object()) {
    err.push_back("config: must be a JSON object");
    return res;
  }
  for (const auto& [key, _] : raw.items())
    if (key != "kind" && key != "seed" && key != "params" && key != "output")
      err.push_back(key + ": unknown top-level key; allowed: kind, seed, params, output");

  ExperimentConfig cfg;
  const KindInfo* kind = nullptr;
  std::string allowed;
  for (const auto& k : kinds()) allowed += (allowed.empty() ? "" : ", ") + k.name;
  if (!raw.contains("kind") || !raw["kind"].is_string()) {
    err.push_back("kind: required string; allowed kinds: " + allowed);
  } else {
    cfg.kind = raw["kind"].get<std::string>();
    kind = find_kind(cfg.kind);
    if (!kind) err.push_back("kind: unknown kind '" + cfg.kind + "'; allowed kinds: " + allowed);
  }
  if (raw.contains("seed")) {
    if (raw["seed"].is_number_unsigned()) {
      cfg.seed = raw["seed"].get<std::uint64_t>();
    } else {
      err.push_back("seed: must be a nonnegative 64-bit integer");
    }
  }
  if (ov.seed) cfg.seed = *ov.seed;
  if (raw.contains("output")) {
    const json& out = raw["output"];
    if (!out.is_object()) {
      err.push_back("output: must be an object");
    } else {
      for (const auto& [key, val] : out.items()) {
        if ((key != "report" && key != "series") || !val.is_string()) {
          err.push_back("output." + key + ": expected \"report\" or \"series\" with a file name");
          continue;
        }
        const std::string name = val.get<std::string>();
        if (name.empty() || name.find('/') != std::string::npos)
          err.push_back("output." + key + ": must be a plain file name inside the output directory");
        (key == "report" ? cfg.report_file : cfg.series_file) = name;
      }
    }
  }
  json params = json::object();
  if (raw.contains("params")) {
    if (raw["params"].is_object()) {
      params = raw["params"];
    } else {
      err.push_back("params: must be an object");
    }
  }
  if (!kind) return res;

  for (const auto& [key, _] : params.items()) {
    const bool known = std::any_of(kind->params.begin(), kind->params.end(), [&](const ParamInfo& pi) { return pi.key == key; });
    if (!known) {
      std::string keys;
      for (const auto& pi : kind->params) keys += (keys.empty() ? "" : ", ") + pi.key;
      err.push_back("params." + key + ": unknown key for kind " + kind->name + "; allowed: " + (keys.empty() ? "none" : keys));
    }
  }
  if (ov.paths) {
    if (!kind->uses_paths) {
      err.push_back("--paths: not used by kind " + kind->name);
    } else {
      params["paths"] = *ov.paths;
    }
  }
  if (ov.dt) {
    if (!kind->uses_dt) {
      err.push_back("--dt: not used by kind " + kind->name);
    } else {
      params["dt"] = *ov.dt;
    }
  }
  bool typed = true;
  for (const auto& pi : kind->params) {
    if (!params.contains(pi.key) || params[pi.key].is_null()) {
      if (pi.required) {
        err.push_back("params." + pi.key + ": required (" + pi.type + ")");
        typed = false;
      }
      if (!pi.default_value.is_null()) params[pi.key] = pi.default_value;
      continue;
    }
    std::string why;
    if (!type_ok(pi.type, params[pi.key], why)) {
      err.push_back("params." + pi.key + ": expected " + pi.type + (why.empty() ? "" : " (" + why + ")"));
      typed = false;
    }
  }
  if (typed) {
    const std::size_t before = err.size();
    try {
      validate_kind(kind->name, Params(params), err);
    } catch (const std::exception& e) {
      err.push_back(std::string("params: ") + e.what());
    }
    (void)before;
  }
  if (err.empty()) {
    cfg.params = std::move(params);
    res.config = std::move(cfg);
  }
  return res;
}

ParseResult parse_config_file(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) return {std::nullopt, {path + ": cannot open file"}};
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    return {std::nullopt, {path + ": not valid JSON (" + e.what() + ")"}};
  }
  return parse_config(raw, overrides);
}

std::string Series::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_number(row[i]);
    out += "\n";
  }
  return out;
}

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json RunReport::to_json(bool with_time) const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["version"] = kVersion;
  j["config"] = {{"kind", config.kind}, {"seed", config.seed}, {"params", config.params}};
  json cs = json::array();
  for (const auto& c : checks) {
    json e = {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance},
              {"comparison", c.comparison}, {"pass", c.pass}};
    if (c.reference) e["reference"] = *c.reference;
    cs.push_back(std::move(e));
  }
  j["checks"] = std::move(cs);
  if (!estimates.empty()) j["estimates"] = estimates;
  j["pass"] = passed();
  if (with_time) j["wall_time_s"] = wall_time_s;
  return j;
}

std::string RunReport::checks_csv() const {
  std::string out = "name,value,reference,tolerance,comparison,pass\n";
  for (const auto& c : checks) {
    std::string name = c.name;
    std::replace(name.begin(), name.end(), ',', ';');
    out += name + "," + csv_number(c.value) + "," + (c.reference ? csv_number(*c.reference) : "") + "," +
           csv_number(c.tolerance) + "," + c.comparison + "," + (c.pass ? "true" : "false") + "\n";
  }
  return out;
}

RunReport run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  auto it = runners().find(config.kind);
  require(it != runners().end(), "run: unknown kind " + config.kind);
  Outcome o = it->second(Params(config.params), config.seed);
  RunReport r;
  r.config = config;
  r.checks = std::move(o.checks);
  r.series = std::move(o.series);
  r.estimates = std::move(o.estimates);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string list_text(bool verbose) {
  std::ostringstream s;
  for (const auto& k : kinds()) {
    s << k.name << "  " << k.description << "\n";
    std::string req, optional;
    for (const auto& p : k.params) (p.required ? req : optional) += (p.required ? req : optional).empty() ? p.key : ", " + p.key;
    s << "    required keys: " << (req.empty() ? "none" : req) << "\n";
    if (verbose) {
      s << "    background: " << k.background << "\n";
      for (const auto& p : k.params)
        s << "    " << p.key << " (" << p.type << ", default " << (p.default_value.is_null() ? "none" : p.default_value.dump())
          << "): " << p.help << "\n";
    } else if (!optional.empty()) {
      s << "    optional keys: " << optional << "\n";
    }
  }
  return s.str();
}

json list_json(bool verbose) {
  json arr = json::array();
  for (const auto& k : kinds()) {
    json e = {{"kind", k.name}, {"description", k.description}};
    json req = json::array(), keys = json::array();
    for (const auto& p : k.params) {
      if (p.required) req.push_back(p.key);
      json pk = {{"key", p.key}, {"type", p.type}, {"required", p.required}};
      if (verbose) {
        pk["default"] = p.default_value;
        pk["help"] = p.help;
      }
      keys.push_back(std::move(pk));
    }
    e["required_keys"] = std::move(req);
    e["keys"] = std::move(keys);
    if (verbose) e["background"] = k.background;
    arr.push_back(std::move(e));
  }
  return arr;
}

}  // namespace qsc::cli
