// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "qsc/rf_riccati.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "qsc/free_algebra.hpp"
#include "qsc/random.hpp"

namespace qsc {

namespace {

Mat identity(Eigen::Index n) { return Mat::Identity(n, n); }

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return out;
}

void require_scalar_path(const LevyPath& path, const std::string& op) {
  require(path.kind == LevyKind::PlanarBrownian, op + ": the Fock kind has operator increments; use a scalar path");
  require(path.n_steps >= 1 && path.dt > 0.0, op + ": empty path");
  require(static_cast<int>(path.dM1.size()) == path.n_steps && static_cast<int>(path.dM2.size()) == path.n_steps,
          op + ": increment count does not match n_steps");
}

void require_matching_horizon(const RfProblem& p, const LevyPath& path, const std::string& op) {
  require(std::abs(path.horizon() - p.T) <= 1e-9 * std::max(1.0, p.T),
          op + ": path horizon " + std::to_string(path.horizon()) + " differs from T = " + std::to_string(p.T));
}

Mat noise_w(const RfProblem& p, const LevyPath& path, int k) {
  return path.dM1[k] * (p.F1 * p.w) + path.dM2[k] * (p.F2 * p.w);
}

Mat noise_z(const RfProblem& p, const LevyPath& path, int k) {
  return path.dM1[k] * (p.F1 * p.z) + path.dM2[k] * (p.F2 * p.z);
}

// Σ_{a,b} c₀(a,b) F_a w F_b w with c₀(a,b) = σ_{a*,b}.
Mat ito_drift(const RfProblem& p, const Mat& sigma) {
  const Mat a = p.F1 * p.w, b = p.F2 * p.w;
  return sigma(1, 1) * a * b + sigma(0, 0) * b * a + sigma(1, 0) * a * a + sigma(0, 1) * b * b;
}

// Exact step of Π' = F*Π + ΠF + Q − ΠBΠ written as Π ↦ M0*Π(I + B_dΠ)⁻¹M0 + Q_d.
struct DriftStep {
  Mat B, M0, Bd, Qd, EF;
};

DriftStep drift_step(const RfProblem& p, double h) {
  const Eigen::Index n = p.dim();
  DriftStep d;
  d.B = p.G * p.R.inverse() * p.G.adjoint();
  Mat H(2 * n, 2 * n);
  H << -p.F, d.B, p.Q, p.F.adjoint();
  const Mat E = expm(H * h);
  const Eigen::PartialPivLU<Mat> e11(E.topLeftCorner(n, n));
  d.M0 = e11.inverse();
  d.Bd = herm(d.M0 * E.topRightCorner(n, n));
  d.Qd = herm(E.bottomLeftCorner(n, n) * d.M0);
  d.EF = expm(p.F * h);
  if (!d.M0.allFinite() || !d.Bd.allFinite() || !d.Qd.allFinite())
    throw NumericalError("drift step: Hamiltonian block is singular at dt = " + std::to_string(h));
  return d;
}

// Integration order: Backward problems run k = 0..n−1 from Π(0); forward problems run from Π(T)
// backwards. Step i maps local point i to i+1 and uses the increment noise_index(i).
struct Orientation {
  int n = 0;
  bool reversed = false;
  int noise_index(int i) const { return reversed ? n - 1 - i : i; }
  int grid_index(int local) const { return reversed ? n - local : local; }
};

Orientation orientation(const RfProblem& p, const LevyPath& path) {
  return {path.n_steps, p.direction == Direction::Forward};
}

// Backward problems follow the left-point equation and carry the table drift; forward problems
// evaluate the noise at the already-known later point, which needs no correction.
std::vector<Mat> jumps(const RfProblem& p, const LevyPath& path, const Orientation& o) {
  const Eigen::Index n = p.dim();
  const Mat S = o.reversed ? Mat::Zero(n, n) : Mat(ito_drift(p, path.sigma) * path.dt);
  std::vector<Mat> J(o.n);
  for (int i = 0; i < o.n; ++i) J[i] = identity(n) + noise_w(p, path, o.noise_index(i)) + S;
  return J;
}

struct StepMaps {
  std::vector<Mat> M, source;  // local Π(i+1) = M_i* Π(i) M_i + source_i
};

StepMaps step_maps(const RfProblem& p, const LevyPath& path, const std::vector<Mat>& J, const DriftStep& d,
                   const std::vector<Mat>& Pn_local, RiccatiScheme scheme) {
  const int n = static_cast<int>(J.size());
  const Eigen::Index dim = p.dim();
  const double h = path.dt;
  StepMaps s;
  s.M.resize(n);
  s.source.resize(n);
  for (int i = 0; i < n; ++i) {
    const Mat& P = Pn_local[i];
    if (scheme == RiccatiScheme::DiscreteOptimal) {
      const Mat Y = J[i].adjoint() * P * J[i];
      const Mat gamma = (identity(dim) + Y * d.Bd).partialPivLu().solve(Y * d.M0);
      s.M[i] = J[i] * (d.M0 - d.Bd * gamma);
      s.source[i] = d.Qd + gamma.adjoint() * d.Bd * gamma;
    } else {
      s.M[i] = J[i] + h * (p.F - d.B * P);
      s.source[i] = h * (p.Q + P * d.B * P);
    }
  }
  return s;
}

std::vector<Mat> to_local(const std::vector<Mat>& grid, const Orientation& o) {
  std::vector<Mat> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = grid[o.grid_index(static_cast<int>(i))];
  return out;
}

std::vector<Mat> to_grid(const std::vector<Mat>& local, const Orientation& o) { return to_local(local, o); }

double sup_diff(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, (a[k] - b[k]).norm());
  return m;
}

// ---------------------------------------------------------------------------
// Symbolic noise calculus for the coefficient check. A term is a free-algebra coefficient times an
// ordered word in {dt, dM₁, dM₂}; with ρ = id the coefficients move freely past the increments, so
// every product is collected as (coefficients)(increments).
// ---------------------------------------------------------------------------

enum Letter { kDt = 0, kM1 = 1, kM2 = 2 };
using NoiseWord = std::vector<int>;
using Diff = std::map<NoiseWord, FreeElement>;

struct Table {
  Mat sigma;
  // dM_a dM_b = σ_{a*,b} dt, nothing else survives.
  cplx c0(int a, int b) const { return sigma(a == kM1 ? 1 : 0, b - 1); }
};

void add_term(Diff& d, const NoiseWord& w, const FreeElement& c, const Table& t) {
  NoiseWord word = w;
  FreeElement coef = c;
  if (word.size() >= 2) {
    if (word.size() > 2 || word[0] == kDt || word[1] == kDt) return;
    coef = t.c0(word[0], word[1]) * coef;
    word = {kDt};
  }
  d[word] += coef;
}

Diff mul(const Diff& x, const Diff& y, const Table& t) {
  Diff out;
  for (const auto& [wx, cx] : x) {
    for (const auto& [wy, cy] : y) {
      NoiseWord w = wx;
      w.insert(w.end(), wy.begin(), wy.end());
      add_term(out, w, cx * cy, t);
    }
  }
  return out;
}

Diff add(Diff x, const Diff& y, cplx s = 1.0) {
  for (const auto& [w, c] : y) x[w] += s * c;
  return x;
}

Diff constant(const FreeElement& c) { return {{NoiseWord{}, c}}; }

// (c·dM₁)* = c*·dM₂ and conversely; dt is real.
Diff adjoint(const FreeAlgebra& alg, const Diff& x) {
  Diff out;
  for (const auto& [w, c] : x) {
    NoiseWord r(w.rbegin(), w.rend());
    for (int& l : r) l = l == kM1 ? kM2 : l == kM2 ? kM1 : l;
    out[r] += alg.adjoint(c);
  }
  return out;
}

FreeElement coefficient(const Diff& d, const NoiseWord& w) {
  auto it = d.find(w);
  return it == d.end() ? FreeElement() : it->second;
}

int symbol_id(const FreeAlgebra& alg, const std::string& name) { return alg.gen(name).terms().begin()->first[0]; }

FreeElement substitute(const FreeElement& e, const std::map<int, FreeElement>& rules) {
  FreeElement out;
  for (const auto& [w, c] : e.terms()) {
    FreeElement prod = FreeElement::scalar(c);
    for (int l : w) {
      auto it = rules.find(l);
      prod = prod * (it == rules.end() ? FreeElement::word({l}) : it->second);
    }
    out += prod;
  }
  return out;
}

bool mentions(const FreeElement& e, const std::vector<int>& ids) {
  for (const auto& [w, c] : e.terms())
    for (int l : w)
      if (std::find(ids.begin(), ids.end(), l) != ids.end()) return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Noise paths
// ---------------------------------------------------------------------------

LevyPath LevyPath::zero(int n_steps, double dt) {
  require(n_steps >= 1, "LevyPath::zero: n_steps must be at least 1");
  require(dt > 0.0, "LevyPath::zero: dt must be positive");
  LevyPath p;
  p.n_steps = n_steps;
  p.dt = dt;
  p.dM1.assign(n_steps, cplx(0.0));
  p.dM2.assign(n_steps, cplx(0.0));
  p.sigma = Mat::Identity(2, 2);
  return p;
}

LevyPath build_levy_surrogate(LevyKind kind, int n_steps, double dt, std::uint64_t seed, std::uint64_t path_index) {
  require(n_steps >= 1, "build_levy_surrogate: n_steps must be at least 1");
  require(dt > 0.0, "build_levy_surrogate: dt must be positive");
  LevyPath p;
  p.kind = kind;
  p.n_steps = n_steps;
  p.dt = dt;
  if (kind == LevyKind::PlanarBrownian) {
    auto rng = path_rng(seed, path_index);
    std::normal_distribution<double> g(0.0, std::sqrt(dt));
    p.dM1.resize(n_steps);
    p.dM2.resize(n_steps);
    for (int k = 0; k < n_steps; ++k) {
      const double b1 = g(rng), b2 = g(rng);
      p.dM1[k] = cplx(b1, b2) / std::sqrt(2.0);
      p.dM2[k] = std::conj(p.dM1[k]);
    }
    p.sigma = Mat::Identity(2, 2);
  } else {
    Mat adag = Mat::Zero(2, 2);
    adag(1, 0) = std::sqrt(dt);
    p.fock_dM1.assign(n_steps, adag);
    p.fock_dM2.assign(n_steps, Mat(adag.adjoint()));
    p.sigma = Mat::Zero(2, 2);
    p.sigma(0, 0) = 1.0;
  }
  return p;
}

Mat quadratic_variation(const LevyPath& path) {
  Mat qv = Mat::Zero(2, 2);
  if (path.kind == LevyKind::PlanarBrownian) {
    for (int k = 0; k < path.n_steps; ++k) {
      const std::array<cplx, 2> d{path.dM1[k], path.dM2[k]};
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a) qv(b, a) += std::conj(d[b]) * d[a];
    }
  } else {
    Vec vac = Vec::Zero(2);
    vac(0) = 1.0;
    for (int k = 0; k < path.n_steps; ++k) {
      const std::array<const Mat*, 2> d{&path.fock_dM1[k], &path.fock_dM2[k]};
      for (int b = 0; b < 2; ++b)
        for (int a = 0; a < 2; ++a) qv(b, a) += vac.dot(d[b]->adjoint() * (*d[a]) * vac);
    }
  }
  return qv;
}

LevyPath coarsen(const LevyPath& path) {
  require(path.kind == LevyKind::PlanarBrownian, "coarsen: scalar paths only");
  require(path.n_steps % 2 == 0, "coarsen: n_steps must be even");
  LevyPath c = path;
  c.n_steps = path.n_steps / 2;
  c.dt = 2.0 * path.dt;
  c.dM1.resize(c.n_steps);
  c.dM2.resize(c.n_steps);
  for (int k = 0; k < c.n_steps; ++k) {
    c.dM1[k] = path.dM1[2 * k] + path.dM1[2 * k + 1];
    c.dM2[k] = path.dM2[2 * k] + path.dM2[2 * k + 1];
  }
  return c;
}

double levy_positivity(const Mat& sigma) {
  require(sigma.rows() == 2 && sigma.cols() == 2, "levy_positivity: sigma must be 2x2");
  return sigma.sum().real();
}

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

void RfProblem::validate() const {
  const Eigen::Index n = F.rows();
  require(n >= 1 && F.cols() == n, "RfProblem: F must be square");
  const std::array<std::pair<const Mat*, const char*>, 13> all{{{&G, "G"},
                                                                {&L, "L"},
                                                                {&w, "w"},
                                                                {&z, "z"},
                                                                {&F1, "F1"},
                                                                {&F2, "F2"},
                                                                {&Q, "Q"},
                                                                {&R, "R"},
                                                                {&m, "m"},
                                                                {&eta, "eta"},
                                                                {&Q_b, "Q_b"},
                                                                {&m_b, "m_b"},
                                                                {&C, "C"}}};
  for (const auto& [mat, name] : all)
    require(mat->rows() == n && mat->cols() == n, std::string("RfProblem: ") + name + " must be " +
                                                      std::to_string(n) + "x" + std::to_string(n));
  require(T > 0.0, "RfProblem: T must be positive");
  require(is_hermitian(R, 1e-12), "RfProblem: R must be Hermitian");
  require(min_eigenvalue(R) > 1e-12, "RfProblem: R must be positive definite (min eigenvalue " +
                                         std::to_string(min_eigenvalue(R)) + ")");
  require(is_psd(Q), "RfProblem: Q must be Hermitian PSD");
  require(is_psd(Q_b), "RfProblem: the boundary weight must be Hermitian PSD");
  const double scale = std::max(1.0, F1.norm());
  require((F2 - F1.adjoint()).norm() <= 1e-12 * scale, "RfProblem: F2 must equal F1* for Hermitian Riccati paths");
  require(hermitian_defect(w) <= 1e-12 * std::max(1.0, w.norm()), "RfProblem: w must be Hermitian");
}

RfProblem RfProblem::zero(Eigen::Index n, Direction direction, double T) {
  RfProblem p;
  const Mat O = Mat::Zero(n, n);
  p.F = p.G = p.L = p.w = p.z = p.F1 = p.F2 = p.Q = p.m = p.eta = p.Q_b = p.m_b = O;
  p.R = identity(n);
  p.C = identity(n);
  p.T = T;
  p.direction = direction;
  return p;
}

// ---------------------------------------------------------------------------
// Riccati iteration
// ---------------------------------------------------------------------------

RiccatiIteration iterate_riccati(const RfProblem& problem, const LevyPath& path, const RiccatiOptions& options) {
  problem.validate();
  require_scalar_path(path, "iterate_riccati");
  require_matching_horizon(problem, path, "iterate_riccati");
  require(options.n_max >= 1, "iterate_riccati: n_max must be at least 1");
  require(options.tol > 0.0, "iterate_riccati: tol must be positive");
  const Eigen::Index dim = problem.dim();
  const Mat start = options.start.value_or(problem.Q_b);
  require(start.rows() == dim && start.cols() == dim && is_hermitian(start), "iterate_riccati: start must be Hermitian");

  const Orientation o = orientation(problem, path);
  const std::vector<Mat> J = jumps(problem, path, o);
  const DriftStep d = drift_step(problem, path.dt);

  RiccatiIteration out;
  out.iterates.push_back({std::vector<Mat>(o.n + 1, start), path.dt, 1});
  out.psd_margin = min_eigenvalue(start);
  out.monotonicity_margin = std::numeric_limits<double>::infinity();
  std::vector<Mat> prev = out.iterates.back().Pi;  // local order (constant, so the same)

  for (int it = 0; it < options.n_max; ++it) {
    const StepMaps s = step_maps(problem, path, J, d, prev, options.scheme);
    std::vector<Mat> next(o.n + 1);
    next[0] = problem.Q_b;
    for (int i = 0; i < o.n; ++i) {
      const Mat raw = s.M[i].adjoint() * next[i] * s.M[i] + s.source[i];
      out.hermiticity_defect = std::max(out.hermiticity_defect, hermitian_defect(raw));
      next[i + 1] = herm(raw);
      if (!next[i + 1].allFinite() || next[i + 1].norm() > 1e12)
        throw NumericalError("iterate_riccati: blow-up at step " + std::to_string(i + 1) + " of iteration " +
                             std::to_string(it + 2));
    }
    for (const Mat& P : next) out.psd_margin = std::min(out.psd_margin, min_eigenvalue(P));
    if (it >= 1)
      for (int i = 0; i <= o.n; ++i)
        out.monotonicity_margin = std::min(out.monotonicity_margin, min_eigenvalue(prev[i] - next[i]));
    out.last_change = sup_diff(prev, next);
    out.iterates.push_back({to_grid(next, o), path.dt, it + 2});
    prev = std::move(next);
    if (out.last_change <= options.tol) {
      out.converged = true;
      break;
    }
  }
  if (!std::isfinite(out.monotonicity_margin)) out.monotonicity_margin = 0.0;
  return out;
}

RiccatiPath kernel_update(const RfProblem& problem, const LevyPath& path, const RiccatiPath& Pi_n,
                          RiccatiScheme scheme) {
  problem.validate();
  require_scalar_path(path, "kernel_update");
  require(problem.direction == Direction::Backward, "kernel_update: backward (initial-weight) problems only");
  require(static_cast<int>(Pi_n.Pi.size()) == path.n_steps + 1, "kernel_update: Pi_n is not on the path grid");
  const int n = path.n_steps;
  const Eigen::Index dim = problem.dim();
  if (n > 2000 || dim > 4)
    throw ResourceLimit("kernel_update: triangular kernel limited to n_steps <= 2000 and dim <= 4 (got " +
                        std::to_string(n) + ", " + std::to_string(dim) + ")");
  const Orientation o = orientation(problem, path);
  const StepMaps s = step_maps(problem, path, jumps(problem, path, o), drift_step(problem, path.dt), Pi_n.Pi, scheme);

  // K[k][j] = K_n(t_k, t_j) = M_{k−1}* ⋯ M_j*, K[k][k] = I.
  std::vector<std::vector<Mat>> K(n + 1);
  for (int k = 0; k <= n; ++k) {
    K[k].resize(k + 1);
    K[k][k] = identity(dim);
    if (k > 0)
      for (int j = 0; j < k; ++j) K[k][j] = s.M[k - 1].adjoint() * K[k - 1][j];
  }
  RiccatiPath out{std::vector<Mat>(n + 1), path.dt, Pi_n.iteration + 1};
  for (int k = 0; k <= n; ++k) {
    Mat P = K[k][0] * problem.Q_b * K[k][0].adjoint();
    for (int j = 0; j < k; ++j) P += K[k][j + 1] * s.source[j] * K[k][j + 1].adjoint();
    out.Pi[k] = herm(P);
  }
  return out;
}

double residual_integral(const RfProblem& problem, const RiccatiPath& Pi, const LevyPath& path) {
  problem.validate();
  require_scalar_path(path, "residual_integral");
  require(static_cast<int>(Pi.Pi.size()) == path.n_steps + 1, "residual_integral: Pi is not on the path grid");
  const Orientation o = orientation(problem, path);
  const std::vector<Mat> J = jumps(problem, path, o);
  const DriftStep d = drift_step(problem, path.dt);
  const std::vector<Mat> P = to_local(Pi.Pi, o);
  const double h = path.dt;
  auto src = [&](const Mat& Y) { return Mat(problem.Q - Y * d.B * Y); };

  Mat V = problem.Q_b;
  double defect = (P[0] - V).norm();
  for (int i = 0; i < o.n; ++i) {
    const Mat Y = J[i].adjoint() * P[i] * J[i];
    const Mat step = J[i] * d.EF;
    V = herm(step.adjoint() * V * step + 0.5 * h * (d.EF.adjoint() * src(Y) * d.EF + src(P[i + 1])));
    defect = std::max(defect, (P[i + 1] - V).norm());
  }
  return defect;
}

double residual_budget(const RfProblem& problem, const LevyPath& path, double tol) {
  return 10.0 * tol + problem.T * path.dt;
}

// ---------------------------------------------------------------------------
// Affine term, feedback, state and cost
// ---------------------------------------------------------------------------

std::vector<Mat> solve_r(const RfProblem& problem, const RiccatiPath& Pi, const LevyPath& path) {
  problem.validate();
  require_scalar_path(path, "solve_r");
  const int n = path.n_steps;
  require(static_cast<int>(Pi.Pi.size()) == n + 1, "solve_r: Pi is not on the path grid");
  const Eigen::Index dim = problem.dim();
  const double h = path.dt;
  const Mat Rinv = problem.R.inverse();
  const Mat B = problem.G * Rinv * problem.G.adjoint();
  const Mat Ge = problem.G * Rinv * problem.eta.adjoint();
  auto drift = [&](const Mat& P, const Mat& r) {
    return Mat(h * (problem.F.adjoint() * r - P * B * r + P * problem.L + problem.m.adjoint() - P * Ge));
  };

  std::vector<Mat> r(n + 1);
  if (problem.direction == Direction::Backward) {
    // (I − N*)dr = D + N*r + ΠN_z + dΠN_z − N*ΠN_z − N*dΠN_z
    r[0] = problem.m_b.adjoint();
    for (int k = 0; k < n; ++k) {
      const Mat Ns = noise_w(problem, path, k).adjoint();
      const Mat Nz = noise_z(problem, path, k);
      const Mat& P = Pi.Pi[k];
      const Mat dP = Pi.Pi[k + 1] - P;
      const Mat rhs = drift(P, r[k]) + Ns * r[k] + P * Nz + dP * Nz - Ns * P * Nz - Ns * dP * Nz;
      r[k + 1] = r[k] + (identity(dim) - Ns).partialPivLu().solve(rhs);
    }
  } else {
    // (I + N*)dr = −(D + N*r + ΠN_z + dΠN_z + N*ΠN_z + N*dΠN_z), coefficients at the known later point
    r[n] = problem.m_b.adjoint();
    for (int k = n - 1; k >= 0; --k) {
      const Mat Ns = noise_w(problem, path, k).adjoint();
      const Mat Nz = noise_z(problem, path, k);
      const Mat& P = Pi.Pi[k + 1];
      const Mat dP = Pi.Pi[k + 1] - Pi.Pi[k];
      const Mat rhs = drift(P, r[k + 1]) + Ns * r[k + 1] + P * Nz + dP * Nz + Ns * P * Nz + Ns * dP * Nz;
      r[k] = r[k + 1] + (identity(dim) + Ns).partialPivLu().solve(rhs);
    }
  }
  return r;
}

Mat AffineControl::at(std::size_t k, const Mat& X) const { return gain[k] * X + offset[k]; }

AffineControl AffineControl::zero(Eigen::Index n, int n_steps) {
  AffineControl c;
  c.gain.assign(n_steps, Mat::Zero(n, n));
  c.offset.assign(n_steps, Mat::Zero(n, n));
  return c;
}

Mat feedback_control(const RfProblem& problem, const Mat& Pi, const Mat& r, const Mat& X) {
  const Eigen::PartialPivLU<Mat> R(problem.R);
  return -R.solve(problem.G.adjoint() * (Pi * X + r) + problem.eta.adjoint());
}

AffineControl optimal_control(const RfProblem& problem, const RiccatiPath& Pi, const std::vector<Mat>& r) {
  require(r.size() == Pi.Pi.size(), "optimal_control: r and Pi differ in length");
  const int n = static_cast<int>(Pi.Pi.size()) - 1;
  const Eigen::PartialPivLU<Mat> R(problem.R);
  AffineControl c;
  c.gain.resize(n);
  c.offset.resize(n);
  for (int k = 0; k < n; ++k) {
    c.gain[k] = -R.solve(problem.G.adjoint() * Pi.Pi[k]);
    c.offset[k] = -R.solve(problem.G.adjoint() * r[k] + problem.eta.adjoint());
  }
  return c;
}

StatePath simulate_state(const RfProblem& problem, const AffineControl& control, const LevyPath& path) {
  problem.validate();
  require_scalar_path(path, "simulate_state");
  const int n = path.n_steps;
  require(static_cast<int>(control.gain.size()) == n && static_cast<int>(control.offset.size()) == n,
          "simulate_state: control is not on the path grid");
  const Eigen::Index dim = problem.dim();
  const double h = path.dt;
  StatePath s;
  s.X.resize(n + 1);
  s.u.resize(n);
  if (problem.direction == Direction::Forward) {
    s.X[0] = problem.C;
    for (int k = 0; k < n; ++k) {
      const Mat& X = s.X[k];
      s.u[k] = control.at(k, X);
      s.X[k + 1] = X + h * (problem.F * X + problem.G * s.u[k] + problem.L) + noise_w(problem, path, k) * X +
                   noise_z(problem, path, k);
    }
  } else {
    // X_{k+1} = X_k − dt(FX_k + Gu_k + L) − N_k X_k − N_z,k with u_k = Λ_k X_k + λ_k, solved for X_k.
    s.X[n] = problem.C;
    for (int k = n - 1; k >= 0; --k) {
      const Mat A = identity(dim) - h * (problem.F + problem.G * control.gain[k]) - noise_w(problem, path, k);
      const Mat rhs = s.X[k + 1] + h * (problem.G * control.offset[k] + problem.L) + noise_z(problem, path, k);
      s.X[k] = A.partialPivLu().solve(rhs);
      s.u[k] = control.at(k, s.X[k]);
    }
  }
  return s;
}

double path_cost(const RfProblem& problem, const StatePath& state, const Vec& xi, double dt) {
  require(xi.size() == problem.dim(), "path_cost: xi has the wrong dimension");
  const int n = static_cast<int>(state.u.size());
  double running = 0.0;
  for (int k = 0; k < n; ++k) {
    const Vec x = state.X[k] * xi, v = state.u[k] * xi;
    running += (x.dot(problem.Q * x) + v.dot(problem.R * v)).real() +
               2.0 * ((problem.m * x).dot(xi) + (problem.eta * v).dot(xi)).real();
  }
  const Vec xb = (problem.direction == Direction::Forward ? state.X[n] : state.X[0]) * xi;
  const double boundary = xb.dot(problem.Q_b * xb).real() + 2.0 * (problem.m_b * xb).dot(xi).real();
  return dt * running + boundary;
}

CostEstimate cost_tilde(const RfProblem& problem, const ControlRule& rule, const Vec& xi,
                        const std::vector<LevyPath>& paths) {
  require(xi.norm() > 0.0, "cost_tilde: xi must be nonzero");
  CostEstimate out;
  out.per_path.reserve(paths.size());
  for (const LevyPath& path : paths)
    out.per_path.push_back(path_cost(problem, simulate_state(problem, rule(path), path), xi, path.dt));
  const MeanSe ms = mean_se(out.per_path);
  out.mean = ms.mean;
  out.std_error = ms.se;
  return out;
}

// ---------------------------------------------------------------------------
// Optimality
// ---------------------------------------------------------------------------

bool OptimalityReport::all_dominated() const {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const PerturbationOutcome& o) { return o.dominated; });
}

std::vector<Perturbation> default_perturbations(Eigen::Index n) {
  const Mat I = identity(n), E = Mat::Ones(n, n);
  return {{"offset +0.3", 1.0, 0.3 * I},       {"offset -0.3", 1.0, -0.3 * I},
          {"offset +0.3i", 1.0, 0.3 * kI * I}, {"offset -0.3i", 1.0, -0.3 * kI * I},
          {"offset +0.2 ones", 1.0, 0.2 * E},  {"offset -0.2 ones", 1.0, -0.2 * E},
          {"gain x0.5", 0.5, Mat()},           {"gain x0.8", 0.8, Mat()},
          {"gain x1.2", 1.2, Mat()},           {"gain x1.5", 1.5, Mat()}};
}

OptimalityReport verify_feedback_optimality(const RfProblem& problem, const Vec& xi, const OptimalityOptions& options) {
  problem.validate();
  require(xi.size() == problem.dim() && xi.norm() > 0.0, "verify_feedback_optimality: xi must be a nonzero vector");
  require(options.n_paths >= 2, "verify_feedback_optimality: need at least two paths");
  require(std::abs(options.n_steps * options.dt - problem.T) <= 1e-9 * problem.T,
          "verify_feedback_optimality: n_steps * dt must equal T");
  const auto& perts = options.perturbations;
  const std::size_t np = perts.size();
  const int n = options.n_steps;
  const double h = options.dt;
  const bool fwd = problem.direction == Direction::Forward;

  std::vector<double> j0(options.n_paths);
  std::vector<std::vector<double>> jp(np, std::vector<double>(options.n_paths));
  std::vector<std::vector<double>> diff(np, std::vector<double>(options.n_paths));
  std::vector<std::vector<double>> kre(np, std::vector<double>(options.n_paths));
  std::vector<std::vector<double>> quad(np, std::vector<double>(options.n_paths));
  OptimalityReport rep;
  rep.outcomes.resize(np);

  for (int p = 0; p < options.n_paths; ++p) {
    const LevyPath path = build_levy_surrogate(LevyKind::PlanarBrownian, n, h, options.seed, p);
    const RiccatiIteration it = iterate_riccati(problem, path, options.riccati);
    rep.all_converged = rep.all_converged && it.converged;
    rep.max_riccati_updates = std::max(rep.max_riccati_updates, it.updates());
    const std::vector<Mat> r = solve_r(problem, it.limit(), path);
    const AffineControl u0 = optimal_control(problem, it.limit(), r);
    const StatePath Y = simulate_state(problem, u0, path);
    j0[p] = path_cost(problem, Y, xi, h);

    for (std::size_t q = 0; q < np; ++q) {
      AffineControl u = u0;
      for (int k = 0; k < n; ++k) {
        u.gain[k] *= perts[q].gain_scale;
        if (perts[q].offset.size() != 0) u.offset[k] += perts[q].offset;
      }
      const StatePath X = simulate_state(problem, u, path);
      jp[q][p] = path_cost(problem, X, xi, h);
      diff[q][p] = jp[q][p] - j0[p];

      cplx K = 0.0;
      double qd = 0.0;
      for (int k = 0; k < n; ++k) {
        const Vec xh = (X.X[k] - Y.X[k]) * xi, y = Y.X[k] * xi;
        const Vec du = (X.u[k] - Y.u[k]) * xi, v0 = Y.u[k] * xi;
        K += h * (xh.dot(problem.Q * y) + du.dot(problem.R * v0) + xh.dot(problem.m.adjoint() * xi) +
                  du.dot(problem.eta.adjoint() * xi));
        qd += h * (xh.dot(problem.Q * xh) + du.dot(problem.R * du)).real();
      }
      const int b = fwd ? n : 0;
      const Vec xb = (X.X[b] - Y.X[b]) * xi, yb = Y.X[b] * xi;
      K += xb.dot(problem.m_b.adjoint() * xi) + xb.dot(problem.Q_b * yb);
      qd += xb.dot(problem.Q_b * xb).real();
      kre[q][p] = 2.0 * K.real();
      quad[q][p] = qd;
      PerturbationOutcome& o = rep.outcomes[q];
      o.decomposition_residual = std::max(o.decomposition_residual, std::abs(diff[q][p] - qd - kre[q][p]));
    }
  }

  const MeanSe m0 = mean_se(j0);
  rep.optimal_mean = m0.mean;
  rep.optimal_se = m0.se;
  for (std::size_t q = 0; q < np; ++q) {
    PerturbationOutcome& o = rep.outcomes[q];
    o.label = perts[q].label;
    o.mean_cost = mean_se(jp[q]).mean;
    const MeanSe d = mean_se(diff[q]);
    o.mean_diff = d.mean;
    o.se_diff = d.se;
    o.dominated = d.mean > options.significance * d.se;
    const MeanSe k = mean_se(kre[q]);
    o.K_mean = k.mean;
    o.K_se = k.se;
    o.quad_mean = mean_se(quad[q]).mean;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Time reversal
// ---------------------------------------------------------------------------

std::pair<RfProblem, LevyPath> time_reverse(const RfProblem& problem, const LevyPath& path) {
  problem.validate();
  require_scalar_path(path, "time_reverse");
  RfProblem rp = problem;
  rp.direction = problem.direction == Direction::Forward ? Direction::Backward : Direction::Forward;
  LevyPath q = path;
  std::reverse(q.dM1.begin(), q.dM1.end());
  std::reverse(q.dM2.begin(), q.dM2.end());
  q.sigma = -path.sigma;
  return {rp, q};
}

RiccatiPath reverse(const RiccatiPath& Pi) {
  RiccatiPath out = Pi;
  std::reverse(out.Pi.begin(), out.Pi.end());
  return out;
}

// ---------------------------------------------------------------------------
// Coefficient check
// ---------------------------------------------------------------------------

CoefficientCheck riccati_coefficient_check(Direction direction, const Mat& sigma, bool drop_noise, bool drop_w,
                                           bool transpose_stated) {
  require(sigma.rows() == 2 && sigma.cols() == 2, "riccati_coefficient_check: sigma must be 2x2");
  const double s = direction == Direction::Forward ? 1.0 : -1.0;
  FreeAlgebra alg;
  for (const char* h : {"Pi", "Rinv", "Q"}) alg.hermitian(h);
  for (const char* g : {"F", "G", "w", "F1", "F2", "A", "B1", "B2"}) alg.general(g);
  const FreeElement Pi = alg.gen("Pi"), F = alg.gen("F"), G = alg.gen("G"), Q = alg.gen("Q");
  const FreeElement w = drop_w ? FreeElement() : alg.gen("w");
  const FreeElement F1 = drop_noise ? FreeElement() : alg.gen("F1");
  const FreeElement F2 = drop_noise ? FreeElement() : alg.gen("F2");
  const FreeElement B = G * alg.gen("Rinv") * alg.adjoint(G);
  auto adj = [&](const FreeElement& x) { return alg.adjoint(x); };

  const Table table{sigma};
  const Diff N = {{NoiseWord{kM1}, F1 * w}, {NoiseWord{kM2}, F2 * w}};
  const Diff Ns = adjoint(alg, N);
  const Diff P = constant(Pi);
  const Diff dPi = {{NoiseWord{kDt}, alg.gen("A")}, {NoiseWord{kM1}, alg.gen("B1")}, {NoiseWord{kM2}, alg.gen("B2")}};
  const Diff D0 = {{NoiseWord{kDt}, adj(F) * Pi + Pi * F + Q - Pi * B * Pi}};
  const Diff Nid = add(N, constant(alg.one()), s);
  Diff E = add(D0, add(mul(Ns, P, table), mul(P, N, table)));
  E = add(E, mul(mul(Ns, P, table), N, table), s);
  E = add(E, mul(mul(adjoint(alg, Nid), dPi, table), Nid, table), s);

  const int idA = symbol_id(alg, "A"), idB1 = symbol_id(alg, "B1"), idB2 = symbol_id(alg, "B2");
  CoefficientCheck out;
  std::ostringstream rep;
  // dM_J coefficient: known + s·B_J.
  const FreeElement k1 = coefficient(E, {kM1}) - s * alg.gen("B1");
  const FreeElement k2 = coefficient(E, {kM2}) - s * alg.gen("B2");
  if (mentions(k1, {idA, idB1, idB2}) || mentions(k2, {idA, idB1, idB2}) ||
      mentions(coefficient(E, {}), {idA, idB1, idB2}) || !coefficient(E, {}).is_zero()) {
    out.report = "noise coefficients are not of the form known + s*B_J";
    return out;
  }
  const FreeElement B1 = -s * k1, B2 = -s * k2;
  const FreeElement kA = substitute(coefficient(E, {kDt}), {{idB1, B1}, {idB2, B2}}) - s * alg.gen("A");
  if (mentions(kA, {idA, idB1, idB2})) {
    out.report = "drift coefficient is not of the form known + s*A";
    return out;
  }
  const FreeElement A = -s * kA;

  // Expanded two-noise form with ρ = id.
  const Mat sg = transpose_stated ? Mat(sigma.transpose()) : sigma;
  const cplx s11 = sg(0, 0), s12 = sg(0, 1), s21 = sg(1, 0), s22 = sg(1, 1);
  const FreeElement a1 = F1 * w, a2 = F2 * w;
  const FreeElement S = s11 * (a2 * a1) + s12 * (a2 * a2) + s22 * (a1 * a2) + s21 * (a1 * a1);
  const FreeElement quadratic = s11 * (adj(w) * adj(F1) * Pi * F1 * w) + s12 * (adj(w) * adj(F1) * Pi * F2 * w) +
                                s22 * (adj(w) * adj(F2) * Pi * F2 * w) + s21 * (adj(w) * adj(F2) * Pi * F1 * w);
  const FreeElement A_st = adj(-s * F + S) * Pi + (-s * (Pi * F) + Pi * S) + quadratic - s * Q + s * (Pi * B * Pi);
  const FreeElement B1_st = -s * (adj(w) * adj(F2) * Pi + Pi * F1 * w);
  const FreeElement B2_st = -s * (adj(w) * adj(F1) * Pi + Pi * F2 * w);

  out.derived_A = alg.str(A);
  out.derived_B1 = alg.str(B1);
  out.derived_B2 = alg.str(B2);
  out.stated_A = alg.str(A_st);
  out.stated_B1 = alg.str(B1_st);
  out.stated_B2 = alg.str(B2_st);
  const bool mA = alg.equal(A, A_st), m1 = alg.equal(B1, B1_st), m2 = alg.equal(B2, B2_st);
  out.matches = mA && m1 && m2;
  rep << (direction == Direction::Forward ? "forward" : "backward") << " branch: drift "
      << (mA ? "matches" : "differs") << ", dM1 " << (m1 ? "matches" : "differs") << ", dM2 "
      << (m2 ? "matches" : "differs");
  if (!out.matches) {
    rep << "\n  derived A  = " << out.derived_A << "\n  stated A   = " << out.stated_A
        << "\n  derived B1 = " << out.derived_B1 << "\n  stated B1  = " << out.stated_B1
        << "\n  derived B2 = " << out.derived_B2 << "\n  stated B2  = " << out.stated_B2;
  }
  out.report = rep.str();
  return out;
}

}  // namespace qsc
