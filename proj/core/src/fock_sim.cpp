// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "qsc/fock_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

namespace qsc {

namespace {

int grid_steps(double T, double dt) {
  require(T >= 0.0 && std::isfinite(T), "horizon must be finite and nonnegative");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  const double n = std::round(T / dt);
  if (std::abs(n * dt - T) > 1e-12 * std::max(1.0, T)) {
    throw InvalidArgument("horizon " + std::to_string(T) + " is not an integer multiple of dt " +
                          std::to_string(dt));
  }
  return static_cast<int>(n);
}

// Rejects knots that fall strictly inside a step: the RK4 step assumes f, g constant.
void require_aligned(const StepFunction& f, double dt) {
  for (double t : f.knots()) {
    const double r = t / dt;
    if (std::abs(r - std::round(r)) > 1e-9) {
      throw InvalidArgument("test-function knot " + std::to_string(t) + " is not on the dt grid");
    }
  }
}

template <class State, class Deriv>
State rk4_step(const State& y, double h, const Deriv& f) {
  const State k1 = f(y);
  const State k2 = f(y + (0.5 * h) * k1);
  const State k3 = f(y + (0.5 * h) * k2);
  const State k4 = f(y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Mat generator_at(const MultiModeQsde& q, const Vec& fbar, const Vec& g) {
  Mat A = q.K;
  for (int i = 0; i < q.modes(); ++i) {
    A += g(i) * q.F[i] + fbar(i) * q.G[i];
    for (int j = 0; j < q.modes(); ++j) A += fbar(i) * g(j) * q.E[i][j];
  }
  return A;
}

void validate_multimode(const MultiModeQsde& q) {
  require_square(q.K, "K");
  const Eigen::Index n = q.dim();
  const auto K = static_cast<std::size_t>(q.modes());
  require(q.G.size() == K && q.E.size() == K, "mode counts of E, F, G differ");
  for (std::size_t i = 0; i < K; ++i) {
    require(q.F[i].rows() == n && q.F[i].cols() == n, "F dimension mismatch");
    require(q.G[i].rows() == n && q.G[i].cols() == n, "G dimension mismatch");
    require(q.E[i].size() == K, "E must be K×K blocks");
    for (const Mat& e : q.E[i]) require(e.rows() == n && e.cols() == n, "E dimension mismatch");
  }
}

// One term c·A Y B of a Heisenberg generator.
struct Sandwich {
  cplx c;
  Mat A, B;
};

// Generator of Y ↦ U*YU paired with exponential vectors (f, g) at one instant.
std::vector<Sandwich> heisenberg_terms(const MultiModeQsde& q, const Vec& fbar, const Vec& g) {
  const int K = q.modes();
  const Mat I = Mat::Identity(q.dim(), q.dim());
  std::vector<Sandwich> t;
  t.push_back({1.0, q.K.adjoint(), I});
  t.push_back({1.0, I, q.K});
  for (int a = 0; a < K; ++a) t.push_back({1.0, q.G[a].adjoint(), q.G[a]});
  for (int i = 0; i < K; ++i) {
    if (g(i) != cplx(0.0)) {
      t.push_back({g(i), q.G[i].adjoint(), I});
      t.push_back({g(i), I, q.F[i]});
      for (int a = 0; a < K; ++a) t.push_back({g(i), q.G[a].adjoint(), q.E[a][i]});
    }
    if (fbar(i) != cplx(0.0)) {
      t.push_back({fbar(i), q.F[i].adjoint(), I});
      t.push_back({fbar(i), I, q.G[i]});
      for (int a = 0; a < K; ++a) t.push_back({fbar(i), q.E[a][i].adjoint(), q.G[a]});
    }
    for (int j = 0; j < K; ++j) {
      const cplx w = fbar(i) * g(j);
      if (w == cplx(0.0)) continue;
      t.push_back({w, q.E[j][i].adjoint(), I});
      t.push_back({w, I, q.E[i][j]});
      for (int a = 0; a < K; ++a) t.push_back({w, q.E[a][i].adjoint(), q.E[a][j]});
    }
  }
  return t;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

void TruncationConfig::validate() const {
  require(levels >= 2, "levels_per_mode must be at least 2");
  require(swn_modes >= 1, "swn_modes must be at least 1");
  require(horizon > 0.0, "horizon must be positive");
  grid_steps(horizon, dt);
}

int TruncationConfig::steps() const {
  validate();
  return grid_steps(horizon, dt);
}

MultiModeQsde MultiModeQsde::from(const QsdeCoefficients& c) {
  return MultiModeQsde{{{c.E}}, {c.F}, {c.G}, c.K};
}

HpEvolutionSpec::HpEvolutionSpec(Mat h, Mat l, Mat w) : H(std::move(h)), L(std::move(l)), W(std::move(w)) {
  require_square(H, "H");
  require_same_dim(H, L, "L");
  require_same_dim(H, W, "W");
  require(is_hermitian(H), "H must be Hermitian");
  if (!is_unitary(W)) {
    throw InvalidArgument("W must be unitary (defect " + std::to_string(unitary_defect(W)) + ")");
  }
}

QsdeCoefficients HpEvolutionSpec::coefficients() const {
  const Mat I = Mat::Identity(dim(), dim());
  return {W - I, -L.adjoint() * W, L, -(kI * H + 0.5 * L.adjoint() * L)};
}

GenericQsdeSpec::GenericQsdeSpec(Mat f, Mat psi, Mat phi, Mat z, std::optional<Mat> pi)
    : F(std::move(f)), Psi(std::move(psi)), Phi(std::move(phi)), Z(std::move(z)), Pi(std::move(pi)) {
  require_square(F, "F");
  require_same_dim(F, Psi, "Psi");
  require_same_dim(F, Phi, "Phi");
  require_same_dim(F, Z, "Z");
  if (Pi) {
    require_same_dim(F, *Pi, "Pi");
    require(is_hermitian(*Pi) && is_psd(*Pi), "Pi must be Hermitian PSD");
  }
}

QsdeCoefficients GenericQsdeSpec::coefficients() const {
  return {Z, Psi, Phi, Pi ? Mat(F - *Pi) : F};
}

// ---------------------------------------------------------------------------

StepFunction::StepFunction(std::vector<double> knots, std::vector<Vec> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  require(knots_.size() >= 2, "step function needs at least two knots");
  require(values_.size() + 1 == knots_.size(), "step function needs one value per interval");
  require(knots_.front() >= 0.0, "step function must live on [0, ∞)");
  for (std::size_t i = 1; i < knots_.size(); ++i) require(knots_[i] > knots_[i - 1], "knots must increase");
  modes_ = static_cast<int>(values_.front().size());
  require(modes_ >= 1, "step function values must be nonempty");
  for (const Vec& v : values_) require(v.size() == modes_, "step function values differ in length");
}

StepFunction StepFunction::zero(int modes) {
  StepFunction f;
  f.modes_ = modes;
  return f;
}

StepFunction StepFunction::constant(cplx c, double T) {
  return StepFunction({0.0, T}, {Vec::Constant(1, c)});
}

Vec StepFunction::at(double t) const {
  if (knots_.size() >= 2 && t >= knots_.front() && t < knots_.back()) {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }
  return Vec::Zero(modes_);
}

cplx inner(const StepFunction& f, const StepFunction& g) {
  require(f.modes() == g.modes(), "test functions differ in mode count");
  std::vector<double> grid = f.knots_;
  grid.insert(grid.end(), g.knots_.begin(), g.knots_.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  cplx s = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double mid = 0.5 * (grid[i - 1] + grid[i]);
    s += (grid[i] - grid[i - 1]) * f.at(mid).dot(g.at(mid));
  }
  return s;
}

std::string ExpectationSeries::to_csv() const {
  std::string out = "t,re,im\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    out += fmt(times[i]) + "," + fmt(values[i].real()) + "," + fmt(values[i].imag()) + "\n";
  }
  return out;
}

ExpectationSeries BilinearFlow::series(const Mat& Y) const {
  ExpectationSeries s;
  s.times = times;
  for (std::size_t k = 0; k < S.size(); ++k) s.values.push_back(expectation(k, Y));
  return s;
}

// ---------------------------------------------------------------------------

ExpectationSeries matrix_element_evolution(const MultiModeQsde& q, const StepFunction& f,
                                           const StepFunction& g, const Vec& u, const Vec& v,
                                           double T, double dt) {
  validate_multimode(q);
  require(u.size() == q.dim() && v.size() == q.dim(), "system vectors must match the system dimension");
  require(f.modes() == q.modes() && g.modes() == q.modes(), "test functions must have one entry per mode");
  const int n = grid_steps(T, dt);
  require_aligned(f, dt);
  require_aligned(g, dt);

  ExpectationSeries out;
  Vec w = std::exp(inner(f, g)) * v;
  out.times.push_back(0.0);
  out.values.push_back(u.dot(w));
  for (int k = 0; k < n; ++k) {
    const double mid = (k + 0.5) * dt;
    const Mat A = generator_at(q, f.at(mid).conjugate(), g.at(mid));
    w = rk4_step<Vec>(w, dt, [&](const Vec& y) -> Vec { return A * y; });
    out.times.push_back((k + 1) * dt);
    out.values.push_back(u.dot(w));
  }
  return out;
}

ExpectationSeries matrix_element_evolution(const QsdeCoefficients& q, const StepFunction& f,
                                           const StepFunction& g, const Vec& u, const Vec& v,
                                           double T, double dt) {
  return matrix_element_evolution(MultiModeQsde::from(q), f, g, u, v, T, dt);
}

BilinearFlow bilinear_flow(const MultiModeQsde& q, const StepFunction& f, const StepFunction& g,
                           const Vec& u, const Vec& v, double T, double dt) {
  validate_multimode(q);
  require(u.size() == q.dim() && v.size() == q.dim(), "system vectors must match the system dimension");
  require(f.modes() == q.modes() && g.modes() == q.modes(), "test functions must have one entry per mode");
  const int n = grid_steps(T, dt);
  require_aligned(f, dt);
  require_aligned(g, dt);

  BilinearFlow out;
  Mat S = std::exp(inner(f, g)) * (v * u.adjoint());
  out.times.push_back(0.0);
  out.S.push_back(S);
  for (int k = 0; k < n; ++k) {
    const double mid = (k + 0.5) * dt;
    const auto terms = heisenberg_terms(q, f.at(mid).conjugate(), g.at(mid));
    // tr(S·A Y B) = tr(B S A · Y)
    S = rk4_step<Mat>(S, dt, [&](const Mat& s) -> Mat {
      Mat d = Mat::Zero(s.rows(), s.cols());
      for (const auto& t : terms) d += t.c * (t.B * s * t.A);
      return d;
    });
    out.times.push_back((k + 1) * dt);
    out.S.push_back(S);
  }
  return out;
}

BilinearFlow bilinear_flow(const QsdeCoefficients& q, const Vec& u, const Vec& v, double T, double dt) {
  return bilinear_flow(MultiModeQsde::from(q), StepFunction::zero(), StepFunction::zero(), u, v, T, dt);
}

// ---------------------------------------------------------------------------

Mat ladder_annihilation(int d) {
  require(d >= 2, "need at least two levels");
  Mat a = Mat::Zero(d, d);
  for (int j = 1; j < d; ++j) a(j - 1, j) = std::sqrt(static_cast<double>(j));
  return a;
}

double ccr_truncation_defect(int d, double dt) {
  const Mat dA = std::sqrt(dt) * ladder_annihilation(d);
  const Mat dAd = dA.adjoint();
  Mat expected = dt * Mat::Identity(d, d);
  expected(d - 1, d - 1) -= dt * d;
  return (commutator(dA, dAd) - expected).norm();
}

TensorRun step_tensor_evolution(const QsdeCoefficients& q, const TruncationConfig& config,
                                int n_steps_max, const Vec& u, const Vec& v) {
  config.validate();
  const int steps = config.steps();
  const int d = config.levels;
  const Eigen::Index n = q.dim();
  require(u.size() == n && v.size() == n, "system vectors must match the system dimension");
  if (steps > n_steps_max) {
    throw ResourceLimit("tensor oracle needs " + std::to_string(steps) + " fresh modes, limit is " +
                        std::to_string(n_steps_max));
  }
  double required = static_cast<double>(n) * static_cast<double>(n);
  for (int k = 0; k < steps; ++k) required *= d;
  if (required > static_cast<double>(config.max_amplitudes)) {
    throw ResourceLimit("tensor oracle needs " + fmt(required) + " amplitudes (" +
                        fmt(required * sizeof(cplx)) + " bytes), budget is " +
                        std::to_string(config.max_amplitudes) + " amplitudes");
  }

  const double dt = config.dt;
  const Mat a = std::sqrt(dt) * ladder_annihilation(d);
  const Mat ad = a.adjoint();
  const Mat num = ladder_annihilation(d).adjoint() * ladder_annihilation(d);
  const Mat I = Mat::Identity(n, n);
  // (system factor, image of the fresh vacuum)
  const std::vector<std::pair<Mat, Vec>> ops = {
      {I + dt * q.K, Vec::Unit(d, 0)},
      {q.E, num.col(0)},
      {q.F, a.col(0)},
      {q.G, ad.col(0)},
  };

  // Rows index system ⊗ consumed modes with the system slowest; columns are basis inputs.
  Mat psi = I;
  Eigen::Index tail = 1;
  TensorRun run;
  auto record = [&](double t) {
    Vec vac(n);
    for (Eigen::Index s = 0; s < n; ++s) vac(s) = (psi.row(s * tail) * v)(0);
    run.vacuum.times.push_back(t);
    run.vacuum.values.push_back(u.dot(vac));
    const Mat gram = psi.adjoint() * psi - I;
    run.defects.push_back(gram.cwiseAbs().maxCoeff() == 0.0 ? 0.0
                                                           : gram.jacobiSvd().singularValues()(0));
    run.amplitudes = std::max(run.amplitudes, static_cast<std::size_t>(psi.size()));
  };
  record(0.0);
  for (int k = 0; k < steps; ++k) {
    Mat next = Mat::Zero(psi.rows() * d, n);
    for (const auto& [sys, fresh] : ops) {
      if (sys.norm() == 0.0 || fresh.norm() == 0.0) continue;
      for (Eigen::Index c = 0; c < n; ++c) {
        // column viewed as (tail × n) in column-major order: element (rest, s)
        Eigen::Map<const Mat> col(psi.col(c).data(), tail, n);
        const Mat img = col * sys.transpose();
        Eigen::Map<Mat> out(next.col(c).data(), d, tail * n);
        const Eigen::Map<const Eigen::RowVectorXcd> flat(img.data(), tail * n);
        out += fresh * flat;
      }
    }
    psi = std::move(next);
    tail *= d;
    record((k + 1) * dt);
  }
  return run;
}

// ---------------------------------------------------------------------------

HpDifferential weyl_increment(double lambda, cplx z, double k) {
  HpDifferential d;
  if (k == 0.0) {
    d.add(HpLabel::dt(), kI * lambda - 0.5 * std::norm(z));
    d.add(HpLabel::dA(), kI * z);
    d.add(HpLabel::dAdag(), kI * std::conj(z));
    return d;
  }
  const cplx M = std::exp(kI * k) - 1.0 - kI * k;
  d.add(HpLabel::dt(), kI * lambda + std::norm(z) / (k * k) * M);
  d.add(HpLabel::dA(), kI * z + z / k * M);
  d.add(HpLabel::dAdag(), kI * std::conj(z) + std::conj(z) / k * M);
  d.add(HpLabel::dLambda(), kI * k + M);
  return d;
}

HpDifferential weyl_series(double lambda, cplx z, double k, int n_max) {
  require(n_max >= 1, "series needs at least one term");
  HpDifferential dE;
  dE.add(HpLabel::dt(), lambda);
  dE.add(HpLabel::dA(), z);
  dE.add(HpLabel::dAdag(), std::conj(z));
  dE.add(HpLabel::dLambda(), k);
  HpDifferential power = dE;
  HpDifferential sum;
  cplx c = kI;
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) {
      power = hp_mul(power, dE);
      c *= kI / static_cast<double>(n);
    }
    sum += c * power;
  }
  return sum;
}

CharacteristicResult characteristic_functional(NoiseKind kind, double s, double lambda, double t,
                                               const TruncationConfig& config) {
  require(t >= 0.0 && t <= config.horizon + 1e-12, "t must lie in [0, horizon]");
  require(kind == NoiseKind::Brownian || lambda > 0.0, "Poisson intensity must be positive");
  // U = e^{isX_t} has dU = U·[weyl increment]; the vacuum reduces to the scalar dt coefficient.
  const HpDifferential inc = kind == NoiseKind::Brownian
                                 ? weyl_increment(0.0, s, 0.0)
                                 : weyl_increment(s * lambda, s * std::sqrt(lambda), s);
  auto scalar = [](cplx c) { return Mat::Constant(1, 1, c); };
  const QsdeCoefficients q{scalar(inc.coeff(HpLabel::dLambda())), scalar(inc.coeff(HpLabel::dA())),
                           scalar(inc.coeff(HpLabel::dAdag())), scalar(inc.coeff(HpLabel::dt()))};
  const int n = std::max(1, static_cast<int>(std::ceil(t / config.dt - 1e-9)));
  const Vec one = Vec::Ones(1);
  const auto series = matrix_element_evolution(q, StepFunction::zero(), StepFunction::zero(), one,
                                               one, t, t > 0.0 ? t / n : config.dt);
  const cplx closed = kind == NoiseKind::Brownian ? std::exp(-0.5 * s * s * t)
                                                  : std::exp(lambda * (std::exp(kI * s) - 1.0) * t);
  return {series.values.back(), closed};
}

ExpectationSeries flow_expectation(const HpEvolutionSpec& spec, const Mat& X, const Vec& state,
                                   double T, const TruncationConfig& config) {
  require_same_dim(spec.H, X, "X");
  require(is_hermitian(X), "X must be Hermitian");
  require(state.size() == spec.dim(), "state must match the system dimension");
  const int n = grid_steps(T, config.dt);
  const Mat& H = spec.H;
  const Mat& L = spec.L;
  const Mat LL = L.adjoint() * L;
  auto lindblad = [&](const Mat& rho) -> Mat {
    return -kI * commutator(H, rho) + L * rho * L.adjoint() - 0.5 * (LL * rho + rho * LL);
  };
  Mat rho = state * state.adjoint();
  ExpectationSeries out;
  out.times.push_back(0.0);
  out.values.push_back((rho * X).trace());
  for (int k = 0; k < n; ++k) {
    rho = rk4_step<Mat>(rho, config.dt, lindblad);
    out.times.push_back((k + 1) * config.dt);
    out.values.push_back((rho * X).trace());
  }
  return out;
}

double unitarity_defect(const HpEvolutionSpec& spec, const TruncationConfig& config, int n_steps_max) {
  const Vec e0 = Vec::Unit(spec.dim(), 0);
  const auto run = step_tensor_evolution(spec.coefficients(), config, n_steps_max, e0, e0);
  return *std::max_element(run.defects.begin(), run.defects.end());
}

// ---------------------------------------------------------------------------

SwnEvolutionSpec::SwnEvolutionSpec(Mat h, ModuleOperator dminus, ModuleOperator w)
    : H(std::move(h)), Dminus(std::move(dminus)), W(std::move(w)) {
  require_square(H, "H");
  require(is_hermitian(H), "H must be Hermitian");
  require(Dminus.dim() == H.rows() && W.dim() == H.rows(), "module coefficients must match the system dimension");
  require(Dminus.only(SwnTag::Ann), "D₋ must carry annihilation labels only");
  require(W.only(SwnTag::Cons), "W must carry conservation labels only");
}

MultiModeQsde SwnEvolutionSpec::to_multimode(int K) const {
  require(K >= 1, "multiplicity truncation must be at least 1");
  const Eigen::Index n = dim();
  for (const auto& [label, m] : Dminus.terms()) {
    if (label.mode() >= K) {
      throw InvalidArgument("D₋ index " + label.str() + " escapes the truncation K=" + std::to_string(K));
    }
  }
  for (const auto& [label, m] : W.terms()) {
    for (int j = 0; j < K; ++j) {
      if (theta(label.n, label.k, label.l, j) != 0.0 && label.n + j - label.l >= K) {
        throw InvalidArgument("W label " + label.str() + " maps e_" + std::to_string(j) +
                              " outside the truncation K=" + std::to_string(K));
      }
    }
  }
  const ModuleOperator Dplus = r_map(W, Dminus.adjoint());
  for (const auto& [label, m] : Dplus.terms()) {
    if (label.mode() >= K) {
      throw InvalidArgument("r(W)D₋* index " + label.str() + " escapes the truncation K=" + std::to_string(K));
    }
  }

  MultiModeQsde q;
  q.K = -0.5 * pairing(Dminus, Dminus.adjoint()) + kI * H;
  const Mat big = rho_plus(W - ModuleOperator::identity(n), K);
  q.E.assign(K, std::vector<Mat>(K, Mat::Zero(n, n)));
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index r = 0; r < n; ++r) q.E[i][j](s, r) = big(s * K + i, r * K + j);
      }
    }
    q.F.push_back(Dminus.coeff(SwnLabel::ann(i)));
    q.G.push_back(-Dplus.coeff(SwnLabel::cre(i)));
  }
  return q;
}

ExpectationSeries swn_simulate(const SwnEvolutionSpec& spec, const Mat& X, const Vec& state,
                               const TruncationConfig& config) {
  config.validate();
  require_same_dim(spec.H, X, "X");
  require(state.size() == spec.dim(), "state must match the system dimension");
  const MultiModeQsde q = spec.to_multimode(config.swn_modes);
  const auto zero = StepFunction::zero(config.swn_modes);
  return bilinear_flow(q, zero, zero, state, state, config.horizon, config.dt).series(X);
}

}  // namespace qsc
