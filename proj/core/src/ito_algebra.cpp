// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "qsc/ito_algebra.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace qsc {

namespace {

std::int64_t mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw NumericalError("integer overflow in structure constant");
  return r;
}

std::int64_t addc(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw NumericalError("integer overflow in structure constant");
  return r;
}

std::int64_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = mul(r, n - k + i) / i;
  return r;
}

void require_nonnegative(int v, const char* what) {
  if (v < 0) throw InvalidArgument(std::string(what) + ": indices must be nonnegative");
}

}  // namespace

// ---------------------------------------------------------------------------
// Labels

HpLabel HpLabel::adjoint() const {
  switch (tag) {
    case HpTag::Ann: return dAdag();
    case HpTag::Cre: return dA();
    default: return *this;
  }
}

std::string HpLabel::str() const {
  switch (tag) {
    case HpTag::Time: return "dt";
    case HpTag::Ann: return "dA";
    case HpTag::Cre: return "dA+";
    case HpTag::Cons: return "dL";
  }
  return "?";
}

SwnLabel SwnLabel::ann(int m) {
  require_nonnegative(m, "SwnLabel::ann");
  return {SwnTag::Ann, m, 0, 0};
}

SwnLabel SwnLabel::cre(int m) {
  require_nonnegative(m, "SwnLabel::cre");
  return {SwnTag::Cre, m, 0, 0};
}

SwnLabel SwnLabel::cons(int n, int k, int l) {
  require_nonnegative(std::min({n, k, l}), "SwnLabel::cons");
  return {SwnTag::Cons, n, k, l};
}

int SwnLabel::max_index() const { return std::max({n, k, l}); }

SwnLabel SwnLabel::adjoint() const {
  switch (tag) {
    case SwnTag::Ann: return cre(n);
    case SwnTag::Cre: return ann(n);
    case SwnTag::Cons: return cons(l, k, n);
    default: return *this;
  }
}

std::string SwnLabel::str() const {
  switch (tag) {
    case SwnTag::Time: return "dt";
    case SwnTag::Ann: return "dA_" + std::to_string(n);
    case SwnTag::Cre: return "dA+_" + std::to_string(n);
    case SwnTag::Cons:
      return "dL_{" + std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(l) + "}";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Combinatorics

std::int64_t stirling1(int n, int k, StirlingConvention conv) {
  require_nonnegative(std::min(n, k), "stirling1");
  if (k > n) return 0;
  std::vector<std::int64_t> row(n + 1, 0);
  row[0] = 1;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j >= 0; --j) {
      const std::int64_t left = j > 0 ? row[j - 1] : 0;
      const std::int64_t here = j <= i ? row[j] : 0;
      row[j] = addc(left, mul(-i, here));
    }
  }
  return conv == StirlingConvention::Signed ? row[k] : std::abs(row[k]);
}

FactorialPowers factorial_powers(std::int64_t x, int n) {
  require_nonnegative(n, "factorial_powers");
  FactorialPowers p{1, 1};
  for (int i = 0; i < n; ++i) {
    p.falling = mul(p.falling, x - i);
    p.rising = mul(p.rising, x + i);
  }
  return p;
}

std::int64_t ipow(std::int64_t x, int e) {
  require_nonnegative(e, "ipow");
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r = mul(r, x);
  return r;
}

std::int64_t theta_integer_part(int n, int k, int l, int m) {
  require_nonnegative(std::min({n, k, l, m}), "theta");
  if (n + m - l < 0) return 0;
  const std::int64_t base = m - l + 1;
  std::int64_t v = ipow(2, k);
  v = mul(v, factorial_powers(base, n).rising);
  v = mul(v, factorial_powers(m + 1, l).falling);
  v = mul(v, ipow(base, k));
  return v;
}

double theta(int n, int k, int l, int m) {
  require_nonnegative(std::min({n, k, l, m}), "theta");
  if (n + m - l < 0) return 0.0;
  const double root = std::sqrt(static_cast<double>(m - l + n + 1) / static_cast<double>(m + 1));
  try {
    const std::int64_t ip = theta_integer_part(n, k, l, m);
    return ip == 0 ? 0.0 : root * static_cast<double>(ip);
  } catch (const NumericalError&) {
    // integer part beyond int64: same factors in extended precision
    long double v = std::ldexp(1.0L, k);
    const long double base = m - l + 1;
    for (int i = 0; i < n; ++i) v *= base + i;
    for (int i = 0; i < l; ++i) v *= static_cast<long double>(m + 1 - i);
    for (int i = 0; i < k; ++i) v *= base;
    return static_cast<double>(static_cast<long double>(root) * v);
  }
}

Mat rho_plus_matrix(int n, int k, int l, int N) {
  require(N >= 1, "rho_plus_matrix: truncation size must be >= 1");
  Mat r = Mat::Zero(N, N);
  for (int m = 0; m < N; ++m) {
    const int row = n + m - l;
    if (row >= 0 && row < N) r(row, m) = theta(n, k, l, m);
  }
  return r;
}

std::map<SwnLabel, std::int64_t> cons_product(const SwnLabel& left, const SwnLabel& right,
                                              StirlingConvention conv) {
  require(left.tag == SwnTag::Cons && right.tag == SwnTag::Cons,
          "cons_product: both labels must be Cons");
  const int alpha = left.n, beta = left.k, gamma = left.l;
  const int a = right.n, b = right.k, c = right.l;
  std::map<SwnLabel, std::int64_t> out;
  for (int lam = 0; lam <= gamma; ++lam) {
    const std::int64_t f_lead = factorial_powers(a, gamma - lam).falling;
    if (f_lead == 0) continue;
    const int shift = a + alpha - gamma + lam;
    for (int rho = 0; rho <= gamma - lam; ++rho) {
      const std::int64_t f_rho = factorial_powers(a + lam - 1, rho).falling;
      if (f_rho == 0) continue;
      for (int sigma = 0; sigma <= gamma - lam - rho; ++sigma) {
        const std::int64_t s = stirling1(gamma - lam - rho, sigma, conv);
        if (s == 0) continue;
        for (int omega = 0; omega <= beta; ++omega) {
          for (int eps = 0; eps <= b; ++eps) {
            std::int64_t v = mul(binom(gamma, lam), binom(gamma - lam, rho));
            v = mul(v, mul(binom(beta, omega), binom(b, eps)));
            v = mul(v, ipow(2, beta + b - omega - eps));
            v = mul(v, s);
            v = mul(v, mul(f_lead, f_rho));
            v = mul(v, ipow(a - gamma + lam, beta - omega));
            v = mul(v, ipow(lam, b - eps));
            if (v == 0) continue;
            if (shift < 0) throw NumericalError("cons_product: negative raising index with nonzero coefficient");
            const SwnLabel key = SwnLabel::cons(shift, omega + sigma + eps, lam + c);
            auto& slot = out[key];
            slot = addc(slot, v);
            if (slot == 0) out.erase(key);
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Itô tables

HpDifferential hp_basis_product(const HpLabel& a, const HpLabel& b) {
  if (a.tag == HpTag::Ann && b.tag == HpTag::Cre) return HpDifferential::basis(HpLabel::dt());
  if (a.tag == HpTag::Cons && b.tag == HpTag::Cre) return HpDifferential::basis(HpLabel::dAdag());
  if (a.tag == HpTag::Ann && b.tag == HpTag::Cons) return HpDifferential::basis(HpLabel::dA());
  if (a.tag == HpTag::Cons && b.tag == HpTag::Cons) return HpDifferential::basis(HpLabel::dLambda());
  return {};
}

HpDifferential hp_mul(const HpDifferential& a, const HpDifferential& b) {
  HpDifferential out;
  for (const auto& [la, ca] : a.terms()) {
    for (const auto& [lb, cb] : b.terms()) {
      const HpDifferential p = hp_basis_product(la, lb);
      for (const auto& [lc, cc] : p.terms()) out.add(lc, ca * cb * cc);
    }
  }
  return out;
}

SwnDifferential swn_basis_product(const SwnLabel& a, const SwnLabel& b, StirlingConvention conv) {
  SwnDifferential out;
  if (a.tag == SwnTag::Cons && b.tag == SwnTag::Cons) {
    for (const auto& [label, c] : cons_product(a, b, conv)) out.add(label, static_cast<double>(c));
  } else if (a.tag == SwnTag::Cons && b.tag == SwnTag::Cre) {
    const int target = a.n + b.n - a.l;
    const double th = theta(a.n, a.k, a.l, b.n);
    if (target >= 0 && th != 0.0) out.add(SwnLabel::cre(target), th);
  } else if (a.tag == SwnTag::Ann && b.tag == SwnTag::Cons) {
    const int target = b.l + a.n - b.n;
    const double th = theta(b.l, b.k, b.n, a.n);
    if (target >= 0 && th != 0.0) out.add(SwnLabel::ann(target), th);
  } else if (a.tag == SwnTag::Ann && b.tag == SwnTag::Cre) {
    if (a.n == b.n) out.add(SwnLabel::time(), 1.0);
  }
  return out;
}

SwnDifferential swn_mul(const SwnDifferential& a, const SwnDifferential& b,
                        StirlingConvention conv) {
  SwnDifferential out;
  for (const auto& [la, ca] : a.terms()) {
    for (const auto& [lb, cb] : b.terms()) {
      const SwnDifferential p = swn_basis_product(la, lb, conv);
      for (const auto& [lc, cc] : p.terms()) {
        out.add(lc, ca * cb * cc);
      }
    }
  }
  return out;
}

SwnDifferential swn_dM() {
  SwnDifferential d = SwnDifferential::basis(SwnLabel::cons(0, 1, 0));
  d.add(SwnLabel::time(), 1.0);
  return d;
}

SwnDifferential swn_dBplus() {
  SwnDifferential d = SwnDifferential::basis(SwnLabel::cons(1, 0, 0));
  d.add(SwnLabel::cre(0), 1.0);
  return d;
}

SwnDifferential swn_dBminus() {
  SwnDifferential d = SwnDifferential::basis(SwnLabel::cons(0, 0, 1));
  d.add(SwnLabel::ann(0), 1.0);
  return d;
}

// ---------------------------------------------------------------------------
// Module operators

ModuleOperator ModuleOperator::single(const Mat& a, const SwnLabel& label) {
  require_square(a, "ModuleOperator::single");
  ModuleOperator op(a.rows());
  op.add(label, a);
  return op;
}

ModuleOperator ModuleOperator::identity(Eigen::Index dim) {
  return single(Mat::Identity(dim, dim), SwnLabel::cons(0, 0, 0));
}

void ModuleOperator::add(const SwnLabel& label, const Mat& a) {
  require(label.tag != SwnTag::Time, "ModuleOperator: Time label is not allowed");
  if (a.rows() != dim_ || a.cols() != dim_) {
    throw InvalidArgument("ModuleOperator::add: system matrix is " + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()) + ", expected dimension " +
                          std::to_string(dim_));
  }
  auto [it, inserted] = terms_.try_emplace(label, a);
  if (!inserted) it->second += a;
  if (it->second.cwiseAbs().maxCoeff() == 0.0) terms_.erase(it);
}

Mat ModuleOperator::coeff(const SwnLabel& label) const {
  auto it = terms_.find(label);
  return it == terms_.end() ? Mat::Zero(dim_, dim_) : it->second;
}

int ModuleOperator::max_index() const {
  int m = 0;
  for (const auto& [label, a] : terms_) m = std::max(m, label.max_index());
  return m;
}

bool ModuleOperator::only(SwnTag tag) const {
  for (const auto& [label, a] : terms_) {
    if (label.tag != tag) return false;
  }
  return true;
}

ModuleOperator ModuleOperator::adjoint() const {
  ModuleOperator out(dim_);
  for (const auto& [label, a] : terms_) out.add(label.adjoint(), a.adjoint());
  return out;
}

ModuleOperator ModuleOperator::left_mul(const Mat& a) const {
  ModuleOperator out(dim_);
  for (const auto& [label, m] : terms_) out.add(label, a * m);
  return out;
}

ModuleOperator ModuleOperator::right_mul(const Mat& a) const {
  ModuleOperator out(dim_);
  for (const auto& [label, m] : terms_) out.add(label, m * a);
  return out;
}

ModuleOperator ModuleOperator::pruned(double tol) const {
  ModuleOperator out(dim_);
  for (const auto& [label, m] : terms_) {
    if (m.norm() > tol) out.add(label, m);
  }
  return out;
}

double ModuleOperator::distance(const ModuleOperator& other) const {
  require(dim_ == other.dim_, "ModuleOperator::distance: dimension mismatch");
  double d = 0.0;
  for (const auto& [label, m] : terms_) d = std::max(d, (m - other.coeff(label)).norm());
  for (const auto& [label, m] : other.terms_) d = std::max(d, (m - coeff(label)).norm());
  return d;
}

ModuleOperator& ModuleOperator::operator+=(const ModuleOperator& o) {
  require(dim_ == o.dim_, "ModuleOperator: dimension mismatch in sum");
  for (const auto& [label, m] : o.terms_) add(label, m);
  return *this;
}

ModuleOperator& ModuleOperator::operator-=(const ModuleOperator& o) {
  require(dim_ == o.dim_, "ModuleOperator: dimension mismatch in difference");
  for (const auto& [label, m] : o.terms_) add(label, -m);
  return *this;
}

ModuleOperator operator*(cplx s, const ModuleOperator& a) {
  ModuleOperator out(a.dim());
  for (const auto& [label, m] : a.terms()) out.add(label, s * m);
  return out;
}

namespace {

void require_dims(const ModuleOperator& a, const ModuleOperator& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument(std::string(what) + ": system dimensions differ (" +
                          std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

ModuleOperator circ(const ModuleOperator& d1, const ModuleOperator& e1) {
  require_dims(d1, e1, "circ");
  require(d1.only(SwnTag::Cons) && e1.only(SwnTag::Cons), "circ: operands must be Cons-labelled");
  ModuleOperator out(d1.dim());
  for (const auto& [ld, md] : d1.terms()) {
    for (const auto& [le, me] : e1.terms()) {
      const Mat prod = md * me;
      for (const auto& [label, c] : cons_product(ld, le)) out.add(label, static_cast<double>(c) * prod);
    }
  }
  return out;
}

Mat pairing(const ModuleOperator& dminus, const ModuleOperator& dplus) {
  require_dims(dminus, dplus, "pairing");
  require(dminus.only(SwnTag::Ann) && dplus.only(SwnTag::Cre),
          "pairing: expects Ann-labelled left and Cre-labelled right operands");
  Mat out = Mat::Zero(dminus.dim(), dminus.dim());
  for (const auto& [label, m] : dminus.terms()) out += m * dplus.coeff(SwnLabel::cre(label.n));
  return out;
}

ModuleOperator r_map(const ModuleOperator& d1, const ModuleOperator& dplus) {
  require_dims(d1, dplus, "r_map");
  require(d1.only(SwnTag::Cons) && dplus.only(SwnTag::Cre), "r_map: expects Cons and Cre operands");
  ModuleOperator out(d1.dim());
  for (const auto& [lc, mc] : d1.terms()) {
    for (const auto& [lp, mp] : dplus.terms()) {
      const int target = lp.n + lc.n - lc.l;
      const double th = theta(lc.n, lc.k, lc.l, lp.n);
      if (target < 0 || th == 0.0) continue;
      out.add(SwnLabel::cre(target), th * (mc * mp));
    }
  }
  return out;
}

ModuleOperator l_map(const ModuleOperator& e1, const ModuleOperator& dminus) {
  require_dims(e1, dminus, "l_map");
  require(e1.only(SwnTag::Cons) && dminus.only(SwnTag::Ann), "l_map: expects Cons and Ann operands");
  ModuleOperator out(e1.dim());
  for (const auto& [lc, mc] : e1.terms()) {
    for (const auto& [lm, mm] : dminus.terms()) {
      const int target = lm.n - lc.n + lc.l;
      const double th = theta(lc.l, lc.k, lc.n, lm.n);
      if (target < 0 || th == 0.0) continue;
      out.add(SwnLabel::ann(target), th * (mm * mc));
    }
  }
  return out;
}

Mat rho_plus(const ModuleOperator& op, int N) {
  require(op.only(SwnTag::Cons), "rho_plus: Cons labels only");
  const Eigen::Index d = op.dim();
  Mat out = Mat::Zero(d * N, d * N);
  for (const auto& [label, m] : op.terms()) {
    out += Eigen::kroneckerProduct(m, rho_plus_matrix(label.n, label.k, label.l, N)).eval();
  }
  return out;
}

double ModuleDifferential::distance(const ModuleDifferential& o) const {
  require(dim() == o.dim(), "ModuleDifferential::distance: dimension mismatch");
  return std::max({(dt - o.dt).norm(), ann.distance(o.ann), cre.distance(o.cre),
                   cons.distance(o.cons)});
}

ModuleDifferential module_ito_mul(const ModuleDifferential& x, const ModuleDifferential& y) {
  require(x.dim() == y.dim(), "module_ito_mul: system dimensions differ");
  ModuleDifferential out(x.dim());
  out.dt = pairing(x.ann, y.cre);
  out.cons = circ(x.cons, y.cons);
  out.cre = r_map(x.cons, y.cre);
  out.ann = l_map(y.cons, x.ann);
  return out;
}

SwnDifferential scalar_image(const ModuleDifferential& x) {
  require(x.dim() == 1, "scalar_image: system dimension must be 1");
  SwnDifferential out;
  out.add(SwnLabel::time(), x.dt(0, 0));
  for (const ModuleOperator* part : {&x.ann, &x.cre, &x.cons}) {
    for (const auto& [label, m] : part->terms()) out.add(label, m(0, 0));
  }
  return out;
}

ModuleDifferential from_scalar(const SwnDifferential& d) {
  ModuleDifferential out(1);
  for (const auto& [label, c] : d.terms()) {
    const Mat m = Mat::Constant(1, 1, c);
    switch (label.tag) {
      case SwnTag::Time: out.dt += m; break;
      case SwnTag::Ann: out.ann.add(label, m); break;
      case SwnTag::Cre: out.cre.add(label, m); break;
      case SwnTag::Cons: out.cons.add(label, m); break;
    }
  }
  return out;
}

}  // namespace qsc
