// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qsc/linalg.hpp"

namespace qsc {

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

enum class HpTag : std::uint8_t { Time, Ann, Cre, Cons };

/// Basis differential of the first-order table: dt, dA, dA†, dΛ.
struct HpLabel {
  HpTag tag = HpTag::Time;

  static HpLabel dt() { return {HpTag::Time}; }
  static HpLabel dA() { return {HpTag::Ann}; }
  static HpLabel dAdag() { return {HpTag::Cre}; }
  static HpLabel dLambda() { return {HpTag::Cons}; }

  HpLabel adjoint() const;
  std::string str() const;
  auto operator<=>(const HpLabel&) const = default;
};

enum class SwnTag : std::uint8_t { Time, Ann, Cre, Cons };

/// Basis differential of the square-of-white-noise table.
/// Ann/Cre carry their mode index in `n`; Cons(n,k,l) is dΛ(ρ⁺(B⁺ⁿ Mᵏ B⁻ˡ)).
struct SwnLabel {
  SwnTag tag = SwnTag::Time;
  int n = 0;
  int k = 0;
  int l = 0;

  static SwnLabel time() { return {SwnTag::Time, 0, 0, 0}; }
  static SwnLabel ann(int m);
  static SwnLabel cre(int m);
  static SwnLabel cons(int n, int k, int l);

  int mode() const { return n; }
  /// Largest index carried by the label.
  int max_index() const;
  SwnLabel adjoint() const;
  std::string str() const;
  auto operator<=>(const SwnLabel&) const = default;
};

// ---------------------------------------------------------------------------
// Symbolic differentials
// ---------------------------------------------------------------------------

/// Finite linear combination of basis labels. Zero coefficients are never stored.
template <class Label>
class Differential {
 public:
  using Map = std::map<Label, cplx>;

  Differential() = default;
  static Differential basis(const Label& label, cplx c = 1.0) {
    Differential d;
    d.add(label, c);
    return d;
  }

  void add(const Label& label, cplx c) {
    if (c == cplx(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(label, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx(0.0)) terms_.erase(it);
    }
  }

  cplx coeff(const Label& label) const {
    auto it = terms_.find(label);
    return it == terms_.end() ? cplx(0.0) : it->second;
  }

  const Map& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  Differential adjoint() const {
    Differential out;
    for (const auto& [label, c] : terms_) out.add(label.adjoint(), std::conj(c));
    return out;
  }

  /// Drops coefficients with modulus below tol.
  Differential pruned(double tol) const {
    Differential out;
    for (const auto& [label, c] : terms_) {
      if (std::abs(c) > tol) out.add(label, c);
    }
    return out;
  }

  /// Largest coefficient-wise modulus of the difference.
  double distance(const Differential& other) const {
    double d = 0.0;
    for (const auto& [label, c] : terms_) d = std::max(d, std::abs(c - other.coeff(label)));
    for (const auto& [label, c] : other.terms_) d = std::max(d, std::abs(c - coeff(label)));
    return d;
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::string s;
    for (const auto& [label, c] : terms_) {
      if (!s.empty()) s += " + ";
      s += "(" + std::to_string(c.real()) + (c.imag() < 0 ? "" : "+") + std::to_string(c.imag()) +
           "i)" + label.str();
    }
    return s;
  }

  Differential& operator+=(const Differential& o) {
    for (const auto& [label, c] : o.terms_) add(label, c);
    return *this;
  }
  Differential& operator-=(const Differential& o) {
    for (const auto& [label, c] : o.terms_) add(label, -c);
    return *this;
  }
  Differential& operator*=(cplx s) {
    if (s == cplx(0.0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [label, c] : terms_) c *= s;
    return *this;
  }

  friend Differential operator+(Differential a, const Differential& b) { return a += b; }
  friend Differential operator-(Differential a, const Differential& b) { return a -= b; }
  friend Differential operator*(Differential a, cplx s) { return a *= s; }
  friend Differential operator*(cplx s, Differential a) { return a *= s; }
  friend bool operator==(const Differential& a, const Differential& b) {
    return a.terms_ == b.terms_;
  }

 private:
  Map terms_;
};

using HpDifferential = Differential<HpLabel>;
using SwnDifferential = Differential<SwnLabel>;

// ---------------------------------------------------------------------------
// Combinatorics and the sl(2) representation
// ---------------------------------------------------------------------------

enum class StirlingConvention { Signed, Unsigned };

/// Stirling numbers of the first kind. Signed s(n,k) by default:
/// s(n+1,k) = s(n,k-1) - n s(n,k). Zero when k > n.
std::int64_t stirling1(int n, int k, StirlingConvention conv = StirlingConvention::Signed);

struct FactorialPowers {
  std::int64_t falling;
  std::int64_t rising;
};

/// x(x-1)...(x-n+1) and x(x+1)...(x+n-1); both 1 for n = 0.
FactorialPowers factorial_powers(std::int64_t x, int n);

/// Integer power with 0^0 = 1.
std::int64_t ipow(std::int64_t x, int e);

/// Integer part of θ_{n,k,l,m}: 2^k (m-l+1)_n (m+1)^(l) (m-l+1)^k, or 0 outside the support.
std::int64_t theta_integer_part(int n, int k, int l, int m);

/// Structure coefficient θ_{n,k,l,m} of ρ⁺(B⁺ⁿ Mᵏ B⁻ˡ) e_m = θ e_{n+m-l}.
double theta(int n, int k, int l, int m);

/// N×N truncation of ρ⁺(B⁺ⁿ Mᵏ B⁻ˡ) on e_0..e_{N-1}.
Mat rho_plus_matrix(int n, int k, int l, int N);

/// Exact expansion of dΛ_{α,β,γ} dΛ_{a,b,c} as integer multiples of Cons labels.
std::map<SwnLabel, std::int64_t> cons_product(const SwnLabel& left, const SwnLabel& right,
                                              StirlingConvention conv = StirlingConvention::Signed);

// ---------------------------------------------------------------------------
// Itô tables
// ---------------------------------------------------------------------------

HpDifferential hp_mul(const HpDifferential& a, const HpDifferential& b);
HpDifferential hp_basis_product(const HpLabel& a, const HpLabel& b);

SwnDifferential swn_mul(const SwnDifferential& a, const SwnDifferential& b,
                        StirlingConvention conv = StirlingConvention::Signed);
SwnDifferential swn_basis_product(const SwnLabel& a, const SwnLabel& b,
                                  StirlingConvention conv = StirlingConvention::Signed);

/// dM, dB⁺, dB⁻ in the basic SWN differentials.
SwnDifferential swn_dM();
SwnDifferential swn_dBplus();
SwnDifferential swn_dBminus();

// ---------------------------------------------------------------------------
// Module operators: finite sums of (system matrix ⊗ label)
// ---------------------------------------------------------------------------

class ModuleOperator {
 public:
  explicit ModuleOperator(Eigen::Index dim = 1) : dim_(dim) {}
  static ModuleOperator single(const Mat& a, const SwnLabel& label);
  /// Cons(0,0,0) ⊗ identity.
  static ModuleOperator identity(Eigen::Index dim);

  void add(const SwnLabel& label, const Mat& a);

  Eigen::Index dim() const { return dim_; }
  const std::map<SwnLabel, Mat>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  Mat coeff(const SwnLabel& label) const;
  int max_index() const;
  /// True when every label carries the given tag (vacuously true when empty).
  bool only(SwnTag tag) const;

  /// Σ S* ⊗ label*: Cons(n,k,l) → Cons(l,k,n), Ann(m) ↔ Cre(m).
  ModuleOperator adjoint() const;
  ModuleOperator left_mul(const Mat& a) const;
  ModuleOperator right_mul(const Mat& a) const;
  /// Drops terms whose matrix has Frobenius norm below tol.
  ModuleOperator pruned(double tol) const;
  double distance(const ModuleOperator& other) const;

  ModuleOperator& operator+=(const ModuleOperator& o);
  ModuleOperator& operator-=(const ModuleOperator& o);
  friend ModuleOperator operator+(ModuleOperator a, const ModuleOperator& b) { return a += b; }
  friend ModuleOperator operator-(ModuleOperator a, const ModuleOperator& b) { return a -= b; }
  friend ModuleOperator operator*(cplx s, const ModuleOperator& a);

 private:
  Eigen::Index dim_;
  std::map<SwnLabel, Mat> terms_;
};

/// D₁ ∘ E₁ for Cons-labelled operands.
ModuleOperator circ(const ModuleOperator& d1, const ModuleOperator& e1);
/// Σ_n D_{-,n} D_{+,n}.
Mat pairing(const ModuleOperator& dminus, const ModuleOperator& dplus);
/// r(D₁)D₊; result carries Cre labels.
ModuleOperator r_map(const ModuleOperator& d1, const ModuleOperator& dplus);
/// l(E₁)D₋ with system factors ordered D₋ then E₁; result carries Ann labels.
ModuleOperator l_map(const ModuleOperator& e1, const ModuleOperator& dminus);

/// Σ S ⊗ ρ⁺(label) on system ⊗ span(e_0..e_{N-1}); Cons labels only.
Mat rho_plus(const ModuleOperator& op, int N);

/// dt·T + d𝒜(ann) + d𝒜†(cre) + dℒ(cons).
struct ModuleDifferential {
  Mat dt;
  ModuleOperator ann;
  ModuleOperator cre;
  ModuleOperator cons;

  explicit ModuleDifferential(Eigen::Index dim = 1)
      : dt(Mat::Zero(dim, dim)), ann(dim), cre(dim), cons(dim) {}
  Eigen::Index dim() const { return dt.rows(); }
  double distance(const ModuleDifferential& other) const;
};

ModuleDifferential module_ito_mul(const ModuleDifferential& x, const ModuleDifferential& y);

/// Scalar image of a dimension-1 module differential.
SwnDifferential scalar_image(const ModuleDifferential& x);
ModuleDifferential from_scalar(const SwnDifferential& d);

}  // namespace qsc
