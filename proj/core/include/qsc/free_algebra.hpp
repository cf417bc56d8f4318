// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
//
// Free *-algebra over named symbols with complex coefficients. The only
// rewrite rules are u u* → 1 and u* u → 1 for symbols declared unitary.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "qsc/linalg.hpp"

namespace qsc {

class FreeElement {
 public:
  using Word = std::vector<int>;
  using Map = std::map<Word, cplx>;

  FreeElement() = default;
  static FreeElement scalar(cplx c);
  static FreeElement word(Word w, cplx c = 1.0);

  const Map& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  void add(const Word& w, cplx c);

  FreeElement& operator+=(const FreeElement& o);
  FreeElement& operator-=(const FreeElement& o);
  friend FreeElement operator+(FreeElement a, const FreeElement& b) { return a += b; }
  friend FreeElement operator-(FreeElement a, const FreeElement& b) { return a -= b; }
  friend FreeElement operator-(const FreeElement& a) { return FreeElement() - a; }
  friend FreeElement operator*(const FreeElement& a, const FreeElement& b);
  friend FreeElement operator*(cplx s, const FreeElement& a);
  friend bool operator==(const FreeElement& a, const FreeElement& b) { return a.terms_ == b.terms_; }

 private:
  Map terms_;
};

class FreeAlgebra {
 public:
  /// Declares a self-adjoint symbol.
  void hermitian(const std::string& name);
  /// Declares a symbol and its adjoint `name*`.
  void general(const std::string& name);
  /// Declares a general symbol subject to u u* = u* u = 1.
  void unitary(const std::string& name);

  FreeElement gen(const std::string& name) const;
  FreeElement one() const { return FreeElement::scalar(1.0); }
  FreeElement adjoint(const FreeElement& a) const;
  FreeElement normal_form(const FreeElement& a) const;
  bool equal(const FreeElement& a, const FreeElement& b) const { return normal_form(a - b).is_zero(); }
  /// Canonical dump of the normal form: terms in word order, "0" when empty.
  std::string str(const FreeElement& a) const;

 private:
  int add_symbol(const std::string& name);
  std::vector<std::string> names_;
  std::vector<int> adjoint_of_;
  std::vector<bool> unitary_;
};

}  // namespace qsc
