// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "qsc/free_algebra.hpp"

#include <algorithm>
#include <cstdio>

namespace qsc {

FreeElement FreeElement::scalar(cplx c) { return word({}, c); }

FreeElement FreeElement::word(Word w, cplx c) {
  FreeElement e;
  e.add(w, c);
  return e;
}

void FreeElement::add(const Word& w, cplx c) {
  if (c == cplx(0.0)) return;
  auto [it, inserted] = terms_.try_emplace(w, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx(0.0)) terms_.erase(it);
  }
}

FreeElement& FreeElement::operator+=(const FreeElement& o) {
  for (const auto& [w, c] : o.terms_) add(w, c);
  return *this;
}

FreeElement& FreeElement::operator-=(const FreeElement& o) {
  for (const auto& [w, c] : o.terms_) add(w, -c);
  return *this;
}

FreeElement operator*(const FreeElement& a, const FreeElement& b) {
  FreeElement out;
  for (const auto& [wa, ca] : a.terms_) {
    for (const auto& [wb, cb] : b.terms_) {
      FreeElement::Word w = wa;
      w.insert(w.end(), wb.begin(), wb.end());
      out.add(w, ca * cb);
    }
  }
  return out;
}

FreeElement operator*(cplx s, const FreeElement& a) {
  FreeElement out;
  for (const auto& [w, c] : a.terms_) out.add(w, s * c);
  return out;
}

int FreeAlgebra::add_symbol(const std::string& name) {
  require(!name.empty(), "symbol name must be nonempty");
  require(std::find(names_.begin(), names_.end(), name) == names_.end(), "symbol declared twice: " + name);
  names_.push_back(name);
  adjoint_of_.push_back(-1);
  unitary_.push_back(false);
  return static_cast<int>(names_.size()) - 1;
}

void FreeAlgebra::hermitian(const std::string& name) {
  const int id = add_symbol(name);
  adjoint_of_[id] = id;
}

void FreeAlgebra::general(const std::string& name) {
  const int a = add_symbol(name);
  const int b = add_symbol(name + "*");
  adjoint_of_[a] = b;
  adjoint_of_[b] = a;
}

void FreeAlgebra::unitary(const std::string& name) {
  general(name);
  unitary_[names_.size() - 1] = true;
  unitary_[names_.size() - 2] = true;
}

FreeElement FreeAlgebra::gen(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  require(it != names_.end(), "unknown symbol: " + name);
  return FreeElement::word({static_cast<int>(it - names_.begin())});
}

FreeElement FreeAlgebra::adjoint(const FreeElement& a) const {
  FreeElement out;
  for (const auto& [w, c] : a.terms()) {
    FreeElement::Word r(w.rbegin(), w.rend());
    for (int& s : r) s = adjoint_of_[s];
    out.add(r, std::conj(c));
  }
  return out;
}

FreeElement FreeAlgebra::normal_form(const FreeElement& a) const {
  FreeElement out;
  for (const auto& [w, c] : a.terms()) {
    // cancellation rules only: one stack pass reaches the normal form
    FreeElement::Word st;
    for (int s : w) {
      if (!st.empty() && unitary_[s] && adjoint_of_[st.back()] == s) {
        st.pop_back();
      } else {
        st.push_back(s);
      }
    }
    out.add(st, c);
  }
  return out;
}

std::string FreeAlgebra::str(const FreeElement& a) const {
  const FreeElement n = normal_form(a);
  if (n.is_zero()) return "0";
  std::string s;
  char buf[96];
  for (const auto& [w, c] : n.terms()) {
    if (!s.empty()) s += " + ";
    // + 0.0 folds negative zero
    std::snprintf(buf, sizeof buf, "(%.17g%+.17gi)", c.real() + 0.0, c.imag() + 0.0);
    s += buf;
    if (w.empty()) s += "1";
    for (std::size_t i = 0; i < w.size(); ++i) s += (i == 0 ? "" : ".") + names_[w[i]];
  }
  return s;
}

}  // namespace qsc
