// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include "qsc/serialization.hpp"

namespace qsc {

json to_json_complex(cplx c) { return json::array({c.real(), c.imag()}); }

cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw InvalidArgument("expected a complex number [re, im] or a real, got " + j.dump());
}

json to_json_matrix(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json_complex(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (j.is_number()) return Mat::Constant(1, 1, complex_from_json(j));
  if (!j.is_array() || j.empty()) throw InvalidArgument("expected a non-empty matrix (array of rows)");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw InvalidArgument("matrix rows must be arrays");
  const std::size_t cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw InvalidArgument("ragged matrix: row " + std::to_string(r) + " has " +
                            std::to_string(j[r].is_array() ? j[r].size() : 0) + " entries, expected " +
                            std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = complex_from_json(j[r][c]);
  }
  return m;
}

json to_json_vector(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json_complex(v(i)));
  return out;
}

Vec vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("expected a non-empty vector");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = complex_from_json(j[i]);
  return v;
}

namespace {

const char* tag_name(int t) {
  static const char* names[] = {"Time", "Ann", "Cre", "Cons"};
  return names[t];
}

int tag_from_name(const std::string& s) {
  for (int t = 0; t < 4; ++t) {
    if (s == tag_name(t)) return t;
  }
  throw InvalidArgument("unknown label tag '" + s + "' (allowed: Time, Ann, Cre, Cons)");
}

int index_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<int>() < 0) {
    throw InvalidArgument(std::string("label field '") + key + "' must be a nonnegative integer");
  }
  return j[key].get<int>();
}

template <class L>
Differential<L> differential_from_json(const json& j, L (*label)(const json&)) {
  if (!j.contains("terms") || !j["terms"].is_array()) {
    throw InvalidArgument("differential must have a 'terms' array");
  }
  Differential<L> d;
  for (const auto& t : j["terms"]) d.add(label(t.at("label")), complex_from_json(t.at("coeff")));
  return d;
}

template <class L>
json differential_to_json(const Differential<L>& d) {
  json terms = json::array();
  for (const auto& [label, c] : d.terms()) {
    terms.push_back({{"label", to_json(label)}, {"coeff", to_json_complex(c)}});
  }
  return {{"terms", terms}};
}

}  // namespace

json to_json(const HpLabel& l) { return {{"tag", tag_name(static_cast<int>(l.tag))}}; }

json to_json(const SwnLabel& l) {
  json j = {{"tag", tag_name(static_cast<int>(l.tag))}};
  switch (l.tag) {
    case SwnTag::Ann:
    case SwnTag::Cre: j["m"] = l.n; break;
    case SwnTag::Cons:
      j["n"] = l.n;
      j["k"] = l.k;
      j["l"] = l.l;
      break;
    default: break;
  }
  return j;
}

HpLabel hp_label_from_json(const json& j) {
  return {static_cast<HpTag>(tag_from_name(j.at("tag").get<std::string>()))};
}

SwnLabel swn_label_from_json(const json& j) {
  switch (static_cast<SwnTag>(tag_from_name(j.at("tag").get<std::string>()))) {
    case SwnTag::Time: return SwnLabel::time();
    case SwnTag::Ann: return SwnLabel::ann(index_field(j, "m"));
    case SwnTag::Cre: return SwnLabel::cre(index_field(j, "m"));
    case SwnTag::Cons:
      return SwnLabel::cons(index_field(j, "n"), index_field(j, "k"), index_field(j, "l"));
  }
  throw InvalidArgument("bad SWN label");
}

json to_json(const HpDifferential& d) { return differential_to_json(d); }
json to_json(const SwnDifferential& d) { return differential_to_json(d); }

HpDifferential hp_differential_from_json(const json& j) {
  return differential_from_json<HpLabel>(j, &hp_label_from_json);
}

SwnDifferential swn_differential_from_json(const json& j) {
  return differential_from_json<SwnLabel>(j, &swn_label_from_json);
}

json to_json(const ModuleOperator& op) {
  json terms = json::array();
  for (const auto& [label, m] : op.terms()) {
    terms.push_back({{"label", to_json(label)}, {"matrix", to_json_matrix(m)}});
  }
  return {{"dim", op.dim()}, {"terms", terms}};
}

ModuleOperator module_operator_from_json(const json& j) {
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<int>() < 1) {
    throw InvalidArgument("module operator needs a positive integer 'dim'");
  }
  ModuleOperator op(j["dim"].get<int>());
  if (j.contains("terms")) {
    for (const auto& t : j["terms"]) {
      op.add(swn_label_from_json(t.at("label")), matrix_from_json(t.at("matrix")));
    }
  }
  return op;
}

}  // namespace qsc
