// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
//
// JSON schema (version 1):
//   complex        [re, im]
//   matrix         row-major nested array of complex: [[[re,im], ...], ...]
//   HpLabel        {"tag": "Time"|"Ann"|"Cre"|"Cons"}
//   SwnLabel       {"tag": "Time"} | {"tag": "Ann"|"Cre", "m": int} |
//                  {"tag": "Cons", "n": int, "k": int, "l": int}
//   Differential   {"terms": [{"label": <label>, "coeff": <complex>}, ...]}
//   ModuleOperator {"dim": int, "terms": [{"label": <SwnLabel>, "matrix": <matrix>}, ...]}
#pragma once

#include <nlohmann/json.hpp>

#include "qsc/ito_algebra.hpp"

namespace qsc {

using json = nlohmann::json;

json to_json_complex(cplx c);
/// Accepts [re, im] or a bare real number.
cplx complex_from_json(const json& j);

json to_json_matrix(const Mat& m);
/// Accepts nested arrays of [re, im] pairs or of reals. Throws InvalidArgument on ragged input.
Mat matrix_from_json(const json& j);

json to_json_vector(const Vec& v);
Vec vector_from_json(const json& j);

json to_json(const HpLabel& l);
json to_json(const SwnLabel& l);
HpLabel hp_label_from_json(const json& j);
SwnLabel swn_label_from_json(const json& j);

json to_json(const HpDifferential& d);
json to_json(const SwnDifferential& d);
HpDifferential hp_differential_from_json(const json& j);
SwnDifferential swn_differential_from_json(const json& j);

json to_json(const ModuleOperator& op);
ModuleOperator module_operator_from_json(const json& j);

}  // namespace qsc
