// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
//
// Experiment runner behind the qsc command line: JSON configs, dispatch to the
// core modules, and reports in which every number carries its tolerance.
//
// Config (schema version 1):
//   {"kind": "<one of kinds()>", "seed": <uint64, default kDefaultSeed>,
//    "params": {<kind-specific keys>}, "output": {"report": <file>, "series": <file>}}
// Matrices are row-major nested arrays whose entries are reals or [re, im].
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qsc::cli {

using json = nlohmann::json;

inline constexpr std::uint64_t kDefaultSeed = 20261014;
inline constexpr int kSchemaVersion = 1;
#ifndef QSC_VERSION_TAG
#define QSC_VERSION_TAG "v0.1.0"
#endif
inline constexpr const char* kVersion = QSC_VERSION_TAG;

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kConfigError = 2, kResourceRejected = 3 };

struct ParamInfo {
  std::string key;
  std::string type;  ///< real, int, complex, matrix, vector, string
  bool required = false;
  json default_value;  ///< null when the key is optional without a default
  std::string help;
};

struct KindInfo {
  std::string name;
  std::string description;
  std::string background;
  std::vector<ParamInfo> params;
  bool uses_paths = false;
  bool uses_dt = false;
};

const std::vector<KindInfo>& kinds();

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = kDefaultSeed;
  json params = json::object();  ///< defaults filled in
  std::string report_file = "report.json";
  std::string series_file;       ///< empty: kind default, or none
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;  ///< every problem found, each prefixed with its path in the config
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<double> dt;
};

ParseResult parse_config(const json& raw, const Overrides& overrides = {});
ParseResult parse_config_file(const std::string& path, const Overrides& overrides = {});

struct Check {
  std::string name;
  double value = 0.0;
  std::optional<double> reference;  ///< for "abs<=" and "rel<="
  double tolerance = 0.0;
  std::string comparison;  ///< "<=", ">=", ">", "abs<=" (|value − reference| ≤ tol) or "rel<="
  bool pass = false;
};

struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string to_csv() const;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<Check> checks;
  std::optional<Series> series;
  /// Monte Carlo estimates: {"name": {"mean": m, "std_error": se}}; empty for deterministic kinds.
  json estimates = json::object();
  double wall_time_s = 0.0;

  bool passed() const;
  /// Wall time is left out when `with_time` is false, which makes the dump reproducible.
  json to_json(bool with_time = true) const;
  std::string checks_csv() const;
};

/// Throws qsc::InvalidArgument, qsc::ResourceLimit or qsc::NumericalError from the modules.
RunReport run(const ExperimentConfig& config);

/// Text listing of the kinds; `verbose` adds keys with defaults and background.
std::string list_text(bool verbose);
json list_json(bool verbose);

}  // namespace qsc::cli
