// Copyright 2026 The qsc Authors. SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "qsc/linalg.hpp"

namespace fs = std::filesystem;
using namespace qsc::cli;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

int run_command(const std::string& config_path, const Overrides& ov, const std::string& out_dir,
                const std::string& format) {
  const auto parsed = parse_config_file(config_path, ov);
  if (!parsed.config) {
    for (const auto& e : parsed.errors) std::cerr << "config error: " << e << "\n";
    return kConfigError;
  }
  RunReport report;
  try {
    report = run(*parsed.config);
  } catch (const qsc::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const qsc::ResourceLimit& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kResourceRejected;
  } catch (const qsc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kCheckFailure;
  }
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::string name = parsed.config->report_file;
  if (format == "csv" && name == "report.json") name = "report.csv";
  write_file(dir / name, format == "csv" ? report.checks_csv() : report.to_json().dump(2) + "\n");
  if (report.series) {
    const std::string sname = parsed.config->series_file.empty() ? "series.csv" : parsed.config->series_file;
    write_file(dir / sname, report.series->to_csv());
  }
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << "  value=" << c.value;
    if (c.reference) std::cout << "  reference=" << *c.reference;
    std::cout << "  " << c.comparison << " " << c.tolerance << "\n";
  }
  std::cout << (report.passed() ? "all checks passed" : "some checks failed") << " (" << report.checks.size()
            << " checks, " << report.wall_time_s << " s)\n";
  return report.passed() ? kPass : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsc: quantum stochastic control experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<double> dt;
  auto* run_cmd = app.add_subcommand("run", "run one experiment from a JSON config");
  run_cmd->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "override the config seed");
  run_cmd->add_option("--out-dir", out_dir, "directory for the report and series files");
  run_cmd->add_option("--paths", paths, "override the Monte Carlo path count")->check(CLI::PositiveNumber);
  run_cmd->add_option("--dt", dt, "override the integrator step")->check(CLI::PositiveNumber);
  run_cmd->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));

  bool verbose = false;
  std::string list_format = "text";
  auto* list_cmd = app.add_subcommand("list", "list experiment kinds and their keys");
  list_cmd->add_flag("--verbose,-v", verbose, "show defaults, help and background");
  list_cmd->add_option("--format", list_format, "listing format")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    if (*list_cmd) {
      if (list_format == "json") {
        std::cout << list_json(verbose).dump(2) << "\n";
      } else {
        std::cout << list_text(verbose);
      }
      return kPass;
    }
    return run_command(config_path, Overrides{seed, paths, dt}, out_dir, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
