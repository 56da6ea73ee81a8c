// Copyright 2026 The ConflictBench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command line front end. Exit codes: 0 no conflict, 2 conflict detected,
// 1 error. Worker count comes from CONFLICTBENCH_WORKERS or --workers.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conflictbench/errors.hpp"
#include "conflictbench/harness.hpp"
#include "conflictbench/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConflict = 2;

std::vector<double> parse_values(const std::vector<std::string>& tokens) {
  std::vector<double> values;
  for (const std::string& token : tokens) {
    std::stringstream s(token);
    std::string piece;
    while (std::getline(s, piece, ',')) {
      if (piece.empty()) continue;
      std::size_t used = 0;
      double v = std::stod(piece, &used);
      if (used != piece.size()) {
        throw conflictbench::ConfigError("bad sweep value: " + piece);
      }
      values.push_back(v);
    }
  }
  return values;
}

int do_run(const std::string& config_path) {
  conflictbench::ExperimentConfig config =
      conflictbench::parse_config_file(config_path);
  conflictbench::MatrixResult result = conflictbench::run_matrix(config);
  std::string table = conflictbench::records_markdown(result.records);
  std::string report = "# " + config.name + "\n\n" + table + "\n";
  if (result.has_verdict) {
    report += conflictbench::verdict_markdown(result.verdict);
  }
  conflictbench::write_text_file(config.output_dir + "/report.md", report);
  std::cout << report;
  std::cout << "\nexecuted " << result.executed << " run(s), reused "
            << result.reused << ", failed " << result.failed << "; records in "
            << config.output_dir << "/records.jsonl\n";
  if (result.failed > 0) {
    std::cerr << "error: " << result.failed << " run(s) failed\n";
    return kExitError;
  }
  if (result.has_verdict && result.verdict.conflict) return kExitConflict;
  return kExitOk;
}

int do_sweep(const std::string& config_path, const std::string& axis,
             const std::vector<std::string>& value_tokens) {
  std::vector<double> values = parse_values(value_tokens);
  conflictbench::ExperimentConfig config =
      conflictbench::parse_config_file(config_path);
  std::vector<conflictbench::MatrixResult> results =
      conflictbench::run_sweep(config, axis, values);
  std::string summary = conflictbench::sweep_markdown(axis, values, results);
  conflictbench::write_text_file(config.output_dir + "/sweep/summary.md",
                                 summary);
  std::cout << summary;
  bool any_conflict = false;
  bool any_failed = false;
  for (const conflictbench::MatrixResult& r : results) {
    any_conflict = any_conflict || (r.has_verdict && r.verdict.conflict);
    any_failed = any_failed || r.failed > 0;
  }
  if (any_failed) {
    std::cerr << "error: some sweep runs failed; see per-point records\n";
    return kExitError;
  }
  return any_conflict ? kExitConflict : kExitOk;
}

int do_di_fp(const std::string& config_path) {
  conflictbench::ExperimentConfig config =
      conflictbench::parse_config_file(config_path);
  conflictbench::DiFpResult r = conflictbench::run_di_false_positive(config);
  std::cout << conflictbench::difp_to_json(r) << "\n";
  std::cout << "fit embeddings written to " << config.output_dir
            << "/embeddings.csv\n";
  // A flagged independent model is the conflict this study looks for.
  return r.other_flagged ? kExitConflict : kExitOk;
}

int do_report(const std::string& records_path, const std::string& format) {
  std::vector<conflictbench::RunRecord> records =
      conflictbench::read_records(records_path);
  if (format == "md") {
    std::cout << conflictbench::records_markdown(records);
  } else if (format == "csv") {
    std::cout << conflictbench::records_csv(records);
  } else {
    throw conflictbench::ConfigError("report format must be md or csv");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "conflictbench: trains small classifiers under combinations of "
      "protection mechanisms and tests the results for conflicts"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers,
                 "worker thread count (overrides CONFLICTBENCH_WORKERS)");

  std::string run_config;
  CLI::App* run = app.add_subcommand(
      "run", "run the baseline and combined matrix for a config");
  run->add_option("config", run_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  std::string sweep_config;
  std::string sweep_axis;
  std::vector<std::string> sweep_values;
  CLI::App* sweep =
      app.add_subcommand("sweep", "repeat the matrix along one config axis");
  sweep->add_option("config", sweep_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--axis", sweep_axis, "dotted config path, e.g. adv.gamma")
      ->required();
  sweep
      ->add_option("--values", sweep_values,
                   "axis values (repeat the flag or separate with commas)")
      ->required();

  std::string difp_config;
  CLI::App* difp = app.add_subcommand(
      "di-fp", "fingerprint false-positive study on disjoint data chunks");
  difp->add_option("config", difp_config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  std::string report_records;
  std::string report_format = "md";
  CLI::App* report =
      app.add_subcommand("report", "render recorded runs as a table");
  report->add_option("records", report_records, "records.jsonl path")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--format", report_format, "md or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  if (workers > 0) {
    setenv("CONFLICTBENCH_WORKERS", std::to_string(workers).c_str(), 1);
  }

  try {
    if (*run) return do_run(run_config);
    if (*sweep) return do_sweep(sweep_config, sweep_axis, sweep_values);
    if (*difp) return do_di_fp(difp_config);
    if (*report) return do_report(report_records, report_format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
