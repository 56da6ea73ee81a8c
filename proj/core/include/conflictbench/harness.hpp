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

#ifndef CONFLICTBENCH_HARNESS_HPP_
#define CONFLICTBENCH_HARNESS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "conflictbench/compose.hpp"
#include "conflictbench/conflict.hpp"
#include "conflictbench/data.hpp"

namespace conflictbench {

struct DatasetConfig {
  std::string format = "synth";  // synth | idx | csv
  SynthSpec synth;
  std::size_t trigger_pool_size = 400;
  // idx format: image/label file pairs; csv format: labeled row files.
  std::string train_images, train_labels, test_images, test_labels;
  std::string train_csv, test_csv;
  std::vector<std::size_t> csv_example_shape;
  std::size_t csv_classes = 0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetConfig dataset;
  ComposeSpec compose;
  ThresholdPolicy thresholds;
  StatsPolicy stats;
  std::size_t baseline_repeats = 5;
  std::size_t pair_repeats = 10;
  std::uint64_t seed_base = 1;
  std::string output_dir = "runs";
};

// Strict parser: unknown keys are configuration errors. Every field has a
// default, so a minimal config can be a few lines.
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical serialization (fixed key set, sorted keys) of everything that
// defines the experiment semantics; formatting and key order of the input
// do not affect it. output_dir and name are excluded.
std::string canonical_config_json(const ExperimentConfig& config);

// FNV-1a over the canonical serialization; the resume key prefix.
std::uint64_t config_hash(const ExperimentConfig& config);

TaskData load_task(const DatasetConfig& dataset);

// One executed (or failed) training run inside a matrix.
struct RunRecord {
  std::uint64_t config = 0;  // config_hash of the owning experiment
  std::string kind;          // "baseline-<mech>" or "combined"
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::map<std::string, double> metrics;  // keyed by metric_name
  double wall_seconds = 0.0;
};

std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& line);
// Reads a JSONL record file; a missing file is an empty history.
std::vector<RunRecord> read_records(const std::string& path);

struct MatrixResult {
  std::vector<RunRecord> records;  // full history relevant to this config
  bool has_verdict = false;
  ConflictVerdict verdict;
  PairSamples samples;
  std::size_t executed = 0;
  std::size_t reused = 0;
  std::size_t failed = 0;
};

// Executes every row of the experiment (baseline repeats per configured
// mechanism, pair repeats for the combination), appending one JSONL record
// per run to <output_dir>/records.jsonl. Rows already recorded for the
// same (config hash, kind, seed) are reused, so an interrupted matrix
// resumes where it stopped. Rows run under parallel_for; results are
// deterministic in the config regardless of worker count. When both a
// base and an ownership mechanism are configured the verdict is rendered
// and written to <output_dir>/verdict.json.
MatrixResult run_matrix(const ExperimentConfig& config);

// Axis sweep: clones the config, sets `axis` (dotted path, e.g.
// "adv.gamma") to each value, and runs each matrix under
// <output_dir>/sweep/<axis>=<value>/. Returns one MatrixResult per value.
std::vector<MatrixResult> run_sweep(const ExperimentConfig& config,
                                    const std::string& axis,
                                    const std::vector<double>& values);

// Fingerprint false-positive study: trains disjoint-chunk models and
// reports the verification p-value against the victim itself, against an
// exchangeable test-only null, and against the independent chunk model.
struct DiFpResult {
  double p_victim = 1.0;      // verifier's data vs held-out test, own model
  double p_test_null = 1.0;   // two disjoint test subsets, own model
  double p_other_chunk = 1.0; // verifier's data against the chunk-B model
  bool victim_flagged = false;
  bool null_clear = false;
  bool other_flagged = false;
};

DiFpResult run_di_false_positive(const ExperimentConfig& config);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_HARNESS_HPP_
