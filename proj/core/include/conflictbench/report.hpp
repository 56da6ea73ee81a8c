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

#ifndef CONFLICTBENCH_REPORT_HPP_
#define CONFLICTBENCH_REPORT_HPP_

#include <string>
#include <vector>

#include "conflictbench/conflict.hpp"
#include "conflictbench/harness.hpp"

namespace conflictbench {

// Serializes a verdict with every per-metric test that fed it. Keys are
// sorted and floating-point values carry full precision, so equal verdicts
// serialize to equal bytes.
std::string verdict_to_json(const ConflictVerdict& verdict);

// Human-readable verdict: one table row per tested metric plus the summary.
std::string verdict_markdown(const ConflictVerdict& verdict);

// Run records as a markdown table sorted by (kind, seed). Timing is omitted
// so a resumed matrix renders byte-identically to an uninterrupted one.
std::string records_markdown(const std::vector<RunRecord>& records);

// Same records as CSV with one column per metric name seen anywhere.
std::string records_csv(const std::vector<RunRecord>& records);

// One summary row per sweep point: the axis value, per-metric combined
// means, and the verdict.
std::string sweep_markdown(const std::string& axis,
                           const std::vector<double>& values,
                           const std::vector<MatrixResult>& results);

// Fingerprint false-positive study summary.
std::string difp_to_json(const DiFpResult& r);

// Fit embeddings, one row per record: membership label then one column per
// walk direction distance.
std::string embeddings_csv(const std::vector<std::vector<double>>& members,
                           const std::vector<std::vector<double>>& nonmembers);
void write_embeddings_csv(const std::string& path,
                          const std::vector<std::vector<double>>& members,
                          const std::vector<std::vector<double>>& nonmembers);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_REPORT_HPP_
