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

#include "conflictbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "conflictbench/errors.hpp"
#include "conflictbench/stats.hpp"

namespace conflictbench {
namespace {

using nlohmann::json;

json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string fixed6(double v) {
  if (!std::isfinite(v)) return "-";
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::string full_precision(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::vector<std::string> metric_columns(const std::vector<RunRecord>& records) {
  std::set<std::string> names;
  for (const RunRecord& r : records) {
    for (const auto& [name, value] : r.metrics) names.insert(name);
  }
  return {names.begin(), names.end()};
}

std::vector<RunRecord> sorted_records(std::vector<RunRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) {
              if (a.kind != b.kind) return a.kind < b.kind;
              return a.seed < b.seed;
            });
  return records;
}

}  // namespace

std::string verdict_to_json(const ConflictVerdict& verdict) {
  json j;
  j["pair"] = verdict.pair_name;
  j["dataset"] = verdict.dataset;
  j["conflict"] = verdict.conflict;
  j["accuracy_bound_ok"] = verdict.accuracy_bound_ok;
  j["summary"] = verdict.summary;
  json metrics = json::array();
  for (const MetricReport& r : verdict.reports) {
    json m;
    m["metric"] = metric_name(r.metric);
    m["baseline"] = r.baseline_tag;
    m["baseline_mean"] = number_or_null(r.baseline_mean);
    m["combined_mean"] = number_or_null(r.combined_mean);
    m["delta"] = number_or_null(r.delta);
    m["tested"] = r.tested;
    m["conflict"] = r.conflict;
    m["detail"] = r.detail;
    if (r.tested) {
      m["welch"] = {{"t", number_or_null(r.welch.t)},
                    {"df", number_or_null(r.welch.df)},
                    {"p", number_or_null(r.welch.p)},
                    {"degenerate", r.welch.degenerate}};
      m["tost"] = {{"p_lower", number_or_null(r.tost.p_lower)},
                   {"p_upper", number_or_null(r.tost.p_upper)},
                   {"equivalent", r.tost.equivalent}};
    }
    metrics.push_back(std::move(m));
  }
  j["metrics"] = std::move(metrics);
  return j.dump(2);
}

std::string verdict_markdown(const ConflictVerdict& verdict) {
  std::ostringstream out;
  out << "## " << verdict.pair_name << " on " << verdict.dataset << "\n\n";
  out << "| metric | baseline | baseline mean | combined mean | delta | p | conflict | detail |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (const MetricReport& r : verdict.reports) {
    out << "| " << metric_name(r.metric) << " | " << r.baseline_tag << " | "
        << fixed6(r.baseline_mean) << " | " << fixed6(r.combined_mean) << " | "
        << fixed6(r.delta) << " | "
        << (r.tested ? fixed6(r.welch.p) : std::string("-")) << " | "
        << (r.conflict ? "CONFLICT" : "ok") << " | " << r.detail << " |\n";
  }
  out << "\n**Verdict:** "
      << (verdict.conflict ? "CONFLICT" : "no conflict detected") << ". "
      << verdict.summary << "\n";
  out << "\nCombined accuracy within the two-baseline bound: "
      << (verdict.accuracy_bound_ok ? "yes" : "no") << "\n";
  return out.str();
}

std::string records_markdown(const std::vector<RunRecord>& records) {
  std::vector<RunRecord> rows = sorted_records(records);
  std::vector<std::string> cols = metric_columns(rows);
  std::ostringstream out;
  out << "| kind | seed | ok |";
  for (const std::string& c : cols) out << ' ' << c << " |";
  out << " error |\n|---|---|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
  out << "---|\n";
  for (const RunRecord& r : rows) {
    out << "| " << r.kind << " | " << r.seed << " | " << (r.ok ? "yes" : "no")
        << " |";
    for (const std::string& c : cols) {
      auto it = r.metrics.find(c);
      out << ' ' << (it == r.metrics.end() ? std::string("-") : fixed6(it->second))
          << " |";
    }
    out << ' ' << (r.error.empty() ? "-" : r.error) << " |\n";
  }
  return out.str();
}

std::string records_csv(const std::vector<RunRecord>& records) {
  std::vector<RunRecord> rows = sorted_records(records);
  std::vector<std::string> cols = metric_columns(rows);
  std::ostringstream out;
  out << "kind,seed,ok";
  for (const std::string& c : cols) out << ',' << c;
  out << ",error\n";
  for (const RunRecord& r : rows) {
    out << r.kind << ',' << r.seed << ',' << (r.ok ? 1 : 0);
    for (const std::string& c : cols) {
      auto it = r.metrics.find(c);
      out << ',';
      if (it != r.metrics.end()) out << full_precision(it->second);
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << ',' << err << '\n';
  }
  return out.str();
}

std::string sweep_markdown(const std::string& axis,
                           const std::vector<double>& values,
                           const std::vector<MatrixResult>& results) {
  if (values.size() != results.size()) {
    throw InputError("sweep summary needs one result per axis value");
  }
  std::set<std::string> metric_set;
  for (const MatrixResult& r : results) {
    for (const auto& [metric, samples] : r.samples.combined) {
      metric_set.insert(metric_name(metric));
    }
  }
  std::vector<std::string> cols(metric_set.begin(), metric_set.end());
  std::ostringstream out;
  out << "## Sweep over " << axis << "\n\n| " << axis << " |";
  for (const std::string& c : cols) out << " combined " << c << " |";
  out << " verdict |\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
  out << "---|\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    out << "| " << fixed6(values[i]) << " |";
    for (const std::string& c : cols) {
      std::string cell = "-";
      for (const auto& [metric, samples] : results[i].samples.combined) {
        if (metric_name(metric) == c && !samples.empty()) {
          cell = fixed6(mean_of(samples));
        }
      }
      out << ' ' << cell << " |";
    }
    if (results[i].has_verdict) {
      out << ' ' << (results[i].verdict.conflict ? "CONFLICT" : "ok") << " |\n";
    } else {
      out << " - |\n";
    }
  }
  return out.str();
}

std::string difp_to_json(const DiFpResult& r) {
  json j;
  j["p_victim"] = number_or_null(r.p_victim);
  j["p_test_null"] = number_or_null(r.p_test_null);
  j["p_other_chunk"] = number_or_null(r.p_other_chunk);
  j["victim_flagged"] = r.victim_flagged;
  j["null_clear"] = r.null_clear;
  j["other_flagged"] = r.other_flagged;
  return j.dump(2);
}

std::string embeddings_csv(const std::vector<std::vector<double>>& members,
                           const std::vector<std::vector<double>>& nonmembers) {
  std::size_t dim = 0;
  if (!members.empty()) dim = members[0].size();
  else if (!nonmembers.empty()) dim = nonmembers[0].size();
  std::ostringstream out;
  out << "member";
  for (std::size_t d = 0; d < dim; ++d) out << ",d" << d;
  out << '\n';
  auto emit = [&](const std::vector<std::vector<double>>& rows, int label) {
    for (const std::vector<double>& row : rows) {
      if (row.size() != dim) {
        throw InputError("embedding rows disagree on direction count");
      }
      out << label;
      for (double v : row) out << ',' << full_precision(v);
      out << '\n';
    }
  };
  emit(members, 1);
  emit(nonmembers, 0);
  return out.str();
}

void write_embeddings_csv(const std::string& path,
                          const std::vector<std::vector<double>>& members,
                          const std::vector<std::vector<double>>& nonmembers) {
  write_text_file(path, embeddings_csv(members, nonmembers));
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InputError(path + ": write failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace conflictbench
