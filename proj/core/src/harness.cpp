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

#include "conflictbench/harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "conflictbench/errors.hpp"
#include "conflictbench/parallel.hpp"
#include "conflictbench/report.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void check_allowed(const json& obj, const std::string& where,
                   std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(out);
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for \"") + key + "\"");
  }
}

ScheduleKind parse_schedule(const std::string& s) {
  if (s == "one_cycle") return ScheduleKind::kOneCycle;
  if (s == "constant") return ScheduleKind::kConstant;
  throw ConfigError("schedule must be one_cycle or constant");
}

BaseMech parse_base(const std::string& s) {
  if (s == "none") return BaseMech::kNone;
  if (s == "dpsgd") return BaseMech::kDpsgd;
  if (s == "advtr") return BaseMech::kAdvtr;
  throw ConfigError("base mechanism must be none, dpsgd, or advtr");
}

OwnMech parse_own(const std::string& s) {
  if (s == "none") return OwnMech::kNone;
  if (s == "wm") return OwnMech::kWm;
  if (s == "rad") return OwnMech::kRad;
  if (s == "di") return OwnMech::kDi;
  throw ConfigError("ownership mechanism must be none, wm, rad, or di");
}

ComposeMode parse_mode(const std::string& s) {
  if (s == "joint") return ComposeMode::kJoint;
  if (s == "relaxed") return ComposeMode::kRelaxed;
  throw ConfigError("composition mode must be joint or relaxed");
}

WmMode parse_wm_mode(const std::string& s) {
  if (s == "joint") return WmMode::kJoint;
  if (s == "separate") return WmMode::kSeparate;
  throw ConfigError("watermark optimizer mode must be joint or separate");
}

std::string schedule_name(ScheduleKind k) {
  return k == ScheduleKind::kOneCycle ? "one_cycle" : "constant";
}

std::string mode_name(ComposeMode m) {
  return m == ComposeMode::kJoint ? "joint" : "relaxed";
}

std::string wm_mode_name(WmMode m) {
  return m == WmMode::kJoint ? "joint" : "separate";
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_allowed(j, "config",
                {"name", "dataset", "model", "train", "mechanisms", "dp", "adv",
                 "wm", "rad", "di", "thresholds", "stats", "repeats",
                 "seed_base", "output_dir"});
  ExperimentConfig c;
  get_to(j, "name", c.name);
  get_to(j, "output_dir", c.output_dir);
  get_to(j, "seed_base", c.seed_base);
  get_to(j, "model", c.compose.topology);

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    check_allowed(d, "dataset",
                  {"format", "classes", "train_size", "test_size", "grid",
                   "jitter", "pixel_noise", "test_noise_factor", "seed",
                   "trigger_pool", "train_images", "train_labels",
                   "test_images", "test_labels", "train_csv", "test_csv",
                   "example_shape"});
    get_to(d, "format", c.dataset.format);
    get_to(d, "classes", c.dataset.synth.num_classes);
    get_to(d, "train_size", c.dataset.synth.train_size);
    get_to(d, "test_size", c.dataset.synth.test_size);
    get_to(d, "grid", c.dataset.synth.grid);
    get_to(d, "jitter", c.dataset.synth.jitter);
    get_to(d, "pixel_noise", c.dataset.synth.pixel_noise);
    get_to(d, "test_noise_factor", c.dataset.synth.test_noise_factor);
    get_to(d, "seed", c.dataset.synth.seed);
    get_to(d, "trigger_pool", c.dataset.trigger_pool_size);
    get_to(d, "train_images", c.dataset.train_images);
    get_to(d, "train_labels", c.dataset.train_labels);
    get_to(d, "test_images", c.dataset.test_images);
    get_to(d, "test_labels", c.dataset.test_labels);
    get_to(d, "train_csv", c.dataset.train_csv);
    get_to(d, "test_csv", c.dataset.test_csv);
    get_to(d, "example_shape", c.dataset.csv_example_shape);
    c.dataset.csv_classes = c.dataset.synth.num_classes;
    if (c.dataset.format != "synth" && c.dataset.format != "idx" &&
        c.dataset.format != "csv") {
      throw ConfigError("dataset format must be synth, idx, or csv");
    }
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    check_allowed(t, "train",
                  {"epochs", "batch_size", "lr_initial", "lr_max", "schedule"});
    get_to(t, "epochs", c.compose.plan.epochs);
    get_to(t, "batch_size", c.compose.plan.batch_size);
    get_to(t, "lr_initial", c.compose.plan.lr_initial);
    get_to(t, "lr_max", c.compose.plan.lr_max);
    std::string sched = schedule_name(c.compose.plan.schedule);
    get_to(t, "schedule", sched);
    c.compose.plan.schedule = parse_schedule(sched);
  }

  if (j.contains("mechanisms")) {
    const json& m = j["mechanisms"];
    check_allowed(m, "mechanisms", {"base", "own", "mode"});
    std::string base = base_mech_name(c.compose.base);
    std::string own = own_mech_name(c.compose.own);
    std::string mode = mode_name(c.compose.mode);
    get_to(m, "base", base);
    get_to(m, "own", own);
    get_to(m, "mode", mode);
    c.compose.base = parse_base(base);
    c.compose.own = parse_own(own);
    c.compose.mode = parse_mode(mode);
  }

  if (j.contains("dp")) {
    const json& d = j["dp"];
    check_allowed(d, "dp", {"clip_c", "noise_sigma", "delta", "target_epsilon"});
    get_to(d, "clip_c", c.compose.dp.clip_c);
    get_to(d, "noise_sigma", c.compose.dp.noise_sigma);
    get_to(d, "delta", c.compose.dp.delta);
    get_to(d, "target_epsilon", c.compose.dp.target_epsilon);
  }

  if (j.contains("adv")) {
    const json& a = j["adv"];
    check_allowed(a, "adv", {"gamma", "steps", "step_size"});
    get_to(a, "gamma", c.compose.adv.gamma);
    get_to(a, "steps", c.compose.adv.steps);
    get_to(a, "step_size", c.compose.adv.step_size);
  }

  if (j.contains("wm")) {
    const json& w = j["wm"];
    check_allowed(w, "wm", {"trigger_size", "mode"});
    get_to(w, "trigger_size", c.compose.wm.trigger_size);
    std::string mode = wm_mode_name(c.compose.wm.mode);
    get_to(w, "mode", mode);
    c.compose.wm.mode = parse_wm_mode(mode);
  }

  if (j.contains("rad")) {
    const json& r = j["rad"];
    check_allowed(r, "rad", {"mark_fraction", "perturb_budget", "craft_steps",
                             "craft_rate", "carrier_seed"});
    get_to(r, "mark_fraction", c.compose.rad.mark_fraction);
    get_to(r, "perturb_budget", c.compose.rad.perturb_budget);
    get_to(r, "craft_steps", c.compose.rad.craft_steps);
    get_to(r, "craft_rate", c.compose.rad.craft_rate);
    get_to(r, "carrier_seed", c.compose.rad.carrier_seed);
  }

  if (j.contains("di")) {
    const json& d = j["di"];
    check_allowed(d, "di",
                  {"walk_count", "walk_step", "max_hops", "fit_size", "ver_size"});
    get_to(d, "walk_count", c.compose.di.walk_count);
    get_to(d, "walk_step", c.compose.di.walk_step);
    get_to(d, "max_hops", c.compose.di.max_hops);
    get_to(d, "fit_size", c.compose.di.fit_size);
    get_to(d, "ver_size", c.compose.di.ver_size);
  }

  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    check_allowed(t, "thresholds", {"acc_drop", "wm_drop", "adv_drop",
                                    "di_p_max", "rad_min", "epsilon_cap_factor"});
    get_to(t, "acc_drop", c.thresholds.acc_drop);
    get_to(t, "wm_drop", c.thresholds.wm_drop);
    get_to(t, "adv_drop", c.thresholds.adv_drop);
    get_to(t, "di_p_max", c.thresholds.di_p_max);
    get_to(t, "rad_min", c.thresholds.rad_min);
    get_to(t, "epsilon_cap_factor", c.thresholds.epsilon_cap_factor);
  }

  if (j.contains("stats")) {
    const json& s = j["stats"];
    check_allowed(s, "stats", {"alpha", "alpha_star"});
    get_to(s, "alpha", c.stats.alpha);
    get_to(s, "alpha_star", c.stats.alpha_star);
  }

  if (j.contains("repeats")) {
    const json& r = j["repeats"];
    check_allowed(r, "repeats", {"baseline", "pair"});
    get_to(r, "baseline", c.baseline_repeats);
    get_to(r, "pair", c.pair_repeats);
  }

  if (c.baseline_repeats < 2 || c.pair_repeats < 2) {
    throw ConfigError("repeats must be at least 2 so the tests have variance");
  }
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

std::string canonical_config_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = {{"format", c.dataset.format},
                  {"classes", c.dataset.synth.num_classes},
                  {"train_size", c.dataset.synth.train_size},
                  {"test_size", c.dataset.synth.test_size},
                  {"grid", c.dataset.synth.grid},
                  {"jitter", c.dataset.synth.jitter},
                  {"pixel_noise", c.dataset.synth.pixel_noise},
                  {"test_noise_factor", c.dataset.synth.test_noise_factor},
                  {"seed", c.dataset.synth.seed},
                  {"trigger_pool", c.dataset.trigger_pool_size},
                  {"train_images", c.dataset.train_images},
                  {"train_labels", c.dataset.train_labels},
                  {"test_images", c.dataset.test_images},
                  {"test_labels", c.dataset.test_labels},
                  {"train_csv", c.dataset.train_csv},
                  {"test_csv", c.dataset.test_csv},
                  {"example_shape", c.dataset.csv_example_shape}};
  j["model"] = c.compose.topology;
  j["train"] = {{"epochs", c.compose.plan.epochs},
                {"batch_size", c.compose.plan.batch_size},
                {"lr_initial", c.compose.plan.lr_initial},
                {"lr_max", c.compose.plan.lr_max},
                {"schedule", schedule_name(c.compose.plan.schedule)}};
  j["mechanisms"] = {{"base", base_mech_name(c.compose.base)},
                     {"own", own_mech_name(c.compose.own)},
                     {"mode", mode_name(c.compose.mode)}};
  j["dp"] = {{"clip_c", c.compose.dp.clip_c},
             {"noise_sigma", c.compose.dp.noise_sigma},
             {"delta", c.compose.dp.delta},
             {"target_epsilon", c.compose.dp.target_epsilon}};
  j["adv"] = {{"gamma", c.compose.adv.gamma},
              {"steps", c.compose.adv.steps},
              {"step_size", c.compose.adv.step_size}};
  j["wm"] = {{"trigger_size", c.compose.wm.trigger_size},
             {"mode", wm_mode_name(c.compose.wm.mode)}};
  j["rad"] = {{"mark_fraction", c.compose.rad.mark_fraction},
              {"perturb_budget", c.compose.rad.perturb_budget},
              {"craft_steps", c.compose.rad.craft_steps},
              {"craft_rate", c.compose.rad.craft_rate},
              {"carrier_seed", c.compose.rad.carrier_seed}};
  j["di"] = {{"walk_count", c.compose.di.walk_count},
             {"walk_step", c.compose.di.walk_step},
             {"max_hops", c.compose.di.max_hops},
             {"fit_size", c.compose.di.fit_size},
             {"ver_size", c.compose.di.ver_size}};
  j["thresholds"] = {{"acc_drop", c.thresholds.acc_drop},
                     {"wm_drop", c.thresholds.wm_drop},
                     {"adv_drop", c.thresholds.adv_drop},
                     {"di_p_max", c.thresholds.di_p_max},
                     {"rad_min", c.thresholds.rad_min},
                     {"epsilon_cap_factor", c.thresholds.epsilon_cap_factor}};
  j["stats"] = {{"alpha", c.stats.alpha}, {"alpha_star", c.stats.alpha_star}};
  j["repeats"] = {{"baseline", c.baseline_repeats}, {"pair", c.pair_repeats}};
  j["seed_base"] = c.seed_base;
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::string canon = canonical_config_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : canon) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

TaskData load_task(const DatasetConfig& dataset) {
  TaskData task;
  if (dataset.format == "synth") {
    SynthTask synth = make_blob_task(dataset.synth);
    task.train = std::move(synth.train);
    task.test = std::move(synth.test);
    if (dataset.trigger_pool_size > 0) {
      task.trigger_pool = make_spiral_pool(dataset.trigger_pool_size,
                                           dataset.synth.grid,
                                           dataset.synth.num_classes,
                                           mix_seed(dataset.synth.seed, "pool"));
    }
    return task;
  }
  if (dataset.format == "idx") {
    task.train.inputs = read_idx_images(dataset.train_images);
    task.train.labels = read_idx_labels(dataset.train_labels);
    task.train.num_classes = dataset.csv_classes;
    task.test.inputs = read_idx_images(dataset.test_images);
    task.test.labels = read_idx_labels(dataset.test_labels);
    task.test.num_classes = dataset.csv_classes;
  } else {
    if (dataset.csv_example_shape.empty()) {
      throw ConfigError("csv datasets need an example_shape");
    }
    task.train = read_csv_labeled(dataset.train_csv, dataset.csv_example_shape,
                                  dataset.csv_classes);
    task.test = read_csv_labeled(dataset.test_csv, dataset.csv_example_shape,
                                 dataset.csv_classes);
  }
  validate_set(task.train);
  validate_set(task.test);
  std::vector<std::size_t> shape = task.train.example_shape();
  if (dataset.trigger_pool_size > 0 && shape.size() == 3 && shape[0] == 1 &&
      shape[1] == shape[2]) {
    task.trigger_pool = make_spiral_pool(dataset.trigger_pool_size, shape[1],
                                         task.train.num_classes,
                                         mix_seed(dataset.csv_classes, "pool"));
  }
  return task;
}

std::string record_to_json(const RunRecord& r) {
  json j;
  j["config"] = r.config;
  j["kind"] = r.kind;
  j["seed"] = r.seed;
  j["ok"] = r.ok;
  j["error"] = r.error;
  j["metrics"] = r.metrics;
  j["wall_seconds"] = r.wall_seconds;
  return j.dump();
}

RunRecord record_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed record line: ") + e.what());
  }
  RunRecord r;
  get_to(j, "config", r.config);
  get_to(j, "kind", r.kind);
  get_to(j, "seed", r.seed);
  get_to(j, "ok", r.ok);
  get_to(j, "error", r.error);
  get_to(j, "metrics", r.metrics);
  get_to(j, "wall_seconds", r.wall_seconds);
  return r;
}

std::vector<RunRecord> read_records(const std::string& path) {
  std::vector<RunRecord> records;
  std::ifstream in(path);
  if (!in) return records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(line));
    } catch (const InputError& e) {
      throw InputError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

namespace {

struct MatrixRow {
  std::string kind;
  std::uint64_t seed = 0;
  ComposeSpec spec;
};

ComposeSpec spec_for_kind(const ExperimentConfig& config, const std::string& kind) {
  ComposeSpec spec = config.compose;
  if (kind == "combined" || kind == "plain") return spec;
  std::string mech = kind.substr(std::string("baseline-").size());
  ComposeSpec solo = config.compose;
  solo.base = BaseMech::kNone;
  solo.own = OwnMech::kNone;
  solo.mode = ComposeMode::kJoint;
  if (mech == "dpsgd") {
    solo.base = BaseMech::kDpsgd;
  } else if (mech == "advtr") {
    solo.base = BaseMech::kAdvtr;
  } else if (mech == "wm") {
    solo.own = OwnMech::kWm;
  } else if (mech == "rad") {
    solo.own = OwnMech::kRad;
  } else if (mech == "di") {
    solo.own = OwnMech::kDi;
  } else {
    throw ConfigError("unknown matrix row kind: " + kind);
  }
  return solo;
}

std::vector<MatrixRow> matrix_rows(const ExperimentConfig& config) {
  std::vector<MatrixRow> rows;
  bool has_base = config.compose.base != BaseMech::kNone;
  bool has_own = config.compose.own != OwnMech::kNone;
  auto add = [&](const std::string& kind, std::size_t repeats) {
    for (std::size_t i = 0; i < repeats; ++i) {
      rows.push_back({kind, config.seed_base + i, spec_for_kind(config, kind)});
    }
  };
  if (has_base) {
    add("baseline-" + base_mech_name(config.compose.base), config.baseline_repeats);
  }
  if (has_own) {
    add("baseline-" + own_mech_name(config.compose.own), config.baseline_repeats);
  }
  if (has_base && has_own) {
    add("combined", config.pair_repeats);
  }
  if (!has_base && !has_own) {
    add("plain", config.baseline_repeats);
  }
  return rows;
}

Metric metric_from_name(const std::string& name) {
  if (name == "acc") return Metric::kAcc;
  if (name == "wm") return Metric::kWm;
  if (name == "adv") return Metric::kAdv;
  if (name == "rad") return Metric::kRad;
  if (name == "di") return Metric::kDi;
  if (name == "epsilon") return Metric::kEpsilon;
  throw InputError("unknown metric name in records: " + name);
}

}  // namespace

MatrixResult run_matrix(const ExperimentConfig& config) {
  std::uint64_t hash = config_hash(config);
  fs::create_directories(config.output_dir);
  std::string records_path = config.output_dir + "/records.jsonl";

  std::vector<RunRecord> history = read_records(records_path);
  std::map<std::pair<std::string, std::uint64_t>, RunRecord> done;
  for (const RunRecord& r : history) {
    if (r.config == hash) done[{r.kind, r.seed}] = r;
  }

  std::vector<MatrixRow> rows = matrix_rows(config);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!done.count({rows[i].kind, rows[i].seed})) pending.push_back(i);
  }

  MatrixResult result;
  result.reused = rows.size() - pending.size();

  std::vector<RunRecord> fresh(pending.size());
  std::vector<std::optional<PrivacyBudget>> budgets(pending.size());
  if (!pending.empty()) {
    TaskData task = load_task(config.dataset);
    parallel_for(pending.size(), [&](std::size_t k) {
      const MatrixRow& row = rows[pending[k]];
      RunRecord rec;
      rec.config = hash;
      rec.kind = row.kind;
      rec.seed = row.seed;
      auto t0 = std::chrono::steady_clock::now();
      try {
        ComposeResult out = compose_training(row.spec, task, row.seed);
        for (const auto& [metric, value] : out.metrics.values) {
          rec.metrics[metric_name(metric)] = value;
        }
        if (out.metrics.has_budget) budgets[k] = out.metrics.budget;
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
      rec.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      fresh[k] = std::move(rec);
    });
    std::ofstream out(records_path, std::ios::app);
    if (!out) throw InputError(records_path + ": cannot append run records");
    for (const RunRecord& rec : fresh) {
      out << record_to_json(rec) << '\n';
      result.executed += 1;
      if (!rec.ok) result.failed += 1;
    }
    out.flush();
    for (std::size_t k = pending.size(); k-- > 0;) {
      if (budgets[k] && fresh[k].kind == "combined") {
        write_text_file(config.output_dir + "/accountant.json",
                        budget_to_json(*budgets[k]) + "\n");
        break;
      }
    }
  }

  // Samples come from the union of reused and fresh records.
  for (const MatrixRow& row : rows) {
    auto it = done.find({row.kind, row.seed});
    if (it != done.end()) {
      result.records.push_back(it->second);
    }
  }
  for (const RunRecord& rec : fresh) result.records.push_back(rec);

  result.samples.pair_name = own_mech_name(config.compose.own) + "+" +
                             base_mech_name(config.compose.base) +
                             (config.compose.mode == ComposeMode::kRelaxed
                                  ? " (relaxed)"
                                  : "");
  result.samples.dataset = config.name;
  result.samples.target_epsilon = config.compose.dp.target_epsilon;
  for (const RunRecord& rec : result.records) {
    if (!rec.ok) continue;
    for (const auto& [name, value] : rec.metrics) {
      Metric m = metric_from_name(name);
      if (rec.kind == "combined") {
        result.samples.combined[m].push_back(value);
      } else if (rec.kind.rfind("baseline-", 0) == 0) {
        result.samples.baselines[rec.kind.substr(9)][m].push_back(value);
      }
    }
  }

  if (config.compose.base != BaseMech::kNone &&
      config.compose.own != OwnMech::kNone) {
    result.verdict =
        decide_conflict(result.samples, config.thresholds, config.stats);
    result.has_verdict = true;
    write_text_file(config.output_dir + "/verdict.json",
                    verdict_to_json(result.verdict) + "\n");
  }
  return result;
}

namespace {

void set_axis(ExperimentConfig& c, const std::string& axis, double v) {
  auto as_size = [&] { return static_cast<std::size_t>(v); };
  if (axis == "dp.target_epsilon") c.compose.dp.target_epsilon = v;
  else if (axis == "dp.noise_sigma") c.compose.dp.noise_sigma = v;
  else if (axis == "dp.clip_c") c.compose.dp.clip_c = v;
  else if (axis == "dp.delta") c.compose.dp.delta = v;
  else if (axis == "adv.gamma") c.compose.adv.gamma = v;
  else if (axis == "adv.steps") c.compose.adv.steps = as_size();
  else if (axis == "wm.trigger_size") c.compose.wm.trigger_size = as_size();
  else if (axis == "rad.mark_fraction") c.compose.rad.mark_fraction = v;
  else if (axis == "rad.perturb_budget") c.compose.rad.perturb_budget = v;
  else if (axis == "di.walk_step") c.compose.di.walk_step = v;
  else if (axis == "di.walk_count") c.compose.di.walk_count = as_size();
  else if (axis == "train.epochs") c.compose.plan.epochs = as_size();
  else if (axis == "train.batch_size") c.compose.plan.batch_size = as_size();
  else if (axis == "train.lr_max") c.compose.plan.lr_max = v;
  else if (axis == "dataset.test_noise_factor") c.dataset.synth.test_noise_factor = v;
  else {
    throw ConfigError(
        "unsupported sweep axis \"" + axis +
        "\" (try dp.target_epsilon, dp.noise_sigma, adv.gamma, adv.steps, "
        "wm.trigger_size, rad.mark_fraction, rad.perturb_budget, di.walk_step, "
        "di.walk_count, train.epochs, train.batch_size, train.lr_max, "
        "dataset.test_noise_factor)");
  }
}

std::string trim_float(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

std::vector<MatrixResult> run_sweep(const ExperimentConfig& config,
                                    const std::string& axis,
                                    const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<MatrixResult> results;
  for (double v : values) {
    ExperimentConfig point = config;
    set_axis(point, axis, v);
    point.output_dir =
        config.output_dir + "/sweep/" + axis + "=" + trim_float(v);
    results.push_back(run_matrix(point));
  }
  return results;
}

DiFpResult run_di_false_positive(const ExperimentConfig& config) {
  TaskData task = load_task(config.dataset);
  const DiSpec& di = config.compose.di;
  fs::create_directories(config.output_dir);

  std::vector<LabeledSet> chunks =
      chunk_split(task.train, 2, mix_seed(config.dataset.synth.seed, "chunks"));
  Model topology = make_topology(config.compose.topology,
                                 task.train.example_shape(),
                                 task.train.num_classes);
  TrainPlan plan_a = config.compose.plan;
  plan_a.seed = mix_seed(config.seed_base, "fp-chunk-a");
  Model victim = train_model(topology, chunks[0], plan_a);
  TrainPlan plan_b = config.compose.plan;
  plan_b.seed = mix_seed(config.seed_base, "fp-chunk-b");
  Model other = train_model(topology, chunks[1], plan_b);

  DiFpResult r;
  std::uint64_t seed = mix_seed(config.seed_base, "fp");

  // Victim self-verification, with the fit embeddings exported. One
  // direction seed covers the fit and decision embeddings so the fitted
  // distinguisher transfers.
  VerifySplit split =
      make_verify_split(chunks[0], task.test, di, mix_seed(seed, "split"));
  std::uint64_t dirs = mix_seed(seed, "dirs");
  std::vector<std::vector<double>> fit_m =
      blind_walk_embed(victim, split.fit_members, di, dirs);
  std::vector<std::vector<double>> fit_n =
      blind_walk_embed(victim, split.fit_nonmembers, di, dirs);
  Distinguisher dist = train_distinguisher(fit_m, fit_n);
  r.p_victim = di_pvalue(victim, split.ver, split.held, dist, di, dirs);
  write_embeddings_csv(config.output_dir + "/embeddings.csv", fit_m, fit_n);

  // Exchangeable null: both decision sides drawn from held-out test data.
  if (task.test.size() < 2 * (di.fit_size + di.ver_size)) {
    throw ConfigError("test split too small for the exchangeable null study");
  }
  std::vector<LabeledSet> halves =
      chunk_split(task.test, 2, mix_seed(seed, "null-halves"));
  r.p_test_null = verify_dataset_use(victim, halves[0], halves[1], di,
                                     mix_seed(seed, "null"));

  // Same verifier data against the independent chunk model.
  r.p_other_chunk =
      verify_dataset_use(other, chunks[0], task.test, di, mix_seed(seed, "other"));

  r.victim_flagged = r.p_victim <= config.thresholds.di_p_max;
  r.null_clear = r.p_test_null > config.thresholds.di_p_max;
  r.other_flagged = r.p_other_chunk <= config.thresholds.di_p_max;
  write_text_file(config.output_dir + "/difp.json", difp_to_json(r) + "\n");
  return r;
}

}  // namespace conflictbench
