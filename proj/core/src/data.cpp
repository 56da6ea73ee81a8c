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

#include "conflictbench/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "conflictbench/errors.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {
namespace {

constexpr unsigned char kDtypeUbyte = 0x08;
constexpr unsigned char kDtypeDouble = 0x0E;

std::uint32_t read_u32_be(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw InputError("idx file truncated inside the header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

double read_f64_be(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw InputError("idx file truncated inside the data section");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u = (u << 8) | b[i];
  return std::bit_cast<double>(u);
}

void write_f64_be(std::ostream& out, double v) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 7; i >= 0; --i) {
    b[i] = static_cast<unsigned char>(u & 0xFF);
    u >>= 8;
  }
  out.write(reinterpret_cast<const char*>(b), 8);
}

// Reads the magic and dimension list; returns dtype.
unsigned char read_idx_header(std::istream& in, const std::string& path,
                              std::vector<std::size_t>* dims) {
  unsigned char magic[4];
  in.read(reinterpret_cast<char*>(magic), 4);
  if (!in) throw InputError(path + ": idx file shorter than its magic");
  if (magic[0] != 0 || magic[1] != 0) {
    throw InputError(path + ": idx magic must start with two zero bytes");
  }
  unsigned char dtype = magic[2];
  if (dtype != kDtypeUbyte && dtype != kDtypeDouble) {
    throw InputError(path + ": unsupported idx dtype byte");
  }
  unsigned char ndims = magic[3];
  if (ndims == 0) throw InputError(path + ": idx file declares zero dimensions");
  dims->clear();
  for (unsigned i = 0; i < ndims; ++i) dims->push_back(read_u32_be(in));
  return dtype;
}

std::vector<double> read_idx_payload(std::istream& in, const std::string& path,
                                     unsigned char dtype, std::size_t count) {
  std::vector<double> values(count);
  if (dtype == kDtypeUbyte) {
    std::vector<unsigned char> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (!in) throw InputError(path + ": idx file truncated inside the data section");
    for (std::size_t i = 0; i < count; ++i) values[i] = raw[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < count; ++i) values[i] = read_f64_be(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError(path + ": idx file has trailing bytes past the declared extent");
  }
  return values;
}

}  // namespace

std::vector<std::size_t> LabeledSet::example_shape() const {
  if (inputs.shape.empty()) return {};
  return {inputs.shape.begin() + 1, inputs.shape.end()};
}

std::size_t LabeledSet::example_numel() const {
  return size() == 0 ? 0 : inputs.size() / size();
}

Tensor LabeledSet::example(std::size_t i) const {
  std::vector<std::size_t> shape = example_shape();
  shape.insert(shape.begin(), 1);
  Tensor out(shape);
  std::size_t row = example_numel();
  std::copy(inputs.data.begin() + i * row, inputs.data.begin() + (i + 1) * row,
            out.data.begin());
  return out;
}

LabeledSet LabeledSet::subset(const std::vector<std::size_t>& idx) const {
  LabeledSet out;
  out.num_classes = num_classes;
  std::vector<std::size_t> shape = example_shape();
  shape.insert(shape.begin(), idx.size());
  out.inputs = Tensor(shape);
  out.labels.reserve(idx.size());
  std::size_t row = example_numel();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= size()) throw InputError("subset index out of range");
    std::copy(inputs.data.begin() + idx[k] * row,
              inputs.data.begin() + (idx[k] + 1) * row,
              out.inputs.data.begin() + k * row);
    out.labels.push_back(labels[idx[k]]);
  }
  return out;
}

void validate_set(const LabeledSet& set) {
  if (set.inputs.shape.empty() || set.inputs.shape[0] != set.labels.size()) {
    throw InputError("dataset row count does not match its label count");
  }
  if (set.num_classes == 0) throw InputError("dataset declares zero classes");
  for (int y : set.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= set.num_classes) {
      throw InputError("dataset label out of range");
    }
  }
  if (!set.inputs.all_finite()) throw InputError("dataset contains non-finite values");
}

LabeledSet concat(const LabeledSet& a, const LabeledSet& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.example_shape() != b.example_shape() || a.num_classes != b.num_classes) {
    throw InputError("cannot concat datasets with different shapes or class counts");
  }
  LabeledSet out;
  out.num_classes = a.num_classes;
  std::vector<std::size_t> shape = a.example_shape();
  shape.insert(shape.begin(), a.size() + b.size());
  out.inputs = Tensor(shape);
  std::copy(a.inputs.data.begin(), a.inputs.data.end(), out.inputs.data.begin());
  std::copy(b.inputs.data.begin(), b.inputs.data.end(),
            out.inputs.data.begin() + a.inputs.size());
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

Tensor gather_batch(const LabeledSet& set, const std::vector<std::size_t>& idx,
                    std::vector<int>* labels) {
  std::vector<std::size_t> shape = set.example_shape();
  shape.insert(shape.begin(), idx.size());
  Tensor out(shape);
  if (labels) labels->clear();
  std::size_t row = set.example_numel();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= set.size()) throw InputError("batch index out of range");
    std::copy(set.inputs.data.begin() + idx[k] * row,
              set.inputs.data.begin() + (idx[k] + 1) * row,
              out.data.begin() + k * row);
    if (labels) labels->push_back(set.labels[idx[k]]);
  }
  return out;
}

Tensor read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open idx file");
  std::vector<std::size_t> dims;
  unsigned char dtype = read_idx_header(in, path, &dims);
  if (dims.size() != 3 && dims.size() != 4) {
    throw InputError(path + ": idx image file must have 3 or 4 dimensions");
  }
  std::vector<std::size_t> shape;
  if (dims.size() == 3) {
    shape = {dims[0], 1, dims[1], dims[2]};
  } else {
    shape = dims;
  }
  std::size_t count = Tensor::numel(shape);
  Tensor out(shape, read_idx_payload(in, path, dtype, count));
  return out;
}

std::vector<int> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open idx file");
  std::vector<std::size_t> dims;
  unsigned char dtype = read_idx_header(in, path, &dims);
  if (dims.size() != 1) throw InputError(path + ": idx label file must be 1-dimensional");
  if (dtype != kDtypeUbyte) {
    throw InputError(path + ": idx label file must use the unsigned byte dtype");
  }
  std::vector<unsigned char> raw(dims[0]);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(dims[0]));
  if (!in) throw InputError(path + ": idx file truncated inside the data section");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError(path + ": idx file has trailing bytes past the declared extent");
  }
  return std::vector<int>(raw.begin(), raw.end());
}

void write_idx_images(const std::string& path, const Tensor& images) {
  if (images.shape.size() != 4) {
    throw InputError("idx image writer expects a {N, C, H, W} tensor");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot open idx file for writing");
  unsigned char magic[4] = {0, 0, kDtypeDouble, 4};
  out.write(reinterpret_cast<const char*>(magic), 4);
  for (std::size_t d : images.shape) write_u32_be(out, static_cast<std::uint32_t>(d));
  for (double v : images.data) write_f64_be(out, v);
  if (!out) throw InputError(path + ": idx write failed");
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot open idx file for writing");
  unsigned char magic[4] = {0, 0, kDtypeUbyte, 1};
  out.write(reinterpret_cast<const char*>(magic), 4);
  write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  for (int y : labels) {
    if (y < 0 || y > 255) throw InputError("idx label writer needs labels in [0, 255]");
    unsigned char b = static_cast<unsigned char>(y);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!out) throw InputError(path + ": idx write failed");
}

LabeledSet read_csv_labeled(const std::string& path,
                            std::vector<std::size_t> example_shape,
                            std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open csv file");
  std::size_t row_len = Tensor::numel(example_shape);
  std::vector<double> values;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) {
      throw InputError(path + ": malformed csv row " + std::to_string(line_no));
    }
    try {
      labels.push_back(std::stoi(cell));
    } catch (const std::exception&) {
      throw InputError(path + ": bad label on csv row " + std::to_string(line_no));
    }
    std::size_t got = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError(path + ": bad value on csv row " + std::to_string(line_no));
      }
      ++got;
    }
    if (got != row_len) {
      throw InputError(path + ": csv row " + std::to_string(line_no) + " has " +
                       std::to_string(got) + " values, expected " +
                       std::to_string(row_len));
    }
  }
  LabeledSet set;
  set.num_classes = num_classes;
  example_shape.insert(example_shape.begin(), labels.size());
  set.inputs = Tensor(std::move(example_shape), std::move(values));
  set.labels = std::move(labels);
  validate_set(set);
  return set;
}

void write_csv_labeled(const std::string& path, const LabeledSet& set) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open csv file for writing");
  out.precision(17);
  std::size_t row = set.example_numel();
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.labels[i];
    for (std::size_t j = 0; j < row; ++j) out << ',' << set.inputs.data[i * row + j];
    out << '\n';
  }
  if (!out) throw InputError(path + ": csv write failed");
}

namespace {

struct Bump {
  double cy, cx, amp, width;
};

void render_bumps(double* img, std::size_t grid, const std::vector<Bump>& bumps) {
  for (std::size_t y = 0; y < grid; ++y) {
    for (std::size_t x = 0; x < grid; ++x) {
      double v = 0.0;
      for (const Bump& b : bumps) {
        double dy = static_cast<double>(y) - b.cy;
        double dx = static_cast<double>(x) - b.cx;
        v += b.amp * std::exp(-(dy * dy + dx * dx) / (2.0 * b.width * b.width));
      }
      img[y * grid + x] = std::clamp(v, 0.0, 1.0);
    }
  }
}

// Two class-specific bump centers, spread over the grid interior.
std::vector<Bump> class_template(std::size_t cls, std::size_t grid,
                                 std::uint64_t seed) {
  Rng rng = make_rng(mix_seed(seed, 1000 + cls));
  double lo = 1.2, hi = static_cast<double>(grid) - 2.2;
  std::uniform_real_distribution<double> pos(lo, hi);
  std::vector<Bump> bumps;
  for (int b = 0; b < 2; ++b) {
    bumps.push_back({pos(rng), pos(rng), 0.85 + 0.15 * b, 1.15});
  }
  return bumps;
}

LabeledSet draw_blobs(const SynthSpec& spec, std::size_t count, double factor,
                      std::uint64_t seed) {
  LabeledSet set;
  set.num_classes = spec.num_classes;
  set.inputs = Tensor({count, 1, spec.grid, spec.grid});
  set.labels.resize(count);
  std::vector<std::vector<Bump>> templates;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    templates.push_back(class_template(c, spec.grid, spec.seed));
  }
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> jit(-spec.jitter * factor,
                                             spec.jitter * factor);
  std::normal_distribution<double> noise(0.0, spec.pixel_noise * factor);
  std::size_t pixels = spec.grid * spec.grid;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t cls = i % spec.num_classes;
    set.labels[i] = static_cast<int>(cls);
    std::vector<Bump> bumps = templates[cls];
    for (Bump& b : bumps) {
      b.cy += jit(rng);
      b.cx += jit(rng);
    }
    double* img = set.inputs.data.data() + i * pixels;
    render_bumps(img, spec.grid, bumps);
    for (std::size_t p = 0; p < pixels; ++p) {
      img[p] = std::clamp(img[p] + noise(rng), 0.0, 1.0);
    }
  }
  return set;
}

}  // namespace

SynthTask make_blob_task(const SynthSpec& spec) {
  if (spec.num_classes < 2 || spec.grid < 4) {
    throw ConfigError("blob task needs at least 2 classes and a 4x4 grid");
  }
  SynthTask task;
  task.train = draw_blobs(spec, spec.train_size, 1.0, mix_seed(spec.seed, "train"));
  task.test = draw_blobs(spec, spec.test_size, spec.test_noise_factor,
                         mix_seed(spec.seed, "test"));
  return task;
}

LabeledSet make_spiral_pool(std::size_t count, std::size_t grid,
                            std::size_t num_classes, std::uint64_t seed) {
  LabeledSet set;
  set.num_classes = num_classes;
  set.inputs = Tensor({count, 1, grid, grid});
  set.labels.assign(count, 0);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.141592653589793);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double center = (static_cast<double>(grid) - 1.0) / 2.0;
  std::size_t pixels = grid * grid;
  for (std::size_t i = 0; i < count; ++i) {
    // Three bumps along one spiral arm; phase, handedness, and arm radius
    // vary per record so the pool holds visually distinct images.
    double p0 = phase(rng);
    double hand = u01(rng) < 0.5 ? 1.0 : -1.0;
    double stretch = (0.92 + 0.16 * u01(rng)) * 0.16 * static_cast<double>(grid);
    std::vector<Bump> bumps;
    for (int k = 0; k < 3; ++k) {
      double t = 0.9 + 0.85 * k;
      double r = stretch * t;
      double a = hand * (p0 + 1.05 * t);
      bumps.push_back({center + r * std::sin(a), center + r * std::cos(a),
                       0.9, 0.8});
    }
    render_bumps(set.inputs.data.data() + i * pixels, grid, bumps);
  }
  return set;
}

LabeledSet build_trigger_set(const LabeledSet& pool, std::size_t size,
                             std::uint64_t seed) {
  if (size == 0) throw ConfigError("trigger set size must be positive");
  if (size > pool.size()) {
    throw ConfigError("trigger set larger than the out-of-distribution pool");
  }
  LabeledSet triggers =
      pool.subset(sample_indices(pool.size(), size, mix_seed(seed, "pick")));
  Rng rng = make_rng(mix_seed(seed, "labels"));
  std::uniform_int_distribution<int> lab(0, static_cast<int>(pool.num_classes) - 1);
  for (int& y : triggers.labels) y = lab(rng);
  return triggers;
}

std::vector<LabeledSet> chunk_split(const LabeledSet& set, std::size_t parts,
                                    std::uint64_t seed) {
  if (parts == 0 || parts > set.size()) {
    throw ConfigError("chunk_split needs 1..N parts");
  }
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<LabeledSet> chunks;
  std::size_t base = set.size() / parts, extra = set.size() % parts;
  std::size_t at = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    std::size_t len = base + (p < extra ? 1 : 0);
    std::vector<std::size_t> idx(order.begin() + at, order.begin() + at + len);
    std::sort(idx.begin(), idx.end());
    chunks.push_back(set.subset(idx));
    at += len;
  }
  return chunks;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                        std::uint64_t seed) {
  if (k > n) throw InputError("cannot sample more indices than available");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(k);
  return order;
}

LabeledSet repeat_to_min_size(const LabeledSet& set, std::size_t min_size) {
  if (set.size() == 0) throw InputError("cannot repeat an empty dataset");
  LabeledSet out = set;
  while (out.size() < min_size) out = concat(out, set);
  return out;
}

}  // namespace conflictbench
