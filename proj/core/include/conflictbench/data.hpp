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

#ifndef CONFLICTBENCH_DATA_HPP_
#define CONFLICTBENCH_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "conflictbench/tensor.hpp"

namespace conflictbench {

// A labeled dataset: inputs {N} + example_shape, labels in [0, num_classes).
struct LabeledSet {
  Tensor inputs;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> example_shape() const;
  std::size_t example_numel() const;
  // Copy of example i as a batch of one.
  Tensor example(std::size_t i) const;
  LabeledSet subset(const std::vector<std::size_t>& idx) const;
};

void validate_set(const LabeledSet& set);
LabeledSet concat(const LabeledSet& a, const LabeledSet& b);

// Copies the selected rows into a batch tensor; labels follow index order.
Tensor gather_batch(const LabeledSet& set, const std::vector<std::size_t>& idx,
                    std::vector<int>* labels);

// ---- IDX container (big-endian magic: 0x00 0x00 dtype ndims) ----
//
// Readers accept dtype 0x08 (unsigned byte, values divided by 255) and
// 0x0E (IEEE double, taken as-is). Images load as {N, 1, H, W} from
// 3-dimensional files and {N, C, H, W} from 4-dimensional files.
Tensor read_idx_images(const std::string& path);
std::vector<int> read_idx_labels(const std::string& path);
// Writes images as dtype 0x0E so a read round-trips bit-exactly.
void write_idx_images(const std::string& path, const Tensor& images);
// Writes labels as dtype 0x08; labels must lie in [0, 255].
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

// ---- CSV: one example per row, "label,v0,v1,..." ----
LabeledSet read_csv_labeled(const std::string& path,
                            std::vector<std::size_t> example_shape,
                            std::size_t num_classes);
void write_csv_labeled(const std::string& path, const LabeledSet& set);

// ---- Synthetic tasks ----

// Gaussian-bump class templates on a grid: each class renders two bumps at
// class-specific positions; samples add sub-pixel center jitter and pixel
// noise, clamped to [0, 1]. `test_noise_factor` scales jitter and noise for
// test draws only, which injects a controlled train/test shift.
struct SynthSpec {
  std::size_t num_classes = 10;
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  std::size_t grid = 8;
  double jitter = 0.7;
  double pixel_noise = 0.06;
  double test_noise_factor = 1.0;
  std::uint64_t seed = 0;
};

struct SynthTask {
  LabeledSet train;
  LabeledSet test;
};

SynthTask make_blob_task(const SynthSpec& spec);

// Out-of-distribution pool for watermark triggers: bumps rendered along
// spiral arcs, a texture no blob class produces. Labels are all zero;
// build_trigger_set assigns the keyed labels.
LabeledSet make_spiral_pool(std::size_t count, std::size_t grid,
                            std::size_t num_classes, std::uint64_t seed);

// Samples `size` records from the pool and assigns each a uniformly random
// label. A model that never saw the set answers correctly with rate ~1/m.
LabeledSet build_trigger_set(const LabeledSet& pool, std::size_t size,
                             std::uint64_t seed);

// Shuffles with `seed` and splits into `parts` near-equal disjoint chunks.
std::vector<LabeledSet> chunk_split(const LabeledSet& set, std::size_t parts,
                                    std::uint64_t seed);

// k distinct indices out of [0, n), drawn without replacement.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                        std::uint64_t seed);

// Concatenates copies of the set until it holds at least min_size records.
LabeledSet repeat_to_min_size(const LabeledSet& set, std::size_t min_size);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_DATA_HPP_
