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

#ifndef CONFLICTBENCH_MODEL_HPP_
#define CONFLICTBENCH_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "conflictbench/tensor.hpp"

namespace conflictbench {

enum class LayerKind { kDense, kConv2d, kRelu, kMaxPool2d, kFlatten };

// One layer of a feed-forward stack. Only the fields relevant to `kind`
// are meaningful; the rest stay zero.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  // kDense
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  // kConv2d (stride 1, symmetric zero padding)
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  std::size_t kernel = 0;
  std::size_t pad = 0;
  // kMaxPool2d (square window, stride = window)
  std::size_t window = 0;
};

// A classifier is a layer stack plus its parameters. Weights/biases are
// parallel to `layers`; parameterless layers hold empty tensors.
struct Model {
  std::vector<std::size_t> input_shape;  // per example, e.g. {1, 8, 8}
  std::size_t num_classes = 0;
  std::vector<LayerSpec> layers;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  std::size_t param_count() const;
};

// Throws ConfigError when the layer chain does not produce `num_classes`
// logits or an intermediate shape is inconsistent.
void validate_model(const Model& model);

// input -> flatten -> dense(h0) -> relu -> ... -> dense(num_classes)
Model make_mlp(std::vector<std::size_t> input_shape,
               const std::vector<std::size_t>& hidden,
               std::size_t num_classes);

// input -> [conv3x3(same) -> relu -> maxpool2] x N -> flatten
//       -> dense(hidden) -> relu -> dense(num_classes)
Model make_cnn(std::vector<std::size_t> input_shape,
               const std::vector<std::size_t>& channels, std::size_t hidden,
               std::size_t num_classes);

// Named topology used by experiment configs: "mlp64x32" or "cnn8x16h32".
Model make_topology(const std::string& name,
                    std::vector<std::size_t> input_shape,
                    std::size_t num_classes);

// He-style uniform init, deterministic in `seed`.
void init_params(Model& model, std::uint64_t seed);

// Gradients (or any parameter-shaped accumulator) for a model.
struct GradStore {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  static GradStore zeros_like(const Model& model);
  void add(const GradStore& other);
  void axpy(double a, const GradStore& other);
  void scale(double a);
  double l2_norm() const;
  double max_abs_diff(const GradStore& other) const;
};

// Activations recorded during a forward pass: acts[0] is the batch input,
// acts[i + 1] the output of layer i. acts.back() holds the logits.
struct ForwardTrace {
  std::vector<Tensor> acts;
};

// Batch input shape is {B} + input_shape. Returns logits {B, num_classes}.
Tensor forward_logits(const Model& model, const Tensor& batch,
                      ForwardTrace* trace = nullptr);

// Row-wise softmax of the logits, {B, num_classes}.
Tensor forward_probs(const Model& model, const Tensor& batch);

// Mean softmax cross-entropy over the batch. Throws NumericError naming
// the offending batch row when a per-example loss is non-finite.
double mean_loss(const Model& model, const Tensor& batch,
                 const std::vector<int>& labels);

// Per-example softmax cross-entropy losses, length B.
std::vector<double> per_example_losses(const Model& model, const Tensor& batch,
                                       const std::vector<int>& labels);

// Gradient of the mean cross-entropy with respect to all parameters.
// When `input_grad` is non-null it also receives d(mean loss)/d(batch).
GradStore loss_grad(const Model& model, const Tensor& batch,
                    const std::vector<int>& labels,
                    Tensor* input_grad = nullptr);

// One gradient per example (loss of that example alone, not divided by B).
std::vector<GradStore> per_example_grads(const Model& model,
                                         const Tensor& batch,
                                         const std::vector<int>& labels);

// Propagates an arbitrary gradient seeded at the output of layer
// `at_layer` back to the batch input. `trace` must come from a
// forward_logits call on this model and batch.
Tensor backprop_to_input(const Model& model, const ForwardTrace& trace,
                         std::size_t at_layer, const Tensor& seed_grad);

// Index of the layer whose output feeds the final dense layer (the
// penultimate feature representation used by data-marking carriers).
std::size_t feature_layer_index(const Model& model);

// Output of layer `feature_layer_index` for the batch: {B, feature_dim}.
Tensor penultimate_features(const Model& model, const Tensor& batch,
                            ForwardTrace* trace = nullptr);
std::size_t feature_dim(const Model& model);

// SGD step: params -= lr * grads.
void apply_grads(Model& model, const GradStore& grads, double lr);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_MODEL_HPP_
