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

#include "conflictbench/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "conflictbench/errors.hpp"
#include "conflictbench/parallel.hpp"
#include "conflictbench/rng.hpp"

namespace conflictbench {
namespace {

bool has_params(const LayerSpec& layer) {
  return layer.kind == LayerKind::kDense || layer.kind == LayerKind::kConv2d;
}

std::vector<std::size_t> layer_output_shape(const LayerSpec& layer,
                                            const std::vector<std::size_t>& in) {
  switch (layer.kind) {
    case LayerKind::kDense: {
      if (in.size() != 1 || in[0] != layer.in_dim) {
        throw ConfigError("dense layer expects a flat input of width " +
                          std::to_string(layer.in_dim));
      }
      return {layer.out_dim};
    }
    case LayerKind::kConv2d: {
      if (in.size() != 3 || in[0] != layer.in_ch) {
        throw ConfigError("conv layer expects {channels, H, W} input with " +
                          std::to_string(layer.in_ch) + " channels");
      }
      std::size_t span = layer.kernel;
      if (span == 0 || in[1] + 2 * layer.pad < span || in[2] + 2 * layer.pad < span) {
        throw ConfigError("conv kernel does not fit the padded input");
      }
      return {layer.out_ch, in[1] + 2 * layer.pad - span + 1,
              in[2] + 2 * layer.pad - span + 1};
    }
    case LayerKind::kRelu:
      return in;
    case LayerKind::kMaxPool2d: {
      if (in.size() != 3) throw ConfigError("maxpool expects {channels, H, W} input");
      std::size_t w = layer.window;
      if (w == 0 || in[1] % w != 0 || in[2] % w != 0) {
        throw ConfigError("maxpool window must divide the spatial extents");
      }
      return {in[0], in[1] / w, in[2] / w};
    }
    case LayerKind::kFlatten:
      return {Tensor::numel(in)};
  }
  throw ConfigError("unknown layer kind");
}

std::vector<std::size_t> batch_shape(std::size_t b,
                                     const std::vector<std::size_t>& per_example) {
  std::vector<std::size_t> s;
  s.reserve(per_example.size() + 1);
  s.push_back(b);
  s.insert(s.end(), per_example.begin(), per_example.end());
  return s;
}

std::vector<std::size_t> per_example_shape(const Tensor& batch) {
  if (batch.shape.empty()) throw InputError("batch tensor must have a leading batch dim");
  return {batch.shape.begin() + 1, batch.shape.end()};
}

void forward_dense(const LayerSpec& l, const Tensor& w, const Tensor& b,
                   const Tensor& in, Tensor& out) {
  std::size_t batch = in.shape[0];
  for (std::size_t n = 0; n < batch; ++n) {
    const double* x = in.data.data() + n * l.in_dim;
    double* y = out.data.data() + n * l.out_dim;
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      const double* wr = w.data.data() + o * l.in_dim;
      double acc = b.data[o];
      for (std::size_t i = 0; i < l.in_dim; ++i) acc += wr[i] * x[i];
      y[o] = acc;
    }
  }
}

void backward_dense(const LayerSpec& l, const Tensor& w, const Tensor& in,
                    const Tensor& gout, Tensor* gin, Tensor* gw, Tensor* gb) {
  std::size_t batch = in.shape[0];
  for (std::size_t n = 0; n < batch; ++n) {
    const double* x = in.data.data() + n * l.in_dim;
    const double* gy = gout.data.data() + n * l.out_dim;
    double* gx = gin ? gin->data.data() + n * l.in_dim : nullptr;
    for (std::size_t o = 0; o < l.out_dim; ++o) {
      double g = gy[o];
      if (gb) gb->data[o] += g;
      const double* wr = w.data.data() + o * l.in_dim;
      double* gwr = gw ? gw->data.data() + o * l.in_dim : nullptr;
      for (std::size_t i = 0; i < l.in_dim; ++i) {
        if (gwr) gwr[i] += g * x[i];
        if (gx) gx[i] += g * wr[i];
      }
    }
  }
}

void forward_conv(const LayerSpec& l, const Tensor& w, const Tensor& b,
                  const Tensor& in, Tensor& out) {
  std::size_t batch = in.shape[0];
  std::size_t h = in.shape[2], wd = in.shape[3];
  std::size_t oh = out.shape[2], ow = out.shape[3];
  std::size_t k = l.kernel;
  long pad = static_cast<long>(l.pad);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          double acc = b.data[oc];
          for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
            const double* plane = in.data.data() + ((n * l.in_ch + ic) * h) * wd;
            const double* wk = w.data.data() + ((oc * l.in_ch + ic) * k) * k;
            for (std::size_t ky = 0; ky < k; ++ky) {
              long iy = static_cast<long>(y + ky) - pad;
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                long ix = static_cast<long>(x + kx) - pad;
                if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                acc += plane[iy * static_cast<long>(wd) + ix] * wk[ky * k + kx];
              }
            }
          }
          out.data[((n * l.out_ch + oc) * oh + y) * ow + x] = acc;
        }
      }
    }
  }
}

void backward_conv(const LayerSpec& l, const Tensor& w, const Tensor& in,
                   const Tensor& gout, Tensor* gin, Tensor* gw, Tensor* gb) {
  std::size_t batch = in.shape[0];
  std::size_t h = in.shape[2], wd = in.shape[3];
  std::size_t oh = gout.shape[2], ow = gout.shape[3];
  std::size_t k = l.kernel;
  long pad = static_cast<long>(l.pad);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          double g = gout.data[((n * l.out_ch + oc) * oh + y) * ow + x];
          if (g == 0.0) continue;
          if (gb) gb->data[oc] += g;
          for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
            const double* plane = in.data.data() + ((n * l.in_ch + ic) * h) * wd;
            double* gplane = gin ? gin->data.data() + ((n * l.in_ch + ic) * h) * wd : nullptr;
            const double* wk = w.data.data() + ((oc * l.in_ch + ic) * k) * k;
            double* gwk = gw ? gw->data.data() + ((oc * l.in_ch + ic) * k) * k : nullptr;
            for (std::size_t ky = 0; ky < k; ++ky) {
              long iy = static_cast<long>(y + ky) - pad;
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                long ix = static_cast<long>(x + kx) - pad;
                if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                std::size_t off = static_cast<std::size_t>(iy) * wd + static_cast<std::size_t>(ix);
                if (gwk) gwk[ky * k + kx] += g * plane[off];
                if (gplane) gplane[off] += g * wk[ky * k + kx];
              }
            }
          }
        }
      }
    }
  }
}

void forward_pool(const LayerSpec& l, const Tensor& in, Tensor& out) {
  std::size_t batch = in.shape[0], c = in.shape[1];
  std::size_t h = in.shape[2], wd = in.shape[3];
  std::size_t win = l.window;
  std::size_t oh = h / win, ow = wd / win;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* plane = in.data.data() + ((n * c + ch) * h) * wd;
      double* oplane = out.data.data() + ((n * c + ch) * oh) * ow;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          double m = plane[(y * win) * wd + x * win];
          for (std::size_t dy = 0; dy < win; ++dy) {
            for (std::size_t dx = 0; dx < win; ++dx) {
              m = std::max(m, plane[(y * win + dy) * wd + x * win + dx]);
            }
          }
          oplane[y * ow + x] = m;
        }
      }
    }
  }
}

// Gradient routes to the first maximal element of each window, matching the
// scan order of the forward pass, so ties resolve deterministically.
void backward_pool(const LayerSpec& l, const Tensor& in, const Tensor& gout,
                   Tensor* gin) {
  if (!gin) return;
  std::size_t batch = in.shape[0], c = in.shape[1];
  std::size_t h = in.shape[2], wd = in.shape[3];
  std::size_t win = l.window;
  std::size_t oh = h / win, ow = wd / win;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* plane = in.data.data() + ((n * c + ch) * h) * wd;
      double* gplane = gin->data.data() + ((n * c + ch) * h) * wd;
      const double* gy = gout.data.data() + ((n * c + ch) * oh) * ow;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          std::size_t best = (y * win) * wd + x * win;
          double m = plane[best];
          for (std::size_t dy = 0; dy < win; ++dy) {
            for (std::size_t dx = 0; dx < win; ++dx) {
              std::size_t off = (y * win + dy) * wd + x * win + dx;
              if (plane[off] > m) {
                m = plane[off];
                best = off;
              }
            }
          }
          gplane[best] += gy[y * ow + x];
        }
      }
    }
  }
}

void forward_layer(const LayerSpec& l, const Tensor& w, const Tensor& b,
                   const Tensor& in, Tensor& out) {
  switch (l.kind) {
    case LayerKind::kDense:
      forward_dense(l, w, b, in, out);
      return;
    case LayerKind::kConv2d:
      forward_conv(l, w, b, in, out);
      return;
    case LayerKind::kRelu:
      for (std::size_t i = 0; i < in.size(); ++i)
        out.data[i] = in.data[i] > 0.0 ? in.data[i] : 0.0;
      return;
    case LayerKind::kMaxPool2d:
      forward_pool(l, in, out);
      return;
    case LayerKind::kFlatten:
      out.data = in.data;
      return;
  }
}

void backward_layer(const LayerSpec& l, const Tensor& w, const Tensor& in,
                    const Tensor& gout, Tensor* gin, Tensor* gw, Tensor* gb) {
  switch (l.kind) {
    case LayerKind::kDense:
      backward_dense(l, w, in, gout, gin, gw, gb);
      return;
    case LayerKind::kConv2d:
      backward_conv(l, w, in, gout, gin, gw, gb);
      return;
    case LayerKind::kRelu:
      if (gin) {
        for (std::size_t i = 0; i < in.size(); ++i)
          gin->data[i] = in.data[i] > 0.0 ? gout.data[i] : 0.0;
      }
      return;
    case LayerKind::kMaxPool2d:
      if (gin) gin->fill(0.0);
      backward_pool(l, in, gout, gin);
      return;
    case LayerKind::kFlatten:
      if (gin) gin->data = gout.data;
      return;
  }
}

// Row-wise softmax probabilities and per-example losses from logits.
// Returns false (and sets bad_row) on a non-finite loss.
bool softmax_ce(const Tensor& logits, const std::vector<int>& labels,
                Tensor* probs, std::vector<double>* losses,
                std::size_t* bad_row) {
  std::size_t batch = logits.shape[0], c = logits.shape[1];
  if (probs) *probs = Tensor({batch, c});
  if (losses) losses->assign(batch, 0.0);
  for (std::size_t n = 0; n < batch; ++n) {
    const double* row = logits.data.data() + n * c;
    double m = row[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - m);
    double lse = m + std::log(sum);
    double loss = lse - row[labels[n]];
    if (!std::isfinite(loss)) {
      if (bad_row) *bad_row = n;
      return false;
    }
    if (losses) (*losses)[n] = loss;
    if (probs) {
      double* prow = probs->data.data() + n * c;
      for (std::size_t j = 0; j < c; ++j) prow[j] = std::exp(row[j] - lse);
    }
  }
  return true;
}

void check_batch(const Model& model, const Tensor& batch,
                 const std::vector<int>& labels) {
  if (per_example_shape(batch) != model.input_shape) {
    throw InputError("batch shape does not match the model input shape");
  }
  if (labels.size() != batch.shape[0]) {
    throw InputError("label count does not match the batch size");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.num_classes) {
      throw InputError("label out of range");
    }
  }
}

// Reverse walk from a gradient at acts[from + 1] down to layer `to`.
// Accumulates parameter gradients when `g` is non-null; returns the
// gradient at acts[to] when `want_input` is true.
Tensor backward_walk(const Model& model, const ForwardTrace& trace,
                     std::size_t from, Tensor gout, GradStore* g,
                     bool want_input) {
  Tensor gin;
  for (std::size_t li = from + 1; li-- > 0;) {
    const LayerSpec& l = model.layers[li];
    bool need_gin = want_input || li > 0;
    if (need_gin) {
      gin = Tensor(trace.acts[li].shape);
    }
    backward_layer(l, model.weights[li], trace.acts[li], gout,
                   need_gin ? &gin : nullptr, g ? &g->weights[li] : nullptr,
                   g ? &g->biases[li] : nullptr);
    if (need_gin) gout = std::move(gin);
  }
  return gout;
}

}  // namespace

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    n += weights[i].size() + biases[i].size();
  }
  return n;
}

void validate_model(const Model& model) {
  if (model.layers.empty()) throw ConfigError("model has no layers");
  if (model.layers.size() != model.weights.size() ||
      model.layers.size() != model.biases.size()) {
    throw ConfigError("layer and parameter lists are misaligned");
  }
  std::vector<std::size_t> shape = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    shape = layer_output_shape(l, shape);
    if (l.kind == LayerKind::kDense) {
      if (model.weights[i].shape != std::vector<std::size_t>{l.out_dim, l.in_dim} ||
          model.biases[i].shape != std::vector<std::size_t>{l.out_dim}) {
        throw ConfigError("dense parameter shapes do not match the layer");
      }
    } else if (l.kind == LayerKind::kConv2d) {
      if (model.weights[i].shape !=
              std::vector<std::size_t>{l.out_ch, l.in_ch, l.kernel, l.kernel} ||
          model.biases[i].shape != std::vector<std::size_t>{l.out_ch}) {
        throw ConfigError("conv parameter shapes do not match the layer");
      }
    } else if (model.weights[i].size() != 0 || model.biases[i].size() != 0) {
      throw ConfigError("parameterless layer carries parameters");
    }
  }
  if (shape != std::vector<std::size_t>{model.num_classes}) {
    throw ConfigError("layer stack does not end in num_classes logits");
  }
  if (model.layers.back().kind != LayerKind::kDense) {
    throw ConfigError("final layer must be dense");
  }
}

namespace {

void push_layer(Model& m, LayerSpec l) {
  m.layers.push_back(l);
  if (l.kind == LayerKind::kDense) {
    m.weights.emplace_back(std::vector<std::size_t>{l.out_dim, l.in_dim});
    m.biases.emplace_back(std::vector<std::size_t>{l.out_dim});
  } else if (l.kind == LayerKind::kConv2d) {
    m.weights.emplace_back(std::vector<std::size_t>{l.out_ch, l.in_ch, l.kernel, l.kernel});
    m.biases.emplace_back(std::vector<std::size_t>{l.out_ch});
  } else {
    m.weights.emplace_back();
    m.biases.emplace_back();
  }
}

}  // namespace

Model make_mlp(std::vector<std::size_t> input_shape,
               const std::vector<std::size_t>& hidden, std::size_t num_classes) {
  Model m;
  m.input_shape = std::move(input_shape);
  m.num_classes = num_classes;
  std::size_t width = Tensor::numel(m.input_shape);
  if (m.input_shape.size() > 1) {
    push_layer(m, {.kind = LayerKind::kFlatten});
  }
  for (std::size_t h : hidden) {
    push_layer(m, {.kind = LayerKind::kDense, .in_dim = width, .out_dim = h});
    push_layer(m, {.kind = LayerKind::kRelu});
    width = h;
  }
  push_layer(m, {.kind = LayerKind::kDense, .in_dim = width, .out_dim = num_classes});
  validate_model(m);
  return m;
}

Model make_cnn(std::vector<std::size_t> input_shape,
               const std::vector<std::size_t>& channels, std::size_t hidden,
               std::size_t num_classes) {
  if (input_shape.size() != 3) {
    throw ConfigError("cnn topology expects a {channels, H, W} input shape");
  }
  Model m;
  m.input_shape = std::move(input_shape);
  m.num_classes = num_classes;
  std::size_t ch = m.input_shape[0];
  std::size_t h = m.input_shape[1], w = m.input_shape[2];
  for (std::size_t oc : channels) {
    push_layer(m, {.kind = LayerKind::kConv2d, .in_ch = ch, .out_ch = oc,
                   .kernel = 3, .pad = 1});
    push_layer(m, {.kind = LayerKind::kRelu});
    push_layer(m, {.kind = LayerKind::kMaxPool2d, .window = 2});
    ch = oc;
    h /= 2;
    w /= 2;
  }
  push_layer(m, {.kind = LayerKind::kFlatten});
  std::size_t width = ch * h * w;
  if (hidden > 0) {
    push_layer(m, {.kind = LayerKind::kDense, .in_dim = width, .out_dim = hidden});
    push_layer(m, {.kind = LayerKind::kRelu});
    width = hidden;
  }
  push_layer(m, {.kind = LayerKind::kDense, .in_dim = width, .out_dim = num_classes});
  validate_model(m);
  return m;
}

Model make_topology(const std::string& name, std::vector<std::size_t> input_shape,
                    std::size_t num_classes) {
  auto parse_dims = [&](const std::string& s) {
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t next = s.find('x', pos);
      std::string tok = s.substr(pos, next == std::string::npos ? next : next - pos);
      try {
        dims.push_back(std::stoul(tok));
      } catch (const std::exception&) {
        throw ConfigError("bad topology name: " + name);
      }
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return dims;
  };
  if (name == "linear") {
    return make_mlp(std::move(input_shape), {}, num_classes);
  }
  if (name.rfind("mlp", 0) == 0) {
    return make_mlp(std::move(input_shape), parse_dims(name.substr(3)), num_classes);
  }
  if (name.rfind("cnn", 0) == 0) {
    std::string rest = name.substr(3);
    std::size_t hpos = rest.find('h');
    if (hpos == std::string::npos) throw ConfigError("bad topology name: " + name);
    std::vector<std::size_t> channels = parse_dims(rest.substr(0, hpos));
    std::size_t hidden = 0;
    try {
      hidden = std::stoul(rest.substr(hpos + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad topology name: " + name);
    }
    return make_cnn(std::move(input_shape), channels, hidden, num_classes);
  }
  throw ConfigError("unknown topology name: " + name);
}

void init_params(Model& model, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (!has_params(l)) continue;
    std::size_t fan_in = l.kind == LayerKind::kDense
                             ? l.in_dim
                             : l.in_ch * l.kernel * l.kernel;
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& w : model.weights[i].data) w = u(rng);
    model.biases[i].fill(0.0);
  }
}

GradStore GradStore::zeros_like(const Model& model) {
  GradStore g;
  g.weights.reserve(model.weights.size());
  g.biases.reserve(model.biases.size());
  for (const Tensor& w : model.weights) g.weights.emplace_back(w.shape);
  for (const Tensor& b : model.biases) g.biases.emplace_back(b.shape);
  return g;
}

void GradStore::add(const GradStore& other) { axpy(1.0, other); }

void GradStore::axpy(double a, const GradStore& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].size()) weights[i].axpy(a, other.weights[i]);
    if (biases[i].size()) biases[i].axpy(a, other.biases[i]);
  }
}

void GradStore::scale(double a) {
  for (Tensor& w : weights) w.scale(a);
  for (Tensor& b : biases) b.scale(a);
}

double GradStore::l2_norm() const {
  double s = 0.0;
  for (const Tensor& w : weights)
    for (double v : w.data) s += v * v;
  for (const Tensor& b : biases)
    for (double v : b.data) s += v * v;
  return std::sqrt(s);
}

double GradStore::max_abs_diff(const GradStore& other) const {
  double m = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].size())
      m = std::max(m, conflictbench::max_abs_diff(weights[i], other.weights[i]));
    if (biases[i].size())
      m = std::max(m, conflictbench::max_abs_diff(biases[i], other.biases[i]));
  }
  return m;
}

Tensor forward_logits(const Model& model, const Tensor& batch, ForwardTrace* trace) {
  if (per_example_shape(batch) != model.input_shape) {
    throw InputError("batch shape does not match the model input shape");
  }
  std::size_t b = batch.shape[0];
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr.acts.clear();
  tr.acts.reserve(model.layers.size() + 1);
  tr.acts.push_back(batch);
  std::vector<std::size_t> shape = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    shape = layer_output_shape(model.layers[i], shape);
    Tensor out(batch_shape(b, shape));
    forward_layer(model.layers[i], model.weights[i], model.biases[i],
                  tr.acts.back(), out);
    tr.acts.push_back(std::move(out));
  }
  return tr.acts.back();
}

Tensor forward_probs(const Model& model, const Tensor& batch) {
  Tensor logits = forward_logits(model, batch);
  std::size_t b = logits.shape[0], c = logits.shape[1];
  Tensor probs({b, c});
  for (std::size_t n = 0; n < b; ++n) {
    const double* row = logits.data.data() + n * c;
    double* prow = probs.data.data() + n * c;
    double m = row[0];
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - m);
    double lse = m + std::log(sum);
    for (std::size_t j = 0; j < c; ++j) prow[j] = std::exp(row[j] - lse);
  }
  return probs;
}

std::vector<double> per_example_losses(const Model& model, const Tensor& batch,
                                       const std::vector<int>& labels) {
  check_batch(model, batch, labels);
  Tensor logits = forward_logits(model, batch);
  std::vector<double> losses;
  std::size_t bad = 0;
  if (!softmax_ce(logits, labels, nullptr, &losses, &bad)) {
    throw NumericError("non-finite loss at batch row " + std::to_string(bad));
  }
  return losses;
}

double mean_loss(const Model& model, const Tensor& batch,
                 const std::vector<int>& labels) {
  std::vector<double> losses = per_example_losses(model, batch, labels);
  double s = 0.0;
  for (double l : losses) s += l;
  return s / static_cast<double>(losses.size());
}

GradStore loss_grad(const Model& model, const Tensor& batch,
                    const std::vector<int>& labels, Tensor* input_grad) {
  check_batch(model, batch, labels);
  ForwardTrace trace;
  Tensor logits = forward_logits(model, batch, &trace);
  std::size_t b = logits.shape[0], c = logits.shape[1];
  Tensor probs;
  std::size_t bad = 0;
  if (!softmax_ce(logits, labels, &probs, nullptr, &bad)) {
    throw NumericError("non-finite loss at batch row " + std::to_string(bad));
  }
  // d(mean loss)/d(logits) = (softmax - onehot) / B
  Tensor gout = std::move(probs);
  double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t n = 0; n < b; ++n) {
    double* row = gout.data.data() + n * c;
    row[labels[n]] -= 1.0;
    for (std::size_t j = 0; j < c; ++j) row[j] *= inv_b;
  }
  GradStore g = GradStore::zeros_like(model);
  Tensor gin = backward_walk(model, trace, model.layers.size() - 1,
                             std::move(gout), &g, input_grad != nullptr);
  if (input_grad) *input_grad = std::move(gin);
  return g;
}

std::vector<GradStore> per_example_grads(const Model& model, const Tensor& batch,
                                         const std::vector<int>& labels) {
  check_batch(model, batch, labels);
  std::size_t b = batch.shape[0];
  std::size_t row = batch.size() / b;
  std::vector<GradStore> out(b);
  parallel_for(b, [&](std::size_t n) {
    Tensor one(batch_shape(1, model.input_shape));
    std::copy(batch.data.begin() + n * row, batch.data.begin() + (n + 1) * row,
              one.data.begin());
    out[n] = loss_grad(model, one, {labels[n]});
  });
  return out;
}

Tensor backprop_to_input(const Model& model, const ForwardTrace& trace,
                         std::size_t at_layer, const Tensor& seed_grad) {
  if (at_layer >= model.layers.size() ||
      trace.acts.size() != model.layers.size() + 1) {
    throw InputError("backprop seed layer out of range for this trace");
  }
  if (!seed_grad.same_shape(trace.acts[at_layer + 1])) {
    throw InputError("seed gradient shape does not match the layer output");
  }
  return backward_walk(model, trace, at_layer, seed_grad, nullptr, true);
}

std::size_t feature_layer_index(const Model& model) {
  if (model.layers.empty() || model.layers.back().kind != LayerKind::kDense) {
    throw ConfigError("model does not end in a dense classification layer");
  }
  if (model.layers.size() < 2) {
    throw ConfigError("model has no feature layer below the classifier");
  }
  return model.layers.size() - 2;
}

Tensor penultimate_features(const Model& model, const Tensor& batch,
                            ForwardTrace* trace) {
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  forward_logits(model, batch, &tr);
  return tr.acts[feature_layer_index(model) + 1];
}

std::size_t feature_dim(const Model& model) {
  const LayerSpec& last = model.layers.back();
  return last.in_dim;
}

void apply_grads(Model& model, const GradStore& grads, double lr) {
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    if (model.weights[i].size()) model.weights[i].axpy(-lr, grads.weights[i]);
    if (model.biases[i].size()) model.biases[i].axpy(-lr, grads.biases[i]);
  }
}

}  // namespace conflictbench
