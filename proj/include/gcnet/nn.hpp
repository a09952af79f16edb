#pragma once

// Minimal deterministic network substrate: layers, forward pass with
// activation recording, backprop through skip edges, SGD with frozen masks.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcnet/tensor.hpp"

namespace gcnet {

using Labels = std::vector<std::size_t>;

enum class LayerKind { Dense, Conv2D, Identity, ReLU, AvgPool, Flatten };

std::string_view kind_name(LayerKind kind);

struct Layer {
  LayerKind kind = LayerKind::Identity;
  std::size_t out = 0;
  std::size_t in = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t pool = 0;  // square average-pool window, stride == window

  std::optional<Tensor> weights;
  std::optional<Tensor> bias;
  std::optional<Mask> mask;

  // A branch layer sits on a skip edge (projection) and is skipped by the
  // main sequential path.
  bool branch = false;

  static Layer dense(std::size_t out, std::size_t in);
  static Layer conv2d(std::size_t out, std::size_t in, std::size_t kernel,
                      std::size_t stride = 1, std::size_t pad = 0);
  static Layer identity();
  static Layer relu();
  static Layer avg_pool(std::size_t window);
  static Layer flatten();

  bool prunable() const {
    return kind == LayerKind::Dense || kind == LayerKind::Conv2D;
  }
  std::string describe() const;
};

// Additive skip: input of `target` = main-path input + output of `source`
// (optionally passed through the branch layer `projection`).
struct SkipEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::optional<std::size_t> projection;
};

struct Network {
  std::vector<Layer> layers;
  std::vector<SkipEdge> skips;
  Shape input_shape;      // per-sample shape fed to layers[entry]
  std::size_t entry = 0;  // layers before entry are not executed
  std::string label;

  // Indexes of Dense/Conv2D layers that execute, in layer order.
  std::vector<std::size_t> prunable_layers() const;
  // Previous main-path layer that executes, if any.
  std::optional<std::size_t> main_predecessor(std::size_t index) const;
  // Next main-path layer, if any.
  std::optional<std::size_t> main_successor(std::size_t index) const;
  std::size_t output_layer() const;
};

// Per-sample output shape of every layer (empty for layers that never run).
// Throws a composition error naming both layers when shapes do not compose.
std::vector<Shape> output_shapes(const Network& net);
void validate(const Network& net);

// Kaiming-uniform fan-in init for every weighted layer; biases zero; masks
// cleared.
void init_weights(Network& net, std::uint64_t seed);

struct ForwardRecord {
  Tensor logits;
  std::vector<Tensor> acts;  // acts[l] = output of layer l (empty if not run)
};

ForwardRecord forward_record(const Network& net, const Tensor& batch);
Tensor forward(const Network& net, const Tensor& batch);

struct Gradients {
  std::vector<std::optional<Tensor>> weights;
  std::vector<std::optional<Tensor>> bias;
};

struct LossGradients {
  double loss = 0.0;
  Gradients grads;
};

// Mean softmax cross-entropy; optionally writes d(loss)/d(logits).
double softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels,
                             Tensor* grad = nullptr);

LossGradients loss_gradients(const Network& net, const Tensor& batch,
                             std::span<const std::size_t> labels);
// Gradients of sum(logits) with respect to every parameter.
Gradients output_sum_gradients(const Network& net, const Tensor& batch);

struct SgdState {
  double learning_rate = 0.01;
  std::size_t epoch_count = 0;
};

// One SGD step on the batch; masked weights stay exactly 0.0.
double backward_sgd(Network& net, const Tensor& batch, std::span<const std::size_t> labels,
                    const SgdState& state);

struct TrainOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

// Shuffled mini-batch SGD over the whole set; returns the last epoch's
// mean loss and advances state.epoch_count.
double train(Network& net, const Tensor& images, std::span<const std::size_t> labels,
             SgdState& state, const TrainOptions& options);

void apply_mask(Layer& layer, const Mask& mask);

// Fraction of argmax(logits) == label; ties go to the lowest class index.
double accuracy(const Network& net, const Tensor& images, std::span<const std::size_t> labels);

std::size_t argmax_row(const Tensor& logits, std::size_t row);

// Rows of `source` selected by `rows`, stacked along the first axis.
Tensor gather_rows(const Tensor& source, std::span<const std::size_t> rows);

}  // namespace gcnet
