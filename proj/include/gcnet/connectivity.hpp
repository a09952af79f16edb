#pragma once

// Inter-layer connectivity: spatially averaged activation matrices and the
// absolute Pearson / cosine similarity between their channel columns.

#include <cstddef>
#include <string_view>

#include "gcnet/nn.hpp"
#include "gcnet/tensor.hpp"

namespace gcnet {

enum class Metric { Pearson, Cosine };

std::string_view metric_name(Metric metric);

// [samples, channels] summary of one layer's recorded activations.
struct ActivationMatrix {
  Tensor values;
  std::size_t layer_index = 0;

  std::size_t samples() const { return values.dim(0); }
  std::size_t channels() const { return values.dim(1); }
};

// values[j, i] relates channel i of `source` to channel j of `target`.
// Entries are in [0, 1] unless produced by merge_skip.
struct ConnectivityMatrix {
  Tensor values;
  Metric metric = Metric::Pearson;
  std::size_t source = 0;
  std::size_t target = 0;
};

// Mean over h, w of a [s, o, h, w] activation; [s, o] passes through.
ActivationMatrix activation_matrix(const Tensor& acts, std::size_t layer_index = 0);

// |corr(a[:, i], b[:, j])|; a zero-variance column gives 0.
ConnectivityMatrix pearson_connectivity(const ActivationMatrix& a, const ActivationMatrix& b);
// |cos(a[:, i], b[:, j])|; a zero-norm column gives 0.
ConnectivityMatrix cosine_connectivity(const ActivationMatrix& a, const ActivationMatrix& b);
ConnectivityMatrix connectivity(const ActivationMatrix& a, const ActivationMatrix& b,
                                Metric metric);

// Broadcast R onto the target's weight shape: conv cell (o, i) gets R[o, i]
// over the whole kernel; dense weights take R unchanged.
Tensor expand_connectivity(const ConnectivityMatrix& r, const Layer& target);

// Elementwise sum of two matrices feeding the same target. Not re-clamped.
ConnectivityMatrix merge_skip(const ConnectivityMatrix& a, const ConnectivityMatrix& b);

// Expansion across a pool -> flatten -> linear boundary. Each channel's
// entry is repeated over the spatial positions that channel occupies in the
// channel-major flattened input: result[j, i * p + q] = R[j, i].
Tensor pool_expand(const ConnectivityMatrix& r, const Layer& pool, const Layer& linear);
// Same expansion without naming the pool layer (flatten of a spatial map).
Tensor spatial_expand(const ConnectivityMatrix& r, const Layer& linear);

}  // namespace gcnet
