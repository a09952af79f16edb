#pragma once

// Scoring, masking and the ghost-guided pruning pipeline.

#include <cstddef>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "gcnet/ghost.hpp"
#include "gcnet/nn.hpp"

namespace gcnet {

enum class PruneMethod { L1, L2, OsSynFlow, CSnip };
enum class HybridMode { FullGC, FrontHalf, BackHalf, Back25, DirectOnly };
enum class MaskProvenance { GhostMapped, Direct };

// Which weights SNIP / SynFlow score for ghost-assigned layers. `Ghost`
// treats the ghost as the scored network; `Original` scores the original
// weights of those layers instead (non-normative alternative).
enum class GhostScoring { Ghost, Original };

std::string_view method_name(PruneMethod method);
std::string_view hybrid_name(HybridMode mode);

// Per-layer scores keyed by layer index.
using LayerScores = std::map<std::size_t, Tensor>;

struct MaskSet {
  double alpha = 0.0;
  std::map<std::size_t, Mask> masks;
  std::map<std::size_t, MaskProvenance> provenance;
  bool partial = false;  // cap prevented reaching the target sparsity
};

Tensor score_l1(const Layer& layer);
Tensor score_l2(const Layer& layer);
// One-shot SynFlow: |w| network, all-ones input, score = |w| * dQ/dw with
// Q = sum of outputs.
LayerScores score_synflow(const Network& net);
// |w * dL/dw| for cross-entropy on the batch.
LayerScores score_snip(const Network& net, const Tensor& batch,
                       std::span<const std::size_t> labels);

// floor(alpha * n), tolerant of alpha * n landing a hair below an integer.
std::size_t prune_count(double alpha, std::size_t n);

// Prunes the floor(alpha * n) lowest scores; ties by ascending flat index.
Mask mask_per_layer(const Tensor& scores, double alpha);

// Global lowest-score removal towards floor(alpha * N) with no layer pruned
// beyond floor(cap * n_l); the shortfall of capped layers falls on the rest.
MaskSet mask_global_capped(const LayerScores& scores, double alpha, double cap = 0.95);

struct LayerPartition {
  std::vector<std::size_t> ghost;   // pruned through the ghost
  std::vector<std::size_t> direct;  // pruned on the original (K)
};

LayerPartition partition_layers(const Network& net, HybridMode mode);

struct PruneOptions {
  PruneMethod method = PruneMethod::L1;
  double alpha = 0.2;
  double snip_cap = 0.95;
  GhostScoring ghost_scoring = GhostScoring::Ghost;
};

struct SnipBatch {
  Tensor images;
  Labels labels;
};

// Prunes the ghost portion on the ghost, copies those masks onto the
// original, prunes the remaining layers directly, and freezes everything.
// `ghost` may be null only when the partition leaves no ghost layers.
MaskSet guided_prune(Network& original, GhostNet* ghost, HybridMode mode,
                     const PruneOptions& options, const SnipBatch* snip = nullptr);

struct FilterImportance {
  std::size_t layer = 0;  // the (k-1) layer of the pair
  Tensor scores;          // one entry per input feature of that layer
};

// Pair scores g = |W_k W_{k-1}|^T s_k over a chain of Dense layers, with s
// propagated backwards from the output importances through |W|.
std::vector<FilterImportance> theory_g_scores(const Network& net,
                                              const std::optional<Tensor>& output_importance = {});

}  // namespace gcnet
