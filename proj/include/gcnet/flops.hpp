#pragma once

// Exact FLOP accounting from shapes and sample counts.
//
// Convention: one multiply-accumulate = 2 FLOPs; add, subtract, multiply,
// divide, sqrt, abs and compare = 1 each; a sort of n keys is charged
// n * ceil(log2 n) comparisons.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gcnet/connectivity.hpp"
#include "gcnet/nn.hpp"
#include "gcnet/prune.hpp"

namespace gcnet {

struct FlopsReport {
  std::uint64_t connectivity_flops = 0;
  std::uint64_t gc_prune_flops = 0;
  std::uint64_t mapping_flops = 0;
  std::uint64_t direct_prune_flops = 0;
  std::uint64_t inference_flops_per_sample = 0;
};

// One connectivity entry over s samples of centred (Pearson) or raw
// (cosine) columns. Pearson: 3 dot products (6s) + 3 normalisations by s,
// 2 sqrt, 1 multiply, 1 divide, 1 abs, 1 zero-variance compare = 6s + 9.
// Cosine drops the 3 normalisations and one sqrt: 6s + 5.
std::uint64_t connectivity_entry_flops(std::size_t samples, Metric metric = Metric::Pearson);

// Per layer used by the ghost: s*o*h*w to average conv maps over space and,
// for Pearson, 2*s*o to centre the columns once. Plus o_src * o_dst entries
// for every (producer, target) pair.
std::uint64_t count_connectivity_flops(const Network& net, std::size_t samples,
                                       Metric metric = Metric::Pearson);

std::uint64_t sort_comparisons(std::size_t n);

// Per-sample forward cost. With kept_only, masked weights are not charged.
std::uint64_t forward_flops(const Network& net, bool kept_only = false);

// Cost of scoring and masking `layers` of `net` with `method`.
std::uint64_t prune_flops(const Network& net, const std::vector<std::size_t>& layers,
                          PruneMethod method, std::size_t snip_samples);

struct PipelineRun {
  const Network* original = nullptr;  // after pruning
  const Network* ghost = nullptr;     // null for direct-only runs
  LayerPartition partition;
  PruneMethod method = PruneMethod::L1;
  Metric metric = Metric::Pearson;
  std::size_t connectivity_samples = 0;
  std::size_t snip_samples = 0;
};

// Mapping is one FLOP per copied mask bit.
FlopsReport count_pipeline_flops(const PipelineRun& run);

std::string flops_formula();

}  // namespace gcnet
