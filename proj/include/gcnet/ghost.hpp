#pragma once

// Ghost companion network: same architecture as the original, first
// prunable layer replaced by an identity, every later prunable layer
// carrying expanded connectivity scores as its weights.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "gcnet/connectivity.hpp"
#include "gcnet/nn.hpp"

namespace gcnet {

// Prunable layers whose outputs reach `target`'s input; a target with two
// producers sits where a skip path converges.
struct ConnectivityPlanEntry {
  std::size_t target = 0;
  std::vector<std::size_t> producers;  // main path first, then skips
};

// One entry per prunable layer after the first, in layer order.
std::vector<ConnectivityPlanEntry> connectivity_plan(const Network& net);

// Recorded output used as the activation state of a prunable layer: the
// ReLU directly after it when present and not a skip merge point, else the
// layer's own output.
std::size_t activation_source(const Network& net, std::size_t prunable);

// Unmerged per-pair matrices of a sub-network span, in plan order.
struct ConnectivityChain {
  std::vector<ConnectivityMatrix> pairs;
};

struct GhostNet {
  Network net;
  std::string source_label;
  Metric metric = Metric::Pearson;
  std::size_t sample_count = 0;
  std::size_t identity_layer = 0;  // replaced first prunable layer
  ConnectivityChain chain;
};

GhostNet build_ghost(const Network& original, const Tensor& data, Metric metric);

// The ghost's input for a batch of original inputs: the original's output
// at the layer the ghost replaces with an identity.
Tensor ghost_input(const Network& original, const GhostNet& ghost, const Tensor& batch);

// One CSV per pair, row = target channel, 9 significant digits.
void dump_connectivity(const ConnectivityChain& chain, const std::filesystem::path& dir);

}  // namespace gcnet
