#include "gcnet/ghost.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "gcnet/error.hpp"

namespace gcnet {

namespace {

bool is_skip_target(const Network& net, std::size_t i) {
  return std::any_of(net.skips.begin(), net.skips.end(),
                     [&](const SkipEdge& s) { return s.target == i; });
}

void gather_output(const Network& net, std::size_t layer, std::vector<std::size_t>& out);

// Prunable producers feeding the input of `layer`.
void gather_input(const Network& net, std::size_t layer, std::vector<std::size_t>& out) {
  if (net.layers[layer].branch) {
    for (const auto& s : net.skips)
      if (s.projection && *s.projection == layer) gather_output(net, s.source, out);
    return;
  }
  if (auto prev = net.main_predecessor(layer)) gather_output(net, *prev, out);
  for (const auto& s : net.skips) {
    if (s.target != layer) continue;
    gather_output(net, s.projection.value_or(s.source), out);
  }
}

void gather_output(const Network& net, std::size_t layer, std::vector<std::size_t>& out) {
  if (net.layers[layer].prunable()) {
    out.push_back(layer);
    return;
  }
  gather_input(net, layer, out);
}

}  // namespace

std::vector<ConnectivityPlanEntry> connectivity_plan(const Network& net) {
  const auto prunable = net.prunable_layers();
  std::vector<ConnectivityPlanEntry> plan;
  for (std::size_t k = 1; k < prunable.size(); ++k) {
    ConnectivityPlanEntry e;
    e.target = prunable[k];
    gather_input(net, e.target, e.producers);
    require(!e.producers.empty(), ErrorKind::Unsupported,
            "prunable layer " + std::to_string(e.target) + " has no prunable producer");
    plan.push_back(std::move(e));
  }
  return plan;
}

std::size_t activation_source(const Network& net, std::size_t prunable) {
  if (net.layers[prunable].branch) return prunable;
  const auto next = net.main_successor(prunable);
  if (next && net.layers[*next].kind == LayerKind::ReLU && !is_skip_target(net, *next))
    return *next;
  return prunable;
}

GhostNet build_ghost(const Network& original, const Tensor& data, Metric metric) {
  const auto prunable = original.prunable_layers();
  require(prunable.size() >= 2, ErrorKind::Input,
          "ghost needs at least 2 prunable layers, network has " +
              std::to_string(prunable.size()));
  require(data.rank() >= 1 && data.dim(0) >= 2, ErrorKind::Input,
          "ghost construction needs at least 2 samples");
  const std::size_t first = prunable.front();
  require(!original.layers[first].branch, ErrorKind::Unsupported,
          "first prunable layer cannot be a skip projection");
  for (const auto& s : original.skips)
    require(s.source >= first, ErrorKind::Unsupported,
            "skip edges starting before the first prunable layer are not supported");

  const auto plan = connectivity_plan(original);
  const auto shapes = output_shapes(original);
  const ForwardRecord rec = forward_record(original, data);

  std::map<std::size_t, ActivationMatrix> acts;
  auto activation_of = [&](std::size_t layer) -> const ActivationMatrix& {
    auto it = acts.find(layer);
    if (it == acts.end())
      it = acts.emplace(layer, activation_matrix(rec.acts[activation_source(original, layer)],
                                                 layer))
               .first;
    return it->second;
  };

  GhostNet ghost;
  ghost.source_label = original.label;
  ghost.metric = metric;
  ghost.sample_count = data.dim(0);
  ghost.identity_layer = first;
  ghost.net = original;
  ghost.net.label = "ghost(" + original.label + ")";
  for (auto& l : ghost.net.layers) l.mask.reset();
  ghost.net.layers[first] = Layer::identity();
  ghost.net.entry = first;
  ghost.net.input_shape = shapes[first];

  for (const auto& entry : plan) {
    const Layer& target = original.layers[entry.target];
    const ActivationMatrix& tgt = activation_of(entry.target);
    ConnectivityMatrix merged;
    for (std::size_t k = 0; k < entry.producers.size(); ++k) {
      ConnectivityMatrix r = connectivity(activation_of(entry.producers[k]), tgt, metric);
      ghost.chain.pairs.push_back(r);
      merged = k == 0 ? r : merge_skip(merged, r);
    }
    merged.source = entry.producers.front();
    Layer& g = ghost.net.layers[entry.target];
    if (target.kind == LayerKind::Dense && target.in != merged.values.dim(1))
      g.weights = spatial_expand(merged, target);
    else
      g.weights = expand_connectivity(merged, target);
    if (g.bias) g.bias->fill(0.0);
  }
  validate(ghost.net);
  return ghost;
}

Tensor ghost_input(const Network& original, const GhostNet& ghost, const Tensor& batch) {
  ForwardRecord rec = forward_record(original, batch);
  return std::move(rec.acts[ghost.identity_layer]);
}

void dump_connectivity(const ConnectivityChain& chain, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& r : chain.pairs) {
    const auto path = dir / ("connectivity_" + std::to_string(r.source) + "_" +
                             std::to_string(r.target) + ".csv");
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Input, "cannot write " + path.string());
    char buf[32];
    for (std::size_t j = 0; j < r.values.dim(0); ++j) {
      for (std::size_t i = 0; i < r.values.dim(1); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", r.values.at(j, i));
        out << (i ? "," : "") << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace gcnet
