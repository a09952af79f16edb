#include "gcnet/flops.hpp"

#include <set>

#include "gcnet/error.hpp"
#include "gcnet/ghost.hpp"

namespace gcnet {

std::uint64_t connectivity_entry_flops(std::size_t samples, Metric metric) {
  const std::uint64_t s = samples;
  return metric == Metric::Pearson ? 6 * s + 9 : 6 * s + 5;
}

std::uint64_t count_connectivity_flops(const Network& net, std::size_t samples, Metric metric) {
  const auto plan = connectivity_plan(net);
  if (plan.empty()) return 0;
  const auto shapes = output_shapes(net);
  std::set<std::size_t> used;
  std::uint64_t flops = 0;
  const std::uint64_t entry = connectivity_entry_flops(samples, metric);
  for (const auto& e : plan) {
    used.insert(e.target);
    for (auto p : e.producers) {
      used.insert(p);
      flops += std::uint64_t{net.layers[p].out} * net.layers[e.target].out * entry;
    }
  }
  for (auto l : used) {
    const Shape& shape = shapes[activation_source(net, l)];
    if (shape.size() == 3) flops += std::uint64_t{samples} * shape_size(shape);
    if (metric == Metric::Pearson) flops += 2 * std::uint64_t{samples} * shape[0];
  }
  return flops;
}

std::uint64_t sort_comparisons(std::size_t n) {
  if (n < 2) return 0;
  std::uint64_t log2 = 0;
  while ((std::uint64_t{1} << log2) < n) ++log2;
  return std::uint64_t{n} * log2;
}

std::uint64_t forward_flops(const Network& net, bool kept_only) {
  const auto shapes = output_shapes(net);
  std::uint64_t flops = 0;
  for (std::size_t i = net.entry; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    if (shapes[i].empty()) continue;
    const std::uint64_t out = shape_size(shapes[i]);
    switch (l.kind) {
      case LayerKind::Dense:
      case LayerKind::Conv2D: {
        std::uint64_t weights = l.weights->size();
        if (kept_only && l.mask) weights -= l.mask->pruned_count();
        const std::uint64_t positions = l.kind == LayerKind::Conv2D ? out / l.out : 1;
        flops += 2 * weights * positions + out;  // MACs + bias
        break;
      }
      case LayerKind::ReLU: flops += out; break;
      case LayerKind::AvgPool: flops += out * l.pool * l.pool; break;
      case LayerKind::Identity:
      case LayerKind::Flatten: break;
    }
  }
  for (const auto& s : net.skips) flops += shape_size(shapes[s.target]);
  return flops;
}

std::uint64_t prune_flops(const Network& net, const std::vector<std::size_t>& layers,
                          PruneMethod method, std::size_t snip_samples) {
  if (layers.empty()) return 0;
  std::uint64_t weights = 0, sorts = 0;
  for (auto i : layers) {
    const std::uint64_t n = net.layers[i].weights->size();
    weights += n;
    sorts += sort_comparisons(n);
  }
  switch (method) {
    case PruneMethod::L1:
    case PruneMethod::L2:
      return weights + sorts;
    case PruneMethod::OsSynFlow:
      // abs of the weights, one forward + backward (~2x forward) pass on one
      // all-ones sample, one multiply per score.
      return weights + 3 * forward_flops(net) + weights + sorts;
    case PruneMethod::CSnip: {
      std::uint64_t total = 0;
      for (auto i : layers) total += net.layers[i].weights->size();
      return 3 * forward_flops(net) * snip_samples + 2 * weights + sort_comparisons(total);
    }
  }
  return 0;
}

FlopsReport count_pipeline_flops(const PipelineRun& run) {
  require(run.original != nullptr, ErrorKind::Input, "pipeline run needs the original network");
  FlopsReport r;
  if (!run.partition.ghost.empty()) {
    require(run.ghost != nullptr, ErrorKind::Input, "ghost-guided run needs the ghost network");
    r.connectivity_flops =
        count_connectivity_flops(*run.original, run.connectivity_samples, run.metric);
    r.gc_prune_flops =
        prune_flops(*run.ghost, run.partition.ghost, run.method, run.snip_samples);
    for (auto i : run.partition.ghost) r.mapping_flops += run.original->layers[i].weights->size();
  }
  r.direct_prune_flops =
      prune_flops(*run.original, run.partition.direct, run.method, run.snip_samples);
  r.inference_flops_per_sample = forward_flops(*run.original, true);
  return r;
}

std::string flops_formula() {
  return "1 MAC = 2 FLOPs; add/sub/mul/div/sqrt/abs/compare = 1; sort(n) = n*ceil(log2 n).\n"
         "connectivity = sum_layers (s*o*h*w spatial averaging of conv maps + 2*s*o centering "
         "[pearson]) + sum_pairs o_src*o_dst*(6s+9) [pearson] or (6s+5) [cosine].\n"
         "l1/l2 prune = sum_l (n_l + sort(n_l)); os-synflow adds 3*forward + n;\n"
         "c-snip = 3*forward*batch + 2*N + sort(N); mapping = copied mask bits.";
}

}  // namespace gcnet
