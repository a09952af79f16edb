#include "gcnet/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "gcnet/error.hpp"

namespace gcnet {

std::string_view method_name(PruneMethod method) {
  switch (method) {
    case PruneMethod::L1: return "l1";
    case PruneMethod::L2: return "l2";
    case PruneMethod::OsSynFlow: return "os-synflow";
    case PruneMethod::CSnip: return "c-snip";
  }
  return "?";
}

std::string_view hybrid_name(HybridMode mode) {
  switch (mode) {
    case HybridMode::FullGC: return "full";
    case HybridMode::FrontHalf: return "fh";
    case HybridMode::BackHalf: return "bh";
    case HybridMode::Back25: return "b25";
    case HybridMode::DirectOnly: return "direct";
  }
  return "?";
}

namespace {

const Tensor& prunable_weights(const Layer& layer) {
  require(layer.prunable() && layer.weights, ErrorKind::Input,
          "cannot score " + layer.describe() + ": not a prunable layer");
  return *layer.weights;
}

void require_finite(const LayerScores& scores, const char* what) {
  for (const auto& [i, t] : scores)
    require(t.all_finite(), ErrorKind::Numeric,
            std::string(what) + " produced non-finite scores in layer " + std::to_string(i));
}

}  // namespace

Tensor score_l1(const Layer& layer) {
  Tensor s = prunable_weights(layer);
  for (auto& v : s.values()) v = std::abs(v);
  return s;
}

Tensor score_l2(const Layer& layer) {
  Tensor s = prunable_weights(layer);
  for (auto& v : s.values()) v = v * v;
  return s;
}

LayerScores score_synflow(const Network& net) {
  for (const auto& l : net.layers)
    require(!l.weights || l.weights->all_finite(), ErrorKind::Numeric,
            "synflow needs finite weights");
  Network lin = net;
  for (auto& l : lin.layers) {
    if (l.weights)
      for (auto& v : l.weights->values()) v = std::abs(v);
    if (l.bias)
      for (auto& v : l.bias->values()) v = std::abs(v);
  }
  Shape shape{1};
  shape.insert(shape.end(), net.input_shape.begin(), net.input_shape.end());
  const Gradients g = output_sum_gradients(lin, Tensor(shape, 1.0));
  LayerScores scores;
  for (auto i : net.prunable_layers()) {
    Tensor s = *lin.layers[i].weights;
    const auto grad = g.weights[i]->values();
    for (std::size_t k = 0; k < s.size(); ++k) s[k] *= grad[k];
    scores.emplace(i, std::move(s));
  }
  require_finite(scores, "synflow");
  return scores;
}

LayerScores score_snip(const Network& net, const Tensor& batch,
                       std::span<const std::size_t> labels) {
  const LossGradients lg = loss_gradients(net, batch, labels);
  LayerScores scores;
  for (auto i : net.prunable_layers()) {
    Tensor s = *net.layers[i].weights;
    const auto grad = lg.grads.weights[i]->values();
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::abs(s[k] * grad[k]);
    scores.emplace(i, std::move(s));
  }
  require_finite(scores, "snip");
  return scores;
}

std::size_t prune_count(double alpha, std::size_t n) {
  require(alpha >= 0.0 && alpha < 1.0, ErrorKind::Input,
          "sparsity must be in [0, 1), got " + std::to_string(alpha));
  return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) + 1e-9));
}

Mask mask_per_layer(const Tensor& scores, double alpha) {
  require(scores.all_finite(), ErrorKind::Numeric, "scores must be finite");
  const std::size_t n = scores.size();
  const std::size_t k = prune_count(alpha, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  });
  Mask mask(scores.shape(), true);
  for (std::size_t r = 0; r < k; ++r) mask.set(order[r], false);
  return mask;
}

MaskSet mask_global_capped(const LayerScores& scores, double alpha, double cap) {
  require(cap > 0.0 && cap <= 1.0, ErrorKind::Input, "cap must be in (0, 1]");
  MaskSet set;
  set.alpha = alpha;
  struct Entry {
    double score;
    std::size_t layer;
    std::size_t index;
  };
  std::vector<Entry> all;
  std::map<std::size_t, std::size_t> limit, pruned;
  std::size_t total = 0;
  for (const auto& [layer, s] : scores) {
    require(s.all_finite(), ErrorKind::Numeric, "scores must be finite");
    for (std::size_t k = 0; k < s.size(); ++k) all.push_back({s[k], layer, k});
    limit[layer] = static_cast<std::size_t>(std::floor(cap * static_cast<double>(s.size()) + 1e-9));
    pruned[layer] = 0;
    set.masks.emplace(layer, Mask(s.shape(), true));
    set.provenance.emplace(layer, MaskProvenance::Direct);
    total += s.size();
  }
  const std::size_t target = prune_count(alpha, total);
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.score, a.layer, a.index) < std::tie(b.score, b.layer, b.index);
  });
  std::size_t removed = 0;
  for (const auto& e : all) {
    if (removed == target) break;
    if (pruned[e.layer] >= limit[e.layer]) continue;
    set.masks.at(e.layer).set(e.index, false);
    ++pruned[e.layer];
    ++removed;
  }
  set.partial = removed < target;
  return set;
}

LayerPartition partition_layers(const Network& net, HybridMode mode) {
  const auto prunable = net.prunable_layers();
  const std::size_t n = prunable.size();
  LayerPartition p;
  if (mode == HybridMode::DirectOnly) {
    p.direct = prunable;
    return p;
  }
  require(n >= 2, ErrorKind::Input, "hybrid pruning needs at least 2 prunable layers");
  // Ordinals are 0-based here; ordinal 0 has no incoming connectivity and is
  // always pruned directly.
  std::size_t lo = 1, hi = n;
  switch (mode) {
    case HybridMode::FullGC: break;
    case HybridMode::FrontHalf: hi = std::max<std::size_t>(1, (n + 1) / 2); break;
    case HybridMode::BackHalf: lo = n - std::max<std::size_t>(1, (n + 1) / 2); break;
    case HybridMode::Back25: lo = n - std::max<std::size_t>(1, (n + 3) / 4); break;
    case HybridMode::DirectOnly: break;
  }
  lo = std::max<std::size_t>(lo, 1);
  for (std::size_t k = 0; k < n; ++k)
    (k >= lo && k < hi ? p.ghost : p.direct).push_back(prunable[k]);
  return p;
}

namespace {

LayerScores select(LayerScores all, const std::vector<std::size_t>& layers) {
  LayerScores out;
  for (auto i : layers) out.emplace(i, std::move(all.at(i)));
  return out;
}

// Scores for `layers` of `net` under `method`.
LayerScores score_layers(const Network& net, const std::vector<std::size_t>& layers,
                         PruneMethod method, const Tensor* batch, const Labels* labels) {
  switch (method) {
    case PruneMethod::L1:
    case PruneMethod::L2: {
      LayerScores s;
      for (auto i : layers)
        s.emplace(i, method == PruneMethod::L1 ? score_l1(net.layers[i]) : score_l2(net.layers[i]));
      return s;
    }
    case PruneMethod::OsSynFlow: return select(score_synflow(net), layers);
    case PruneMethod::CSnip:
      require(batch && labels, ErrorKind::Input, "C-SNIP needs a labeled batch");
      return select(score_snip(net, *batch, *labels), layers);
  }
  return {};
}

MaskSet masks_for(const LayerScores& scores, const PruneOptions& o) {
  if (o.method == PruneMethod::CSnip) return mask_global_capped(scores, o.alpha, o.snip_cap);
  MaskSet set;
  set.alpha = o.alpha;
  for (const auto& [i, s] : scores) {
    set.masks.emplace(i, mask_per_layer(s, o.alpha));
    set.provenance.emplace(i, MaskProvenance::Direct);
  }
  return set;
}

}  // namespace

MaskSet guided_prune(Network& original, GhostNet* ghost, HybridMode mode,
                     const PruneOptions& options, const SnipBatch* snip) {
  require(options.alpha >= 0.0 && options.alpha < 1.0, ErrorKind::Input,
          "sparsity must be in [0, 1)");
  const LayerPartition part = partition_layers(original, mode);
  const Tensor* snip_images = snip ? &snip->images : nullptr;
  const Labels* snip_labels = snip ? &snip->labels : nullptr;

  MaskSet result;
  result.alpha = options.alpha;

  if (!part.ghost.empty()) {
    require(ghost != nullptr, ErrorKind::Input, "hybrid mode needs a ghost network");
    const bool data_driven =
        options.method == PruneMethod::OsSynFlow || options.method == PruneMethod::CSnip;
    LayerScores scores;
    if (data_driven && options.ghost_scoring == GhostScoring::Original) {
      scores = score_layers(original, part.ghost, options.method, snip_images, snip_labels);
    } else {
      Tensor ghost_batch;
      if (snip && options.method == PruneMethod::CSnip)
        ghost_batch = ghost_input(original, *ghost, snip->images);
      scores = score_layers(ghost->net, part.ghost, options.method,
                            snip ? &ghost_batch : nullptr, snip_labels);
    }
    MaskSet ghost_masks = masks_for(scores, options);
    result.partial = ghost_masks.partial;
    for (auto& [i, mask] : ghost_masks.masks) {
      Layer& g = ghost->net.layers[i];
      Layer& o = original.layers[i];
      if (!g.weights || !o.weights || g.weights->shape() != o.weights->shape())
        fail(ErrorKind::Internal, "ghost layer " + std::to_string(i) +
                                      " does not align with the original network");
      apply_mask(g, mask);
      apply_mask(o, g.mask.value());
      result.masks.emplace(i, mask);
      result.provenance.emplace(i, MaskProvenance::GhostMapped);
    }
  }

  if (!part.direct.empty()) {
    const LayerScores scores =
        score_layers(original, part.direct, options.method, snip_images, snip_labels);
    MaskSet direct = masks_for(scores, options);
    result.partial = result.partial || direct.partial;
    for (auto& [i, mask] : direct.masks) {
      apply_mask(original.layers[i], mask);
      result.masks.emplace(i, std::move(mask));
      result.provenance.emplace(i, MaskProvenance::Direct);
    }
  }
  return result;
}

std::vector<FilterImportance> theory_g_scores(const Network& net,
                                              const std::optional<Tensor>& output_importance) {
  std::vector<std::size_t> dense;
  for (std::size_t i = net.entry; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    if (l.branch) continue;
    require(l.kind != LayerKind::Conv2D, ErrorKind::Unsupported,
            "theory g-scores are defined for Dense chains only; layer " + std::to_string(i) +
                " is Conv2D");
    if (l.kind == LayerKind::Dense) dense.push_back(i);
  }
  require(dense.size() >= 2, ErrorKind::Unsupported, "theory g-scores need 2 Dense layers");

  const Layer& last = net.layers[dense.back()];
  Tensor s = output_importance.value_or(Tensor({last.out}, 1.0));
  require(s.size() == last.out, ErrorKind::Input,
          "output importance needs " + std::to_string(last.out) + " entries");
  for (double v : s.values())
    require(v > 0.0 && std::isfinite(v), ErrorKind::Input, "output importance must be positive");

  std::vector<FilterImportance> out;
  for (std::size_t k = dense.size() - 1; k >= 1; --k) {
    const Tensor& wk = *net.layers[dense[k]].weights;       // [out_k, in_k]
    const Tensor& wp = *net.layers[dense[k - 1]].weights;   // [in_k, in_p]
    const std::size_t out_k = wk.dim(0), mid = wk.dim(1), in_p = wp.dim(1);
    Tensor g({in_p});
    for (std::size_t c = 0; c < in_p; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < out_k; ++r) {
        double prod = 0.0;
        for (std::size_t m = 0; m < mid; ++m) prod += wk.at(r, m) * wp.at(m, c);
        acc += std::abs(prod) * s[r];
      }
      g[c] = acc;
    }
    out.push_back({dense[k - 1], std::move(g)});
    Tensor next({mid});
    for (std::size_t m = 0; m < mid; ++m) {
      double acc = 0.0;
      for (std::size_t r = 0; r < out_k; ++r) acc += std::abs(wk.at(r, m)) * s[r];
      next[m] = acc;
    }
    s = std::move(next);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace gcnet
