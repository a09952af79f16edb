#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "gcnet/architectures.hpp"
#include "gcnet/error.hpp"
#include "gcnet/ghost.hpp"
#include "gcnet/prune.hpp"
#include "gcnet/random.hpp"

using namespace gcnet;

namespace {

Network dense_chain(std::size_t n_layers, std::size_t width = 3) {
  Network net;
  net.input_shape = {width};
  for (std::size_t k = 0; k < n_layers; ++k) {
    if (k) net.layers.push_back(Layer::relu());
    net.layers.push_back(Layer::dense(width, width));
  }
  return net;
}

Tensor random_images(std::size_t n, std::size_t side, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({n, 1, side, side});
  for (auto& v : t.values()) v = rng.uniform();
  return t;
}

Labels cyclic_labels(std::size_t n, std::size_t classes) {
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = i % classes;
  return y;
}

std::vector<std::size_t> pruned_positions(const Mask& m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m.kept(i)) out.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("magnitude scores") {
  Layer l = Layer::dense(1, 4);
  *l.weights = Tensor({1, 4}, std::vector<double>{1, -3, 2, -0.5});
  CHECK(score_l1(l) == Tensor({1, 4}, std::vector<double>{1, 3, 2, 0.5}));
  CHECK(score_l2(l) == Tensor({1, 4}, std::vector<double>{1, 9, 4, 0.25}));
  CHECK_THROWS_AS(score_l1(Layer::relu()), Error);

  Rng rng(1);
  Layer r = Layer::dense(5, 7);
  for (auto& v : r.weights->values()) v = rng.normal();
  for (double a : {0.1, 0.3, 0.5, 0.9})
    CHECK(mask_per_layer(score_l1(r), a) == mask_per_layer(score_l2(r), a));
}

TEST_CASE("synflow") {
  SUBCASE("single layer collapses to |w|") {
    Network net;
    net.layers = {Layer::dense(2, 3)};
    net.input_shape = {3};
    *net.layers[0].weights = Tensor({2, 3}, std::vector<double>{1, -2, 3, -4, 5, -6});
    const auto s = score_synflow(net);
    CHECK(s.at(0) == score_l1(net.layers[0]));
  }
  SUBCASE("two-layer hand example") {
    Network net;
    net.layers = {Layer::dense(2, 1), Layer::dense(1, 2)};
    net.input_shape = {1};
    *net.layers[0].weights = Tensor({2, 1}, std::vector<double>{1, 2});
    *net.layers[1].weights = Tensor({1, 2}, std::vector<double>{3, 4});
    // Q = |w2| |w1| 1 = 3*1 + 4*2; dQ/dw1_j = |w2_j|, dQ/dw2_j = |w1_j|
    const auto s = score_synflow(net);
    CHECK(s.at(0) == Tensor({2, 1}, std::vector<double>{3, 8}));
    CHECK(s.at(1) == Tensor({1, 2}, std::vector<double>{3, 8}));
  }
  SUBCASE("zero layer scores zero") {
    Network net = dense_chain(2);
    init_weights(net, 2);
    net.layers[2].weights->fill(0.0);
    const auto scores = score_synflow(net);
    for (double v : scores.at(2).values()) CHECK(v == 0.0);
  }
}

TEST_CASE("snip") {
  SUBCASE("matches finite differences on a softmax layer") {
    Network net;
    net.layers = {Layer::dense(2, 3)};
    net.input_shape = {3};
    *net.layers[0].weights = Tensor({2, 3}, std::vector<double>{0.5, -0.2, 0.1, 0.3, 0.8, -0.7});
    const Tensor x({4, 3}, std::vector<double>{1, 0, 2, -1, 1, 0, 0.5, 0.5, 0.5, 2, -1, 1});
    const Labels y{0, 1, 1, 0};
    const auto s = score_snip(net, x, y).at(0);
    const double eps = 1e-5;
    for (std::size_t k = 0; k < 6; ++k) {
      Network up = net, down = net;
      (*up.layers[0].weights)[k] += eps;
      (*down.layers[0].weights)[k] -= eps;
      const double g = (softmax_cross_entropy(forward(up, x), y) -
                        softmax_cross_entropy(forward(down, x), y)) /
                       (2 * eps);
      const double expect = std::abs((*net.layers[0].weights)[k] * g);
      CHECK(std::abs(s[k] - expect) <= 1e-4 * expect + 1e-12);
    }
  }
  SUBCASE("dead unit scores zero, all scores non-negative") {
    Network net = dense_chain(2);
    init_weights(net, 3);
    for (std::size_t i = 0; i < 3; ++i) net.layers[0].weights->at(0, i) = 0.0;
    Rng rng(4);
    Tensor x({6, 3});
    for (auto& v : x.values()) v = rng.normal();
    const auto s = score_snip(net, x, cyclic_labels(6, 3));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(s.at(0).at(0, i) == 0.0);
      CHECK(s.at(2).at(i, 0) == 0.0);
    }
    for (const auto& [l, t] : s)
      for (double v : t.values()) CHECK(v >= 0.0);
  }
}

TEST_CASE("mask_per_layer") {
  const Tensor s({4}, std::vector<double>{1, 3, 2, 0.5});
  CHECK(mask_per_layer(s, 0.0) == Mask({4}, true));
  CHECK(mask_per_layer(s, 0.5) == Mask({4}, std::vector<std::uint8_t>{0, 1, 1, 0}));
  const Mask tied = mask_per_layer(Tensor({8}, 0.4), 0.25);
  CHECK(pruned_positions(tied) == std::vector<std::size_t>{0, 1});
  CHECK(prune_count(0.3, 10) == 3);
  CHECK(prune_count(0.7, 10) == 7);
  CHECK_THROWS_AS(prune_count(1.0, 10), Error);
  Tensor bad({2}, 1.0);
  bad[1] = std::nan("");
  CHECK_THROWS_AS(mask_per_layer(bad, 0.5), Error);
}

TEST_CASE("global capped removal") {
  SUBCASE("no binding cap equals a plain global threshold") {
    Rng rng(5);
    LayerScores scores;
    scores.emplace(0, Tensor({12}));
    scores.emplace(3, Tensor({20}));
    for (auto& [l, t] : scores)
      for (auto& v : t.values()) v = rng.uniform();
    const MaskSet set = mask_global_capped(scores, 0.4);
    std::vector<std::tuple<double, std::size_t, std::size_t>> all;
    for (const auto& [l, t] : scores)
      for (std::size_t k = 0; k < t.size(); ++k) all.emplace_back(t[k], l, k);
    std::sort(all.begin(), all.end());
    const double threshold = std::get<0>(all[prune_count(0.4, 32) - 1]);
    for (const auto& [l, t] : scores)
      for (std::size_t k = 0; k < t.size(); ++k)
        CHECK(set.masks.at(l).kept(k) == (t[k] > threshold));
    CHECK_FALSE(set.partial);
  }
  SUBCASE("cap redirects removals") {
    LayerScores scores;
    scores.emplace(0, Tensor({10}, 0.01));
    scores.emplace(1, Tensor({10}, 5.0));
    const MaskSet set = mask_global_capped(scores, 0.6, 0.95);
    CHECK(set.masks.at(0).pruned_count() == 9);
    CHECK(pruned_positions(set.masks.at(1)) == std::vector<std::size_t>{0, 1, 2});
    CHECK_FALSE(set.partial);
  }
  SUBCASE("unreachable target is flagged") {
    LayerScores scores;
    scores.emplace(0, Tensor({4}, 1.0));
    const MaskSet set = mask_global_capped(scores, 0.9, 0.5);
    CHECK(set.masks.at(0).pruned_count() == 2);
    CHECK(set.partial);
  }
  SUBCASE("alpha zero prunes nothing") {
    LayerScores scores;
    scores.emplace(0, Tensor({4}, 1.0));
    CHECK(mask_global_capped(scores, 0.0).masks.at(0).pruned_count() == 0);
  }
}

TEST_CASE("hybrid partitions") {
  const Network n16 = dense_chain(16);
  const auto p = n16.prunable_layers();
  auto ordinals = [&](const std::vector<std::size_t>& layers) {
    std::vector<std::size_t> out;
    for (auto l : layers) out.push_back(std::find(p.begin(), p.end(), l) - p.begin() + 1);
    return out;
  };
  auto range = [](std::size_t a, std::size_t b) {
    std::vector<std::size_t> v(b - a + 1);
    std::iota(v.begin(), v.end(), a);
    return v;
  };
  CHECK(ordinals(partition_layers(n16, HybridMode::BackHalf).ghost) == range(9, 16));
  CHECK(ordinals(partition_layers(n16, HybridMode::Back25).ghost) == range(13, 16));
  CHECK(ordinals(partition_layers(n16, HybridMode::FullGC).ghost) == range(2, 16));
  CHECK(ordinals(partition_layers(n16, HybridMode::FrontHalf).ghost) == range(2, 8));
  CHECK(partition_layers(n16, HybridMode::DirectOnly).ghost.empty());
  CHECK(ordinals(partition_layers(n16, HybridMode::FullGC).direct) == range(1, 1));

  const Network n3 = dense_chain(3);
  const auto p3 = n3.prunable_layers();
  CHECK(partition_layers(n3, HybridMode::Back25).ghost == std::vector<std::size_t>{p3[2]});
  for (auto mode : {HybridMode::FullGC, HybridMode::FrontHalf, HybridMode::BackHalf,
                    HybridMode::Back25, HybridMode::DirectOnly}) {
    const auto part = partition_layers(n3, mode);
    CHECK(part.ghost.size() + part.direct.size() == 3);
    CHECK(std::find(part.direct.begin(), part.direct.end(), p3[0]) != part.direct.end());
  }
}

TEST_CASE("guided prune on MiniVGG keeps exact per-layer sparsity") {
  Network base = mini_vgg(1, 12, 10);
  init_weights(base, 6);
  const Tensor x = random_images(40, 12, 7);
  const GhostNet ghost0 = build_ghost(base, x, Metric::Pearson);
  SnipBatch snip{x, cyclic_labels(40, 10)};
  for (auto method : {PruneMethod::L1, PruneMethod::L2, PruneMethod::OsSynFlow})
    for (auto mode : {HybridMode::FullGC, HybridMode::FrontHalf, HybridMode::BackHalf,
                      HybridMode::Back25, HybridMode::DirectOnly})
      for (double alpha : {0.2, 0.4, 0.6, 0.8}) {
        Network net = base;
        GhostNet ghost = ghost0;
        const MaskSet set = guided_prune(net, &ghost, mode, PruneOptions{method, alpha}, &snip);
        INFO(method_name(method) << " " << hybrid_name(mode) << " " << alpha);
        const auto part = partition_layers(net, mode);
        for (auto i : net.prunable_layers()) {
          const Mask& m = set.masks.at(i);
          CHECK(m.pruned_count() == prune_count(alpha, m.size()));
          CHECK(net.layers[i].mask.value() == m);
          for (std::size_t k = 0; k < m.size(); ++k)
            if (!m.kept(k)) CHECK((*net.layers[i].weights)[k] == 0.0);
        }
        for (auto i : part.ghost) {
          CHECK(set.provenance.at(i) == MaskProvenance::GhostMapped);
          CHECK(ghost.net.layers[i].mask.value() == net.layers[i].mask.value());
        }
        for (auto i : part.direct) CHECK(set.provenance.at(i) == MaskProvenance::Direct);
      }
}

TEST_CASE("c-snip through the ghost hits the global target under the cap") {
  for (auto arch : {Architecture::MiniVGG, Architecture::MiniResNet}) {
    Network base = make_architecture(arch, 1, 12, 10);
    init_weights(base, 8);
    const Tensor x = random_images(30, 12, 9);
    const GhostNet ghost0 = build_ghost(base, x, Metric::Pearson);
    SnipBatch snip{x, cyclic_labels(30, 10)};
    for (double alpha : {0.2, 0.4, 0.6, 0.8}) {
      Network net = base;
      GhostNet ghost = ghost0;
      const MaskSet set =
          guided_prune(net, &ghost, HybridMode::DirectOnly, PruneOptions{PruneMethod::CSnip, alpha},
                       &snip);
      std::size_t pruned = 0, total = 0;
      for (const auto& [i, m] : set.masks) {
        pruned += m.pruned_count();
        total += m.size();
        CHECK(m.sparsity() <= 0.95 + 1.0 / m.size());
      }
      CHECK(pruned == prune_count(alpha, total));
    }
  }
}

TEST_CASE("empty ghost portion equals direct pruning") {
  Network base = dense_chain(2, 5);
  init_weights(base, 10);
  for (auto method : {PruneMethod::L1, PruneMethod::L2, PruneMethod::OsSynFlow}) {
    Network a = base, b = base;
    // two prunable layers: the front half is the first layer alone
    REQUIRE(partition_layers(a, HybridMode::FrontHalf).ghost.empty());
    const MaskSet ma = guided_prune(a, nullptr, HybridMode::FrontHalf, PruneOptions{method, 0.4});
    const MaskSet mb = guided_prune(b, nullptr, HybridMode::DirectOnly, PruneOptions{method, 0.4});
    CHECK(ma.masks == mb.masks);
    for (std::size_t i = 0; i < a.layers.size(); ++i) CHECK(a.layers[i].weights == b.layers[i].weights);
  }
  Network c = base;
  guided_prune(c, nullptr, HybridMode::DirectOnly, PruneOptions{PruneMethod::L1, 0.4});
  for (auto i : base.prunable_layers())
    CHECK(c.layers[i].mask.value() == mask_per_layer(score_l1(base.layers[i]), 0.4));
}

TEST_CASE("ghost kernel blocks prune coherently") {
  Network net = mini_vgg(1, 12, 10);
  init_weights(net, 11);
  GhostNet ghost = build_ghost(net, random_images(30, 12, 12), Metric::Pearson);
  const Tensor r = ghost.chain.pairs[0].values;  // [16, 8] for layer 2
  guided_prune(net, &ghost, HybridMode::FullGC, PruneOptions{PruneMethod::L1, 0.25});
  const Mask& m = net.layers[2].mask.value();
  std::vector<std::size_t> cells(r.size());
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
    return r[a] < r[b] || (r[a] == r[b] && a < b);
  });
  const std::size_t cut = prune_count(0.25, m.size()) / 9;
  for (std::size_t rank = 0; rank < cells.size(); ++rank)
    for (std::size_t k = 0; k < 9; ++k) CHECK(m.kept(cells[rank] * 9 + k) == (rank >= cut));
}

TEST_CASE("hybrid mode without a ghost is rejected") {
  Network net = mini_vgg(1, 12, 10);
  CHECK_THROWS_AS(guided_prune(net, nullptr, HybridMode::BackHalf, PruneOptions{}), Error);
}

TEST_CASE("theory g-scores") {
  SUBCASE("hand example") {
    Network net;
    net.layers = {Layer::dense(2, 2), Layer::dense(2, 2)};
    net.input_shape = {2};
    *net.layers[0].weights = Tensor({2, 2}, std::vector<double>{1, -2, 0, 1});
    *net.layers[1].weights = Tensor({2, 2}, std::vector<double>{1, 1, 1, 1});
    // w2 w1 = [[1, -1], [1, -1]]; g = |w2 w1|^T [1, 1]
    const auto g = theory_g_scores(net);
    REQUIRE(g.size() == 1);
    CHECK(g[0].layer == 0);
    CHECK(g[0].scores == Tensor({2}, std::vector<double>{2, 2}));
  }
  SUBCASE("identity outer layer gives column sums") {
    Network net;
    net.layers = {Layer::dense(2, 3), Layer::dense(2, 2)};
    net.input_shape = {3};
    *net.layers[0].weights = Tensor({2, 3}, std::vector<double>{1, -2, 3, -4, 5, 0.5});
    *net.layers[1].weights = Tensor({2, 2}, std::vector<double>{1, 0, 0, 1});
    CHECK(theory_g_scores(net)[0].scores == Tensor({3}, std::vector<double>{5, 7, 3.5}));
  }
  SUBCASE("scaling s scales g and keeps the argmax") {
    Network net = dense_chain(4, 4);
    init_weights(net, 13);
    const Tensor s({4}, std::vector<double>{0.5, 1.5, 2.0, 0.25});
    Tensor s3 = s;
    for (auto& v : s3.values()) v *= 3.0;
    const auto a = theory_g_scores(net, s), b = theory_g_scores(net, s3);
    REQUIRE(a.size() == 3);
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (std::size_t i = 0; i < 4; ++i)
        CHECK(b[k].scores[i] == doctest::Approx(3.0 * a[k].scores[i]));
      const auto am = std::max_element(a[k].scores.values().begin(), a[k].scores.values().end());
      const auto bm = std::max_element(b[k].scores.values().begin(), b[k].scores.values().end());
      CHECK(am - a[k].scores.values().begin() == bm - b[k].scores.values().begin());
    }
  }
  SUBCASE("conv layers are unsupported") {
    try {
      theory_g_scores(mini_vgg(1, 12, 10));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Unsupported);
    }
  }
}
