#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gcnet/architectures.hpp"
#include "gcnet/flops.hpp"
#include "gcnet/ghost.hpp"
#include "gcnet/prune.hpp"

using namespace gcnet;

namespace {

// A double that counts every arithmetic operation performed on it.
std::uint64_t ops = 0;

struct Counted {
  double v = 0.0;
};
Counted operator+(Counted a, Counted b) { ++ops; return {a.v + b.v}; }
Counted operator-(Counted a, Counted b) { ++ops; return {a.v - b.v}; }
Counted operator*(Counted a, Counted b) { ++ops; return {a.v * b.v}; }
Counted operator/(Counted a, Counted b) { ++ops; return {a.v / b.v}; }
Counted csqrt(Counted a) { ++ops; return {std::sqrt(a.v)}; }
Counted cabs(Counted a) { ++ops; return {std::abs(a.v)}; }
bool is_zero(Counted a) { ++ops; return a.v == 0.0; }

using Column = std::vector<Counted>;

// Reference Pearson pipeline over per-sample activation maps:
// acts[layer][sample][channel] is a vector of spatial values.
using Maps = std::vector<std::vector<std::vector<double>>>;

Column summarise(const Maps& layer, std::size_t channel) {
  Column col;
  for (const auto& sample : layer) {
    const auto& m = sample[channel];
    if (m.size() == 1) {
      col.push_back({m[0]});
      continue;
    }
    Counted acc{m[0]};
    for (std::size_t k = 1; k < m.size(); ++k) acc = acc + Counted{m[k]};
    col.push_back(acc / Counted{static_cast<double>(m.size())});
  }
  return col;
}

Column center(const Column& c) {
  Counted sum = c[0];
  for (std::size_t k = 1; k < c.size(); ++k) sum = sum + c[k];
  const Counted mean = sum / Counted{static_cast<double>(c.size())};
  Column out;
  for (const auto& v : c) out.push_back(v - mean);
  return out;
}

Counted dot(const Column& a, const Column& b) {
  Counted acc{0.0};
  for (std::size_t k = 0; k < a.size(); ++k) acc = acc + a[k] * b[k];
  return acc;
}

double entry(const Column& a, const Column& b) {
  const Counted s{static_cast<double>(a.size())};
  const Counted cov = dot(a, b) / s;
  const Counted va = dot(a, a) / s;
  const Counted vb = dot(b, b) / s;
  const Counted den = csqrt(va) * csqrt(vb);
  if (is_zero(den)) return 0.0;
  return cabs(cov / den).v;
}

std::uint64_t reference_pair_ops(const Maps& src, const Maps& dst) {
  ops = 0;
  std::vector<Column> a, b;
  for (std::size_t c = 0; c < src[0].size(); ++c) a.push_back(center(summarise(src, c)));
  for (std::size_t c = 0; c < dst[0].size(); ++c) b.push_back(center(summarise(dst, c)));
  for (const auto& cb : b)
    for (const auto& ca : a) (void)entry(ca, cb);
  return ops;
}

// Values vary across samples so no column is degenerate and every entry
// takes the full path.
Maps maps(std::size_t s, std::size_t o, std::size_t hw) {
  Maps m(s, std::vector<std::vector<double>>(o, std::vector<double>(hw)));
  for (std::size_t n = 0; n < s; ++n)
    for (std::size_t c = 0; c < o; ++c)
      for (std::size_t k = 0; k < hw; ++k)
        m[n][c][k] = static_cast<double>((n * n + 3 * c + k) % 7) + 0.25 * static_cast<double>(n);
  return m;
}

}  // namespace

TEST_CASE("connectivity flops match an instrumented reference") {
  SUBCASE("dense pair, one channel each, two samples") {
    Network net;
    net.layers = {Layer::dense(1, 1), Layer::relu(), Layer::dense(1, 1)};
    net.input_shape = {1};
    const auto counted = reference_pair_ops(maps(2, 1, 1), maps(2, 1, 1));
    CHECK(count_connectivity_flops(net, 2) == counted);
    CHECK(counted == 2 * (2 * 2) + (6 * 2 + 9));
  }
  SUBCASE("conv pair with spatial averaging") {
    Network net;
    net.layers = {Layer::conv2d(2, 1, 1), Layer::relu(), Layer::conv2d(3, 2, 1)};
    net.input_shape = {1, 2, 2};
    CHECK(count_connectivity_flops(net, 5) == reference_pair_ops(maps(5, 2, 4), maps(5, 3, 4)));
  }
}

TEST_CASE("connectivity flops basics") {
  Network single;
  single.layers = {Layer::dense(2, 2)};
  single.input_shape = {2};
  CHECK(count_connectivity_flops(single, 100) == 0);

  const Network vgg = mini_vgg(1, 12, 10);
  const auto a = count_connectivity_flops(vgg, 256), b = count_connectivity_flops(vgg, 512);
  CHECK(b > a);
  const double ratio = static_cast<double>(count_connectivity_flops(vgg, 1 << 20)) /
                       static_cast<double>(count_connectivity_flops(vgg, 1 << 19));
  CHECK(std::abs(ratio - 2.0) < 1e-4);
  CHECK(connectivity_entry_flops(10, Metric::Cosine) < connectivity_entry_flops(10));
}

TEST_CASE("sort and forward counts") {
  CHECK(sort_comparisons(0) == 0);
  CHECK(sort_comparisons(1) == 0);
  CHECK(sort_comparisons(8) == 24);
  CHECK(sort_comparisons(9) == 36);

  Network net;
  net.layers = {Layer::dense(3, 4), Layer::relu()};
  net.input_shape = {4};
  CHECK(forward_flops(net) == 2 * 12 + 3 + 3);
  Mask m({3, 4}, true);
  m.set(0, false);
  m.set(5, false);
  net.layers[0].mask = m;
  CHECK(forward_flops(net, true) == 2 * 10 + 3 + 3);
}

TEST_CASE("pipeline phases") {
  for (auto arch : {Architecture::MiniVGG, Architecture::MiniResNet}) {
    Network net = make_architecture(arch, 1, 12, 10);
    init_weights(net, 1);
    Tensor x({8, 1, 12, 12}, 0.5);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<double>(k % 7) / 7.0;
    const GhostNet ghost = build_ghost(net, x, Metric::Pearson);
    for (auto method : {PruneMethod::L1, PruneMethod::L2, PruneMethod::OsSynFlow}) {
      PipelineRun run{&net, &ghost.net, partition_layers(net, HybridMode::FullGC), method,
                      Metric::Pearson, 512, 256};
      const FlopsReport r = count_pipeline_flops(run);
      INFO(architecture_name(arch) << " " << method_name(method));
      CHECK(r.connectivity_flops > r.gc_prune_flops);
      CHECK(r.gc_prune_flops > r.mapping_flops);
      CHECK(r.mapping_flops > 0);
      CHECK(count_pipeline_flops(run).connectivity_flops == r.connectivity_flops);
    }
    PipelineRun direct{&net, nullptr, partition_layers(net, HybridMode::DirectOnly),
                       PruneMethod::L1, Metric::Pearson, 512, 256};
    const FlopsReport d = count_pipeline_flops(direct);
    CHECK(d.connectivity_flops == 0);
    CHECK(d.gc_prune_flops == 0);
    CHECK(d.mapping_flops == 0);
    CHECK(d.direct_prune_flops > 0);
  }
}
