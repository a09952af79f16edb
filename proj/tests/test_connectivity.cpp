#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gcnet/connectivity.hpp"
#include "gcnet/error.hpp"
#include "gcnet/random.hpp"

using namespace gcnet;

namespace {

ActivationMatrix columns(std::size_t s, std::vector<std::vector<double>> cols) {
  Tensor t({s, cols.size()});
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < s; ++i) t.at(i, j) = cols[j][i];
  return {t, 0};
}

ActivationMatrix random_matrix(std::size_t s, std::size_t o, Rng& rng) {
  Tensor t({s, o});
  for (auto& v : t.values()) v = rng.normal();
  return {t, 0};
}

// Two-pass textbook formulas, one pair at a time.
double naive_pearson(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  const std::size_t s = a.dim(0);
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < s; ++k) {
    ma += a.at(k, i);
    mb += b.at(k, j);
  }
  ma /= s;
  mb /= s;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t k = 0; k < s; ++k) {
    const double da = a.at(k, i) - ma, db = b.at(k, j) - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0 || vb == 0) return 0.0;
  return std::abs(cov / std::sqrt(va * vb));
}

double naive_cosine(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.dim(0); ++k) {
    dot += a.at(k, i) * b.at(k, j);
    na += a.at(k, i) * a.at(k, i);
    nb += b.at(k, j) * b.at(k, j);
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::abs(dot / std::sqrt(na * nb));
}

Tensor centered(const Tensor& m) {
  Tensor c = m;
  for (std::size_t j = 0; j < m.dim(1); ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < m.dim(0); ++i) mean += m.at(i, j);
    mean /= m.dim(0);
    for (std::size_t i = 0; i < m.dim(0); ++i) c.at(i, j) -= mean;
  }
  return c;
}

ConnectivityMatrix matrix(Shape shape, std::vector<double> v, std::size_t target = 1) {
  return {Tensor(std::move(shape), std::move(v)), Metric::Pearson, 0, target};
}

}  // namespace

TEST_CASE("activation matrix is the spatial mean") {
  const ActivationMatrix a = activation_matrix(Tensor({2, 1, 2, 2}, 3.0));
  CHECK(a.values == Tensor({2, 1}, 3.0));

  Tensor acts({2, 1, 2, 2});
  acts.at(0, 0, 0, 0) = 1;
  acts.at(0, 0, 0, 1) = 2;
  acts.at(0, 0, 1, 0) = 3;
  acts.at(0, 0, 1, 1) = 4;
  CHECK(activation_matrix(acts).values.at(0, 0) == 2.5);

  Rng rng(1);
  Tensor r({5, 3, 4, 4});
  for (auto& v : r.values()) v = rng.normal();
  const auto m = activation_matrix(r, 7);
  CHECK(m.layer_index == 7);
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t o = 0; o < 3; ++o) {
      double acc = 0;
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) acc += r.at(s, o, y, x);
      CHECK(m.values.at(s, o) == acc / 16.0);
    }

  const Tensor flat({3, 2}, 1.0);
  CHECK(activation_matrix(flat).values == flat);
  CHECK_THROWS_AS(activation_matrix(Tensor({1, 2})), Error);
}

TEST_CASE("pearson examples") {
  const auto a = columns(3, {{1, 2, 3}});
  CHECK(pearson_connectivity(a, a).values[0] == doctest::Approx(1.0));
  const auto b = columns(3, {{3, 5, 8}});
  const double expect = naive_pearson(a.values, 0, b.values, 0);
  CHECK(expect == doctest::Approx(0.9934).epsilon(1e-4));
  CHECK(pearson_connectivity(a, b).values[0] == doctest::Approx(expect).epsilon(1e-14));
  const auto flat = columns(3, {{4, 4, 4}});
  CHECK(pearson_connectivity(a, flat).values[0] == 0.0);
  const auto neg = columns(3, {{3, 2, 1}});
  CHECK(pearson_connectivity(a, neg).values[0] == doctest::Approx(1.0));
}

TEST_CASE("nearly constant column counts as zero variance") {
  const auto a = columns(3, {{1, 2, 3}});
  const auto c = columns(3, {{0.1 + 0.2, 0.3, 0.3}});
  CHECK(pearson_connectivity(a, c).values[0] == 0.0);
}

TEST_CASE("cosine examples") {
  const auto a = columns(2, {{1, 0}});
  CHECK(cosine_connectivity(a, columns(2, {{1, 1}})).values[0] ==
        doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(cosine_connectivity(a, columns(2, {{2, 0}})).values[0] == doctest::Approx(1.0));
  CHECK(cosine_connectivity(a, columns(2, {{0, 1}})).values[0] == 0.0);
  CHECK(cosine_connectivity(a, columns(2, {{0, 0}})).values[0] == 0.0);
}

TEST_CASE("connectivity layout is [target, source]") {
  const auto a = columns(4, {{1, 2, 3, 4}, {1, -1, 1, -1}, {0, 0, 1, 1}});
  const auto b = columns(4, {{2, 1, 0, 1}, {5, 4, 3, 1}});
  const auto r = pearson_connectivity(a, b);
  CHECK(r.values.shape() == Shape{2, 3});
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(r.values.at(j, i) == doctest::Approx(naive_pearson(a.values, i, b.values, j)));
}

TEST_CASE("random pairs match naive oracles") {
  Rng rng(2024);
  for (int t = 0; t < 50; ++t) {
    const std::size_t s = 2 + rng.below(7), oa = 1 + rng.below(4), ob = 1 + rng.below(4);
    const auto a = random_matrix(s, oa, rng), b = random_matrix(s, ob, rng);
    const auto p = pearson_connectivity(a, b), c = cosine_connectivity(a, b);
    const auto ct = pearson_connectivity(b, a);
    const ActivationMatrix ac{centered(a.values), 0}, bc{centered(b.values), 0};
    const auto pc = pearson_connectivity(ac, bc), cc = cosine_connectivity(ac, bc);
    for (std::size_t j = 0; j < ob; ++j)
      for (std::size_t i = 0; i < oa; ++i) {
        CHECK(std::abs(p.values.at(j, i) - naive_pearson(a.values, i, b.values, j)) <= 1e-10);
        CHECK(std::abs(c.values.at(j, i) - naive_cosine(a.values, i, b.values, j)) <= 1e-10);
        CHECK(std::abs(pc.values.at(j, i) - cc.values.at(j, i)) <= 1e-10);
        CHECK(std::abs(p.values.at(j, i) - ct.values.at(i, j)) <= 1e-12);
        CHECK(p.values.at(j, i) >= 0.0);
        CHECK(p.values.at(j, i) <= 1.0);
      }
  }
}

TEST_CASE("sample mismatch is an input error") {
  Rng rng(3);
  CHECK_THROWS_AS(pearson_connectivity(random_matrix(4, 2, rng), random_matrix(5, 2, rng)),
                  Error);
}

TEST_CASE("expand onto conv and dense") {
  const auto r = matrix({1, 1}, {0.7});
  const Tensor w = expand_connectivity(r, Layer::conv2d(1, 1, 3));
  CHECK(w == Tensor({1, 1, 3, 3}, 0.7));

  Rng rng(4);
  Tensor v({3, 2});
  for (auto& x : v.values()) x = rng.uniform();
  const ConnectivityMatrix rr{v, Metric::Pearson, 0, 1};
  const Tensor e = expand_connectivity(rr, Layer::conv2d(3, 2, 3));
  CHECK(e.shape() == Shape{3, 2, 3, 3});
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) CHECK(e.at(o, i, y, x) == v.at(o, i));
  CHECK(expand_connectivity(rr, Layer::dense(3, 2)) == v);
  CHECK_THROWS_AS(expand_connectivity(rr, Layer::dense(2, 3)), Error);
  CHECK_THROWS_AS(expand_connectivity(rr, Layer::relu()), Error);
}

TEST_CASE("merge_skip") {
  const auto a = matrix({1, 2}, {0.6, 0.2});
  const auto b = matrix({1, 2}, {0.7, 0.1});
  const auto zero = matrix({1, 2}, {0, 0});
  CHECK(merge_skip(a, zero).values == a.values);
  CHECK(merge_skip(a, b).values == merge_skip(b, a).values);
  CHECK(merge_skip(matrix({1, 1}, {0.6}), matrix({1, 1}, {0.7})).values[0] ==
        doctest::Approx(1.3));
  CHECK_THROWS_AS(merge_skip(a, matrix({2, 1}, {0.1, 0.1})), Error);
  CHECK_THROWS_AS(merge_skip(a, matrix({1, 2}, {0.1, 0.1}, 5)), Error);
}

TEST_CASE("pool_expand is channel-major") {
  const auto r = matrix({1, 2}, {0.3, 0.9});
  const Tensor w = pool_expand(r, Layer::avg_pool(2), Layer::dense(1, 4));
  CHECK(w.shape() == Shape{1, 4});
  // index map: flattened feature f belongs to channel f / p
  const std::size_t p = 2;
  for (std::size_t f = 0; f < 4; ++f) CHECK(w.at(0, f) == r.values.at(0, f / p));

  const auto r2 = matrix({2, 2}, {0.1, 0.2, 0.3, 0.4});
  CHECK(pool_expand(r2, Layer::avg_pool(1), Layer::dense(2, 2)) ==
        expand_connectivity(r2, Layer::dense(2, 2)));
  CHECK(pool_expand(r2, Layer::avg_pool(2), Layer::dense(2, 10)).shape() == Shape{2, 10});
  CHECK_THROWS_AS(pool_expand(r2, Layer::relu(), Layer::dense(2, 4)), Error);
  CHECK_THROWS_AS(pool_expand(r2, Layer::avg_pool(2), Layer::dense(2, 5)), Error);
}
