#include "gcnet/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gcnet/error.hpp"

namespace gcnet {

std::string_view metric_name(Metric metric) {
  return metric == Metric::Pearson ? "pearson" : "cosine";
}

ActivationMatrix activation_matrix(const Tensor& acts, std::size_t layer_index) {
  require(acts.rank() == 2 || acts.rank() == 4, ErrorKind::Input,
          "activation must be [s,o] or [s,o,h,w], got " + shape_string(acts.shape()));
  require(acts.dim(0) >= 2, ErrorKind::Input,
          "activation matrix needs at least 2 samples, got " + std::to_string(acts.dim(0)));
  require(acts.all_finite(), ErrorKind::Numeric, "activation contains non-finite values");
  if (acts.rank() == 2) return {acts, layer_index};

  const std::size_t s = acts.dim(0), o = acts.dim(1), hw = acts.dim(2) * acts.dim(3);
  Tensor m({s, o});
  for (std::size_t n = 0; n < s; ++n)
    for (std::size_t c = 0; c < o; ++c) {
      const double* p = acts.plane(n, c);
      double acc = 0.0;
      for (std::size_t k = 0; k < hw; ++k) acc += p[k];
      m.at(n, c) = acc / static_cast<double>(hw);
    }
  return {std::move(m), layer_index};
}

namespace {

struct Columns {
  std::size_t rows = 0;
  std::vector<std::vector<double>> cols;
  std::vector<double> norms;  // 0 marks a degenerate column
};

// Columns of m, optionally mean-centered, with their L2 norms. A centered
// column whose residual is negligible relative to its raw magnitude is
// constant up to rounding and counts as zero-variance.
Columns columns(const Tensor& m, bool center) {
  Columns c;
  c.rows = m.dim(0);
  const std::size_t width = m.dim(1);
  c.cols.assign(width, std::vector<double>(c.rows));
  c.norms.assign(width, 0.0);
  for (std::size_t j = 0; j < width; ++j) {
    auto& col = c.cols[j];
    double raw = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i) {
      col[i] = m.at(i, j);
      raw += col[i] * col[i];
    }
    if (center) {
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(c.rows);
      for (double& v : col) v -= mean;
    }
    double sq = 0.0;
    for (double v : col) sq += v * v;
    const double norm = std::sqrt(sq);
    c.norms[j] = (norm == 0.0 || (center && norm <= 1e-12 * std::sqrt(raw))) ? 0.0 : norm;
  }
  return c;
}

ConnectivityMatrix correlate(const ActivationMatrix& a, const ActivationMatrix& b, Metric metric) {
  require(a.values.rank() == 2 && b.values.rank() == 2, ErrorKind::Input,
          "connectivity needs 2-d activation matrices");
  require(a.samples() == b.samples(), ErrorKind::Input,
          "sample count mismatch: " + std::to_string(a.samples()) + " vs " +
              std::to_string(b.samples()));
  require(a.samples() >= 2, ErrorKind::Input, "connectivity needs at least 2 samples");
  const bool center = metric == Metric::Pearson;
  const Columns ca = columns(a.values, center);
  const Columns cb = columns(b.values, center);
  const std::size_t oa = a.channels(), ob = b.channels();
  Tensor r({ob, oa});
  for (std::size_t j = 0; j < ob; ++j)
    for (std::size_t i = 0; i < oa; ++i) {
      if (ca.norms[i] == 0.0 || cb.norms[j] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < ca.rows; ++k) dot += ca.cols[i][k] * cb.cols[j][k];
      r.at(j, i) = std::min(1.0, std::abs(dot) / (ca.norms[i] * cb.norms[j]));
    }
  return {std::move(r), metric, a.layer_index, b.layer_index};
}

}  // namespace

ConnectivityMatrix pearson_connectivity(const ActivationMatrix& a, const ActivationMatrix& b) {
  return correlate(a, b, Metric::Pearson);
}

ConnectivityMatrix cosine_connectivity(const ActivationMatrix& a, const ActivationMatrix& b) {
  return correlate(a, b, Metric::Cosine);
}

ConnectivityMatrix connectivity(const ActivationMatrix& a, const ActivationMatrix& b,
                                Metric metric) {
  return correlate(a, b, metric);
}

Tensor expand_connectivity(const ConnectivityMatrix& r, const Layer& target) {
  require(target.prunable() && target.weights, ErrorKind::Input,
          "connectivity can only be expanded onto a Dense or Conv2D layer");
  const std::size_t rows = r.values.dim(0), cols = r.values.dim(1);
  require(rows == target.out && cols == target.in, ErrorKind::Input,
          "connectivity " + shape_string(r.values.shape()) + " does not match " +
              target.describe());
  if (target.kind == LayerKind::Dense) return r.values;
  const std::size_t kk = target.kernel * target.kernel;
  Tensor w(target.weights->shape());
  for (std::size_t o = 0; o < rows; ++o)
    for (std::size_t i = 0; i < cols; ++i)
      std::fill_n(w.data() + (o * cols + i) * kk, kk, r.values.at(o, i));
  return w;
}

ConnectivityMatrix merge_skip(const ConnectivityMatrix& a, const ConnectivityMatrix& b) {
  require(a.values.shape() == b.values.shape(), ErrorKind::Input,
          "cannot merge connectivity " + shape_string(a.values.shape()) + " with " +
              shape_string(b.values.shape()));
  require(a.metric == b.metric, ErrorKind::Input, "cannot merge different metrics");
  require(a.target == b.target, ErrorKind::Input, "merged matrices must share a target");
  ConnectivityMatrix m = a;
  for (std::size_t k = 0; k < m.values.size(); ++k) m.values[k] += b.values[k];
  return m;
}

Tensor spatial_expand(const ConnectivityMatrix& r, const Layer& linear) {
  require(linear.kind == LayerKind::Dense, ErrorKind::Input,
          "spatial expansion targets a Dense layer, got " + linear.describe());
  const std::size_t rows = r.values.dim(0), channels = r.values.dim(1);
  require(rows == linear.out, ErrorKind::Input,
          "connectivity rows " + std::to_string(rows) + " do not match " + linear.describe());
  require(linear.in % channels == 0, ErrorKind::Input,
          "in-features " + std::to_string(linear.in) + " not divisible by " +
              std::to_string(channels) + " channels");
  const std::size_t positions = linear.in / channels;
  Tensor w({rows, linear.in});
  for (std::size_t j = 0; j < rows; ++j)
    for (std::size_t i = 0; i < channels; ++i)
      std::fill_n(w.data() + j * linear.in + i * positions, positions, r.values.at(j, i));
  return w;
}

Tensor pool_expand(const ConnectivityMatrix& r, const Layer& pool, const Layer& linear) {
  require(pool.kind == LayerKind::AvgPool, ErrorKind::Input,
          "pool_expand expects an AvgPool layer, got " + pool.describe());
  return spatial_expand(r, linear);
}

}  // namespace gcnet
