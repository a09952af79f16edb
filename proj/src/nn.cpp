#include "gcnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gcnet/error.hpp"
#include "gcnet/random.hpp"

namespace gcnet {

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "Dense";
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::Identity: return "Identity";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::AvgPool: return "AvgPool";
    case LayerKind::Flatten: return "Flatten";
  }
  return "?";
}

Layer Layer::dense(std::size_t out, std::size_t in) {
  Layer l;
  l.kind = LayerKind::Dense;
  l.out = out;
  l.in = in;
  l.weights = Tensor({out, in});
  l.bias = Tensor({out});
  return l;
}

Layer Layer::conv2d(std::size_t out, std::size_t in, std::size_t kernel, std::size_t stride,
                    std::size_t pad) {
  require(stride > 0, ErrorKind::Input, "conv stride must be positive");
  Layer l;
  l.kind = LayerKind::Conv2D;
  l.out = out;
  l.in = in;
  l.kernel = kernel;
  l.stride = stride;
  l.pad = pad;
  l.weights = Tensor({out, in, kernel, kernel});
  l.bias = Tensor({out});
  return l;
}

Layer Layer::identity() { return Layer{}; }

Layer Layer::relu() {
  Layer l;
  l.kind = LayerKind::ReLU;
  return l;
}

Layer Layer::avg_pool(std::size_t window) {
  require(window > 0, ErrorKind::Input, "pool window must be positive");
  Layer l;
  l.kind = LayerKind::AvgPool;
  l.pool = window;
  return l;
}

Layer Layer::flatten() {
  Layer l;
  l.kind = LayerKind::Flatten;
  return l;
}

std::string Layer::describe() const {
  std::string s(kind_name(kind));
  switch (kind) {
    case LayerKind::Dense:
      s += "(out=" + std::to_string(out) + ",in=" + std::to_string(in) + ")";
      break;
    case LayerKind::Conv2D:
      s += "(out=" + std::to_string(out) + ",in=" + std::to_string(in) +
           ",k=" + std::to_string(kernel) + ")";
      break;
    case LayerKind::AvgPool:
      s += "(" + std::to_string(pool) + ")";
      break;
    default:
      break;
  }
  return s;
}

std::vector<std::size_t> Network::prunable_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = entry; i < layers.size(); ++i)
    if (layers[i].prunable()) out.push_back(i);
  return out;
}

std::optional<std::size_t> Network::main_predecessor(std::size_t index) const {
  for (std::size_t i = index; i > entry;) {
    --i;
    if (!layers[i].branch) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Network::main_successor(std::size_t index) const {
  for (std::size_t i = index + 1; i < layers.size(); ++i)
    if (!layers[i].branch) return i;
  return std::nullopt;
}

std::size_t Network::output_layer() const {
  for (std::size_t i = layers.size(); i > entry;) {
    --i;
    if (!layers[i].branch) return i;
  }
  fail(ErrorKind::Input, "network has no executable layers");
}

namespace {

std::string layer_name(const Network& net, std::size_t i) {
  return "layer " + std::to_string(i) + " (" + net.layers[i].describe() + ")";
}

Shape layer_output_shape(const Network& net, std::size_t i, const Shape& in,
                         const std::string& producer) {
  const Layer& l = net.layers[i];
  auto mismatch = [&](const std::string& why) {
    fail(ErrorKind::Composition, "composition error: " + layer_name(net, i) +
                                     " cannot consume " + producer + " with shape " +
                                     shape_string(in) + ": " + why);
  };
  switch (l.kind) {
    case LayerKind::Dense:
      if (in.size() != 1 || in[0] != l.in) mismatch("expected [" + std::to_string(l.in) + "]");
      return {l.out};
    case LayerKind::Conv2D: {
      if (in.size() != 3 || in[0] != l.in)
        mismatch("expected " + std::to_string(l.in) + " input channels");
      if (in[1] + 2 * l.pad < l.kernel || in[2] + 2 * l.pad < l.kernel)
        mismatch("kernel larger than padded input");
      return {l.out, (in[1] + 2 * l.pad - l.kernel) / l.stride + 1,
              (in[2] + 2 * l.pad - l.kernel) / l.stride + 1};
    }
    case LayerKind::AvgPool:
      if (in.size() != 3 || in[1] % l.pool != 0 || in[2] % l.pool != 0)
        mismatch("spatial size not divisible by pool window");
      return {in[0], in[1] / l.pool, in[2] / l.pool};
    case LayerKind::Flatten:
      return {shape_size(in)};
    case LayerKind::Identity:
    case LayerKind::ReLU:
      return in;
  }
  return in;
}

}  // namespace

std::vector<Shape> output_shapes(const Network& net) {
  require(net.entry < net.layers.size(), ErrorKind::Input, "network entry out of range");
  require(!net.layers[net.entry].branch, ErrorKind::Input, "entry layer cannot be a branch");
  for (const auto& s : net.skips) {
    require(s.source < s.target && s.target < net.layers.size(), ErrorKind::Input,
            "skip edge must point forward");
    require(s.source >= net.entry, ErrorKind::Input, "skip edge starts before entry");
    require(!net.layers[s.source].branch && !net.layers[s.target].branch, ErrorKind::Input,
            "skip edge endpoints must be on the main path");
    if (s.projection)
      require(*s.projection < net.layers.size() && net.layers[*s.projection].branch,
              ErrorKind::Input, "skip projection must be a branch layer");
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (!net.layers[i].branch) continue;
    const bool used = std::any_of(net.skips.begin(), net.skips.end(), [&](const SkipEdge& s) {
      return s.projection && *s.projection == i;
    });
    require(used, ErrorKind::Input, "branch layer " + std::to_string(i) + " is not on a skip");
  }

  std::vector<Shape> shapes(net.layers.size());
  Shape current = net.input_shape;
  std::string producer = "network input";
  for (std::size_t i = net.entry; i < net.layers.size(); ++i) {
    if (net.layers[i].branch) continue;
    for (const auto& s : net.skips) {
      if (s.target != i) continue;
      Shape skip_shape = shapes[s.source];
      std::string skip_name = layer_name(net, s.source);
      if (s.projection) {
        skip_shape = layer_output_shape(net, *s.projection, skip_shape, skip_name);
        shapes[*s.projection] = skip_shape;
        skip_name = layer_name(net, *s.projection);
      }
      if (skip_shape != current)
        fail(ErrorKind::Composition, "composition error: skip from " + skip_name + " shape " +
                                         shape_string(skip_shape) + " into " +
                                         layer_name(net, i) + " does not match " + producer +
                                         " shape " + shape_string(current));
    }
    current = layer_output_shape(net, i, current, producer);
    shapes[i] = current;
    producer = layer_name(net, i);
  }
  return shapes;
}

void validate(const Network& net) { (void)output_shapes(net); }

void init_weights(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& layer : net.layers) {
    if (!layer.weights) continue;
    const std::size_t fan_in = layer.kind == LayerKind::Conv2D
                                   ? layer.in * layer.kernel * layer.kernel
                                   : layer.in;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& w : layer.weights->values()) w = rng.uniform(-bound, bound);
    if (layer.bias) layer.bias->fill(0.0);
    layer.mask.reset();
  }
}

// ---------------------------------------------------------------------------
// Layer kernels. Activations are [s, c] or [s, c, h, w].

namespace {

Tensor dense_forward(const Layer& l, const Tensor& in) {
  const std::size_t n = in.dim(0);
  Tensor out({n, l.out});
  const double* w = l.weights->data();
  const double* b = l.bias ? l.bias->data() : nullptr;
  for (std::size_t s = 0; s < n; ++s) {
    const double* x = in.data() + s * l.in;
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* wr = w + o * l.in;
      double acc = b ? b[o] : 0.0;
      for (std::size_t i = 0; i < l.in; ++i) acc += wr[i] * x[i];
      out.at(s, o) = acc;
    }
  }
  return out;
}

void dense_backward(const Layer& l, const Tensor& in, const Tensor& gout, Tensor* gin,
                    Tensor& gw, Tensor* gb) {
  const std::size_t n = in.dim(0);
  const double* w = l.weights->data();
  for (std::size_t s = 0; s < n; ++s) {
    const double* x = in.data() + s * l.in;
    for (std::size_t o = 0; o < l.out; ++o) {
      const double g = gout.at(s, o);
      if (gb) (*gb)[o] += g;
      double* gwr = gw.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) gwr[i] += g * x[i];
      if (gin) {
        double* gx = gin->data() + s * l.in;
        const double* wr = w + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) gx[i] += g * wr[i];
      }
    }
  }
}

struct ConvGeometry {
  std::size_t n, c, h, w, oh, ow;
};

ConvGeometry conv_geometry(const Layer& l, const Tensor& in) {
  const std::size_t h = in.dim(2), w = in.dim(3);
  return {in.dim(0), in.dim(1), h, w, (h + 2 * l.pad - l.kernel) / l.stride + 1,
          (w + 2 * l.pad - l.kernel) / l.stride + 1};
}

// Output index range [lo, hi) whose input coordinate o*stride + k - pad lies
// inside [0, extent).
std::pair<std::size_t, std::size_t> valid_range(std::size_t k, std::size_t pad,
                                                std::size_t stride, std::size_t extent,
                                                std::size_t out_extent) {
  const long kk = static_cast<long>(k), p = static_cast<long>(pad),
             st = static_cast<long>(stride), e = static_cast<long>(extent);
  long lo = p - kk > 0 ? (p - kk + st - 1) / st : 0;
  long hi_incl = e - 1 + p - kk;
  if (hi_incl < 0) return {0, 0};
  long hi = hi_incl / st + 1;
  hi = std::min(hi, static_cast<long>(out_extent));
  if (lo >= hi) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Four interleaved partial sums so the loop vectorises.
double dot(const double* a, const double* b, std::size_t n) {
  double p[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4)
    for (std::size_t u = 0; u < 4; ++u) p[u] += a[j + u] * b[j + u];
  for (; j < n; ++j) p[0] += a[j] * b[j];
  return (p[0] + p[1]) + (p[2] + p[3]);
}

// col[(c * k + ky) * k + kx, y * ow + x] = padded input at the tap.
void im2col(const Layer& l, const ConvGeometry& g, const double* image, std::vector<double>& col) {
  const std::size_t k = l.kernel, plane = g.oh * g.ow;
  col.assign(g.c * k * k * plane, 0.0);
  for (std::size_t c = 0; c < g.c; ++c) {
    const double* ip = image + c * g.h * g.w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      const auto [ylo, yhi] = valid_range(ky, l.pad, l.stride, g.h, g.oh);
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto [xlo, xhi] = valid_range(kx, l.pad, l.stride, g.w, g.ow);
        double* row = col.data() + ((c * k + ky) * k + kx) * plane;
        for (std::size_t y = ylo; y < yhi; ++y) {
          const double* irow = ip + (y * l.stride + ky - l.pad) * g.w;
          for (std::size_t x = xlo; x < xhi; ++x)
            row[y * g.ow + x] = irow[x * l.stride + kx - l.pad];
        }
      }
    }
  }
}

void col2im_add(const Layer& l, const ConvGeometry& g, const std::vector<double>& col,
                double* image) {
  const std::size_t k = l.kernel, plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c) {
    double* ip = image + c * g.h * g.w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      const auto [ylo, yhi] = valid_range(ky, l.pad, l.stride, g.h, g.oh);
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto [xlo, xhi] = valid_range(kx, l.pad, l.stride, g.w, g.ow);
        const double* row = col.data() + ((c * k + ky) * k + kx) * plane;
        for (std::size_t y = ylo; y < yhi; ++y) {
          double* irow = ip + (y * l.stride + ky - l.pad) * g.w;
          for (std::size_t x = xlo; x < xhi; ++x)
            irow[x * l.stride + kx - l.pad] += row[y * g.ow + x];
        }
      }
    }
  }
}

Tensor conv_forward(const Layer& l, const Tensor& in) {
  const auto g = conv_geometry(l, in);
  Tensor out({g.n, l.out, g.oh, g.ow});
  const std::size_t plane = g.oh * g.ow, taps = g.c * l.kernel * l.kernel;
  const double* w = l.weights->data();
  std::vector<double> col;
  for (std::size_t s = 0; s < g.n; ++s) {
    im2col(l, g, in.plane(s, 0), col);
    for (std::size_t o = 0; o < l.out; ++o) {
      double* op = out.plane(s, o);
      std::fill(op, op + plane, l.bias ? (*l.bias)[o] : 0.0);
      for (std::size_t t = 0; t < taps; ++t) {
        const double wv = w[o * taps + t];
        if (wv == 0.0) continue;
        const double* row = col.data() + t * plane;
        for (std::size_t j = 0; j < plane; ++j) op[j] += wv * row[j];
      }
    }
  }
  return out;
}

void conv_backward(const Layer& l, const Tensor& in, const Tensor& gout, Tensor* gin,
                   Tensor& gw, Tensor* gb) {
  const auto g = conv_geometry(l, in);
  const std::size_t plane = g.oh * g.ow, taps = g.c * l.kernel * l.kernel;
  const double* w = l.weights->data();
  double* gwp = gw.data();
  std::vector<double> col, gcol;
  for (std::size_t s = 0; s < g.n; ++s) {
    im2col(l, g, in.plane(s, 0), col);
    if (gin) gcol.assign(col.size(), 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* gp = gout.plane(s, o);
      if (gb) {
        double acc = 0.0;
        for (std::size_t j = 0; j < plane; ++j) acc += gp[j];
        (*gb)[o] += acc;
      }
      for (std::size_t t = 0; t < taps; ++t) {
        const double* row = col.data() + t * plane;
        gwp[o * taps + t] += dot(gp, row, plane);
        const double wv = w[o * taps + t];
        if (!gin || wv == 0.0) continue;
        double* grow = gcol.data() + t * plane;
        for (std::size_t j = 0; j < plane; ++j) grow[j] += wv * gp[j];
      }
    }
    if (gin) col2im_add(l, g, gcol, gin->plane(s, 0));
  }
}

Tensor pool_forward(const Layer& l, const Tensor& in) {
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3), p = l.pool;
  Tensor out({n, c, h / p, w / p});
  const double scale = 1.0 / static_cast<double>(p * p);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h / p; ++y)
        for (std::size_t x = 0; x < w / p; ++x) {
          double acc = 0.0;
          for (std::size_t dy = 0; dy < p; ++dy)
            for (std::size_t dx = 0; dx < p; ++dx) acc += in.at(s, ch, y * p + dy, x * p + dx);
          out.at(s, ch, y, x) = acc * scale;
        }
  return out;
}

Tensor pool_backward(const Layer& l, const Tensor& in, const Tensor& gout) {
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3), p = l.pool;
  Tensor gin(in.shape());
  const double scale = 1.0 / static_cast<double>(p * p);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) gin.at(s, ch, y, x) = gout.at(s, ch, y / p, x / p) * scale;
  return gin;
}

Shape batched(std::size_t n, const Shape& per_sample) {
  Shape s{n};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

Tensor apply_layer(const Layer& l, const Tensor& in, const Shape& out_shape) {
  switch (l.kind) {
    case LayerKind::Dense: return dense_forward(l, in);
    case LayerKind::Conv2D: return conv_forward(l, in);
    case LayerKind::AvgPool: return pool_forward(l, in);
    case LayerKind::Flatten: return in.reshaped(batched(in.dim(0), out_shape));
    case LayerKind::ReLU: {
      Tensor out = in;
      for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
      return out;
    }
    case LayerKind::Identity: return in;
  }
  return in;
}

// Returns d(loss)/d(input) when want_input; accumulates parameter grads.
Tensor layer_backward(const Layer& l, const Tensor& in, const Tensor& gout, bool want_input,
                      Gradients& grads, std::size_t index) {
  switch (l.kind) {
    case LayerKind::Dense:
    case LayerKind::Conv2D: {
      Tensor gin = want_input ? Tensor(in.shape()) : Tensor();
      Tensor& gw = *grads.weights[index];
      Tensor* gb = grads.bias[index] ? &*grads.bias[index] : nullptr;
      if (l.kind == LayerKind::Dense)
        dense_backward(l, in, gout, want_input ? &gin : nullptr, gw, gb);
      else
        conv_backward(l, in, gout, want_input ? &gin : nullptr, gw, gb);
      return gin;
    }
    case LayerKind::AvgPool: return pool_backward(l, in, gout);
    case LayerKind::Flatten: return gout.reshaped(in.shape());
    case LayerKind::ReLU: {
      Tensor gin = gout;
      for (std::size_t i = 0; i < gin.size(); ++i)
        if (!(in[i] > 0.0)) gin[i] = 0.0;
      return gin;
    }
    case LayerKind::Identity: return gout;
  }
  return gout;
}

void add_into(Tensor& acc, const Tensor& t) {
  if (acc.empty()) {
    acc = t;
    return;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += t[i];
}

struct Trace {
  std::vector<Tensor> inputs;   // merged input of each executed layer
  std::vector<Tensor> outputs;  // output of each executed layer
};

Trace run_forward(const Network& net, const Tensor& batch) {
  const auto shapes = output_shapes(net);
  require(batch.rank() >= 1 && batch.dim(0) > 0, ErrorKind::Input, "empty batch");
  const Shape expected = batched(batch.dim(0), net.input_shape);
  require(batch.shape() == expected, ErrorKind::Composition,
          "composition error: network input expects " + shape_string(expected) + ", got " +
              shape_string(batch.shape()));
  require(batch.all_finite(), ErrorKind::Numeric, "batch contains non-finite values");

  Trace t;
  t.inputs.resize(net.layers.size());
  t.outputs.resize(net.layers.size());
  const Tensor* prev = &batch;
  for (std::size_t i = net.entry; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    if (l.branch) continue;
    Tensor in = *prev;
    for (const auto& s : net.skips) {
      if (s.target != i) continue;
      if (s.projection) {
        const std::size_t p = *s.projection;
        t.inputs[p] = t.outputs[s.source];
        t.outputs[p] = apply_layer(net.layers[p], t.inputs[p], shapes[p]);
        add_into(in, t.outputs[p]);
      } else {
        add_into(in, t.outputs[s.source]);
      }
    }
    t.outputs[i] = apply_layer(l, in, shapes[i]);
    t.inputs[i] = std::move(in);
    prev = &t.outputs[i];
  }
  return t;
}

Gradients zero_gradients(const Network& net) {
  Gradients g;
  g.weights.resize(net.layers.size());
  g.bias.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].weights) g.weights[i] = Tensor(net.layers[i].weights->shape());
    if (net.layers[i].bias) g.bias[i] = Tensor(net.layers[i].bias->shape());
  }
  return g;
}

Gradients backprop(const Network& net, const Trace& trace, Tensor grad_logits) {
  Gradients grads = zero_gradients(net);
  std::vector<Tensor> gout(net.layers.size());
  const std::size_t last = net.output_layer();
  gout[last] = std::move(grad_logits);
  for (std::size_t i = last + 1; i-- > net.entry;) {
    const Layer& l = net.layers[i];
    if (l.branch || gout[i].empty()) continue;
    const auto prev = net.main_predecessor(i);
    const bool has_skip = std::any_of(net.skips.begin(), net.skips.end(),
                                      [&](const SkipEdge& s) { return s.target == i; });
    const bool want_input = prev.has_value() || has_skip;
    Tensor gin = layer_backward(l, trace.inputs[i], gout[i], want_input, grads, i);
    if (!want_input) continue;
    for (const auto& s : net.skips) {
      if (s.target != i) continue;
      if (s.projection) {
        const std::size_t p = *s.projection;
        add_into(gout[s.source],
                 layer_backward(net.layers[p], trace.inputs[p], gin, true, grads, p));
      } else {
        add_into(gout[s.source], gin);
      }
    }
    if (prev) add_into(gout[*prev], gin);
  }
  return grads;
}

}  // namespace

ForwardRecord forward_record(const Network& net, const Tensor& batch) {
  Trace t = run_forward(net, batch);
  ForwardRecord r;
  r.logits = t.outputs[net.output_layer()];
  r.acts = std::move(t.outputs);
  return r;
}

Tensor forward(const Network& net, const Tensor& batch) {
  Trace t = run_forward(net, batch);
  return std::move(t.outputs[net.output_layer()]);
}

double softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels,
                             Tensor* grad) {
  require(logits.rank() == 2, ErrorKind::Input, "logits must be [samples, classes]");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  require(labels.size() == n, ErrorKind::Input, "label count does not match batch");
  for (auto y : labels)
    require(y < c, ErrorKind::Input,
            "label " + std::to_string(y) + " out of range for " + std::to_string(c) + " classes");
  if (grad) *grad = Tensor({n, c});
  double total = 0.0;
  std::vector<double> p(c);
  for (std::size_t s = 0; s < n; ++s) {
    double mx = logits.at(s, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(s, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (p[j] = std::exp(logits.at(s, j) - mx));
    total += std::log(z) - (logits.at(s, labels[s]) - mx);
    if (grad)
      for (std::size_t j = 0; j < c; ++j)
        grad->at(s, j) = (p[j] / z - (j == labels[s] ? 1.0 : 0.0)) / static_cast<double>(n);
  }
  const double loss = total / static_cast<double>(n);
  require(std::isfinite(loss), ErrorKind::Numeric, "loss is not finite");
  return loss;
}

LossGradients loss_gradients(const Network& net, const Tensor& batch,
                             std::span<const std::size_t> labels) {
  Trace t = run_forward(net, batch);
  Tensor g;
  LossGradients r;
  r.loss = softmax_cross_entropy(t.outputs[net.output_layer()], labels, &g);
  r.grads = backprop(net, t, std::move(g));
  return r;
}

Gradients output_sum_gradients(const Network& net, const Tensor& batch) {
  Trace t = run_forward(net, batch);
  Tensor g(t.outputs[net.output_layer()].shape(), 1.0);
  return backprop(net, t, std::move(g));
}

double backward_sgd(Network& net, const Tensor& batch, std::span<const std::size_t> labels,
                    const SgdState& state) {
  require(state.learning_rate >= 0.0, ErrorKind::Input, "learning rate must be non-negative");
  const Layer& out = net.layers[net.output_layer()];
  require(out.kind == LayerKind::Dense, ErrorKind::Input,
          "training needs a final Dense classifier");
  auto [loss, grads] = loss_gradients(net, batch, labels);
  const double lr = state.learning_rate;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Layer& l = net.layers[i];
    if (!l.weights) continue;
    auto w = l.weights->values();
    const auto gw = grads.weights[i]->values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (l.mask && !l.mask->kept(k)) {
        w[k] = 0.0;
        continue;
      }
      w[k] -= lr * gw[k];
    }
    if (l.bias) {
      auto b = l.bias->values();
      const auto gb = grads.bias[i]->values();
      for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * gb[k];
    }
    require(l.weights->all_finite() && (!l.bias || l.bias->all_finite()), ErrorKind::Numeric,
            "non-finite weights after SGD step in layer " + std::to_string(i));
  }
  return loss;
}

Tensor gather_rows(const Tensor& source, std::span<const std::size_t> rows) {
  require(source.rank() >= 1 && !rows.empty(), ErrorKind::Input, "cannot gather zero rows");
  const std::size_t row = source.size() / source.dim(0);
  Shape shape = source.shape();
  shape[0] = rows.size();
  std::vector<double> data;
  data.reserve(rows.size() * row);
  for (auto r : rows) {
    require(r < source.dim(0), ErrorKind::Input, "row index out of range");
    const auto begin = source.values().begin() + static_cast<std::ptrdiff_t>(r * row);
    data.insert(data.end(), begin, begin + static_cast<std::ptrdiff_t>(row));
  }
  return Tensor(std::move(shape), std::move(data));
}

double train(Network& net, const Tensor& images, std::span<const std::size_t> labels,
             SgdState& state, const TrainOptions& options) {
  const std::size_t n = images.dim(0);
  require(labels.size() == n && n > 0, ErrorKind::Input, "training set is empty or mislabeled");
  require(options.batch_size > 0, ErrorKind::Input, "batch size must be positive");
  std::vector<std::size_t> order(n);
  double last = 0.0;
  for (std::size_t e = 0; e < options.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(split_seed(options.seed, state.epoch_count));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < n; b += options.batch_size) {
      const std::size_t end = std::min(n, b + options.batch_size);
      std::span<const std::size_t> idx(order.data() + b, end - b);
      Tensor x = gather_rows(images, idx);
      Labels y;
      y.reserve(idx.size());
      for (auto k : idx) y.push_back(labels[k]);
      sum += backward_sgd(net, x, y, state);
      ++batches;
    }
    last = sum / static_cast<double>(batches);
    ++state.epoch_count;
  }
  return last;
}

void apply_mask(Layer& layer, const Mask& mask) {
  require(layer.weights.has_value(), ErrorKind::Input,
          "cannot mask " + layer.describe() + ": layer has no weights");
  require(mask.shape() == layer.weights->shape(), ErrorKind::Input,
          "mask shape " + shape_string(mask.shape()) + " does not match weights " +
              shape_string(layer.weights->shape()));
  auto w = layer.weights->values();
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!mask.kept(i)) w[i] = 0.0;
  layer.mask = mask;
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < logits.dim(1); ++j)
    if (logits.at(row, j) > logits.at(row, best)) best = j;
  return best;
}

double accuracy(const Network& net, const Tensor& images, std::span<const std::size_t> labels) {
  require(images.rank() >= 1 && images.dim(0) > 0, ErrorKind::Input, "empty dataset");
  const std::size_t n = images.dim(0);
  require(labels.size() == n, ErrorKind::Input, "label count does not match images");
  constexpr std::size_t chunk = 250;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t end = std::min(n, b + chunk);
    const Tensor logits = forward(net, images.slice_rows(b, end));
    for (std::size_t s = 0; s < end - b; ++s)
      if (argmax_row(logits, s) == labels[b + s]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace gcnet
