#include "gcnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <vector>

#include "gcnet/error.hpp"
#include "gcnet/random.hpp"

namespace gcnet {

ImageDataset ImageDataset::head(std::size_t n) const {
  if (n >= size()) return *this;
  ImageDataset out;
  out.images = images.slice_rows(0, n);
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  out.class_count = class_count;
  out.split = split;
  return out;
}

namespace {

constexpr std::uint32_t kImages3 = 0x00000803;
constexpr std::uint32_t kImages4 = 0x00000804;
constexpr std::uint32_t kLabels = 0x00000801;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Input, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                   const std::filesystem::path& path) {
  if (offset + 4 > bytes.size())
    fail(ErrorKind::Format, path.string() + ": truncated header at byte " +
                                std::to_string(offset));
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

ImageDataset load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path, Split split) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);

  const std::uint32_t magic = be32(img, 0, images_path);
  if (magic != kImages3 && magic != kImages4)
    fail(ErrorKind::Format, images_path.string() + ": bad image magic at byte 0");
  const std::size_t dims = magic & 0xff;
  Shape shape;
  for (std::size_t d = 0; d < dims; ++d) shape.push_back(be32(img, 4 + 4 * d, images_path));
  if (dims == 3) shape.insert(shape.begin() + 1, 1);
  const std::size_t n = shape[0];
  require(n >= 1, ErrorKind::Input, images_path.string() + ": dataset has no images");
  for (auto d : shape)
    if (d == 0) fail(ErrorKind::Format, images_path.string() + ": zero dimension in header");
  const std::size_t header = 4 + 4 * dims;
  const std::size_t count = shape_size(shape);
  if (img.size() < header + count)
    fail(ErrorKind::Format, images_path.string() + ": truncated pixel data at byte " +
                                std::to_string(img.size()) + ", expected " +
                                std::to_string(header + count));

  if (be32(lab, 0, labels_path) != kLabels)
    fail(ErrorKind::Format, labels_path.string() + ": bad label magic at byte 0");
  const std::size_t nl = be32(lab, 4, labels_path);
  if (nl != n)
    fail(ErrorKind::Format, labels_path.string() + ": label count " + std::to_string(nl) +
                                " at byte 4 does not match " + std::to_string(n) + " images");
  if (lab.size() < 8 + n)
    fail(ErrorKind::Format, labels_path.string() + ": truncated label data at byte " +
                                std::to_string(lab.size()));

  ImageDataset ds;
  ds.split = split;
  std::vector<double> px(count);
  for (std::size_t i = 0; i < count; ++i) px[i] = static_cast<double>(img[header + i]) / 255.0;
  ds.images = Tensor(shape, std::move(px));
  ds.labels.resize(n);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.class_count = max_label + 1;
  return ds;
}

void save_idx(const ImageDataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
  require(ds.images.rank() == 4, ErrorKind::Input, "images must be [n,c,h,w]");
  require(ds.class_count <= 256, ErrorKind::Input, "IDX labels are single bytes");
  const auto& s = ds.images.shape();
  {
    std::ofstream out(images_path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Input, "cannot write " + images_path.string());
    if (s[1] == 1) {
      put_be32(out, kImages3);
      put_be32(out, static_cast<std::uint32_t>(s[0]));
      put_be32(out, static_cast<std::uint32_t>(s[2]));
      put_be32(out, static_cast<std::uint32_t>(s[3]));
    } else {
      put_be32(out, kImages4);
      for (auto d : s) put_be32(out, static_cast<std::uint32_t>(d));
    }
    std::vector<char> bytes(ds.images.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
      bytes[i] = static_cast<char>(
          static_cast<std::uint8_t>(std::lround(std::clamp(ds.images[i], 0.0, 1.0) * 255.0)));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::ofstream out(labels_path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Input, "cannot write " + labels_path.string());
  put_be32(out, kLabels);
  put_be32(out, static_cast<std::uint32_t>(ds.labels.size()));
  for (auto y : ds.labels) out.put(static_cast<char>(y));
}

ImageDataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t classes, std::size_t h,
                           std::size_t w, const SynthOptions& options, Split split) {
  require(classes >= 1 && n >= classes, ErrorKind::Input,
          "synthetic dataset needs n >= classes >= 1");
  require(h >= 4 && w >= 4 && options.channels >= 1, ErrorKind::Input,
          "synthetic images need at least 4x4 pixels");
  const std::size_t c = options.channels;
  ImageDataset ds;
  ds.split = split;
  ds.class_count = classes;
  ds.images = Tensor({n, c, h, w});
  ds.labels.resize(n);

  const double pi = std::numbers::pi;
  const double side = static_cast<double>(std::min(h, w));
  const double sigma = 0.12 * side;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t k = s % classes;
    ds.labels[s] = k;
    Rng rng(split_seed(seed, s));
    const double frac = static_cast<double>(k) / static_cast<double>(classes);
    const double angle = 2.0 * pi * frac;
    const double cx = 0.5 * (static_cast<double>(w) - 1.0) + 0.28 * side * std::cos(angle) +
                      rng.uniform(-0.75, 0.75);
    const double cy = 0.5 * (static_cast<double>(h) - 1.0) + 0.28 * side * std::sin(angle) +
                      rng.uniform(-0.75, 0.75);
    const double amp = rng.uniform(0.5, 0.7);
    const double theta = pi * frac;
    const double phase = rng.uniform(0.0, 2.0 * pi);
    const double freq = 2.0 * pi * 2.0 / side;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double tint =
          c == 1 ? 1.0
                 : 0.6 + 0.4 * std::cos(2.0 * pi * (frac + static_cast<double>(ch) / c));
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          const double blob = amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          const double t = static_cast<double>(x) * std::cos(theta) +
                           static_cast<double>(y) * std::sin(theta);
          const double stripe = 0.2 * (0.5 + 0.5 * std::cos(freq * t + phase));
          const double v = 0.1 + tint * (blob + stripe) + rng.normal(0.0, options.noise_sigma);
          ds.images.at(s, ch, y, x) = std::clamp(v, 0.0, 1.0);
        }
    }
  }
  return ds;
}

}  // namespace gcnet
