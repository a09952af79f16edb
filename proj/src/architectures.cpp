#include "gcnet/architectures.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "gcnet/error.hpp"

namespace gcnet {

std::string_view architecture_name(Architecture arch) {
  return arch == Architecture::MiniVGG ? "MiniVGG" : "MiniResNet";
}

Network mini_vgg(std::size_t channels, std::size_t side, std::size_t classes) {
  require(side >= 8 && side % 4 == 0, ErrorKind::Input,
          "MiniVGG needs an image side divisible by 4, got " + std::to_string(side));
  Network net;
  net.label = "MiniVGG";
  net.input_shape = {channels, side, side};
  net.layers = {Layer::conv2d(8, channels, 3, 1, 1),
                Layer::relu(),
                Layer::conv2d(16, 8, 3, 1, 1),
                Layer::relu(),
                Layer::avg_pool(2),
                Layer::conv2d(16, 16, 3, 1, 1),
                Layer::relu(),
                Layer::avg_pool(side / 4),
                Layer::flatten(),
                Layer::dense(32, 16 * 4),
                Layer::relu(),
                Layer::dense(classes, 32)};
  validate(net);
  return net;
}

Network mini_resnet(std::size_t channels, std::size_t side, std::size_t classes) {
  require(side >= 4 && side % 2 == 0, ErrorKind::Input,
          "MiniResNet needs an even image side, got " + std::to_string(side));
  Network net;
  net.label = "MiniResNet";
  net.input_shape = {channels, side, side};
  net.layers = {Layer::conv2d(8, channels, 3, 1, 1),
                Layer::relu(),
                Layer::conv2d(8, 8, 3, 1, 1),
                Layer::relu(),
                Layer::conv2d(8, 8, 3, 1, 1),
                Layer::relu(),
                Layer::avg_pool(side / 2),
                Layer::flatten(),
                Layer::dense(classes, 8 * 4)};
  net.skips = {SkipEdge{1, 5, std::nullopt}};
  validate(net);
  return net;
}

Network make_architecture(Architecture arch, std::size_t channels, std::size_t side,
                          std::size_t classes) {
  return arch == Architecture::MiniVGG ? mini_vgg(channels, side, classes)
                                       : mini_resnet(channels, side, classes);
}

namespace {

constexpr char kMagic[4] = {'G', 'C', 'W', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  const auto offset = static_cast<long long>(in.tellg());
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    fail(ErrorKind::Format, path.string() + ": truncated checkpoint at byte " +
                                std::to_string(offset));
  return v;
}

void write_tensor(std::ofstream& out, const Tensor& t) {
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

void read_tensor(std::ifstream& in, Tensor& t, const std::filesystem::path& path) {
  const auto rank = read_u32(in, path);
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(read_u32(in, path));
  if (shape != t.shape())
    fail(ErrorKind::Format, path.string() + ": checkpoint tensor " + shape_string(shape) +
                                " does not match network " + shape_string(t.shape()));
  const auto offset = static_cast<long long>(in.tellg());
  if (!in.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(double))))
    fail(ErrorKind::Format,
         path.string() + ": truncated checkpoint at byte " + std::to_string(offset));
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Input, "cannot write " + path.string());
  out.write(kMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    const std::uint32_t flags = (l.weights ? 1u : 0u) | (l.bias ? 2u : 0u);
    write_u32(out, flags);
    if (l.weights) write_tensor(out, *l.weights);
    if (l.bias) write_tensor(out, *l.bias);
  }
}

void load_checkpoint(Network& net, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Input, "cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorKind::Format, path.string() + ": bad checkpoint magic at byte 0");
  const auto count = read_u32(in, path);
  require(count == net.layers.size(), ErrorKind::Format,
          path.string() + ": checkpoint has " + std::to_string(count) + " layers, network has " +
              std::to_string(net.layers.size()));
  for (auto& l : net.layers) {
    const auto flags = read_u32(in, path);
    const std::uint32_t expected = (l.weights ? 1u : 0u) | (l.bias ? 2u : 0u);
    require(flags == expected, ErrorKind::Format,
            path.string() + ": layer parameter layout differs from network");
    if (l.weights) read_tensor(in, *l.weights, path);
    if (l.bias) read_tensor(in, *l.bias, path);
    l.mask.reset();
  }
}

}  // namespace gcnet
