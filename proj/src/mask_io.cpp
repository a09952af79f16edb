#include "gcnet/mask_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "gcnet/error.hpp"

namespace gcnet {

namespace {

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t le32(const std::vector<std::uint8_t>& b, std::size_t offset,
                   const std::filesystem::path& path) {
  if (offset + 4 > b.size())
    fail(ErrorKind::Format, path.string() + ": truncated mask header at byte " +
                                std::to_string(offset));
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= std::uint32_t{b[offset + k]} << (8 * k);
  return v;
}

}  // namespace

void write_mask(const Mask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = {'G', 'C', 'M', 'K'};
  put_le32(bytes, static_cast<std::uint32_t>(mask.shape().size()));
  for (auto d : mask.shape()) put_le32(bytes, static_cast<std::uint32_t>(d));
  const std::size_t header = bytes.size();
  bytes.resize(header + (mask.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask.kept(k)) bytes[header + k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Input, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Mask read_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Input, "cannot open " + path.string());
  const std::vector<std::uint8_t> b{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
  if (b.size() < 4 || std::memcmp(b.data(), "GCMK", 4) != 0)
    fail(ErrorKind::Format, path.string() + ": bad mask magic at byte 0");
  const std::uint32_t rank = le32(b, 4, path);
  Shape shape;
  for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(le32(b, 8 + 4 * d, path));
  const std::size_t header = 8 + 4 * rank;
  const std::size_t n = shape_size(shape);
  if (b.size() < header + (n + 7) / 8)
    fail(ErrorKind::Format, path.string() + ": truncated mask bits at byte " +
                                std::to_string(b.size()));
  std::vector<std::uint8_t> keep(n);
  for (std::size_t k = 0; k < n; ++k) keep[k] = (b[header + k / 8] >> (k % 8)) & 1u;
  return Mask(std::move(shape), std::move(keep));
}

}  // namespace gcnet
