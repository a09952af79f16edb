#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "gcnet/nn.hpp"
#include "gcnet/tensor.hpp"

namespace gcnet {

enum class Split { Train, Test };

// Images [n, c, h, w] in [0, 1] with integer labels.
struct ImageDataset {
  Tensor images;
  Labels labels;
  std::size_t class_count = 0;
  Split split = Split::Train;

  std::size_t size() const { return labels.size(); }
  // First `n` samples (all when n >= size()).
  ImageDataset head(std::size_t n) const;
};

// IDX files: big-endian magic 0x00000803 (u8 images n*rows*cols) or
// 0x00000804 (n*c*rows*cols) and 0x00000801 (u8 labels). Pixels are scaled
// by 1/255.
ImageDataset load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path, Split split = Split::Train);
void save_idx(const ImageDataset& ds, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

struct SynthOptions {
  std::size_t channels = 1;
  double noise_sigma = 0.05;
};

// Class-conditional blob + oriented stripe patterns with seeded jitter and
// pixel noise. Sample i has label i % classes.
ImageDataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t classes, std::size_t h,
                           std::size_t w, const SynthOptions& options = {},
                           Split split = Split::Train);

}  // namespace gcnet
