#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>

#include "gcnet/nn.hpp"

namespace gcnet {

enum class Architecture { MiniVGG, MiniResNet };

std::string_view architecture_name(Architecture arch);

// Conv(8)-ReLU-Conv(16)-ReLU-AvgPool(2)-Conv(16)-ReLU-AvgPool(to 2x2)-Flatten
// -Dense(32)-ReLU-Dense(classes). `side` must be divisible by 4.
Network mini_vgg(std::size_t channels, std::size_t side, std::size_t classes);

// Conv(8)-ReLU-[Conv(8)-ReLU-Conv(8) + identity skip]-ReLU-AvgPool(to 2x2)
// -Flatten-Dense(classes). `side` must be even.
Network mini_resnet(std::size_t channels, std::size_t side, std::size_t classes);

Network make_architecture(Architecture arch, std::size_t channels, std::size_t side,
                          std::size_t classes);

// Weight checkpoints: raw little-endian doubles for every weighted layer,
// with shapes recorded for validation on load.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
void load_checkpoint(Network& net, const std::filesystem::path& path);

}  // namespace gcnet
