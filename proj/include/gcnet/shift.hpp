#pragma once

// Synthetic distribution shifts applied to a clean dataset.

#include <cstdint>
#include <string_view>

#include "gcnet/data.hpp"

namespace gcnet {

enum class ShiftKind { CJG, RNB, LO };

std::string_view shift_name(ShiftKind kind);

// Color jitter + geometry.
struct CjgParams {
  double brightness = 0.3;     // additive offset drawn from [-b, b]
  double contrast_lo = 0.7;    // contrast factor range around the image mean
  double contrast_hi = 1.3;
  double rotation_deg = 20.0;  // angle drawn from [-r, r], nearest neighbour
  double translate = 0.1;      // integer shift up to floor(t * side) pixels
};

// Random noise + blur.
struct RnbParams {
  double noise_sigma = 0.08;
  std::size_t blur_kernel = 3;  // odd box-filter side; 1 disables blur
};

// Lighting + occlusion.
struct LoParams {
  double brightness = 0.3;
  double patch_fraction = 0.3;  // patch side as a fraction of the image side
};

struct ShiftSpec {
  ShiftKind kind = ShiftKind::CJG;
  std::uint64_t seed = 0;
  CjgParams cjg;
  RnbParams rnb;
  LoParams lo;
};

void validate(const ShiftSpec& spec);

// Pure function of (dataset, spec): image i draws its randomness from a
// stream seeded by (spec.seed, i). Labels are unchanged; pixels clamped to
// [0, 1].
ImageDataset apply_shift(const ImageDataset& ds, const ShiftSpec& spec);

}  // namespace gcnet
