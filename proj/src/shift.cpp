#include "gcnet/shift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "gcnet/error.hpp"
#include "gcnet/random.hpp"

namespace gcnet {

std::string_view shift_name(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::CJG: return "cjg";
    case ShiftKind::RNB: return "rnb";
    case ShiftKind::LO: return "lo";
  }
  return "?";
}

void validate(const ShiftSpec& spec) {
  const auto& c = spec.cjg;
  require(c.brightness >= 0.0 && c.contrast_lo > 0.0 && c.contrast_lo <= c.contrast_hi &&
              c.rotation_deg >= 0.0 && c.translate >= 0.0 && c.translate < 1.0,
          ErrorKind::Input, "invalid CJG shift parameters");
  require(spec.rnb.noise_sigma >= 0.0 && spec.rnb.blur_kernel % 2 == 1, ErrorKind::Input,
          "RNB needs sigma >= 0 and an odd blur kernel");
  require(spec.lo.brightness >= 0.0 && spec.lo.patch_fraction >= 0.0, ErrorKind::Input,
          "invalid LO shift parameters");
  require(spec.lo.patch_fraction <= 1.0, ErrorKind::Input, "occlusion patch larger than image");
}

namespace {

void cjg(std::span<double> img, std::size_t c, std::size_t h, std::size_t w,
         const CjgParams& p, Rng& rng) {
  const std::size_t hw = h * w;
  // Brightness per channel (colour jitter); grayscale gets a single draw.
  std::vector<double> offset(c);
  for (auto& o : offset) o = rng.uniform(-p.brightness, p.brightness);
  const double contrast = rng.uniform(p.contrast_lo, p.contrast_hi);
  const double angle = rng.uniform(-p.rotation_deg, p.rotation_deg) * std::numbers::pi / 180.0;
  const long max_shift =
      static_cast<long>(std::floor(p.translate * static_cast<double>(std::min(h, w))));
  const long tx = static_cast<long>(rng.below(static_cast<std::uint64_t>(2 * max_shift + 1))) - max_shift;
  const long ty = static_cast<long>(rng.below(static_cast<std::uint64_t>(2 * max_shift + 1))) - max_shift;

  double mean = 0.0;
  for (double v : img) mean += v;
  mean /= static_cast<double>(img.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t k = 0; k < hw; ++k) {
      double& v = img[ch * hw + k];
      v = std::clamp((v - mean) * contrast + mean + offset[ch], 0.0, 1.0);
    }

  // Inverse map each output pixel: undo translation, then rotation about
  // the image centre; nearest neighbour, zero outside.
  const double cy = 0.5 * (static_cast<double>(h) - 1.0), cx = 0.5 * (static_cast<double>(w) - 1.0);
  const double cs = std::cos(angle), sn = std::sin(angle);
  std::vector<double> src(img.begin(), img.end());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double dy = static_cast<double>(static_cast<long>(y) - ty) - cy;
      const double dx = static_cast<double>(static_cast<long>(x) - tx) - cx;
      const long sx = std::lround(cs * dx + sn * dy + cx);
      const long sy = std::lround(-sn * dx + cs * dy + cy);
      const bool inside = sx >= 0 && sy >= 0 && sx < static_cast<long>(w) && sy < static_cast<long>(h);
      for (std::size_t ch = 0; ch < c; ++ch)
        img[ch * hw + y * w + x] =
            inside ? src[ch * hw + static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)]
                   : 0.0;
    }
}

void rnb(std::span<double> img, std::size_t c, std::size_t h, std::size_t w,
         const RnbParams& p, Rng& rng) {
  if (p.noise_sigma > 0.0)
    for (double& v : img) v += rng.normal(0.0, p.noise_sigma);
  if (p.blur_kernel > 1) {
    // Box filter averaging the in-bounds neighbours.
    const long r = static_cast<long>(p.blur_kernel / 2);
    std::vector<double> src(img.begin(), img.end());
    for (std::size_t ch = 0; ch < c; ++ch)
      for (long y = 0; y < static_cast<long>(h); ++y)
        for (long x = 0; x < static_cast<long>(w); ++x) {
          double acc = 0.0;
          int count = 0;
          for (long yy = std::max(0L, y - r); yy <= std::min<long>(h - 1, y + r); ++yy)
            for (long xx = std::max(0L, x - r); xx <= std::min<long>(w - 1, x + r); ++xx) {
              acc += src[(ch * h + static_cast<std::size_t>(yy)) * w + static_cast<std::size_t>(xx)];
              ++count;
            }
          img[(ch * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)] = acc / count;
        }
  }
  for (double& v : img) v = std::clamp(v, 0.0, 1.0);
}

void lo(std::span<double> img, std::size_t c, std::size_t h, std::size_t w, const LoParams& p,
        Rng& rng) {
  const double offset = rng.uniform(-p.brightness, p.brightness);
  for (double& v : img) v = std::clamp(v + offset, 0.0, 1.0);
  const auto ph = static_cast<std::size_t>(std::lround(p.patch_fraction * static_cast<double>(h)));
  const auto pw = static_cast<std::size_t>(std::lround(p.patch_fraction * static_cast<double>(w)));
  const std::size_t y0 = rng.below(h - ph + 1), x0 = rng.below(w - pw + 1);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = y0; y < y0 + ph; ++y)
      std::fill_n(img.begin() + static_cast<std::ptrdiff_t>((ch * h + y) * w + x0), pw, 0.0);
}

}  // namespace

ImageDataset apply_shift(const ImageDataset& ds, const ShiftSpec& spec) {
  validate(spec);
  require(ds.images.rank() == 4, ErrorKind::Input, "images must be [n,c,h,w]");
  ImageDataset out = ds;
  const std::size_t n = ds.images.dim(0), c = ds.images.dim(1), h = ds.images.dim(2),
                    w = ds.images.dim(3);
  const std::size_t stride = c * h * w;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(split_seed(spec.seed, i));
    std::span<double> img(out.images.data() + i * stride, stride);
    switch (spec.kind) {
      case ShiftKind::CJG: cjg(img, c, h, w, spec.cjg, rng); break;
      case ShiftKind::RNB: rnb(img, c, h, w, spec.rnb, rng); break;
      case ShiftKind::LO: lo(img, c, h, w, spec.lo, rng); break;
    }
  }
  return out;
}

}  // namespace gcnet
