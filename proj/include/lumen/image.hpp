#pragma once

#include "lumen/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lumen {

/// 3-channel raster, channel-planar, values in [0, 1].
struct RgbImage {
  Index height = 0;
  Index width = 0;
  std::vector<float> pixels;  // 3 * height * width

  RgbImage() = default;
  RgbImage(Index h, Index w, float fill = 0.f) : height(h), width(w), pixels(static_cast<std::size_t>(3 * h * w), fill) {}

  float& at(Index c, Index y, Index x) { return pixels[static_cast<std::size_t>((c * height + y) * width + x)]; }
  float at(Index c, Index y, Index x) const { return pixels[static_cast<std::size_t>((c * height + y) * width + x)]; }

  bool operator==(const RgbImage&) const = default;
};

/// Binary per-pixel grid; 1 marks a missed-surface pixel.
struct MissedMask {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> bits;

  MissedMask() = default;
  MissedMask(Index h, Index w) : height(h), width(w), bits(static_cast<std::size_t>(h * w), 0) {}

  std::uint8_t& at(Index y, Index x) { return bits[static_cast<std::size_t>(y * width + x)]; }
  std::uint8_t at(Index y, Index x) const { return bits[static_cast<std::size_t>(y * width + x)]; }
  Index count() const {
    Index n = 0;
    for (auto b : bits) n += b ? 1 : 0;
    return n;
  }

  bool operator==(const MissedMask&) const = default;
};

/// Rounds to the 8-bit grid, as a PNG round trip would.
RgbImage quantize(const RgbImage& image);

/// [0, 1] raster -> (1, 3, H, W) tensor in [-1, 1].
template <typename Scalar>
Tensor<Scalar> to_tensor(const RgbImage& image) {
  Tensor<Scalar> t(Shape{1, 3, image.height, image.width});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) t.data()[i] = static_cast<Scalar>(image.pixels[i] * 2.0 - 1.0);
  return t;
}

/// Sample `n` of a (N, 3, H, W) tensor in [-1, 1] -> [0, 1] raster (clamped).
template <typename Scalar>
RgbImage from_tensor(const Tensor<Scalar>& t, Index n = 0) {
  const Shape s = t.shape();
  if (s.c != 3) throw ConfigError("from_tensor: expected 3 channels, got " + s.str());
  RgbImage out(s.h, s.w);
  const Scalar* src = t.data() + n * s.sample();
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double v = (static_cast<double>(src[i]) + 1.0) * 0.5;
    out.pixels[i] = static_cast<float>(v < 0 ? 0 : (v > 1 ? 1 : v));
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const MissedMask& mask);
RgbImage read_png_rgb(const std::filesystem::path& path);
/// Any nonzero gray value reads as 1.
MissedMask read_png_mask(const std::filesystem::path& path);

}  // namespace lumen
