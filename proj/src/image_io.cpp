#include "lumen/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace lumen {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(float v) {
  const float c = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return static_cast<std::uint8_t>(std::lround(c * 255.f));
}

void write_rows(const std::filesystem::path& path, Index width, Index height, int color_type,
                const std::vector<std::uint8_t>& interleaved) {
  File file(std::fopen(path.c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const Index stride = static_cast<Index>(interleaved.size()) / height;
  for (Index y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(interleaved.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct Decoded {
  Index width = 0;
  Index height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

Decoded read_any(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw std::runtime_error("cannot read " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw std::runtime_error("not a PNG file: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Decoded out;
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.data.resize(stride * static_cast<std::size_t>(out.height));
  for (Index y = 0; y < out.height; ++y) png_read_row(png, out.data.data() + y * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

RgbImage quantize(const RgbImage& image) {
  RgbImage out = image;
  for (auto& v : out.pixels) v = static_cast<float>(to_byte(v)) / 255.f;
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(3 * image.height * image.width));
  for (Index y = 0; y < image.height; ++y)
    for (Index x = 0; x < image.width; ++x)
      for (Index c = 0; c < 3; ++c) buf[static_cast<std::size_t>((y * image.width + x) * 3 + c)] = to_byte(image.at(c, y, x));
  write_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, buf);
}

void write_png(const std::filesystem::path& path, const MissedMask& mask) {
  std::vector<std::uint8_t> buf(mask.bits.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask.bits[i] ? 255 : 0;
  write_rows(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, buf);
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  const Decoded d = read_any(path);
  RgbImage out(d.height, d.width);
  for (Index y = 0; y < d.height; ++y)
    for (Index x = 0; x < d.width; ++x)
      for (Index c = 0; c < 3; ++c) {
        const Index src_c = d.channels >= 3 ? c : 0;
        out.at(c, y, x) = d.data[static_cast<std::size_t>((y * d.width + x) * d.channels + src_c)] / 255.f;
      }
  return out;
}

MissedMask read_png_mask(const std::filesystem::path& path) {
  const Decoded d = read_any(path);
  MissedMask out(d.height, d.width);
  for (Index y = 0; y < d.height; ++y)
    for (Index x = 0; x < d.width; ++x)
      out.at(y, x) = d.data[static_cast<std::size_t>((y * d.width + x) * d.channels)] != 0 ? 1 : 0;
  return out;
}

}  // namespace lumen
