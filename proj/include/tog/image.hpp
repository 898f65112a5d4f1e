#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tog {

// Dense 8-bit raster, row-major, interleaved channels.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> data;

  ImageU8() = default;
  ImageU8(int w, int h, int c, uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  bool same_shape(const ImageU8& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool operator==(const ImageU8& o) const = default;
};

// PPM (P6) / PGM (P5). The only raster formats the dataset layer reads.
ImageU8 load_image(const std::filesystem::path& path);
void save_ppm(const ImageU8& img, const std::filesystem::path& path);

// Minimal PNG writer (8-bit gray or RGB) used for trace overlays.
void save_png(const ImageU8& img, const std::filesystem::path& path);

// Bilinear sample with pixel centers at integer coordinates; zero outside.
double sample_bilinear(const ImageU8& img, double x, double y, int c);

}  // namespace tog
