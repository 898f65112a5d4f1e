#pragma once

#include <cstdint>
#include <vector>

#include "tog/error.hpp"

namespace tog {

// Dense row-major binary mask; one byte per pixel (0 or 1).
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h, uint8_t fill = 0)
      : width(w), height(h), bits(static_cast<size_t>(w) * h, fill) {}

  uint8_t at(int x, int y) const {
    return bits[static_cast<size_t>(y) * width + x];
  }
  void set(int x, int y, uint8_t v = 1) {
    bits[static_cast<size_t>(y) * width + x] = v;
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  bool same_shape(const BinaryMask& o) const {
    return width == o.width && height == o.height;
  }
  bool operator==(const BinaryMask& o) const = default;
};

// Polygon region: outer rings fill, hole rings clear. Each ring is a closed
// loop given as vertices (last edge implicit back to the first vertex).
struct Vec2 {
  double x = 0;
  double y = 0;
};

struct PolygonRegion {
  std::vector<std::vector<Vec2>> outers;
  std::vector<std::vector<Vec2>> holes;
};

int64_t mask_area(const BinaryMask& m);
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_sub(const BinaryMask& a, const BinaryMask& b);
int64_t mask_intersection_area(const BinaryMask& a, const BinaryMask& b);

// |a AND b| / |a|. Errors with EmptyFirstOperand when |a| == 0.
double overlap_ratio(const BinaryMask& a, const BinaryMask& b);

// |a AND b| / |a OR b|; both empty -> 0 by convention.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Inclusive bounds of set bits.
struct Bounds {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool operator==(const Bounds&) const = default;
};

// Errors with EmptyMask on an all-zero mask.
Bounds mask_bbox(const BinaryMask& m);

// Mean of set-bit integer coordinates. Errors with EmptyMask when empty.
Vec2 mask_centroid(const BinaryMask& m);

// Even-odd scanline fill against pixel centers (x+0.5, y+0.5): a pixel is set
// when its center is inside any outer ring and not inside any hole ring.
// Rings with fewer than 3 vertices -> MalformedPolygon.
BinaryMask rasterize(const PolygonRegion& region, int width, int height);

// Shift by (dx, dy); bits leaving the frame are dropped, entering area is 0.
BinaryMask translate_mask(const BinaryMask& m, int dx, int dy);

}  // namespace tog
