#include "tog/maskops.hpp"

#include <algorithm>
#include <cmath>

namespace tog {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) fail(Errc::ShapeMismatch, "mask shapes differ");
}

// Fills one ring into `out` (even-odd parity against pixel centers).
void fill_ring(const std::vector<Vec2>& ring, BinaryMask& out) {
  if (ring.size() < 3) fail(Errc::MalformedPolygon, "ring needs >= 3 vertices");
  std::vector<double> xs;
  for (int y = 0; y < out.height; ++y) {
    const double py = y + 0.5;
    xs.clear();
    for (size_t i = 0; i < ring.size(); ++i) {
      const Vec2& a = ring[i];
      const Vec2& b = ring[(i + 1) % ring.size()];
      if (a.y == b.y) continue;  // horizontal edges never cross a scanline
      // Half-open rule [min, max) so shared vertices count once.
      if ((py >= a.y && py < b.y) || (py >= b.y && py < a.y)) {
        xs.push_back(a.x + (py - a.y) / (b.y - a.y) * (b.x - a.x));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); i += 2) {
      // Pixel centers x+0.5 strictly inside (xs[i], xs[i+1]).
      int first = static_cast<int>(std::ceil(xs[i] - 0.5));
      int last = static_cast<int>(std::floor(xs[i + 1] - 0.5));
      // Centers exactly on the right boundary stay outside (half-open span).
      if (last + 0.5 >= xs[i + 1]) --last;
      first = std::max(first, 0);
      last = std::min(last, out.width - 1);
      for (int x = first; x <= last; ++x) out.set(x, y);
    }
  }
}

}  // namespace

int64_t mask_area(const BinaryMask& m) {
  int64_t n = 0;
  for (uint8_t b : m.bits) n += b;
  return n;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  BinaryMask out(a.width, a.height);
  for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] & b.bits[i];
  return out;
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  BinaryMask out(a.width, a.height);
  for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] | b.bits[i];
  return out;
}

BinaryMask mask_sub(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  BinaryMask out(a.width, a.height);
  for (size_t i = 0; i < a.bits.size(); ++i)
    out.bits[i] = a.bits[i] & static_cast<uint8_t>(!b.bits[i]);
  return out;
}

int64_t mask_intersection_area(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  int64_t n = 0;
  for (size_t i = 0; i < a.bits.size(); ++i) n += a.bits[i] & b.bits[i];
  return n;
}

double overlap_ratio(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  int64_t area_a = mask_area(a);
  if (area_a == 0) fail(Errc::EmptyFirstOperand, "overlap_ratio over empty mask");
  return static_cast<double>(mask_intersection_area(a, b)) /
         static_cast<double>(area_a);
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  int64_t inter = mask_intersection_area(a, b);
  int64_t uni = mask_area(a) + mask_area(b) - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Bounds mask_bbox(const BinaryMask& m) {
  Bounds b{m.width, m.height, -1, -1};
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  if (b.x1 < 0) fail(Errc::EmptyMask, "bbox of empty mask");
  return b;
}

Vec2 mask_centroid(const BinaryMask& m) {
  int64_t n = 0;
  double sx = 0, sy = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        sx += x;
        sy += y;
        ++n;
      }
  if (n == 0) fail(Errc::EmptyMask, "centroid of empty mask");
  return {sx / n, sy / n};
}

BinaryMask rasterize(const PolygonRegion& region, int width, int height) {
  if (width <= 0 || height <= 0) fail(Errc::MalformedPolygon, "bad raster size");
  BinaryMask out(width, height);
  for (const auto& ring : region.outers) {
    BinaryMask one(width, height);
    fill_ring(ring, one);
    out = mask_or(out, one);
  }
  for (const auto& ring : region.holes) {
    BinaryMask one(width, height);
    fill_ring(ring, one);
    out = mask_sub(out, one);
  }
  return out;
}

BinaryMask translate_mask(const BinaryMask& m, int dx, int dy) {
  BinaryMask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        int nx = x + dx, ny = y + dy;
        if (out.in_bounds(nx, ny)) out.set(nx, ny);
      }
  return out;
}

}  // namespace tog
