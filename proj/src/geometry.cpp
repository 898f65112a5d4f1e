#include "tog/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tog {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEps = 1e-9;

double shoelace(const std::vector<Vec2>& poly) {
  double s = 0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

double cross(Vec2 o, Vec2 a, Vec2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

Vec2 line_intersect(Vec2 a, Vec2 b, Vec2 p, Vec2 q) {
  double a1 = b.y - a.y, b1 = a.x - b.x, c1 = a1 * a.x + b1 * a.y;
  double a2 = q.y - p.y, b2 = p.x - q.x, c2 = a2 * p.x + b2 * p.y;
  double det = a1 * b2 - a2 * b1;
  return {(b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det};
}

// Clips `subject` against the half-plane left of edge (a, b) of a CCW clip
// polygon. Points exactly on the edge are kept.
std::vector<Vec2> clip_edge(const std::vector<Vec2>& subject, Vec2 a, Vec2 b) {
  std::vector<Vec2> out;
  for (size_t i = 0; i < subject.size(); ++i) {
    Vec2 cur = subject[i];
    Vec2 prev = subject[(i + subject.size() - 1) % subject.size()];
    bool cur_in = cross(a, b, cur) >= -kEps;
    bool prev_in = cross(a, b, prev) >= -kEps;
    if (cur_in) {
      if (!prev_in) out.push_back(line_intersect(a, b, prev, cur));
      out.push_back(cur);
    } else if (prev_in) {
      out.push_back(line_intersect(a, b, prev, cur));
    }
  }
  return out;
}

std::vector<Vec2> ccw(std::array<Vec2, 4> corners) {
  std::vector<Vec2> poly(corners.begin(), corners.end());
  if (shoelace(poly) < 0) std::reverse(poly.begin(), poly.end());
  return poly;
}

}  // namespace

void validate_grasp(const GraspRect& g) {
  if (!(g.w > 0) || !(g.h > 0))
    fail(Errc::InvariantViolation, "grasp extents must be positive");
  if (!(g.theta >= -90.0 && g.theta <= 90.0))
    fail(Errc::InvariantViolation, "grasp theta outside [-90, 90]");
  if (g.confidence && !(*g.confidence >= 0.0 && *g.confidence <= 1.0))
    fail(Errc::InvariantViolation, "grasp confidence outside [0, 1]");
}

double wrap_theta(double theta) {
  double t = std::fmod(theta, 180.0);
  if (t > 90.0) t -= 180.0;
  if (t <= -90.0) t += 180.0;
  return t;
}

std::array<Vec2, 4> rect_corners(const GraspRect& g) {
  double rad = g.theta * kPi / 180.0;
  double c = std::cos(rad), s = std::sin(rad);
  Vec2 dw{c * g.w / 2, s * g.w / 2};    // along theta
  Vec2 dh{-s * g.h / 2, c * g.h / 2};   // perpendicular
  return {Vec2{g.x + dw.x + dh.x, g.y + dw.y + dh.y},
          Vec2{g.x - dw.x + dh.x, g.y - dw.y + dh.y},
          Vec2{g.x - dw.x - dh.x, g.y - dw.y - dh.y},
          Vec2{g.x + dw.x - dh.x, g.y + dw.y - dh.y}};
}

double rotated_iou(const GraspRect& a, const GraspRect& b) {
  std::vector<Vec2> pa = ccw(rect_corners(a));
  std::vector<Vec2> pb = ccw(rect_corners(b));
  std::vector<Vec2> inter = pa;
  for (size_t i = 0; i < pb.size() && !inter.empty(); ++i)
    inter = clip_edge(inter, pb[i], pb[(i + 1) % pb.size()]);
  if (inter.size() < 3) return 0.0;
  double ai = shoelace(inter);
  double aa = shoelace(pa), ab = shoelace(pb);
  double uni = aa + ab - ai;
  if (uni <= 0) return 0.0;
  return std::clamp(ai / uni, 0.0, 1.0);
}

double angle_diff(double a_deg, double b_deg) {
  if (a_deg < -90.0 || a_deg > 90.0 || b_deg < -90.0 || b_deg > 90.0)
    fail(Errc::InvariantViolation, "angles must lie in [-90, 90]");
  double d = std::abs(a_deg - b_deg);
  return std::min(d, 180.0 - d);
}

CropTransform make_crop_transform(int x0, int y0, int x1, int y1, int target) {
  if (x1 <= x0 || y1 <= y0 || target <= 0)
    fail(Errc::DegenerateBox, "empty crop box");
  CropTransform t;
  t.x0 = x0;
  t.y0 = y0;
  t.src_w = x1 - x0;
  t.src_h = y1 - y0;
  t.target = target;
  t.scale = static_cast<double>(target) / std::max(t.src_w, t.src_h);
  t.pad_x = (target - t.src_w * t.scale) / 2.0;
  t.pad_y = (target - t.src_h * t.scale) / 2.0;
  return t;
}

CropTransform make_crop_transform(const Bounds& b, int target) {
  return make_crop_transform(b.x0, b.y0, b.x1 + 1, b.y1 + 1, target);
}

BinaryMask crop_mask(const BinaryMask& full, const CropTransform& t) {
  BinaryMask out(t.target, t.target);
  for (int y = 0; y < t.target; ++y) {
    double sy = (y + 0.5 - t.pad_y) / t.scale;
    int fy = t.y0 + static_cast<int>(std::floor(sy));
    if (sy < 0 || fy < t.y0 || fy >= t.y0 + t.src_h || fy >= full.height) continue;
    for (int x = 0; x < t.target; ++x) {
      double sx = (x + 0.5 - t.pad_x) / t.scale;
      int fx = t.x0 + static_cast<int>(std::floor(sx));
      if (sx < 0 || fx < t.x0 || fx >= t.x0 + t.src_w || fx >= full.width) continue;
      if (fy >= 0 && fx >= 0 && full.at(fx, fy)) out.set(x, y);
    }
  }
  return out;
}

ImageU8 crop_image(const ImageU8& full, const CropTransform& t) {
  ImageU8 out(t.target, t.target, full.channels);
  for (int y = 0; y < t.target; ++y) {
    // Pixel centers at integer coordinates for bilinear sampling.
    double sy = (y + 0.5 - t.pad_y) / t.scale + t.y0 - 0.5;
    for (int x = 0; x < t.target; ++x) {
      double sx = (x + 0.5 - t.pad_x) / t.scale + t.x0 - 0.5;
      // Outside the source box stays zero padding.
      if (sx < t.x0 - 0.5 || sx > t.x0 + t.src_w - 0.5 ||
          sy < t.y0 - 0.5 || sy > t.y0 + t.src_h - 0.5)
        continue;
      for (int c = 0; c < full.channels; ++c) {
        double v = sample_bilinear(full, sx, sy, c);
        out.at(x, y, c) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

BinaryMask uncrop_mask(const BinaryMask& crop, const CropTransform& t,
                       int full_w, int full_h) {
  if (crop.width != t.target || crop.height != t.target)
    fail(Errc::ShapeMismatch, "crop does not match transform target");
  BinaryMask out(full_w, full_h);
  int px1 = std::min(t.x0 + t.src_w, full_w);
  int py1 = std::min(t.y0 + t.src_h, full_h);
  for (int y = std::max(t.y0, 0); y < py1; ++y) {
    int cy = static_cast<int>(std::floor((y - t.y0 + 0.5) * t.scale + t.pad_y));
    if (cy < 0 || cy >= t.target) continue;
    for (int x = std::max(t.x0, 0); x < px1; ++x) {
      int cx = static_cast<int>(std::floor((x - t.x0 + 0.5) * t.scale + t.pad_x));
      if (cx < 0 || cx >= t.target) continue;
      if (crop.at(cx, cy)) out.set(x, y);
    }
  }
  return out;
}

namespace {

// Exact axis-swap paths keep repeated quarter turns lossless.
template <typename Raster, typename CopyPx>
Raster rotate_exact(const Raster& in, int quarter_turns, CopyPx copy_px) {
  int n = in.width;
  Raster out = in;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      int sx, sy;
      switch (quarter_turns) {
        case 1: sx = y; sy = n - 1 - x; break;           // 90 degrees
        case 2: sx = n - 1 - x; sy = n - 1 - y; break;   // 180 degrees
        default: sx = n - 1 - y; sy = x; break;          // 270 degrees
      }
      copy_px(out, x, y, in, sx, sy);
    }
  return out;
}

int normalize_degrees(int degrees) {
  int d = degrees % 360;
  if (d < 0) d += 360;
  return d;
}

}  // namespace

BinaryMask rotate_crop(const BinaryMask& crop, int degrees) {
  if (crop.width != crop.height) fail(Errc::NonSquareCrop, "mask crop not square");
  int d = normalize_degrees(degrees);
  if (d == 0) return crop;
  if (d % 90 == 0)
    return rotate_exact(crop, d / 90,
                        [](BinaryMask& o, int x, int y, const BinaryMask& i,
                           int sx, int sy) { o.set(x, y, i.at(sx, sy)); });
  int n = crop.width;
  double c = (n - 1) / 2.0;
  double rad = d * kPi / 180.0;
  double cs = std::cos(rad), sn = std::sin(rad);
  BinaryMask out(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      // Inverse rotation of the destination pixel into the source frame.
      double dx = x - c, dy = y - c;
      double sx = c + cs * dx + sn * dy;
      double sy = c - sn * dx + cs * dy;
      int ix = static_cast<int>(std::lround(sx));
      int iy = static_cast<int>(std::lround(sy));
      if (ix >= 0 && iy >= 0 && ix < n && iy < n && crop.at(ix, iy))
        out.set(x, y);
    }
  return out;
}

ImageU8 rotate_crop(const ImageU8& crop, int degrees) {
  if (crop.width != crop.height) fail(Errc::NonSquareCrop, "image crop not square");
  int d = normalize_degrees(degrees);
  if (d == 0) return crop;
  if (d % 90 == 0)
    return rotate_exact(crop, d / 90,
                        [](ImageU8& o, int x, int y, const ImageU8& i, int sx,
                           int sy) {
                          for (int ch = 0; ch < i.channels; ++ch)
                            o.at(x, y, ch) = i.at(sx, sy, ch);
                        });
  int n = crop.width;
  double c = (n - 1) / 2.0;
  double rad = d * kPi / 180.0;
  double cs = std::cos(rad), sn = std::sin(rad);
  ImageU8 out(n, n, crop.channels);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double dx = x - c, dy = y - c;
      double sx = c + cs * dx + sn * dy;
      double sy = c - sn * dx + cs * dy;
      if (sx < -0.5 || sy < -0.5 || sx > n - 0.5 || sy > n - 0.5) continue;
      for (int ch = 0; ch < crop.channels; ++ch) {
        double v = sample_bilinear(crop, sx, sy, ch);
        out.at(x, y, ch) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  return out;
}

}  // namespace tog
