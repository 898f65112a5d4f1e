#include <algorithm>
#include <cmath>

#include "tog/dataset.hpp"

namespace tog {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Similarity {
  double cos = 1, sin = 0, scale = 1;
  Vec2 src_center, dst_center;

  Vec2 forward(Vec2 p) const {
    double dx = (p.x - src_center.x) * scale;
    double dy = (p.y - src_center.y) * scale;
    return {dst_center.x + cos * dx - sin * dy,
            dst_center.y + sin * dx + cos * dy};
  }
  Vec2 inverse(Vec2 p) const {
    double dx = (p.x - dst_center.x) / scale;
    double dy = (p.y - dst_center.y) / scale;
    return {src_center.x + cos * dx + sin * dy,
            src_center.y - sin * dx + cos * dy};
  }
};

// Resamples `src` through the similarity into a dst-frame mask
// (nearest-neighbor, zero outside).
BinaryMask transform_mask(const BinaryMask& src, const Similarity& t,
                          int dst_w, int dst_h) {
  BinaryMask out(dst_w, dst_h);
  // Restrict the destination sweep to the transformed source bbox.
  Bounds sb;
  try {
    sb = mask_bbox(src);
  } catch (const Error&) {
    return out;
  }
  double min_x = dst_w, min_y = dst_h, max_x = -1, max_y = -1;
  for (Vec2 corner : {Vec2{double(sb.x0), double(sb.y0)},
                      Vec2{double(sb.x1), double(sb.y0)},
                      Vec2{double(sb.x0), double(sb.y1)},
                      Vec2{double(sb.x1), double(sb.y1)}}) {
    Vec2 p = t.forward(corner);
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  int x0 = std::max(0, static_cast<int>(std::floor(min_x)) - 1);
  int y0 = std::max(0, static_cast<int>(std::floor(min_y)) - 1);
  int x1 = std::min(dst_w - 1, static_cast<int>(std::ceil(max_x)) + 1);
  int y1 = std::min(dst_h - 1, static_cast<int>(std::ceil(max_y)) + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      Vec2 s = t.inverse({double(x), double(y)});
      int sx = static_cast<int>(std::lround(s.x));
      int sy = static_cast<int>(std::lround(s.y));
      if (src.in_bounds(sx, sy) && src.at(sx, sy)) out.set(x, y);
    }
  return out;
}

}  // namespace

BinaryMask refine_affordance(const BinaryMask& rough,
                             const BinaryMask& object_mask) {
  return mask_and(rough, object_mask);
}

AutoLabelResult auto_label(const BinaryMask& scene_mask,
                           const KnowledgeEntry& ref, int n_rots,
                           double min_iou) {
  if (n_rots < 1) fail(Errc::InvariantViolation, "n_rots must be >= 1");
  int64_t scene_area = mask_area(scene_mask);
  if (scene_area == 0) fail(Errc::EmptySceneMask, "scene object mask is empty");
  int64_t ref_area = mask_area(ref.object_mask);
  if (ref_area == 0) fail(Errc::EmptyMask, "reference object mask is empty");

  Similarity t;
  t.src_center = mask_centroid(ref.object_mask);
  t.dst_center = mask_centroid(scene_mask);
  t.scale = std::sqrt(static_cast<double>(scene_area) /
                      static_cast<double>(ref_area));

  double best_deg = 0;
  int64_t best_symdiff = -1;
  double best_iou = 0;
  for (int i = 0; i < n_rots; ++i) {
    double deg = i * (360.0 / n_rots);
    double rad = deg * kPi / 180.0;
    t.cos = std::cos(rad);
    t.sin = std::sin(rad);
    BinaryMask moved = transform_mask(ref.object_mask, t, scene_mask.width,
                                      scene_mask.height);
    int64_t moved_area = mask_area(moved);
    int64_t inter = mask_intersection_area(moved, scene_mask);
    int64_t symdiff = scene_area + moved_area - 2 * inter;
    if (best_symdiff < 0 || symdiff < best_symdiff) {
      best_symdiff = symdiff;
      best_deg = deg;
      int64_t uni = scene_area + moved_area - inter;
      best_iou = uni > 0 ? static_cast<double>(inter) / uni : 0.0;
    }
  }
  if (best_iou < min_iou)
    fail(Errc::AlignmentFailure,
         "best alignment IoU " + std::to_string(best_iou) + " below " +
             std::to_string(min_iou));

  double rad = best_deg * kPi / 180.0;
  t.cos = std::cos(rad);
  t.sin = std::sin(rad);

  AutoLabelResult out;
  out.rotation_deg = best_deg;
  out.scale = t.scale;
  out.translation = {t.dst_center.x - t.src_center.x,
                     t.dst_center.y - t.src_center.y};
  out.aligned_iou = best_iou;
  for (const auto& g : ref.grasps) {
    Vec2 c = t.forward({g.x, g.y});
    GraspRect ng = g;
    ng.x = c.x;
    ng.y = c.y;
    ng.w = g.w * t.scale;
    ng.h = g.h * t.scale;
    ng.theta = wrap_theta(g.theta + best_deg);
    out.grasps.push_back(ng);
  }
  for (const auto& [name, m] : ref.affordances)
    out.rough_affordances.emplace(
        name, transform_mask(m, t, scene_mask.width, scene_mask.height));
  return out;
}

}  // namespace tog
