#pragma once

#include <array>
#include <optional>

#include "tog/image.hpp"
#include "tog/maskops.hpp"

namespace tog {

// Oriented grasp rectangle: (x, y) center in pixels, w = gripper opening
// measured along theta, h = fixed jaw dimension, theta in degrees within
// [-90, 90] (the rectangle has 180-degree symmetry). Optional confidence.
struct GraspRect {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
  double theta = 0;
  std::optional<double> confidence;

  bool operator==(const GraspRect&) const = default;
};

// Errors with InvariantViolation on non-positive extents, theta outside
// [-90, 90] or confidence outside [0, 1].
void validate_grasp(const GraspRect& g);

// Wraps an angle into (-90, 90]; -90 is canonicalized to +90.
double wrap_theta(double theta);

// Corner points in order (counter-clockwise in math orientation).
std::array<Vec2, 4> rect_corners(const GraspRect& g);

// Exact intersection-over-union of two oriented rectangles
// (Sutherland-Hodgman clipping + shoelace area).
double rotated_iou(const GraspRect& a, const GraspRect& b);

// Orientation distance min(|a-b|, 180-|a-b|) in [0, 90] for the
// 180-degree-symmetric rectangle. Inputs must lie in [-90, 90].
double angle_diff(double a_deg, double b_deg);

// Maps a half-open pixel box [x0,x1) x [y0,y1) into a target x target square:
// longest side scaled to target, aspect preserved, centered, zero padding.
struct CropTransform {
  int x0 = 0, y0 = 0;      // source box origin
  int src_w = 0, src_h = 0;
  int target = 0;
  double scale = 1.0;
  double pad_x = 0.0, pad_y = 0.0;

  Vec2 forward(Vec2 p) const {
    return {(p.x - x0) * scale + pad_x, (p.y - y0) * scale + pad_y};
  }
  Vec2 inverse(Vec2 p) const {
    return {(p.x - pad_x) / scale + x0, (p.y - pad_y) / scale + y0};
  }
};

// Degenerate (empty) boxes error with DegenerateBox.
CropTransform make_crop_transform(int x0, int y0, int x1, int y1, int target = 256);
CropTransform make_crop_transform(const Bounds& b, int target = 256);

// Raster resampling through a CropTransform. Masks use nearest-neighbor,
// images bilinear; out-of-frame samples are zero.
BinaryMask crop_mask(const BinaryMask& full, const CropTransform& t);
ImageU8 crop_image(const ImageU8& full, const CropTransform& t);
// Maps a target-square mask back onto the full frame (zero outside the box).
BinaryMask uncrop_mask(const BinaryMask& crop, const CropTransform& t,
                       int full_w, int full_h);

// Rotates a square crop about its center by whole degrees (positive =
// clockwise on screen, y down). Multiples of 90 are exact index permutations;
// other angles resample (nearest for masks, bilinear for images) with zero
// fill. Non-square input errors with NonSquareCrop.
BinaryMask rotate_crop(const BinaryMask& crop, int degrees);
ImageU8 rotate_crop(const ImageU8& crop, int degrees);

}  // namespace tog
