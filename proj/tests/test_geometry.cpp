#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "helpers.hpp"
#include "tog/geometry.hpp"

using namespace tog;
using testutil::rect_mask;

namespace {

template <typename Fn>
std::optional<Errc> errc_of(Fn&& fn) {
  try {
    std::forward<Fn>(fn)();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

bool corner_set_matches(const std::array<Vec2, 4>& got,
                        std::vector<Vec2> want) {
  for (const Vec2& g : got) {
    auto it = std::find_if(want.begin(), want.end(), [&](const Vec2& w) {
      return std::abs(g.x - w.x) < 1e-9 && std::abs(g.y - w.y) < 1e-9;
    });
    if (it == want.end()) return false;
    want.erase(it);
  }
  return want.empty();
}

}  // namespace

TEST_CASE("wrap_theta lands in (-90, 90]") {
  CHECK(wrap_theta(0) == 0.0);
  CHECK(wrap_theta(90) == 90.0);
  CHECK(wrap_theta(-90) == 90.0);
  CHECK(wrap_theta(180) == 0.0);
  CHECK(wrap_theta(135) == -45.0);
  CHECK(wrap_theta(-135) == 45.0);
  CHECK(wrap_theta(91) == -89.0);
  CHECK(wrap_theta(-91) == 89.0);
  CHECK(wrap_theta(450) == 90.0);
  CHECK(wrap_theta(-270) == 90.0);
}

TEST_CASE("validate_grasp enforces ranges") {
  GraspRect ok{10, 10, 4, 2, 45, 0.5};
  CHECK_NOTHROW(validate_grasp(ok));
  GraspRect no_conf{10, 10, 4, 2, -90, std::nullopt};
  CHECK_NOTHROW(validate_grasp(no_conf));

  GraspRect bad_w = ok;
  bad_w.w = 0;
  CHECK(errc_of([&] { validate_grasp(bad_w); }) == Errc::InvariantViolation);

  GraspRect bad_theta = ok;
  bad_theta.theta = 90.5;
  CHECK(errc_of([&] { validate_grasp(bad_theta); }) == Errc::InvariantViolation);

  GraspRect bad_conf = ok;
  bad_conf.confidence = 1.5;
  CHECK(errc_of([&] { validate_grasp(bad_conf); }) == Errc::InvariantViolation);
}

TEST_CASE("angle_diff respects 180-degree symmetry") {
  CHECK(angle_diff(0, 30) == 30.0);
  CHECK(angle_diff(80, -80) == 20.0);
  CHECK(angle_diff(90, -90) == 0.0);
  CHECK(angle_diff(-45, 45) == 90.0);
  CHECK(angle_diff(10, 10) == 0.0);
}

TEST_CASE("rect_corners for axis-aligned and rotated rectangles") {
  CHECK(corner_set_matches(rect_corners({10, 20, 6, 4, 0}),
                           {{13, 22}, {7, 22}, {7, 18}, {13, 18}}));
  CHECK(corner_set_matches(rect_corners({10, 20, 6, 4, 90}),
                           {{8, 23}, {8, 17}, {12, 17}, {12, 23}}));
}

TEST_CASE("rotated_iou exact and derived cases") {
  GraspRect base{0, 0, 40, 20, 0, std::nullopt};

  CHECK(rotated_iou(base, base) == 1.0);
  CHECK(rotated_iou(base, {500, 500, 40, 20, 0, std::nullopt}) == 0.0);

  // Crossed 2x1 rectangles: intersection 1, union 3.
  CHECK(rotated_iou({0, 0, 2, 1, 0, {}}, {0, 0, 2, 1, 90, {}}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Translation along the long side: IoU = (40 - d) / (40 + d).
  auto shifted = [&](double d) {
    GraspRect g = base;
    g.x += d;
    return rotated_iou(base, g);
  };
  CHECK(shifted(5) == doctest::Approx(35.0 / 45.0).epsilon(1e-12));
  CHECK(shifted(23) == doctest::Approx(17.0 / 63.0).epsilon(1e-12));
  CHECK(shifted(24) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(shifted(25) == doctest::Approx(15.0 / 65.0).epsilon(1e-12));

  // Square rotated 45 degrees about its own center: IoU = 1/sqrt(2).
  CHECK(rotated_iou({0, 0, 2, 2, 0, {}}, {0, 0, 2, 2, 45, {}}) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));

  // theta = +-90 describe the same rectangle.
  CHECK(rotated_iou({5, 5, 4, 2, 90, {}}, {5, 5, 4, 2, -90, {}}) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rotated_iou is symmetric") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pos(5, 25), side(2, 12), ang(-90, 90);
  for (int i = 0; i < 50; ++i) {
    GraspRect a{pos(rng), pos(rng), side(rng), side(rng), ang(rng), {}};
    GraspRect b{pos(rng), pos(rng), side(rng), side(rng), ang(rng), {}};
    CHECK(rotated_iou(a, b) == doctest::Approx(rotated_iou(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("make_crop_transform scales the long side and centers") {
  CropTransform t = make_crop_transform(10, 20, 74, 52, 256);
  CHECK(t.scale == 4.0);
  CHECK(t.pad_x == 0.0);
  CHECK(t.pad_y == 64.0);
  CHECK(t.src_w == 64);
  CHECK(t.src_h == 32);

  // Bounds form is inclusive; same box as above.
  CropTransform tb = make_crop_transform(Bounds{10, 20, 73, 51}, 256);
  CHECK(tb.scale == t.scale);
  CHECK(tb.pad_x == t.pad_x);
  CHECK(tb.pad_y == t.pad_y);

  CHECK(errc_of([&] { make_crop_transform(5, 5, 5, 9, 256); }) ==
        Errc::DegenerateBox);
}

TEST_CASE("CropTransform forward and inverse agree") {
  CropTransform t = make_crop_transform(7, 3, 120, 90, 200);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 250);
  for (int i = 0; i < 100; ++i) {
    Vec2 p{u(rng), u(rng)};
    Vec2 back = t.inverse(t.forward(p));
    CHECK(back.x == doctest::Approx(p.x).epsilon(1e-9));
    CHECK(back.y == doctest::Approx(p.y).epsilon(1e-9));
  }
}

TEST_CASE("crop then uncrop is exact for power-of-two boxes") {
  // Two-part shape whose bbox is exactly 64 x 64.
  BinaryMask m = mask_or(rect_mask(300, 200, 50, 40, 64, 16),
                         rect_mask(300, 200, 74, 56, 16, 48));
  CropTransform t = make_crop_transform(mask_bbox(m), 256);
  CHECK(t.scale == 4.0);
  BinaryMask crop = crop_mask(m, t);
  CHECK(uncrop_mask(crop, t, 300, 200) == m);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    int side = (trial % 2) ? 64 : 128;
    int bx = std::uniform_int_distribution<int>(0, 300 - side)(rng);
    int by = std::uniform_int_distribution<int>(0, 200 - side)(rng);
    BinaryMask r(300, 200);
    for (int k = 0; k < 5; ++k) {
      int rw = std::uniform_int_distribution<int>(1, side)(rng);
      int rh = std::uniform_int_distribution<int>(1, side)(rng);
      int rx = bx + std::uniform_int_distribution<int>(0, side - rw)(rng);
      int ry = by + std::uniform_int_distribution<int>(0, side - rh)(rng);
      r = mask_or(r, rect_mask(300, 200, rx, ry, rw, rh));
    }
    // Pin the bbox to the full side x side box.
    r.set(bx, by);
    r.set(bx + side - 1, by + side - 1);

    CropTransform tr = make_crop_transform(mask_bbox(r), 256);
    CHECK(uncrop_mask(crop_mask(r, tr), tr, 300, 200) == r);
  }
}

TEST_CASE("crop then uncrop stays close for fractional scales") {
  BinaryMask m = rect_mask(200, 200, 60, 50, 30, 50);
  CropTransform t = make_crop_transform(mask_bbox(m), 256);
  BinaryMask back = uncrop_mask(crop_mask(m, t), t, 200, 200);
  CHECK(mask_iou(m, back) > 0.9);
}

TEST_CASE("crop_image pads outside the source box with zeros") {
  ImageU8 img(300, 200, 3, 0);
  for (int y = 20; y < 52; ++y)
    for (int x = 10; x < 74; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 200;

  CropTransform t = make_crop_transform(10, 20, 74, 52, 256);
  ImageU8 crop = crop_image(img, t);
  CHECK(crop.width == 256);
  CHECK(crop.height == 256);
  // pad_y = 64: rows well inside the pad stay zero, interior is solid.
  CHECK(crop.at(128, 10, 0) == 0);
  CHECK(crop.at(128, 250, 1) == 0);
  CHECK(crop.at(128, 100, 0) == 200);
  CHECK(crop.at(10, 128, 2) == 200);
}

TEST_CASE("rotate_crop quarter turns are exact permutations") {
  BinaryMask m(4, 4);
  m.set(1, 0);

  BinaryMask r90 = rotate_crop(m, 90);
  CHECK(mask_area(r90) == 1);
  CHECK(r90.at(3, 1) == 1);

  BinaryMask r180 = rotate_crop(m, 180);
  CHECK(r180.at(2, 3) == 1);

  BinaryMask r270 = rotate_crop(m, 270);
  CHECK(r270.at(0, 2) == 1);

  CHECK(rotate_crop(m, 360) == m);
  CHECK(rotate_crop(m, -90) == r270);

  BinaryMask four = rotate_crop(rotate_crop(rotate_crop(r90, 90), 90), 90);
  CHECK(four == m);

  BinaryMask wide(6, 4);
  CHECK(errc_of([&] { rotate_crop(wide, 90); }) == Errc::NonSquareCrop);
}

TEST_CASE("rotate_crop on images permutes pixels for quarter turns") {
  ImageU8 img(3, 3, 1, 0);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) img.at(x, y, 0) = uint8_t(10 * y + x);

  ImageU8 r = rotate_crop(img, 90);
  // Clockwise: the left column becomes the top row.
  CHECK(r.at(0, 0, 0) == img.at(0, 2, 0));
  CHECK(r.at(2, 0, 0) == img.at(0, 0, 0));
  CHECK(r.at(2, 2, 0) == img.at(2, 0, 0));
  CHECK(rotate_crop(r, 270) == img);
}

TEST_CASE("non-quarter rotations roughly invert") {
  BinaryMask m = rect_mask(32, 32, 11, 13, 10, 6);
  BinaryMask back = rotate_crop(rotate_crop(m, 37), -37);
  CHECK(mask_iou(m, back) > 0.8);
}
