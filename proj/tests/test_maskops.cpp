#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <random>

#include "helpers.hpp"
#include "tog/maskops.hpp"

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

}  // namespace

TEST_CASE("mask algebra on overlapping rectangles") {
  BinaryMask a = rect_mask(8, 8, 1, 1, 4, 4);  // area 16
  BinaryMask b = rect_mask(8, 8, 3, 3, 4, 4);  // area 16, overlap 2x2

  CHECK(mask_area(a) == 16);
  CHECK(mask_intersection_area(a, b) == 4);
  CHECK(mask_area(mask_and(a, b)) == 4);
  CHECK(mask_area(mask_or(a, b)) == 28);
  CHECK(mask_area(mask_sub(a, b)) == 12);
  CHECK(mask_iou(a, b) == doctest::Approx(4.0 / 28.0).epsilon(1e-12));
  CHECK(overlap_ratio(a, b) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(overlap_ratio(b, a) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("mask algebra error cases") {
  BinaryMask a = rect_mask(8, 8, 1, 1, 4, 4);
  BinaryMask small(4, 4);
  BinaryMask empty(8, 8);

  CHECK(errc_of([&] { mask_and(a, small); }) == Errc::ShapeMismatch);
  CHECK(errc_of([&] { mask_iou(a, small); }) == Errc::ShapeMismatch);
  CHECK(errc_of([&] { overlap_ratio(empty, a); }) == Errc::EmptyFirstOperand);
  CHECK(mask_iou(empty, empty) == 0.0);
  CHECK(mask_iou(a, a) == 1.0);

  BinaryMask subset = rect_mask(8, 8, 2, 2, 2, 2);
  CHECK(overlap_ratio(subset, a) == 1.0);
}

TEST_CASE("bbox and centroid") {
  BinaryMask m(10, 10);
  m.set(2, 3);
  m.set(5, 7);
  Bounds b = mask_bbox(m);
  CHECK(b == Bounds{2, 3, 5, 7});
  CHECK(b.width() == 4);
  CHECK(b.height() == 5);

  BinaryMask r = rect_mask(10, 10, 1, 1, 4, 2);
  Vec2 c = mask_centroid(r);
  CHECK(c.x == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(c.y == doctest::Approx(1.5).epsilon(1e-12));

  BinaryMask one(6, 6);
  one.set(3, 4);
  Vec2 c1 = mask_centroid(one);
  CHECK(c1.x == 3.0);
  CHECK(c1.y == 4.0);

  BinaryMask empty(5, 5);
  CHECK(errc_of([&] { mask_bbox(empty); }) == Errc::EmptyMask);
  CHECK(errc_of([&] { mask_centroid(empty); }) == Errc::EmptyMask);
}

TEST_CASE("rasterize integer rectangle exactly") {
  PolygonRegion region;
  region.outers = {{{2, 1}, {7, 1}, {7, 5}, {2, 5}}};
  BinaryMask got = rasterize(region, 10, 8);
  CHECK(got == rect_mask(10, 8, 2, 1, 5, 4));
}

TEST_CASE("rasterize hole ring clears interior") {
  PolygonRegion region;
  region.outers = {{{0, 0}, {8, 0}, {8, 8}, {0, 8}}};
  region.holes = {{{2, 2}, {6, 2}, {6, 6}, {2, 6}}};
  BinaryMask got = rasterize(region, 8, 8);
  BinaryMask want =
      mask_sub(rect_mask(8, 8, 0, 0, 8, 8), rect_mask(8, 8, 2, 2, 4, 4));
  CHECK(got == want);
  CHECK(mask_area(got) == 48);
}

TEST_CASE("rasterize triangle covers pixels with interior centers") {
  PolygonRegion region;
  region.outers = {{{0, 0}, {8, 0}, {0, 8}}};
  BinaryMask got = rasterize(region, 10, 10);
  // Center (x+.5, y+.5) lies under the hypotenuse iff x + y < 7.
  CHECK(mask_area(got) == 28);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x)
      CHECK(static_cast<bool>(got.at(x, y)) == (x + y < 7));
}

TEST_CASE("rasterize merges separate outer rings") {
  PolygonRegion region;
  region.outers = {{{0, 0}, {4, 0}, {4, 4}, {0, 4}},
                   {{2, 2}, {6, 2}, {6, 6}, {2, 6}}};
  BinaryMask got = rasterize(region, 8, 8);
  BinaryMask want =
      mask_or(rect_mask(8, 8, 0, 0, 4, 4), rect_mask(8, 8, 2, 2, 4, 4));
  CHECK(got == want);
}

TEST_CASE("rasterize rejects short rings") {
  PolygonRegion region;
  region.outers = {{{0, 0}, {4, 4}}};
  CHECK(errc_of([&] { rasterize(region, 8, 8); }) == Errc::MalformedPolygon);
}

TEST_CASE("translate_mask shifts and clips") {
  BinaryMask m(4, 4);
  m.set(1, 1);
  BinaryMask moved = translate_mask(m, 2, 2);
  CHECK(mask_area(moved) == 1);
  CHECK(moved.at(3, 3) == 1);

  CHECK(mask_area(translate_mask(m, -2, -2)) == 0);

  BinaryMask r = rect_mask(6, 6, 0, 0, 4, 4);
  BinaryMask shifted = translate_mask(r, 4, 0);
  CHECK(shifted == rect_mask(6, 6, 4, 0, 2, 4));
}

TEST_CASE("set identities hold on random masks") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryMask a = testutil::random_rect_mask(rng, 32, 24, 20);
    BinaryMask b = testutil::random_rect_mask(rng, 32, 24, 20);
    int64_t ai = mask_area(a), bi = mask_area(b);
    int64_t both = mask_area(mask_and(a, b));
    int64_t either = mask_area(mask_or(a, b));

    CHECK(ai + bi == both + either);
    CHECK(mask_area(mask_sub(a, b)) == ai - both);
    CHECK(mask_intersection_area(a, b) == both);
    if (either > 0)
      CHECK(mask_iou(a, b) ==
            doctest::Approx(double(both) / either).epsilon(1e-12));
    if (ai > 0)
      CHECK(overlap_ratio(a, b) ==
            doctest::Approx(double(both) / ai).epsilon(1e-12));
  }
}
