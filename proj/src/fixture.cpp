#include "tog/fixture.hpp"

#include <algorithm>
#include <iterator>
#include <string>
#include <vector>

#include "tog/image.hpp"

namespace tog {

namespace {

// Two stacked rectangles: part B spans the full width on top (y in [0, hB)),
// part A is centered below it (y in [hB, H)). The bounding box is exactly
// W x H, with max(W, H) a power of two.
struct Shape {
  const char* category;
  const char* sub;
  int W, H, hB, wA;
  const char* aff_b;  // affordance carried by part B ("" = none)
  const char* aff_a;  // affordance carried by part A
  uint8_t r, g, b;
  const char* color;
};

const Shape kShapes[] = {
    // _01 instances
    {"hammer", "hammer_01", 128, 128, 32, 32, "", "grasp", 200, 40, 40, "crimson"},
    {"spoon", "spoon_01", 64, 64, 8, 8, "", "grasp", 40, 60, 180, "navy"},
    {"pen", "pen_01", 16, 64, 8, 8, "", "grasp", 110, 130, 30, "olive"},
    {"scissors", "scissors_01", 64, 128, 64, 48, "", "grasp", 30, 150, 150, "teal"},
    {"pan", "pan_01", 128, 128, 96, 24, "", "grasp", 140, 40, 60, "maroon"},
    {"screwdriver", "screwdriver_01", 48, 128, 48, 16, "grasp", "screw",
     80, 50, 170, "indigo"},
    {"toothpaste", "toothpaste_01", 48, 128, 104, 24, "grasp", "open",
     250, 120, 90, "coral"},
    {"cable", "cable_01", 24, 64, 16, 8, "connect", "", 100, 110, 130, "slate"},
    {"dustpan", "dustpan_01", 128, 128, 72, 24, "contain", "grasp",
     240, 170, 50, "amber"},
    {"paint_brush", "paint_brush_01", 32, 128, 32, 16, "paint", "grasp",
     150, 80, 160, "plum"},
    // _02 instances
    {"hammer", "hammer_02", 128, 128, 64, 64, "", "grasp", 120, 220, 160, "mint"},
    {"spoon", "spoon_02", 64, 128, 24, 16, "", "grasp", 180, 90, 40, "rust"},
    {"pen", "pen_02", 16, 128, 16, 12, "", "grasp", 40, 90, 200, "cobalt"},
    {"scissors", "scissors_02", 32, 64, 32, 24, "", "grasp", 200, 160, 60, "ochre"},
    {"pan", "pan_02", 64, 64, 48, 16, "", "grasp", 190, 150, 220, "lilac"},
    {"screwdriver", "screwdriver_02", 32, 64, 24, 8, "grasp", "screw",
     90, 140, 70, "moss"},
    {"toothpaste", "toothpaste_02", 32, 64, 48, 16, "grasp", "open",
     170, 70, 50, "brick"},
    {"cable", "cable_02", 24, 128, 24, 8, "connect", "", 130, 140, 150, "steel"},
    {"dustpan", "dustpan_02", 64, 64, 40, 16, "contain", "grasp",
     210, 190, 140, "sand"},
    {"paint_brush", "paint_brush_02", 24, 64, 16, 8, "paint", "grasp",
     120, 30, 60, "wine"},
};
constexpr int kNumShapes = static_cast<int>(std::size(kShapes));

struct Rect {
  int x, y, w, h;
};

Rect part_b(const Shape& s, int ox, int oy) { return {ox, oy, s.W, s.hB}; }
Rect part_a(const Shape& s, int ox, int oy) {
  return {ox + (s.W - s.wA) / 2, oy + s.hB, s.wA, s.H - s.hB};
}

std::vector<Vec2> rect_ring(const Rect& r) {
  return {{double(r.x), double(r.y)},
          {double(r.x + r.w), double(r.y)},
          {double(r.x + r.w), double(r.y + r.h)},
          {double(r.x), double(r.y + r.h)}};
}

AnnotatedMask make_mask(const std::vector<Rect>& rects, int img_w, int img_h) {
  AnnotatedMask m;
  m.source = AnnotatedMask::Source::Polygons;
  for (const auto& r : rects) m.region.outers.push_back(rect_ring(r));
  m.mask = rasterize(m.region, img_w, img_h);
  return m;
}

void fill_rect(ImageU8& img, const Rect& r, uint8_t cr, uint8_t cg, uint8_t cb) {
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) {
      img.at(x, y, 0) = cr;
      img.at(x, y, 1) = cg;
      img.at(x, y, 2) = cb;
    }
}

uint8_t lighten(uint8_t v) { return static_cast<uint8_t>(std::min(255, v + 70)); }

void draw_object(ImageU8& img, const Shape& s, int ox, int oy) {
  // Part B gets the lighter tone so the two parts are distinguishable.
  fill_rect(img, part_b(s, ox, oy), lighten(s.r), lighten(s.g), lighten(s.b));
  fill_rect(img, part_a(s, ox, oy), s.r, s.g, s.b);
}

GraspRect part_a_grasp(const Shape& s, int ox, int oy) {
  int ha = s.H - s.hB;
  GraspRect g;
  g.x = ox + s.W / 2;
  g.y = oy + s.hB + ha / 2;
  g.w = std::min(40, ha - 4);
  g.h = std::min(20, s.wA + 8);
  g.theta = 90;  // along the vertical part
  return g;
}

GraspRect part_b_grasp(const Shape& s, int ox, int oy) {
  GraspRect g;
  g.x = ox + s.W / 2;
  g.y = oy + s.hB / 2;
  g.w = std::min(40, s.W - 4);
  g.h = std::min(20, s.hB + 8);
  g.theta = 0;  // along the horizontal part
  return g;
}

SceneObject make_object(const Shape& s, int ox, int oy, int annotation_id,
                        int category_id, int img_w, int img_h,
                        bool with_description) {
  SceneObject obj;
  obj.annotation_id = annotation_id;
  obj.category_id = category_id;
  obj.category = s.category;
  obj.subcategory = s.sub;
  obj.object_mask = make_mask({part_b(s, ox, oy), part_a(s, ox, oy)}, img_w, img_h);
  if (*s.aff_b)
    obj.affordances.emplace(s.aff_b, make_mask({part_b(s, ox, oy)}, img_w, img_h));
  if (*s.aff_a)
    obj.affordances.emplace(s.aff_a, make_mask({part_a(s, ox, oy)}, img_w, img_h));
  obj.grasps.push_back(part_a_grasp(s, ox, oy));
  obj.grasps.push_back(part_b_grasp(s, ox, oy));
  if (with_description)
    obj.description = std::string("a ") + s.color + " " + s.category;
  return obj;
}

}  // namespace

std::filesystem::path write_fixture(const std::filesystem::path& root,
                                    const FixtureOptions& opts) {
  std::filesystem::create_directories(root / "images");

  Dataset ds;
  ds.root = root;
  ds.affordance_vocab = {"connect", "contain", "grasp", "open", "paint", "screw"};
  ds.rules = standard_task_rules();
  for (int i = 0; i < kNumShapes; ++i)
    ds.categories.push_back({i + 1, kShapes[i].category, kShapes[i].sub});

  int next_annotation = 1;
  auto add_scene = [&](int image_id, const std::string& split,
                       const std::vector<std::pair<int, std::pair<int, int>>>&
                           placed /* shape index -> offset */) {
    std::string file = "images/scene_" + std::to_string(image_id) + ".ppm";
    ImageU8 img(opts.image_w, opts.image_h, 3);

    SceneAnnotation scene;
    scene.image_id = image_id;
    scene.scene_id = std::to_string(image_id);
    scene.file_name = file;
    scene.width = opts.image_w;
    scene.height = opts.image_h;
    scene.split = split;
    for (const auto& [shape_idx, offset] : placed) {
      const Shape& s = kShapes[shape_idx];
      draw_object(img, s, offset.first, offset.second);
      scene.objects.push_back(make_object(s, offset.first, offset.second,
                                          next_annotation++, shape_idx + 1,
                                          opts.image_w, opts.image_h,
                                          split == "reference"));
    }
    save_ppm(img, root / file);
    ds.images.push_back(
        {image_id, file, std::nullopt, opts.image_w, opts.image_h, split});
    ds.scenes.push_back(std::move(scene));
  };

  int image_id = 1;
  for (int i = 0; i < kNumShapes; ++i)
    add_scene(image_id++, "reference", {{i, {80, 60}}});

  // Three non-overlapping slots; consecutive shape indices keep categories
  // distinct within a scene (indices differ mod 10).
  const std::pair<int, int> kSlots[3] = {{40, 40}, {260, 40}, {150, 200}};
  for (int k = 0; k < opts.eval_scenes; ++k) {
    std::vector<std::pair<int, std::pair<int, int>>> placed;
    int n_objects = (k % 2 == 0) ? 3 : 2;
    for (int j = 0; j < n_objects; ++j)
      placed.push_back({(2 * k + j) % kNumShapes, kSlots[j]});
    add_scene(image_id++, "KC-KSC", placed);
  }
  // Subcategory scenes pair the _01 and _02 instance of one category.
  for (int k = 0; k < opts.subcat_scenes; ++k) {
    add_scene(image_id++, "subcategory-KC",
              {{k % 10, kSlots[0]}, {k % 10 + 10, kSlots[1]}});
  }

  auto manifest = root / "manifest.json";
  save_dataset(ds, manifest);
  return manifest;
}

}  // namespace tog
