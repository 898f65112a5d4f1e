#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "helpers.hpp"
#include "tog/backends.hpp"
#include "tog/fixture.hpp"
#include "tog/pipeline.hpp"

using namespace tog;
using testutil::rect_mask;
using testutil::TempDir;

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

// Independent transliteration of the two-stage filter: size window first,
// then ascending-area subset suppression against every later-sorted mask.
std::vector<BinaryMask> ssf_reference(const std::vector<BinaryMask>& in,
                                      double min_area, double max_area,
                                      double tau) {
  std::vector<int> window;
  for (int i = 0; i < static_cast<int>(in.size()); ++i) {
    double a = static_cast<double>(mask_area(in[i]));
    if (a > min_area && a < max_area) window.push_back(i);
  }
  std::vector<int> order = window;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mask_area(in[a]) < mask_area(in[b]);
  });
  std::vector<bool> dropped(in.size(), false);
  for (size_t p = 0; p < order.size(); ++p)
    for (size_t q = p + 1; q < order.size(); ++q)
      if (overlap_ratio(in[order[p]], in[order[q]]) > tau) {
        dropped[order[p]] = true;
        break;
      }
  std::vector<BinaryMask> out;
  for (int i : window)
    if (!dropped[i]) out.push_back(in[i]);
  return out;
}

struct SharedFixture {
  TempDir dir;
  Dataset ds;
  SharedFixture() {
    write_fixture(dir.path);
    ds = load_dataset(dir.path / "manifest.json");
  }
};

const SharedFixture& fx() {
  static SharedFixture f;
  return f;
}

ImageU8 scene_image(const Dataset& ds, const SceneAnnotation& scene) {
  return load_image(ds.root / scene.file_name);
}

// First eval-split scene containing the given subcategory.
const SceneAnnotation& eval_scene_with(const Dataset& ds,
                                       const std::string& subcategory,
                                       int* obj_idx = nullptr) {
  for (const auto& s : ds.scenes) {
    if (s.split != "KC-KSC") continue;
    for (size_t i = 0; i < s.objects.size(); ++i)
      if (s.objects[i].subcategory == subcategory) {
        if (obj_idx) *obj_idx = static_cast<int>(i);
        return s;
      }
  }
  throw std::runtime_error("no eval scene holds " + subcategory);
}

struct BoomOneShot : AffordanceOneShot {
  BinaryMask predict(const AffordanceOneShotQuery&) override {
    fail(Errc::BackendFailure, "one-shot backend should not have been called");
  }
};

struct EmptyOneShot : AffordanceOneShot {
  BinaryMask predict(const AffordanceOneShotQuery& q) override {
    return BinaryMask(q.scene_crop->width, q.scene_crop->height);
  }
};

}  // namespace

TEST_CASE("ssf_filter frozen behaviour") {
  const double kMin = 400, kMax = 50000, kTau = 0.75;
  std::vector<BinaryMask> masks;
  masks.push_back(rect_mask(300, 300, 0, 0, 10, 10));     // 100: below window
  masks.push_back(rect_mask(300, 300, 0, 0, 260, 220));   // 57200: above window
  masks.push_back(rect_mask(300, 300, 20, 20, 30, 40));   // A, kept
  masks.push_back(rect_mask(300, 300, 25, 25, 20, 30));   // inside A, dropped
  masks.push_back(rect_mask(300, 300, 100, 100, 25, 25)); // B, kept
  masks.push_back(rect_mask(300, 300, 110, 110, 25, 25)); // overlaps B 0.36, kept

  auto out = ssf_filter(masks, kMin, kMax, kTau);
  REQUIRE(out.size() == 3);
  CHECK(out[0] == masks[2]);
  CHECK(out[1] == masks[4]);
  CHECK(out[2] == masks[5]);
}

TEST_CASE("ssf_filter keeps masks at exactly tau overlap") {
  // i: 20x25 = 500.  j covers 15 columns (375 px = 0.75) and extends below.
  BinaryMask i = rect_mask(100, 100, 10, 10, 20, 25);
  BinaryMask j = mask_or(rect_mask(100, 100, 10, 10, 15, 25),
                         rect_mask(100, 100, 10, 40, 30, 20));
  auto kept = ssf_filter({i, j}, 50, 5000, 0.75);
  CHECK(kept.size() == 2);  // 375/500 == tau exactly; only strictly-over drops

  // One more covered column pushes the ratio over tau.
  BinaryMask j2 = mask_or(rect_mask(100, 100, 10, 10, 16, 25),
                          rect_mask(100, 100, 10, 40, 30, 20));
  auto kept2 = ssf_filter({i, j2}, 50, 5000, 0.75);
  REQUIRE(kept2.size() == 1);
  CHECK(kept2[0] == j2);
}

TEST_CASE("ssf_filter collapses duplicates to the last copy") {
  BinaryMask m = rect_mask(100, 100, 10, 10, 20, 20);
  auto kept = ssf_filter({m, m, m}, 50, 5000, 0.75);
  CHECK(kept.size() == 1);
  CHECK(kept[0] == m);
}

TEST_CASE("ssf_filter matches the reference implementation") {
  std::mt19937_64 rng(4242);
  for (int set = 0; set < 40; ++set) {
    std::uniform_int_distribution<int> count(1, 20);
    int n = count(rng);
    std::vector<BinaryMask> masks;
    for (int i = 0; i < n; ++i) {
      double kind = std::uniform_real_distribution<double>(0, 1)(rng);
      if (kind < 0.35 && !masks.empty()) {
        // Sub-rectangle of an earlier mask's bbox, clipped to the mask.
        const BinaryMask& parent =
            masks[std::uniform_int_distribution<size_t>(0, masks.size() - 1)(rng)];
        if (mask_area(parent) > 0) {
          Bounds b = mask_bbox(parent);
          int w = std::max(1, b.width() / 2), h = std::max(1, b.height() / 2);
          masks.push_back(mask_and(
              parent, rect_mask(128, 96, b.x0 + b.width() / 4,
                                b.y0 + b.height() / 4, w, h)));
          continue;
        }
      }
      masks.push_back(testutil::random_rect_mask(rng, 128, 96, 80));
    }
    double min_area = std::uniform_real_distribution<double>(20, 400)(rng);
    double max_area = std::uniform_real_distribution<double>(1000, 9000)(rng);
    double tau = std::uniform_real_distribution<double>(0.5, 0.9)(rng);

    auto got = ssf_filter(masks, min_area, max_area, tau);
    auto want = ssf_reference(masks, min_area, max_area, tau);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
  }
}

TEST_CASE("make_masked_image zeroes everything off-mask") {
  ImageU8 img(4, 3, 3, 0);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = uint8_t(50 + x + y + c);
  BinaryMask m(4, 3);
  m.set(1, 1);
  m.set(2, 2);

  ImageU8 masked = make_masked_image(img, m);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(masked.at(x, y, c) == (m.at(x, y) ? img.at(x, y, c) : 0));
}

TEST_CASE("recognize_zero_shot frozen softmax") {
  std::vector<double> text{1, 0};
  std::vector<std::vector<double>> feats{{1, 0},
                                         {0.98, std::sqrt(1 - 0.98 * 0.98)}};
  auto [idx, scores] = recognize_zero_shot(feats, text);
  CHECK(idx == 0);
  REQUIRE(scores.size() == 2);
  // softmax(100 * [1.0, 0.98]) = 1 / (1 + e^-2) and its complement.
  CHECK(scores[0] == doctest::Approx(0.8807970779778823).epsilon(1e-9));
  CHECK(scores[1] == doctest::Approx(0.1192029220221176).epsilon(1e-9));

  auto [tie_idx, tie_scores] = recognize_zero_shot({{0, 1}, {0, 1}}, {0, 1});
  CHECK(tie_idx == 0);
  CHECK(tie_scores[0] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(errc_of([&] { recognize_zero_shot({}, text); }) == Errc::EmptyCandidates);
}

TEST_CASE("recognize_zero_shot ignores feature magnitude") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  std::vector<std::vector<double>> feats(4, std::vector<double>(16));
  std::vector<double> text(16);
  for (auto& f : feats)
    for (auto& v : f) v = g(rng);
  for (auto& v : text) v = g(rng);

  auto [idx_a, scores_a] = recognize_zero_shot(feats, text);
  for (auto& f : feats)
    for (auto& v : f) v *= 3.0;
  auto [idx_b, scores_b] = recognize_zero_shot(feats, text);
  CHECK(idx_a == idx_b);
  for (size_t i = 0; i < scores_a.size(); ++i)
    CHECK(scores_a[i] == doctest::Approx(scores_b[i]).epsilon(1e-9));
}

TEST_CASE("recognize_one_shot picks the nearest feature") {
  std::vector<std::vector<double>> feats{{0, 0}, {3, 4}, {1, 1}};
  CHECK(recognize_one_shot(feats, {1.2, 1.2}) == 2);
  CHECK(recognize_one_shot(feats, {0.4, 0.4}) == 0);
  // Equidistant: lowest index.
  CHECK(recognize_one_shot({{1, 0}, {-1, 0}}, {0, 0}) == 0);

  CHECK(errc_of([&] { recognize_one_shot(feats, {1, 2, 3}); }) ==
        Errc::ShapeMismatch);
  CHECK(errc_of([&] { recognize_one_shot({}, {1, 2}); }) ==
        Errc::EmptyCandidates);
}

TEST_CASE("recognize_standard softmaxes rows and reads one column") {
  std::vector<std::vector<double>> logits{{2, 0}, {0, 1}};
  auto [idx, probs] = recognize_standard(logits, 0);
  CHECK(idx == 0);
  double e2 = std::exp(2.0), e1 = std::exp(1.0);
  CHECK(probs[0][0] == doctest::Approx(e2 / (e2 + 1)).epsilon(1e-12));
  CHECK(probs[0][1] == doctest::Approx(1 / (e2 + 1)).epsilon(1e-12));
  CHECK(probs[1][0] == doctest::Approx(1 / (1 + e1)).epsilon(1e-12));
  CHECK(probs[1][1] == doctest::Approx(e1 / (1 + e1)).epsilon(1e-12));

  auto [idx1, probs1] = recognize_standard(logits, 1);
  CHECK(idx1 == 1);
  (void)probs1;

  // Shifting a whole row never changes its softmax.
  std::vector<std::vector<double>> shifted{{2 + 7, 0 + 7}, {0, 1}};
  auto [sidx, sprobs] = recognize_standard(shifted, 0);
  CHECK(sidx == idx);
  CHECK(sprobs[0][0] == doctest::Approx(probs[0][0]).epsilon(1e-12));

  CHECK(errc_of([&] { recognize_standard(logits, 2); }) == Errc::UnknownCategory);
  CHECK(errc_of([&] { recognize_standard({}, 0); }) == Errc::EmptyCandidates);
}

TEST_CASE("reference_task_region uses the entry affordances") {
  const Dataset& ds = fx().ds;
  const KnowledgeEntry* hammer = ds.find_entry("hammer_01");
  REQUIRE(hammer != nullptr);

  const TaskRule& hitting = rule_lookup(ds.rules, "hitting");
  BinaryMask region = reference_task_region(*hammer, hitting);
  CHECK(region ==
        mask_and(hammer->object_mask, hammer->affordances.at("grasp")));

  const TaskRule& opening = rule_lookup(ds.rules, "opening");
  CHECK(errc_of([&] { reference_task_region(*hammer, opening); }) ==
        Errc::MissingAffordance);
}

TEST_CASE("affordance_align recovers self-rotations") {
  // Asymmetric pattern: gradient plus an off-center block.
  ImageU8 ref(64, 64, 3, 0);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      ref.at(x, y, 0) = uint8_t(x * 4 & 0xff);
      ref.at(x, y, 1) = uint8_t(y * 4 & 0xff);
    }
  for (int y = 8; y < 20; ++y)
    for (int x = 36; x < 58; ++x) ref.at(x, y, 2) = 255;
  BinaryMask region = rect_mask(64, 64, 30, 6, 30, 20);

  const int n_rots = 8;  // 45-degree steps
  for (int i = 0; i < n_rots; ++i) {
    int expected = i * (360 / n_rots);
    ImageU8 scene = rotate_crop(make_masked_image(ref, region), expected);
    AlignResult got = affordance_align(scene, ref, region, n_rots);
    CHECK(got.degrees == expected);
    CHECK(got.ref_region == rotate_crop(region, expected));
    CHECK(got.ref_crop == rotate_crop(ref, expected));
  }

  // Zero winner leaves the reference rasters untouched bit for bit.
  ImageU8 scene0 = make_masked_image(ref, region);
  AlignResult zero = affordance_align(scene0, ref, region, n_rots);
  CHECK(zero.degrees == 0);
  CHECK(zero.ref_crop == ref);
  CHECK(zero.ref_region == region);

  AlignResult single = affordance_align(scene0, ref, region, 1);
  CHECK(single.degrees == 0);
}

TEST_CASE("affordance_align validates its inputs") {
  ImageU8 square(32, 32, 3, 0);
  BinaryMask region(32, 32);
  region.set(5, 5);

  CHECK(errc_of([&] { affordance_align(square, square, region, 0); }) ==
        Errc::InvariantViolation);

  ImageU8 wide(32, 16, 3, 0);
  CHECK(errc_of([&] { affordance_align(wide, wide, BinaryMask(32, 16), 4); }) ==
        Errc::NonSquareCrop);

  ImageU8 other(16, 16, 3, 0);
  CHECK(errc_of([&] { affordance_align(square, other, BinaryMask(16, 16), 4); }) ==
        Errc::SideMismatch);
  CHECK(errc_of([&] { affordance_align(square, square, BinaryMask(16, 16), 4); }) ==
        Errc::SideMismatch);
}

TEST_CASE("select_grasp filters by region membership then confidence") {
  BinaryMask region = rect_mask(40, 40, 10, 10, 10, 10);
  std::vector<GraspRect> cands{
      {5, 5, 8, 4, 0, 0.99},       // outside
      {12, 12, 8, 4, 0, 0.40},     // inside, low confidence
      {15, 15, 8, 4, 10, 0.80},    // inside, winner
      {14.5, 14.5, 8, 4, 0, 0.80}, // inside, tied confidence, higher index
  };
  auto [grasp, idx] = select_grasp(cands, region);
  CHECK(idx == 2);
  CHECK(grasp == cands[2]);

  // Rounded centers: 9.5 rounds to 10, landing inside.
  std::vector<GraspRect> edge{{9.5, 9.5, 4, 2, 0, 0.5}};
  CHECK(select_grasp(edge, region).second == 0);
  std::vector<GraspRect> out{{9.4, 9.4, 4, 2, 0, 0.5}};
  CHECK(errc_of([&] { select_grasp(out, region); }) == Errc::NoGraspInRegion);

  CHECK(errc_of([&] { select_grasp({}, region); }) == Errc::EmptyCandidates);
  CHECK(errc_of([&] { select_grasp(cands, BinaryMask(40, 40)); }) ==
        Errc::EmptyRegion);
}

TEST_CASE("stack_task_region thresholds and applies the rule") {
  BinaryMask candidate = rect_mask(30, 30, 5, 5, 20, 20);
  BinaryMask aff_hi = rect_mask(30, 30, 5, 5, 20, 8);
  BinaryMask aff_lo = rect_mask(30, 30, 5, 17, 20, 8);
  BinaryMask off_label = rect_mask(30, 30, 5, 13, 20, 4);

  std::vector<AffordancePrediction> preds;
  preds.push_back({aff_hi, "grasp", 0.9});
  preds.push_back({aff_lo, "grasp", 0.5});   // exactly at the threshold: kept
  preds.push_back({off_label, "open", 0.9}); // wrong label: skipped
  preds.push_back({off_label, "grasp", 0.49});

  TaskRule require{"t", Polarity::Require, "grasp", {}, {}};
  BinaryMask want = mask_and(candidate, mask_or(aff_hi, aff_lo));
  CHECK(stack_task_region(candidate, preds, require, 0.5) == want);

  TaskRule avoid{"t", Polarity::Avoid, "grasp", {}, {}};
  CHECK(stack_task_region(candidate, preds, avoid, 0.5) ==
        mask_sub(candidate, mask_or(aff_hi, aff_lo)));

  TaskRule none{"t", Polarity::None, "", {}, {}};
  CHECK(stack_task_region(candidate, preds, none, 0.5) == candidate);
}

TEST_CASE("predict_task_region_oneshot reproduces the ground truth") {
  const Dataset& ds = fx().ds;
  int obj_idx = 0;
  const SceneAnnotation& scene = eval_scene_with(ds, "hammer_01", &obj_idx);
  const SceneObject& obj = scene.objects[obj_idx];
  const KnowledgeEntry* entry = ds.find_entry("hammer_01");
  REQUIRE(entry != nullptr);

  BackendSet backends = make_oracle_backends(ds, {}, 7);
  PipelineScene ps{scene.scene_id, scene_image(ds, scene)};
  ImageU8 ref_image = load_image(ds.root / entry->file_name);
  TogParams params;

  const TaskRule& hitting = rule_lookup(ds.rules, "hitting");
  int degrees = -1;
  BinaryMask got = predict_task_region_oneshot(ps, obj.object_mask.mask,
                                               ref_image, *entry, hitting,
                                               params, *backends.affordance_oneshot,
                                               &degrees);
  BinaryMask want = task_region_formula(obj.object_mask.mask,
                                        &obj.affordances.at("grasp").mask,
                                        Polarity::Require);
  CHECK(got == want);
  // The alignment scores the full scene crop against the region-masked
  // reference, so a flipped region that blankets more of the scene can
  // legitimately win; only the grid membership of the angle is guaranteed.
  CHECK(degrees % (360 / params.n_rots) == 0);
  CHECK(degrees >= 0);
  CHECK(degrees < 360);

  // None polarity short-circuits; the backend must never be consulted.
  const TaskRule& transport = rule_lookup(ds.rules, "transport");
  BoomOneShot boom;
  BinaryMask none_region = predict_task_region_oneshot(
      ps, obj.object_mask.mask, ref_image, *entry, transport, params, boom);
  CHECK(none_region == obj.object_mask.mask);

  // Empty predictions surface EmptyRegion unless the fallback is on.
  EmptyOneShot empty;
  CHECK(errc_of([&] {
          predict_task_region_oneshot(ps, obj.object_mask.mask, ref_image,
                                      *entry, hitting, params, empty);
        }) == Errc::EmptyRegion);
  TogParams fallback = params;
  fallback.empty_region_fallback = true;
  CHECK(predict_task_region_oneshot(ps, obj.object_mask.mask, ref_image,
                                    *entry, hitting, fallback, empty) ==
        obj.object_mask.mask);
}

TEST_CASE("predict_task_region_standard reproduces the ground truth") {
  const Dataset& ds = fx().ds;
  int obj_idx = 0;
  const SceneAnnotation& scene = eval_scene_with(ds, "dustpan_01", &obj_idx);
  const SceneObject& obj = scene.objects[obj_idx];

  BackendSet backends = make_oracle_backends(ds, {}, 7);
  PipelineScene ps{scene.scene_id, scene_image(ds, scene)};
  TogParams params;

  const TaskRule& sweeping = rule_lookup(ds.rules, "sweeping");
  BinaryMask got = predict_task_region_standard(ps, obj.object_mask.mask,
                                                sweeping, params,
                                                *backends.affordance_segmenter);
  BinaryMask want = task_region_formula(obj.object_mask.mask,
                                        &obj.affordances.at("contain").mask,
                                        Polarity::Avoid);
  CHECK(got == want);
}

TEST_CASE("run_tog noiseless binary run is exact and reproducible") {
  const Dataset& ds = fx().ds;
  int obj_idx = 0;
  const SceneAnnotation& scene = eval_scene_with(ds, "hammer_01", &obj_idx);
  const SceneObject& obj = scene.objects[obj_idx];

  BackendSet backends = make_oracle_backends(ds, {}, 7);
  TogRequest req;
  req.scene = {scene.scene_id, scene_image(ds, scene)};
  req.target_subcategory = "hammer_01";
  req.task = "hitting";
  req.mode = Mode::Binary;

  TogResult a = run_tog(req, backends, ds);
  CHECK(a.raw_segment_count == static_cast<int>(scene.objects.size()));
  CHECK(a.candidates.size() == scene.objects.size());
  REQUIRE(a.selected_index >= 0);
  CHECK(a.selected_mask == obj.object_mask.mask);
  CHECK(a.scores.size() == a.candidates.size());
  CHECK(a.task_region == mask_and(obj.object_mask.mask,
                                  obj.affordances.at("grasp").mask));
  REQUIRE(a.selected_grasp_index >= 0);
  bool is_gt_grasp = false;
  for (const auto& g : obj.grasps)
    if (g.x == a.selected_grasp.x && g.y == a.selected_grasp.y &&
        g.w == a.selected_grasp.w && g.h == a.selected_grasp.h &&
        g.theta == a.selected_grasp.theta)
      is_gt_grasp = true;
  CHECK(is_gt_grasp);
  CHECK_FALSE(a.timings.empty());

  TogResult b = run_tog(req, backends, ds);
  CHECK(a.selected_index == b.selected_index);
  CHECK(a.selected_mask == b.selected_mask);
  CHECK(a.task_region == b.task_region);
  CHECK(a.scores == b.scores);
  CHECK(a.selected_grasp == b.selected_grasp);
}

TEST_CASE("run_tog agrees across modes on a noiseless scene") {
  const Dataset& ds = fx().ds;
  int obj_idx = 0;
  const SceneAnnotation& scene = eval_scene_with(ds, "hammer_01", &obj_idx);
  const SceneObject& obj = scene.objects[obj_idx];
  BackendSet backends = make_oracle_backends(ds, {}, 7);

  for (Mode mode : {Mode::Binary, Mode::OneShot, Mode::Standard}) {
    TogRequest req;
    req.scene = {scene.scene_id, scene_image(ds, scene)};
    req.target_subcategory = "hammer_01";
    req.task = "hitting";
    req.mode = mode;
    TogResult res = run_tog(req, backends, ds);
    CHECK(res.selected_mask == obj.object_mask.mask);
    CHECK(res.task_region == mask_and(obj.object_mask.mask,
                                      obj.affordances.at("grasp").mask));
  }
}

TEST_CASE("run_tog error paths carry codes and stages") {
  const Dataset& ds = fx().ds;
  const SceneAnnotation& scene = eval_scene_with(ds, "hammer_01");
  BackendSet backends = make_oracle_backends(ds, {}, 7);

  TogRequest req;
  req.scene = {scene.scene_id, scene_image(ds, scene)};
  req.target_subcategory = "hammer_01";
  req.task = "hitting";
  req.mode = Mode::Binary;

  {
    TogRequest bad = req;
    bad.task = "juggling";
    CHECK(errc_of([&] { run_tog(bad, backends, ds); }) == Errc::UnknownTask);
  }
  {
    TogRequest bad = req;
    bad.target_subcategory = "unicorn_01";
    CHECK(errc_of([&] { run_tog(bad, backends, ds); }) == Errc::UnknownObject);
  }
  {
    BackendSet missing = backends;
    missing.text_embedder = nullptr;
    CHECK(errc_of([&] { run_tog(req, missing, ds); }) == Errc::BackendFailure);
  }
  {
    // A size window no segment can satisfy: the failure names its stage.
    TogRequest strangled = req;
    strangled.params.min_area = 49999;
    strangled.params.max_area = 50000;
    try {
      run_tog(strangled, backends, ds);
      FAIL("expected EmptyCandidates");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EmptyCandidates);
      CHECK(e.stage() == "segmentation");
    }
  }
  {
    // Binary mode leans on the knowledge-base description.
    Dataset blank = ds;
    for (auto& e : blank.entries)
      if (e.subcategory == "hammer_01") e.description.clear();
    BackendSet oracle2 = make_oracle_backends(blank, {}, 7);
    CHECK(errc_of([&] { run_tog(req, oracle2, blank); }) ==
          Errc::InvariantViolation);
  }
}
