#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <optional>
#include <random>

#include "helpers.hpp"
#include "tog/backends.hpp"
#include "tog/fixture.hpp"
#include "tog/protocol.hpp"

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

std::vector<std::string> fixture_subcategories() {
  std::vector<std::string> subs;
  for (const auto& c : fx().ds.categories) subs.push_back(c.subcategory);
  return subs;
}

const SceneAnnotation& eval_scene(const Dataset& ds) {
  for (const auto& s : ds.scenes)
    if (s.split == "KC-KSC") return s;
  throw std::runtime_error("fixture has no eval scene");
}

const ImageU8& dummy_crop() {
  static ImageU8 img(8, 8, 3, 0);
  return img;
}

}  // namespace

TEST_CASE("stable_hash keys are order- and boundary-sensitive") {
  CHECK(stable_hash(1, {"ab", "c"}) != stable_hash(1, {"a", "bc"}));
  CHECK(stable_hash(1, {"x", "y"}) != stable_hash(1, {"y", "x"}));
  CHECK(stable_hash(1, {"x"}) == stable_hash(1, {"x"}));
  CHECK(stable_hash(1, {"x"}) != stable_hash(2, {"x"}));
  CHECK(stable_hash(1, {"x", ""}) != stable_hash(1, {"x"}));
}

TEST_CASE("cosine basics") {
  CHECK(cosine({1, 0}, {0, 1}) == 0.0);
  CHECK(cosine({2, 0}, {5, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine({1, 0}, {-2, 0}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(cosine({0, 0}, {1, 1}) == 0.0);
  CHECK(errc_of([&] { cosine({1, 2}, {1, 2, 3}); }) == Errc::ShapeMismatch);
}

TEST_CASE("anchor table gives separated unit vectors deterministically") {
  auto subs = fixture_subcategories();
  AnchorTable table(subs, 7);
  CHECK(table.dim() == 64);

  for (const auto& s : subs) {
    const auto& v = table.anchor(s);
    REQUIRE(v.size() == 64);
    double norm = 0;
    for (double x : v) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (size_t i = 0; i < subs.size(); ++i)
    for (size_t j = i + 1; j < subs.size(); ++j)
      CHECK(std::abs(cosine(table.anchor(subs[i]), table.anchor(subs[j]))) < 0.3);

  AnchorTable again(subs, 7);
  for (const auto& s : subs) CHECK(again.anchor(s) == table.anchor(s));

  AnchorTable other(subs, 8);
  CHECK(other.anchor(subs[0]) != table.anchor(subs[0]));

  CHECK(errc_of([&] { table.anchor("unicorn_01"); }) == Errc::UnknownObject);
}

TEST_CASE("noiseless oracle answers straight from ground truth") {
  const Dataset& ds = fx().ds;
  BackendSet b = make_oracle_backends(ds, {}, 7);
  CHECK(b.concurrent_safe);

  const SceneAnnotation& scene = eval_scene(ds);
  SceneContext ctx{scene.scene_id};
  ImageU8 img = load_image(ds.root / scene.file_name);

  auto masks = b.segmenter->segment(ctx, img);
  REQUIRE(masks.size() == scene.objects.size());
  for (size_t i = 0; i < masks.size(); ++i)
    CHECK(masks[i] == scene.objects[i].object_mask.mask);

  AnchorTable table(fixture_subcategories(), 7);
  const SceneObject& obj = scene.objects[0];
  CHECK(b.image_embedder->embed_image(ctx, obj.object_mask.mask, dummy_crop()) ==
        table.anchor(obj.subcategory));
  CHECK(b.pair_embedder->embed_scene(ctx, obj.object_mask.mask, dummy_crop()) ==
        table.anchor(obj.subcategory));
  CHECK(b.pair_embedder->embed_reference(obj.subcategory, dummy_crop()) ==
        table.anchor(obj.subcategory));

  const KnowledgeEntry* entry = ds.find_entry(obj.subcategory);
  REQUIRE(entry != nullptr);
  CHECK(b.text_embedder->embed_text(entry->description) ==
        table.anchor(obj.subcategory));
  CHECK(errc_of([&] { b.text_embedder->embed_text("no such thing"); }) ==
        Errc::BackendFailure);

  auto labels = b.classifier->labels();
  CHECK(std::is_sorted(labels.begin(), labels.end()));
  CHECK(std::adjacent_find(labels.begin(), labels.end()) == labels.end());
  std::vector<const BinaryMask*> cands;
  for (const auto& o : scene.objects) cands.push_back(&o.object_mask.mask);
  auto logits = b.classifier->classify(ctx, cands, {});
  REQUIRE(logits.size() == scene.objects.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    REQUIRE(logits[i].size() == labels.size());
    for (size_t c = 0; c < labels.size(); ++c) {
      double want = labels[c] == scene.objects[i].category ? 10.0 : 0.0;
      CHECK(logits[i][c] == want);
    }
  }

  auto grasps = b.grasp_proposer->propose(ctx, img);
  size_t total = 0;
  for (const auto& o : scene.objects) total += o.grasps.size();
  REQUIRE(grasps.size() == total);
  size_t gi = 0;
  for (const auto& o : scene.objects)
    for (const auto& g : o.grasps) {
      CHECK(grasps[gi].x == g.x);
      CHECK(grasps[gi].y == g.y);
      CHECK(grasps[gi].w == g.w);
      CHECK(grasps[gi].h == g.h);
      CHECK(grasps[gi].theta == g.theta);
      REQUIRE(grasps[gi].confidence.has_value());
      CHECK(*grasps[gi].confidence >= 0.5);
      CHECK(*grasps[gi].confidence <= 1.0);
      ++gi;
    }

  CHECK(errc_of([&] { b.segmenter->segment({"999"}, img); }) ==
        Errc::BackendFailure);
  BinaryMask blank(scene.width, scene.height);
  CHECK(errc_of([&] {
          b.image_embedder->embed_image(ctx, blank, dummy_crop());
        }) == Errc::UnmappableCrop);
}

TEST_CASE("oracle affordance backends reproduce task regions") {
  const Dataset& ds = fx().ds;
  BackendSet b = make_oracle_backends(ds, {}, 7);
  const SceneAnnotation& scene = eval_scene(ds);
  SceneContext ctx{scene.scene_id};
  const SceneObject& obj = scene.objects[0];
  CropTransform tf = make_crop_transform(mask_bbox(obj.object_mask.mask), 256);

  auto preds = b.affordance_segmenter->predict(ctx, obj.object_mask.mask, tf,
                                               dummy_crop());
  REQUIRE(preds.size() == obj.affordances.size());
  size_t pi = 0;
  for (const auto& [name, am] : obj.affordances) {
    CHECK(preds[pi].label == name);
    CHECK(preds[pi].confidence == 0.9);
    CHECK(preds[pi].mask == crop_mask(am.mask, tf));
    ++pi;
  }

  // Every fixture object catalogues a grasp affordance except cables.
  std::string aff = obj.affordances.count("grasp") ? "grasp"
                                                   : obj.affordances.begin()->first;
  AffordanceOneShotQuery q;
  q.scene = ctx;
  q.candidate_mask = &obj.object_mask.mask;
  q.scene_crop_tf = &tf;
  q.polarity = Polarity::Require;
  q.affordance = aff;
  BinaryMask got = b.affordance_oneshot->predict(q);
  BinaryMask want = crop_mask(task_region_formula(obj.object_mask.mask,
                                                  &obj.affordances.at(aff).mask,
                                                  Polarity::Require),
                              tf);
  CHECK(got == want);

  AffordanceOneShotQuery missing = q;
  missing.affordance = "levitate";
  CHECK(errc_of([&] { b.affordance_oneshot->predict(missing); }) ==
        Errc::MissingAffordance);
}

TEST_CASE("noisy oracle is a pure function of seed and inputs") {
  const Dataset& ds = fx().ds;
  NoiseConfig noise;
  noise.segment_dropout = 0.3;
  noise.fragment_injection = 2;
  noise.background_blobs = 2;
  noise.boundary_jitter_px = 2;
  noise.embedding_sigma = 0.4;
  noise.grasp_jitter_px = 3;
  noise.grasp_jitter_deg = 10;
  noise.confidence_sigma = 0.2;

  BackendSet a = make_oracle_backends(ds, noise, 7);
  BackendSet b = make_oracle_backends(ds, noise, 7);
  const SceneAnnotation& scene = eval_scene(ds);
  SceneContext ctx{scene.scene_id};
  ImageU8 img = load_image(ds.root / scene.file_name);
  const BinaryMask& cand = scene.objects[0].object_mask.mask;

  // Different call orders, identical answers.
  auto emb_a = a.image_embedder->embed_image(ctx, cand, dummy_crop());
  auto seg_a = a.segmenter->segment(ctx, img);
  auto grasp_a = a.grasp_proposer->propose(ctx, img);

  auto seg_b = b.segmenter->segment(ctx, img);
  auto grasp_b = b.grasp_proposer->propose(ctx, img);
  auto emb_b = b.image_embedder->embed_image(ctx, cand, dummy_crop());

  CHECK(emb_a == emb_b);
  REQUIRE(seg_a.size() == seg_b.size());
  for (size_t i = 0; i < seg_a.size(); ++i) CHECK(seg_a[i] == seg_b[i]);
  REQUIRE(grasp_a.size() == grasp_b.size());
  for (size_t i = 0; i < grasp_a.size(); ++i) {
    CHECK(grasp_a[i].x == grasp_b[i].x);
    CHECK(grasp_a[i].theta == grasp_b[i].theta);
    CHECK(grasp_a[i].confidence == grasp_b[i].confidence);
  }

  BackendSet c = make_oracle_backends(ds, noise, 8);
  CHECK(c.image_embedder->embed_image(ctx, cand, dummy_crop()) != emb_a);
}

TEST_CASE("injected fragments are strict subsets, blobs sit outside the window") {
  const Dataset& ds = fx().ds;
  const SceneAnnotation& scene = eval_scene(ds);
  SceneContext ctx{scene.scene_id};
  ImageU8 img = load_image(ds.root / scene.file_name);

  NoiseConfig frag_noise;
  frag_noise.fragment_injection = 2;
  BackendSet fragged = make_oracle_backends(ds, frag_noise, 11);
  auto masks = fragged.segmenter->segment(ctx, img);
  size_t n = scene.objects.size();
  REQUIRE(masks.size() > n);
  for (size_t i = n; i < masks.size(); ++i) {
    int64_t area = mask_area(masks[i]);
    REQUIRE(area > 0);
    bool subset_of_parent = false;
    for (const auto& o : scene.objects) {
      int64_t parent = mask_area(o.object_mask.mask);
      if (overlap_ratio(masks[i], o.object_mask.mask) == 1.0 && area < parent)
        subset_of_parent = true;
    }
    CHECK(subset_of_parent);
  }

  NoiseConfig blob_noise;
  blob_noise.background_blobs = 4;
  BackendSet blobbed = make_oracle_backends(ds, blob_noise, 11);
  auto with_blobs = blobbed.segmenter->segment(ctx, img);
  REQUIRE(with_blobs.size() == n + 4);
  for (size_t i = n; i < with_blobs.size(); ++i) {
    int64_t area = mask_area(with_blobs[i]);
    CHECK((area <= 400 || area >= 50000));
  }
}

TEST_CASE("wire masks round-trip bit-exactly") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    int w = std::uniform_int_distribution<int>(1, 40)(rng);
    int h = std::uniform_int_distribution<int>(1, 30)(rng);
    BinaryMask m(w, h);
    std::bernoulli_distribution bit(0.3);
    for (auto& px : m.bits) px = bit(rng);
    CHECK(mask_from_wire(mask_to_wire(m)) == m);
  }

  BinaryMask empty(7, 3);
  CHECK(mask_from_wire(mask_to_wire(empty)) == empty);

  json poly = {{"width", 10},
               {"height", 8},
               {"polygons", json::array({json::array({2, 1, 7, 1, 7, 5, 2, 5})})}};
  CHECK(mask_from_wire(poly) == rect_mask(10, 8, 2, 1, 5, 4));

  CHECK(errc_of([&] { mask_from_wire(json{{"width", 4}}); }) ==
        Errc::ProtocolError);
  CHECK(errc_of([&] {
          mask_from_wire(json{{"width", 0}, {"height", 4}, {"bits", ""}});
        }) == Errc::ProtocolError);
}

TEST_CASE("process backend handshake and echo round-trips") {
  ProcessBackend echo({TOG_STUB_PATH, "echo"});
  CHECK(echo.kinds().size() == 8);
  CHECK_FALSE(echo.concurrent());

  std::mt19937_64 rng(9);
  for (int batch = 0; batch < 6; ++batch) {
    std::vector<BinaryMask> sent;
    json args;
    args["masks"] = json::array();
    for (int i = 0; i < 10; ++i) {
      BinaryMask m = testutil::random_rect_mask(rng, 24, 18, 16);
      args["masks"].push_back(mask_to_wire(m));
      sent.push_back(std::move(m));
    }
    json res = echo.call("segment", args);
    REQUIRE(res.at("masks").size() == sent.size());
    for (size_t i = 0; i < sent.size(); ++i)
      CHECK(mask_from_wire(res.at("masks")[i]) == sent[i]);
  }

  CHECK(errc_of([&] { echo.call("unheard_of", json::object()); }) ==
        Errc::BackendFailure);
}

TEST_CASE("process backend failure modes") {
  {
    ProcessBackend bad({TOG_STUB_PATH, "bad-id"});
    CHECK(errc_of([&] { bad.call("segment", json::object()); }) ==
          Errc::ProtocolError);
  }
  {
    ProcessBackend hang({TOG_STUB_PATH, "hang"}, 0.5);
    auto t0 = std::chrono::steady_clock::now();
    CHECK(errc_of([&] { hang.call("segment", json::object()); }) ==
          Errc::Timeout);
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 5.0);
  }
  {
    ProcessBackend die({TOG_STUB_PATH, "die"});
    CHECK(errc_of([&] { die.call("segment", json::object()); }) ==
          Errc::ProcessExit);
  }
  CHECK(errc_of([&] {
          ProcessBackend nope({"/no/such/binary/anywhere"});
        }) == Errc::ProcessExit);
}

TEST_CASE("external adapters run against the echo stub") {
  ExternalBackendOptions opts;
  opts.command = {TOG_STUB_PATH, "echo"};
  BackendSet b = make_external_backends(opts);
  CHECK_FALSE(b.concurrent_safe);

  CHECK(b.text_embedder->embed_text("hello") ==
        std::vector<double>{1, 0, 0, 0});
  CHECK(b.classifier->labels() == std::vector<std::string>{"thing", "other"});

  SceneContext ctx{"42"};
  auto grasps = b.grasp_proposer->propose(ctx, ImageU8(16, 12, 3, 0));
  CHECK(grasps.empty());
}

TEST_CASE("backend config parsing") {
  const Dataset& ds = fx().ds;
  const SceneAnnotation& scene = eval_scene(ds);
  SceneContext ctx{scene.scene_id};
  ImageU8 img = load_image(ds.root / scene.file_name);

  json oracle_cfg = {{"transport", "oracle"}, {"seed", 7}};
  BackendSet from_cfg = make_backends_from_config(oracle_cfg, ds);
  BackendSet direct = make_oracle_backends(ds, {}, 7);
  auto a = from_cfg.segmenter->segment(ctx, img);
  auto b = direct.segmenter->segment(ctx, img);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  json with_noise = {{"transport", "oracle"},
                     {"seed", 3},
                     {"noise", {{"segment_dropout", 0.5}}}};
  CHECK_NOTHROW(make_backends_from_config(with_noise, ds));

  CHECK(errc_of([&] {
          make_backends_from_config({{"transport", "oracle"}, {"zeal", 1}}, ds);
        }) == Errc::SchemaError);
  CHECK(errc_of([&] {
          make_backends_from_config(
              {{"transport", "oracle"}, {"noise", {{"chaos", 1}}}}, ds);
        }) == Errc::SchemaError);
  CHECK(errc_of([&] {
          make_backends_from_config(
              {{"transport", "oracle"}, {"noise", {{"segment_dropout", 1.5}}}},
              ds);
        }) == Errc::SchemaError);
  CHECK(errc_of([&] {
          make_backends_from_config({{"transport", "carrier_pigeon"}}, ds);
        }) == Errc::SchemaError);
  CHECK(errc_of([&] {
          make_backends_from_config({{"transport", "process"}}, ds);
        }) == Errc::SchemaError);
  CHECK(errc_of([&] { make_backends_from_config(json::array(), ds); }) ==
        Errc::SchemaError);

  json process_cfg = {{"transport", "process"},
                      {"command", {TOG_STUB_PATH, "echo"}},
                      {"timeout_s", 10}};
  BackendSet proc = make_backends_from_config(process_cfg, ds);
  CHECK(proc.text_embedder->embed_text("x") == std::vector<double>{1, 0, 0, 0});
}
