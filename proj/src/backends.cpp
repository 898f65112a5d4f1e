#include "tog/backends.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tog {

const char* backend_kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::Segmenter: return "segmenter";
    case BackendKind::ImageEmbedder: return "image_embedder";
    case BackendKind::TextEmbedder: return "text_embedder";
    case BackendKind::PairEmbedder: return "pair_embedder";
    case BackendKind::Classifier: return "classifier";
    case BackendKind::AffordanceOneShot: return "affordance_oneshot";
    case BackendKind::AffordanceSegmenter: return "affordance_segmenter";
    case BackendKind::GraspProposer: return "grasp_proposer";
  }
  return "unknown";
}

uint64_t stable_hash(uint64_t seed, std::initializer_list<std::string> parts) {
  uint64_t h = 14695981039346656037ull ^ seed;
  auto mix = [&](uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (const auto& p : parts) {
    for (char c : p) mix(static_cast<uint8_t>(c));
    mix(0x1f);  // separator so ("ab","c") != ("a","bc")
  }
  return h;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(Errc::ShapeMismatch, "embedding dims differ");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

AnchorTable::AnchorTable(std::vector<std::string> subcategories, uint64_t seed,
                         int dim)
    : dim_(dim) {
  std::sort(subcategories.begin(), subcategories.end());
  subcategories.erase(
      std::unique(subcategories.begin(), subcategories.end()),
      subcategories.end());
  names_ = std::move(subcategories);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (const auto& name : names_) {
    std::mt19937_64 rng(stable_hash(seed, {"anchor", name}));
    std::vector<double> v(dim_);
    // Redraw until the anchor keeps clear separation from earlier ones.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      double norm = 0;
      for (auto& x : v) {
        x = gauss(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (auto& x : v) x /= norm;
      double worst = 0;
      for (const auto& other : vectors_)
        worst = std::max(worst, std::abs(cosine(v, other)));
      if (worst < 0.3) break;
    }
    vectors_.push_back(v);
  }
}

const std::vector<double>& AnchorTable::anchor(const std::string& subcategory) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), subcategory);
  if (it == names_.end() || *it != subcategory)
    fail(Errc::UnknownObject, "no anchor for subcategory: " + subcategory);
  return vectors_[static_cast<size_t>(it - names_.begin())];
}

namespace {

class Oracle : public Segmenter,
               public ImageEmbedder,
               public TextEmbedder,
               public PairEmbedder,
               public Classifier,
               public AffordanceOneShot,
               public AffordanceSegmenter,
               public GraspProposer {
 public:
  Oracle(const Dataset& ds, NoiseConfig noise, uint64_t seed)
      : ds_(ds), noise_(noise), seed_(seed), anchors_(subcategories(ds), seed) {
    for (const auto& c : ds.categories) labels_.push_back(c.name);
    std::sort(labels_.begin(), labels_.end());
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  }

  // --- Segmenter -----------------------------------------------------------

  std::vector<BinaryMask> segment(const SceneContext& ctx,
                                  const ImageU8& scene) override {
    const SceneAnnotation& sc = gt_scene(ctx);
    std::vector<BinaryMask> out;
    for (size_t i = 0; i < sc.objects.size(); ++i) {
      if (noise_.segment_dropout > 0) {
        std::mt19937_64 rng(key({"seg-drop", sc.scene_id, std::to_string(i)}));
        if (std::uniform_real_distribution<double>(0, 1)(rng) <
            noise_.segment_dropout)
          continue;
      }
      out.push_back(jittered(sc.objects[i].object_mask.mask,
                             {"seg-jit", sc.scene_id, std::to_string(i)}));
    }
    for (size_t i = 0; i < sc.objects.size(); ++i)
      for (int k = 0; k < noise_.fragment_injection; ++k) {
        BinaryMask frag = make_fragment(sc.objects[i].object_mask.mask,
                                        {"frag", sc.scene_id,
                                         std::to_string(i), std::to_string(k)});
        if (mask_area(frag) > 0) out.push_back(std::move(frag));
      }
    for (int k = 0; k < noise_.background_blobs; ++k)
      out.push_back(make_blob(scene.width > 0 ? scene.width : sc.width,
                              scene.height > 0 ? scene.height : sc.height, k,
                              sc.scene_id));
    return out;
  }

  // --- embedders -----------------------------------------------------------

  std::vector<double> embed_image(const SceneContext& ctx,
                                  const BinaryMask& candidate,
                                  const ImageU8&) override {
    const SceneObject& obj = dominant_object(ctx, candidate);
    return noisy_anchor(obj.subcategory, {"embi", ctx.scene_id, mask_key(candidate)});
  }

  std::vector<double> embed_text(const std::string& description) override {
    for (const auto& e : ds_.entries)
      if (e.description == description)
        return noisy_anchor(e.subcategory, {"embt", description});
    fail(Errc::BackendFailure, "description matches no knowledge entry");
  }

  std::vector<double> embed_scene(const SceneContext& ctx,
                                  const BinaryMask& candidate,
                                  const ImageU8&) override {
    const SceneObject& obj = dominant_object(ctx, candidate);
    return noisy_anchor(obj.subcategory, {"embp", ctx.scene_id, mask_key(candidate)});
  }

  std::vector<double> embed_reference(const std::string& subcategory,
                                      const ImageU8&) override {
    anchors_.anchor(subcategory);  // unknown subcategory errors here
    return noisy_anchor(subcategory, {"embr", subcategory});
  }

  // --- Classifier ----------------------------------------------------------

  std::vector<std::string> labels() override { return labels_; }

  std::vector<std::vector<double>> classify(
      const SceneContext& ctx, const std::vector<const BinaryMask*>& candidates,
      const std::vector<ImageU8>&) override {
    std::vector<std::vector<double>> logits;
    for (const BinaryMask* cand : candidates) {
      std::vector<double> row(labels_.size(), 0.0);
      const SceneObject* obj = try_dominant_object(ctx, *cand);
      if (obj) {
        auto it = std::find(labels_.begin(), labels_.end(), obj->category);
        if (it != labels_.end()) row[static_cast<size_t>(it - labels_.begin())] = 10.0;
      }
      if (noise_.embedding_sigma > 0) {
        std::mt19937_64 rng(key({"cls", ctx.scene_id, mask_key(*cand)}));
        std::normal_distribution<double> gauss(0.0, noise_.embedding_sigma);
        for (auto& v : row) v += gauss(rng);
      }
      logits.push_back(std::move(row));
    }
    return logits;
  }

  // --- AffordanceOneShot ---------------------------------------------------

  BinaryMask predict(const AffordanceOneShotQuery& q) override {
    const SceneObject& obj = dominant_object(q.scene, *q.candidate_mask);
    const BinaryMask* aff = nullptr;
    if (q.polarity != Polarity::None) {
      auto it = obj.affordances.find(q.affordance);
      if (it == obj.affordances.end())
        fail(Errc::MissingAffordance,
             "GT object lacks affordance '" + q.affordance + "'");
      aff = &it->second.mask;
    }
    BinaryMask region = task_region_formula(obj.object_mask.mask, aff, q.polarity);
    region = jittered(region, {"aff1", q.scene.scene_id, obj.subcategory, q.affordance});
    return crop_mask(region, *q.scene_crop_tf);
  }

  // --- AffordanceSegmenter -------------------------------------------------

  std::vector<AffordancePrediction> predict(const SceneContext& ctx,
                                            const BinaryMask& candidate,
                                            const CropTransform& tf,
                                            const ImageU8&) override {
    const SceneObject& obj = dominant_object(ctx, candidate);
    std::vector<AffordancePrediction> out;
    for (const auto& [name, am] : obj.affordances) {
      AffordancePrediction p;
      p.label = name;
      BinaryMask m = jittered(am.mask, {"affseg", ctx.scene_id, obj.subcategory, name});
      p.mask = crop_mask(m, tf);
      p.confidence = 0.9;
      if (noise_.confidence_sigma > 0) {
        std::mt19937_64 rng(key({"affconf", ctx.scene_id, obj.subcategory, name}));
        std::normal_distribution<double> gauss(0.0, noise_.confidence_sigma);
        p.confidence = std::clamp(p.confidence + gauss(rng), 0.0, 1.0);
      }
      out.push_back(std::move(p));
    }
    return out;
  }

  // --- GraspProposer -------------------------------------------------------

  std::vector<GraspRect> propose(const SceneContext& ctx,
                                 const ImageU8&) override {
    const SceneAnnotation& sc = gt_scene(ctx);
    std::vector<GraspRect> out;
    for (size_t i = 0; i < sc.objects.size(); ++i) {
      const auto& grasps = sc.objects[i].grasps;
      for (size_t k = 0; k < grasps.size(); ++k) {
        GraspRect g = grasps[k];
        std::mt19937_64 rng(key({"grasp", sc.scene_id, std::to_string(i),
                                 std::to_string(k)}));
        if (noise_.grasp_jitter_px > 0) {
          std::uniform_real_distribution<double> d(-noise_.grasp_jitter_px,
                                                   noise_.grasp_jitter_px);
          g.x += d(rng);
          g.y += d(rng);
        }
        if (noise_.grasp_jitter_deg > 0) {
          std::uniform_real_distribution<double> d(-noise_.grasp_jitter_deg,
                                                   noise_.grasp_jitter_deg);
          g.theta = wrap_theta(g.theta + d(rng));
        }
        // Confidence ranks proposals deterministically per seed.
        double conf = 0.5 +
            0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
        if (noise_.confidence_sigma > 0)
          conf += std::normal_distribution<double>(0.0, noise_.confidence_sigma)(rng);
        g.confidence = std::clamp(conf, 0.0, 1.0);
        out.push_back(g);
      }
    }
    return out;
  }

 private:
  static std::vector<std::string> subcategories(const Dataset& ds) {
    std::vector<std::string> out;
    for (const auto& c : ds.categories) out.push_back(c.subcategory);
    return out;
  }

  uint64_t key(std::initializer_list<std::string> parts) const {
    return stable_hash(seed_, parts);
  }

  static std::string mask_key(const BinaryMask& m) {
    uint64_t h = stable_hash(0, {std::to_string(m.width), std::to_string(m.height)});
    for (size_t i = 0; i < m.bits.size(); ++i)
      if (m.bits[i]) h = h * 1099511628211ull ^ i;
    return std::to_string(h);
  }

  const SceneAnnotation& gt_scene(const SceneContext& ctx) const {
    const SceneAnnotation* sc = ds_.find_scene(ctx.scene_id);
    if (!sc) fail(Errc::BackendFailure, "oracle has no GT for scene " + ctx.scene_id);
    return *sc;
  }

  const SceneObject* try_dominant_object(const SceneContext& ctx,
                                         const BinaryMask& candidate) const {
    const SceneAnnotation& sc = gt_scene(ctx);
    const SceneObject* best = nullptr;
    int64_t best_overlap = 0;
    for (const auto& obj : sc.objects) {
      int64_t ov = mask_intersection_area(candidate, obj.object_mask.mask);
      if (ov > best_overlap) {
        best_overlap = ov;
        best = &obj;
      }
    }
    return best;
  }

  const SceneObject& dominant_object(const SceneContext& ctx,
                                     const BinaryMask& candidate) const {
    const SceneObject* obj = try_dominant_object(ctx, candidate);
    if (!obj) fail(Errc::UnmappableCrop, "crop overlaps no GT object");
    return *obj;
  }

  std::vector<double> noisy_anchor(const std::string& subcategory,
                                   std::initializer_list<std::string> parts) {
    std::vector<double> v = anchors_.anchor(subcategory);
    if (noise_.embedding_sigma > 0) {
      std::mt19937_64 rng(key(parts));
      std::normal_distribution<double> gauss(0.0, noise_.embedding_sigma);
      double norm = 0;
      for (auto& x : v) {
        x += gauss(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      if (norm > 0)
        for (auto& x : v) x /= norm;
    }
    return v;
  }

  BinaryMask jittered(const BinaryMask& m,
                      std::initializer_list<std::string> parts) const {
    if (noise_.boundary_jitter_px <= 0) return m;
    std::mt19937_64 rng(key(parts));
    int j = static_cast<int>(noise_.boundary_jitter_px);
    std::uniform_int_distribution<int> d(-j, j);
    int dx = d(rng), dy = d(rng);
    return translate_mask(m, dx, dy);
  }

  BinaryMask make_fragment(const BinaryMask& parent,
                           std::initializer_list<std::string> parts) const {
    std::mt19937_64 rng(key(parts));
    Bounds b;
    try {
      b = mask_bbox(parent);
    } catch (const Error&) {
      return BinaryMask(parent.width, parent.height);
    }
    // A strict sub-rectangle keeps overlap_ratio(fragment, parent) == 1 while
    // guaranteeing a strictly smaller area.
    for (int attempt = 0; attempt < 16; ++attempt) {
      int w = std::max(1, static_cast<int>(b.width() *
                       std::uniform_real_distribution<double>(0.3, 0.8)(rng)));
      int h = std::max(1, static_cast<int>(b.height() *
                       std::uniform_real_distribution<double>(0.3, 0.8)(rng)));
      int x0 = b.x0 + std::uniform_int_distribution<int>(0, b.width() - w)(rng);
      int y0 = b.y0 + std::uniform_int_distribution<int>(0, b.height() - h)(rng);
      BinaryMask frag(parent.width, parent.height);
      int64_t area = 0;
      for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x)
          if (parent.at(x, y)) {
            frag.set(x, y);
            ++area;
          }
      if (area > 0 && area < mask_area(parent)) return frag;
    }
    return BinaryMask(parent.width, parent.height);
  }

  BinaryMask make_blob(int width, int height, int index,
                       const std::string& scene_id) const {
    std::mt19937_64 rng(key({"blob", scene_id, std::to_string(index)}));
    // Alternate tiny noise specks and oversized background sheets; both sit
    // outside the default segment size window.
    int w, h;
    if (index % 2 == 0) {
      w = std::uniform_int_distribution<int>(5, 15)(rng);
      h = std::uniform_int_distribution<int>(5, 15)(rng);
    } else {
      w = std::uniform_int_distribution<int>(260, 320)(rng);
      h = std::uniform_int_distribution<int>(200, 240)(rng);
    }
    w = std::min(w, width);
    h = std::min(h, height);
    int x0 = std::uniform_int_distribution<int>(0, width - w)(rng);
    int y0 = std::uniform_int_distribution<int>(0, height - h)(rng);
    BinaryMask blob(width, height);
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) blob.set(x, y);
    return blob;
  }

  const Dataset& ds_;
  NoiseConfig noise_;
  uint64_t seed_;
  AnchorTable anchors_;
  std::vector<std::string> labels_;
};

}  // namespace

BackendSet make_oracle_backends(const Dataset& ds, const NoiseConfig& noise,
                                uint64_t seed) {
  auto oracle = std::make_shared<Oracle>(ds, noise, seed);
  BackendSet set;
  set.segmenter = oracle;
  set.image_embedder = oracle;
  set.text_embedder = oracle;
  set.pair_embedder = oracle;
  set.classifier = oracle;
  set.affordance_oneshot = oracle;
  set.affordance_segmenter = oracle;
  set.grasp_proposer = oracle;
  set.concurrent_safe = true;
  return set;
}

}  // namespace tog
