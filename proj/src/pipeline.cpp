#include "tog/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace tog {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Binary: return "binary";
    case Mode::OneShot: return "os";
    case Mode::Standard: return "standard";
  }
  return "binary";
}

Mode mode_from_name(const std::string& s) {
  if (s == "binary") return Mode::Binary;
  if (s == "os") return Mode::OneShot;
  if (s == "standard") return Mode::Standard;
  fail(Errc::SchemaError, "unknown mode: " + s);
}

std::vector<BinaryMask> ssf_filter(const std::vector<BinaryMask>& masks,
                                   double min_area, double max_area,
                                   double tau) {
  // Stage 1: size window, both bounds exclusive.
  std::vector<size_t> kept;
  std::vector<int64_t> areas;
  for (size_t i = 0; i < masks.size(); ++i) {
    int64_t a = mask_area(masks[i]);
    if (static_cast<double>(a) > min_area && static_cast<double>(a) < max_area) {
      kept.push_back(i);
      areas.push_back(a);
    }
  }
  // Stage 2: ascending area so each mask is only tested against larger (or
  // equal, later) survivors; a mask covered beyond tau by one of them goes.
  std::vector<size_t> order(kept.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return areas[a] < areas[b]; });
  std::vector<bool> dropped(kept.size(), false);
  for (size_t oi = 0; oi < order.size(); ++oi) {
    size_t i = order[oi];
    for (size_t oj = oi + 1; oj < order.size(); ++oj) {
      size_t j = order[oj];
      double p = static_cast<double>(mask_intersection_area(
                     masks[kept[i]], masks[kept[j]])) /
                 static_cast<double>(areas[i]);
      if (p > tau) {
        dropped[i] = true;
        break;
      }
    }
  }
  std::vector<BinaryMask> out;
  for (size_t i = 0; i < kept.size(); ++i)
    if (!dropped[i]) out.push_back(masks[kept[i]]);
  return out;
}

ImageU8 make_masked_image(const ImageU8& scene, const BinaryMask& mask) {
  if (scene.width != mask.width || scene.height != mask.height)
    fail(Errc::ShapeMismatch, "mask does not match scene shape");
  ImageU8 out(scene.width, scene.height, scene.channels);
  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x)
      if (mask.at(x, y))
        for (int c = 0; c < scene.channels; ++c)
          out.at(x, y, c) = scene.at(x, y, c);
  return out;
}

std::vector<ImageU8> make_masked_images(const ImageU8& scene,
                                        const std::vector<BinaryMask>& masks) {
  std::vector<ImageU8> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.push_back(make_masked_image(scene, m));
  return out;
}

namespace {

std::vector<double> softmax(const std::vector<double>& v) {
  double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (auto& x : out) x /= sum;
  return out;
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

std::pair<int, std::vector<double>> recognize_zero_shot(
    const std::vector<std::vector<double>>& image_features,
    const std::vector<double>& text_feature) {
  if (image_features.empty()) fail(Errc::EmptyCandidates, "no candidates to score");
  std::vector<double> logits;
  logits.reserve(image_features.size());
  for (const auto& f : image_features)
    logits.push_back(100.0 * cosine(f, text_feature));
  std::vector<double> scores = softmax(logits);
  return {argmax_lowest(scores), scores};
}

int recognize_one_shot(const std::vector<std::vector<double>>& features,
                       const std::vector<double>& reference) {
  if (features.empty()) fail(Errc::EmptyCandidates, "no candidates to score");
  int best = 0;
  double best_d = -1;
  for (size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != reference.size())
      fail(Errc::ShapeMismatch, "embedding dims differ");
    double d = 0;
    for (size_t k = 0; k < reference.size(); ++k) {
      double t = features[i][k] - reference[k];
      d += t * t;
    }
    if (best_d < 0 || d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::pair<int, std::vector<std::vector<double>>> recognize_standard(
    const std::vector<std::vector<double>>& logits, int target_column) {
  if (logits.empty()) fail(Errc::EmptyCandidates, "no candidates to score");
  std::vector<std::vector<double>> probs;
  probs.reserve(logits.size());
  for (const auto& row : logits) {
    if (row.empty() || target_column < 0 ||
        target_column >= static_cast<int>(row.size()))
      fail(Errc::UnknownCategory, "target column outside the label set");
    probs.push_back(softmax(row));
  }
  int best = 0;
  for (size_t i = 1; i < probs.size(); ++i)
    if (probs[i][target_column] > probs[best][target_column])
      best = static_cast<int>(i);
  return {best, probs};
}

BinaryMask reference_task_region(const KnowledgeEntry& entry,
                                 const TaskRule& rule) {
  const BinaryMask* aff = nullptr;
  if (rule.polarity != Polarity::None) {
    auto it = entry.affordances.find(rule.affordance);
    if (it == entry.affordances.end())
      fail(Errc::MissingAffordance,
           "entry '" + entry.subcategory + "' lacks affordance '" +
               rule.affordance + "'");
    aff = &it->second;
  }
  return task_region_formula(entry.object_mask, aff, rule.polarity);
}

AlignResult affordance_align(const ImageU8& scene_crop, const ImageU8& ref_crop,
                             const BinaryMask& ref_region, int n_rots) {
  if (n_rots < 1) fail(Errc::InvariantViolation, "n_rots must be >= 1");
  if (scene_crop.width != scene_crop.height)
    fail(Errc::NonSquareCrop, "scene crop not square");
  if (!scene_crop.same_shape(ref_crop))
    fail(Errc::SideMismatch, "scene and reference crops differ in shape");
  if (ref_region.width != ref_crop.width || ref_region.height != ref_crop.height)
    fail(Errc::SideMismatch, "reference region does not match its crop");

  // Masked reference: only region pixels participate in the comparison.
  ImageU8 masked(ref_crop.width, ref_crop.height, ref_crop.channels);
  for (int y = 0; y < ref_crop.height; ++y)
    for (int x = 0; x < ref_crop.width; ++x)
      if (ref_region.at(x, y))
        for (int c = 0; c < ref_crop.channels; ++c)
          masked.at(x, y, c) = ref_crop.at(x, y, c);

  auto distance = [&](const ImageU8& a, const ImageU8& b) {
    double d = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
      double t = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
      d += t * t;
    }
    return d;
  };

  int step = 360 / n_rots;  // integer division, mirroring the rotation grid
  double best_d = distance(scene_crop, masked);
  int best_r = 0;
  for (int i = 1; i < n_rots; ++i) {
    int r = i * step;
    double d = distance(scene_crop, rotate_crop(masked, r));
    if (d < best_d) {  // strict: ties keep the earlier rotation
      best_d = d;
      best_r = r;
    }
  }
  AlignResult out;
  out.degrees = best_r;
  if (best_r == 0) {
    out.ref_crop = ref_crop;
    out.ref_region = ref_region;
  } else {
    out.ref_crop = rotate_crop(ref_crop, best_r);
    out.ref_region = rotate_crop(ref_region, best_r);
  }
  return out;
}

BinaryMask predict_task_region_oneshot(const PipelineScene& scene,
                                       const BinaryMask& candidate,
                                       const ImageU8& ref_image,
                                       const KnowledgeEntry& entry,
                                       const TaskRule& rule,
                                       const TogParams& params,
                                       AffordanceOneShot& backend,
                                       int* align_degrees) {
  if (align_degrees) *align_degrees = 0;
  if (rule.polarity == Polarity::None) return candidate;  // transport shortcut

  BinaryMask ref_region = reference_task_region(entry, rule);

  CropTransform scene_tf =
      make_crop_transform(mask_bbox(candidate), params.crop_target);
  CropTransform ref_tf =
      make_crop_transform(mask_bbox(entry.object_mask), params.crop_target);

  ImageU8 scene_crop =
      crop_image(make_masked_image(scene.rgb, candidate), scene_tf);
  ImageU8 ref_crop = crop_image(ref_image, ref_tf);
  BinaryMask ref_region_crop = crop_mask(ref_region, ref_tf);

  AlignResult aligned =
      affordance_align(scene_crop, ref_crop, ref_region_crop, params.n_rots);
  if (align_degrees) *align_degrees = aligned.degrees;

  AffordanceOneShotQuery q;
  q.scene.scene_id = scene.id;
  q.candidate_mask = &candidate;
  q.scene_crop_tf = &scene_tf;
  q.scene_crop = &scene_crop;
  q.ref_crop = &aligned.ref_crop;
  q.ref_region = &aligned.ref_region;
  q.polarity = rule.polarity;
  q.affordance = rule.affordance;

  BinaryMask crop_region;
  try {
    crop_region = backend.predict(q);
  } catch (const Error& e) {
    if (e.code() == Errc::MissingAffordance || e.code() == Errc::UnmappableCrop)
      throw;
    fail(Errc::BackendFailure, std::string("affordance backend: ") + e.what());
  }
  if (crop_region.width != params.crop_target ||
      crop_region.height != params.crop_target)
    fail(Errc::BackendFailure, "affordance backend returned a wrong-size mask");

  BinaryMask region = uncrop_mask(crop_region, scene_tf, candidate.width,
                                  candidate.height);
  if (mask_area(region) == 0) {
    if (params.empty_region_fallback) return candidate;
    fail(Errc::EmptyRegion, "predicted task region is empty");
  }
  return region;
}

BinaryMask stack_task_region(const BinaryMask& candidate,
                             const std::vector<AffordancePrediction>& preds,
                             const TaskRule& rule, double conf_threshold) {
  if (rule.polarity == Polarity::None) return candidate;
  BinaryMask stacked(candidate.width, candidate.height);
  for (const auto& p : preds) {
    if (p.label != rule.affordance || p.confidence < conf_threshold) continue;
    stacked = mask_or(stacked, p.mask);
  }
  return task_region_formula(candidate, &stacked, rule.polarity);
}

BinaryMask predict_task_region_standard(const PipelineScene& scene,
                                        const BinaryMask& candidate,
                                        const TaskRule& rule,
                                        const TogParams& params,
                                        AffordanceSegmenter& backend) {
  if (rule.polarity == Polarity::None) return candidate;

  CropTransform tf = make_crop_transform(mask_bbox(candidate), params.crop_target);
  ImageU8 crop = crop_image(make_masked_image(scene.rgb, candidate), tf);
  SceneContext ctx{scene.id};

  std::vector<AffordancePrediction> preds;
  try {
    preds = backend.predict(ctx, candidate, tf, crop);
  } catch (const Error& e) {
    if (e.code() == Errc::UnmappableCrop) throw;
    fail(Errc::BackendFailure, std::string("affordance backend: ") + e.what());
  }
  // Predictions arrive in crop coordinates; map them back onto the frame.
  for (auto& p : preds)
    p.mask = uncrop_mask(p.mask, tf, candidate.width, candidate.height);

  BinaryMask region =
      stack_task_region(candidate, preds, rule, params.affordance_conf);
  if (mask_area(region) == 0) {
    if (params.empty_region_fallback) return candidate;
    fail(Errc::EmptyRegion, "predicted task region is empty");
  }
  return region;
}

std::pair<GraspRect, int> select_grasp(const std::vector<GraspRect>& candidates,
                                       const BinaryMask& region) {
  if (candidates.empty()) fail(Errc::EmptyCandidates, "no grasp candidates");
  if (mask_area(region) == 0) fail(Errc::EmptyRegion, "task region is empty");
  int best = -1;
  double best_conf = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto& g = candidates[i];
    int gx = static_cast<int>(std::lround(g.x));
    int gy = static_cast<int>(std::lround(g.y));
    if (!region.in_bounds(gx, gy) || !region.at(gx, gy)) continue;
    double conf = g.confidence.value_or(0.0);
    if (conf > best_conf) {  // strict: ties keep the earlier candidate
      best_conf = conf;
      best = static_cast<int>(i);
    }
  }
  if (best < 0)
    fail(Errc::NoGraspInRegion, "no grasp candidate centered in the region");
  return {candidates[best], best};
}

namespace {

class StageClock {
 public:
  explicit StageClock(TogResult& result) : result_(result) {}
  void mark(const std::string& stage) {
    auto now = std::chrono::steady_clock::now();
    result_.timings.push_back(
        {stage, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  TogResult& result_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

[[noreturn]] void rethrow_with_stage(Error e, const std::string& stage) {
  if (e.stage().empty()) e.set_stage(stage);
  throw e;
}

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (Error& e) {
    rethrow_with_stage(e, name);
  }
}

}  // namespace

void require_backends(Mode mode, const BackendSet& backends) {
  if (!backends.segmenter || !backends.grasp_proposer)
    fail(Errc::BackendFailure, "segmenter and grasp proposer are required");
  if (mode == Mode::Binary &&
      (!backends.image_embedder || !backends.text_embedder ||
       !backends.affordance_oneshot))
    fail(Errc::BackendFailure, "binary mode backends missing");
  if (mode == Mode::OneShot &&
      (!backends.pair_embedder || !backends.affordance_oneshot))
    fail(Errc::BackendFailure, "os mode backends missing");
  if (mode == Mode::Standard &&
      (!backends.classifier || !backends.affordance_segmenter))
    fail(Errc::BackendFailure, "standard mode backends missing");
}

TogResult run_tog(const TogRequest& request, const BackendSet& backends,
                  const Dataset& ds) {
  const TogParams& p = request.params;
  TogResult result;
  result.mode = request.mode;
  result.scene_id = request.scene.id;
  result.target_subcategory = request.target_subcategory;
  result.task = request.task;

  // Request validation happens before any backend call.
  const TaskRule& rule = rule_lookup(ds.rules, request.task);
  const CategoryInfo* cat = ds.find_subcategory(request.target_subcategory);
  if (!cat)
    fail(Errc::UnknownObject,
         "unknown target object: " + request.target_subcategory);
  const KnowledgeEntry* entry = nullptr;
  if (request.mode != Mode::Standard) {
    entry = ds.find_entry(request.target_subcategory);
    if (!entry)
      fail(Errc::UnknownObject,
           "no knowledge entry for: " + request.target_subcategory);
  }
  require_backends(request.mode, backends);
  if (request.mode == Mode::Binary && entry->description.empty())
    fail(Errc::InvariantViolation,
         "entry '" + entry->subcategory + "' has no description for zero-shot");

  SceneContext ctx{request.scene.id};
  StageClock clock(result);

  // Stage 1: segment + filter.
  std::vector<BinaryMask> kept = stage("segmentation", [&] {
    std::vector<BinaryMask> raw = backends.segmenter->segment(ctx, request.scene.rgb);
    result.raw_segment_count = static_cast<int>(raw.size());
    std::vector<BinaryMask> filtered =
        ssf_filter(raw, p.min_area, p.max_area, p.tau);
    if (filtered.empty())
      fail(Errc::EmptyCandidates, "no segments survived filtering");
    return filtered;
  });
  result.candidates = kept;
  clock.mark("segmentation");

  // Stage 2: recognize the target object among the candidates.
  ImageU8 ref_image;  // loaded once for the one-shot stages
  if (entry) ref_image = load_image(ds.root / entry->file_name);

  int selected = stage("recognition", [&]() -> int {
    auto crop_of = [&](const BinaryMask& m) {
      CropTransform tf = make_crop_transform(mask_bbox(m), p.crop_target);
      return crop_image(make_masked_image(request.scene.rgb, m), tf);
    };
    switch (request.mode) {
      case Mode::Binary: {
        std::vector<std::vector<double>> feats;
        for (const auto& m : kept)
          feats.push_back(
              backends.image_embedder->embed_image(ctx, m, crop_of(m)));
        std::vector<double> text =
            backends.text_embedder->embed_text(entry->description);
        auto [idx, scores] = recognize_zero_shot(feats, text);
        result.scores = scores;
        return idx;
      }
      case Mode::OneShot: {
        std::vector<std::vector<double>> feats;
        for (const auto& m : kept)
          feats.push_back(backends.pair_embedder->embed_scene(ctx, m, crop_of(m)));
        CropTransform ref_tf =
            make_crop_transform(mask_bbox(entry->object_mask), p.crop_target);
        ImageU8 ref_crop =
            crop_image(make_masked_image(ref_image, entry->object_mask), ref_tf);
        std::vector<double> ref_feat = backends.pair_embedder->embed_reference(
            entry->subcategory, ref_crop);
        return recognize_one_shot(feats, ref_feat);
      }
      case Mode::Standard: {
        std::vector<std::string> labels = backends.classifier->labels();
        auto it = std::find(labels.begin(), labels.end(), cat->name);
        if (it == labels.end())
          fail(Errc::UnknownCategory,
               "category '" + cat->name + "' not in the trained label set");
        std::vector<const BinaryMask*> cands;
        std::vector<ImageU8> crops;
        for (const auto& m : kept) {
          cands.push_back(&m);
          crops.push_back(crop_of(m));
        }
        auto logits = backends.classifier->classify(ctx, cands, crops);
        if (logits.size() != kept.size())
          fail(Errc::BackendFailure, "classifier row count mismatch");
        auto [idx, probs] =
            recognize_standard(logits, static_cast<int>(it - labels.begin()));
        result.scores.clear();
        for (const auto& row : probs)
          result.scores.push_back(row[static_cast<size_t>(it - labels.begin())]);
        return idx;
      }
    }
    fail(Errc::BackendFailure, "unreachable mode");
  });
  result.selected_index = selected;
  result.selected_mask = kept[static_cast<size_t>(selected)];
  clock.mark("recognition");

  // Stage 3: task-suitable region on the selected candidate.
  result.task_region = stage("region", [&] {
    if (request.mode == Mode::Standard)
      return predict_task_region_standard(request.scene, result.selected_mask,
                                          rule, p, *backends.affordance_segmenter);
    return predict_task_region_oneshot(request.scene, result.selected_mask,
                                       ref_image, *entry, rule, p,
                                       *backends.affordance_oneshot,
                                       &result.align_degrees);
  });
  clock.mark("region");

  // Stage 4: grasp proposal + in-region selection.
  stage("grasp", [&] {
    result.grasp_candidates =
        backends.grasp_proposer->propose(ctx, request.scene.rgb);
    auto [g, idx] = select_grasp(result.grasp_candidates, result.task_region);
    result.selected_grasp = g;
    result.selected_grasp_index = idx;
    return 0;
  });
  clock.mark("grasp");
  return result;
}

}  // namespace tog
