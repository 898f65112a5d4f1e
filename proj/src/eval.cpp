#include "tog/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace tog {

std::vector<double> default_ap_grid() {
  std::vector<double> g;
  for (int i = 0; i < 10; ++i) g.push_back(0.50 + 0.05 * i);
  return g;
}

void validate_eval_config(const EvalConfig& cfg) {
  if (cfg.iou_threshold <= 0)
    fail(Errc::InvariantViolation, "iou_threshold must be positive");
  if (cfg.angle_threshold_deg <= 0)
    fail(Errc::InvariantViolation, "angle_threshold_deg must be positive");
  if (cfg.ap_grid.empty())
    fail(Errc::InvariantViolation, "ap_grid must not be empty");
  for (size_t i = 1; i < cfg.ap_grid.size(); ++i)
    if (cfg.ap_grid[i] <= cfg.ap_grid[i - 1])
      fail(Errc::InvariantViolation, "ap_grid must be strictly increasing");
  if (cfg.area_small <= 0 || cfg.area_large <= cfg.area_small)
    fail(Errc::InvariantViolation, "size bucket cuts must be increasing");
}

bool grasp_success(const GraspRect& pred, const std::vector<GraspRect>& gts,
                   const EvalConfig& cfg) {
  if (gts.empty()) fail(Errc::NoGroundTruth, "no ground-truth grasps");
  for (const auto& gt : gts) {
    if (rotated_iou(pred, gt) > cfg.iou_threshold &&
        angle_diff(pred.theta, gt.theta) <= cfg.angle_threshold_deg)
      return true;
  }
  return false;
}

bool tog_success(const GraspRect& pred, const std::vector<GraspRect>& gts,
                 const BinaryMask& gt_region, const EvalConfig& cfg) {
  if (mask_area(gt_region) == 0)
    fail(Errc::EmptyRegion, "ground-truth task region is empty");
  if (!grasp_success(pred, gts, cfg)) return false;
  int cx = static_cast<int>(std::lround(pred.x));
  int cy = static_cast<int>(std::lround(pred.y));
  return gt_region.in_bounds(cx, cy) && gt_region.at(cx, cy);
}

double pixel_f1(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_shape(gt)) fail(Errc::ShapeMismatch, "mask shapes differ");
  int64_t inter = mask_intersection_area(pred, gt);
  int64_t denom = mask_area(pred) + mask_area(gt);
  if (denom == 0) return 0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(denom);
}

// ---------------------------------------------------------------------------
// COCO-style AP

namespace {

enum class SizeRange { All, Small, Medium, Large };

bool range_contains(SizeRange r, double area, const EvalConfig& cfg) {
  switch (r) {
    case SizeRange::All: return true;
    case SizeRange::Small: return area < cfg.area_small;
    case SizeRange::Medium: return area >= cfg.area_small && area <= cfg.area_large;
    case SizeRange::Large: return area > cfg.area_large;
  }
  return true;
}

struct DetRef {
  int img = 0;
  int idx = 0;
  double conf = 0;
  double area = 0;
};

struct ApBatch {
  std::vector<DetRef> dets;                         // confidence-descending
  std::vector<std::vector<double>> gt_areas;        // per image
  std::vector<std::vector<std::vector<double>>> iou;  // [img][det][gt]
};

// One greedy matching pass; returns the AP and collects TP IoUs.
double ap_at(const ApBatch& b, double t, SizeRange range,
             const EvalConfig& cfg, std::vector<double>* tp_ious) {
  int n_images = static_cast<int>(b.gt_areas.size());
  std::vector<std::vector<char>> gt_matched(n_images);
  std::vector<std::vector<char>> gt_ignored(n_images);
  int n_gt = 0;
  for (int i = 0; i < n_images; ++i) {
    gt_matched[i].assign(b.gt_areas[i].size(), 0);
    gt_ignored[i].resize(b.gt_areas[i].size());
    for (size_t g = 0; g < b.gt_areas[i].size(); ++g) {
      bool ig = !range_contains(range, b.gt_areas[i][g], cfg);
      gt_ignored[i][g] = ig;
      if (!ig) ++n_gt;
    }
  }
  if (n_gt == 0) return -1;

  std::vector<char> tp, fp;  // per counted (non-ignored) detection, in order
  for (const auto& d : b.dets) {
    const auto& row = b.iou[d.img][d.idx];
    int best_g = -1;
    double best_iou = 0;
    // Prefer a real (non-ignored) ground truth.
    for (size_t g = 0; g < row.size(); ++g) {
      if (gt_matched[d.img][g] || gt_ignored[d.img][g]) continue;
      if (row[g] >= t && row[g] > best_iou) {
        best_iou = row[g];
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0) {
      gt_matched[d.img][best_g] = 1;
      tp.push_back(1);
      fp.push_back(0);
      if (tp_ious) tp_ious->push_back(best_iou);
      continue;
    }
    // Otherwise an ignored ground truth absorbs the detection.
    for (size_t g = 0; g < row.size(); ++g) {
      if (gt_matched[d.img][g] || !gt_ignored[d.img][g]) continue;
      if (row[g] >= t && row[g] > best_iou) {
        best_iou = row[g];
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0) {
      gt_matched[d.img][best_g] = 1;  // absorbed; detection not counted
      continue;
    }
    if (!range_contains(range, d.area, cfg)) continue;  // out-of-range miss
    tp.push_back(0);
    fp.push_back(1);
  }

  // 101-point interpolated precision over recall.
  size_t n = tp.size();
  std::vector<double> precision(n), recall(n);
  int ctp = 0, cfp = 0;
  for (size_t k = 0; k < n; ++k) {
    ctp += tp[k];
    cfp += fp[k];
    precision[k] = static_cast<double>(ctp) / (ctp + cfp);
    recall[k] = static_cast<double>(ctp) / n_gt;
  }
  for (size_t k = n; k-- > 1;)
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double sum = 0;
  for (int r = 0; r <= 100; ++r) {
    double rt = r / 100.0;
    auto it = std::lower_bound(recall.begin(), recall.end(), rt);
    if (it != recall.end()) sum += precision[static_cast<size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

double ap_over_grid(const ApBatch& b, SizeRange range, const EvalConfig& cfg) {
  double sum = 0;
  int n = 0;
  for (double t : cfg.ap_grid) {
    double a = ap_at(b, t, range, cfg, nullptr);
    if (a < 0) return -1;  // no ground truth in this range at all
    sum += a;
    ++n;
  }
  return sum / n;
}

}  // namespace

ApTable mask_ap(const std::vector<std::vector<ScoredMask>>& predictions,
                const std::vector<std::vector<BinaryMask>>& gts,
                const EvalConfig& cfg) {
  if (predictions.size() != gts.size())
    fail(Errc::ShapeMismatch, "prediction and ground-truth image counts differ");
  validate_eval_config(cfg);

  ApBatch b;
  b.gt_areas.resize(gts.size());
  b.iou.resize(gts.size());
  for (size_t i = 0; i < gts.size(); ++i) {
    for (const auto& g : gts[i])
      b.gt_areas[i].push_back(static_cast<double>(mask_area(g)));
    b.iou[i].resize(predictions[i].size());
    for (size_t p = 0; p < predictions[i].size(); ++p) {
      b.iou[i][p].resize(gts[i].size());
      for (size_t g = 0; g < gts[i].size(); ++g)
        b.iou[i][p][g] = mask_iou(predictions[i][p].mask, gts[i][g]);
      b.dets.push_back({static_cast<int>(i), static_cast<int>(p),
                        predictions[i][p].confidence,
                        static_cast<double>(mask_area(predictions[i][p].mask))});
    }
  }
  std::stable_sort(b.dets.begin(), b.dets.end(),
                   [](const DetRef& a, const DetRef& c) { return a.conf > c.conf; });

  ApTable out;
  out.ap = ap_over_grid(b, SizeRange::All, cfg);
  std::vector<double> tp_ious;
  out.ap50 = ap_at(b, 0.50, SizeRange::All, cfg, &tp_ious);
  out.ap75 = ap_at(b, 0.75, SizeRange::All, cfg, nullptr);
  if (out.ap50 < 0) out.ap50 = 0;  // no ground truth at all
  if (out.ap75 < 0) out.ap75 = 0;
  if (out.ap < 0) out.ap = 0;
  out.ap_small = ap_over_grid(b, SizeRange::Small, cfg);
  out.ap_medium = ap_over_grid(b, SizeRange::Medium, cfg);
  out.ap_large = ap_over_grid(b, SizeRange::Large, cfg);
  out.mean_iou =
      tp_ious.empty()
          ? 0
          : std::accumulate(tp_ious.begin(), tp_ious.end(), 0.0) / tp_ious.size();
  return out;
}

// ---------------------------------------------------------------------------
// Recognition F1

RecognitionScore f1_recognition(const std::vector<std::pair<int, int>>& trials) {
  if (trials.empty()) fail(Errc::EmptyTrials, "no recognition trials");
  std::set<int> classes;
  for (const auto& [pred, truth] : trials) classes.insert(truth);

  RecognitionScore out;
  int correct = 0;
  for (const auto& [pred, truth] : trials)
    if (pred == truth) ++correct;
  out.accuracy = static_cast<double>(correct) / trials.size();

  double f1_sum = 0;
  int tp_all = 0, fp_all = 0, fn_all = 0;
  for (int c : classes) {
    int tp = 0, fp = 0, fn = 0;
    for (const auto& [pred, truth] : trials) {
      if (pred == c && truth == c) ++tp;
      else if (pred == c) ++fp;
      else if (truth == c) ++fn;
    }
    int denom = 2 * tp + fp + fn;
    f1_sum += denom == 0 ? 0 : 2.0 * tp / denom;
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }
  out.macro_f1 = f1_sum / static_cast<double>(classes.size());
  int denom = 2 * tp_all + fp_all + fn_all;
  out.micro_f1 = denom == 0 ? 0 : 2.0 * tp_all / denom;
  return out;
}

// ---------------------------------------------------------------------------
// Split evaluation

namespace {

struct TrialSpec {
  int scene_idx = 0;
  int obj_idx = 0;
  int rule_idx = 0;
};

int class_index(const std::vector<std::string>& names, const std::string& n) {
  auto it = std::lower_bound(names.begin(), names.end(), n);
  if (it == names.end() || *it != n) return -1;
  return static_cast<int>(it - names.begin());
}

}  // namespace

EvalReport evaluate_split(const Dataset& ds, const EvalConfig& cfg) {
  validate_eval_config(cfg);
  require_backends(cfg.mode, cfg.backends);

  std::vector<int> scene_ids;
  for (size_t i = 0; i < ds.scenes.size(); ++i)
    if (ds.scenes[i].split == cfg.split) scene_ids.push_back(static_cast<int>(i));
  if (scene_ids.empty())
    fail(Errc::EmptySplit, "no scene carries split tag '" + cfg.split + "'");

  EvalReport report;
  report.split = cfg.split;
  report.mode = mode_name(cfg.mode);
  report.scene_count = static_cast<int>(scene_ids.size());
  for (const auto& c : ds.categories) report.class_names.push_back(c.subcategory);
  std::sort(report.class_names.begin(), report.class_names.end());
  report.class_names.erase(
      std::unique(report.class_names.begin(), report.class_names.end()),
      report.class_names.end());

  // Scene images load once; trials of a scene share the buffer read-only.
  std::vector<ImageU8> scene_rgb(scene_ids.size());
  for (size_t k = 0; k < scene_ids.size(); ++k)
    scene_rgb[k] = load_image(ds.root / ds.scenes[scene_ids[k]].file_name);

  std::vector<TrialSpec> specs;
  for (size_t k = 0; k < scene_ids.size(); ++k) {
    const auto& scene = ds.scenes[scene_ids[k]];
    for (size_t oi = 0; oi < scene.objects.size(); ++oi)
      for (size_t ri = 0; ri < ds.rules.size(); ++ri)
        if (ds.rules[ri].applicable(scene.objects[oi].category))
          specs.push_back({static_cast<int>(k), static_cast<int>(oi),
                           static_cast<int>(ri)});
  }
  report.trial_count = static_cast<int>(specs.size());

  // One segmentation pass per scene feeds both the AP table and failure
  // attribution for trials that abort mid-pipeline (the oracle transport is
  // pure, so this matches what each trial's own segment call produced).
  std::vector<std::vector<BinaryMask>> survivors(scene_ids.size());
  for (size_t k = 0; k < scene_ids.size(); ++k) {
    try {
      SceneContext ctx{ds.scenes[scene_ids[k]].scene_id};
      auto raw = cfg.backends.segmenter->segment(ctx, scene_rgb[k]);
      survivors[k] =
          ssf_filter(raw, cfg.params.min_area, cfg.params.max_area, cfg.params.tau);
    } catch (const Error&) {
      // A scene the segmenter cannot handle scores as all-miss.
    }
  }

  auto target_segmented = [&](const TrialSpec& s) {
    const BinaryMask& gt =
        ds.scenes[scene_ids[s.scene_idx]].objects[s.obj_idx].object_mask.mask;
    for (const auto& c : survivors[s.scene_idx])
      if (mask_iou(c, gt) >= 0.5) return true;
    return false;
  };

  auto run_one = [&](const TrialSpec& s) -> TrialRecord {
    const SceneAnnotation& scene = ds.scenes[scene_ids[s.scene_idx]];
    const SceneObject& obj = scene.objects[s.obj_idx];
    const TaskRule& rule = ds.rules[s.rule_idx];

    TrialRecord rec;
    rec.scene_id = scene.scene_id;
    rec.object = obj.subcategory;
    rec.category = obj.category;
    rec.task = rule.task;
    rec.recognition_true = class_index(report.class_names, obj.subcategory);

    const BinaryMask* aff = nullptr;
    if (rule.polarity != Polarity::None) {
      auto it = obj.affordances.find(rule.affordance);
      if (it == obj.affordances.end()) {
        rec.failure_stage = "annotation";
        rec.error = "ground truth lacks affordance '" + rule.affordance + "'";
        return rec;
      }
      aff = &it->second.mask;
    }
    BinaryMask gt_region =
        task_region_formula(obj.object_mask.mask, aff, rule.polarity);
    if (mask_area(gt_region) == 0 || obj.grasps.empty()) {
      rec.failure_stage = "annotation";
      rec.error = obj.grasps.empty() ? "ground truth has no grasps"
                                     : "ground-truth task region is empty";
      return rec;
    }

    TogRequest req;
    req.scene = {scene.scene_id, scene_rgb[s.scene_idx]};
    req.target_subcategory = obj.subcategory;
    req.task = rule.task;
    req.mode = cfg.mode;
    req.params = cfg.params;

    TogResult res;
    try {
      res = run_tog(req, cfg.backends, ds);
    } catch (const Error& e) {
      rec.failure_stage = e.stage().empty() ? "setup" : e.stage();
      rec.error = e.what();
      // A missing target mask dooms every later stage; blame segmentation even
      // when the abort surfaced further down the pipeline.
      if (rec.failure_stage != "setup" && !target_segmented(s))
        rec.failure_stage = "segmentation";
      return rec;
    } catch (const std::exception& e) {
      rec.failure_stage = "internal";
      rec.error = e.what();
      return rec;
    }

    rec.completed = true;
    rec.grasp = res.selected_grasp;

    int dominant = -1;
    int64_t best_inter = 0;
    for (size_t j = 0; j < scene.objects.size(); ++j) {
      int64_t inter = mask_intersection_area(res.selected_mask,
                                             scene.objects[j].object_mask.mask);
      if (inter > best_inter) {
        best_inter = inter;
        dominant = static_cast<int>(j);
      }
    }
    if (dominant >= 0)
      rec.recognition_pred =
          class_index(report.class_names, scene.objects[dominant].subcategory);

    rec.region_f1 = pixel_f1(res.task_region, gt_region);
    rec.grasp_ok = grasp_success(res.selected_grasp, obj.grasps, cfg);
    int cx = static_cast<int>(std::lround(res.selected_grasp.x));
    int cy = static_cast<int>(std::lround(res.selected_grasp.y));
    rec.region_hit = gt_region.in_bounds(cx, cy) && gt_region.at(cx, cy);
    rec.tg_success = rec.grasp_ok && rec.region_hit;

    if (!rec.tg_success) {
      // First pipeline stage whose output check fails takes the blame.
      if (!target_segmented(s))
        rec.failure_stage = "segmentation";
      else if (dominant != s.obj_idx)
        rec.failure_stage = "recognition";
      else if (rec.region_f1 < 0.5)
        rec.failure_stage = "region";
      else
        rec.failure_stage = "grasp";
    }
    return rec;
  };

  report.trials.resize(specs.size());
  int workers = std::max(1, cfg.workers);
  if (workers == 1) {
    for (size_t i = 0; i < specs.size(); ++i) report.trials[i] = run_one(specs[i]);
  } else {
    std::atomic<size_t> next{0};
    auto pump = [&] {
      for (size_t i = next.fetch_add(1); i < specs.size(); i = next.fetch_add(1))
        report.trials[i] = run_one(specs[i]);
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(pump);
    for (auto& t : pool) t.join();
  }

  // Segmentation quality: SSF survivors against GT object masks, per scene.
  {
    std::vector<std::vector<ScoredMask>> preds(scene_ids.size());
    std::vector<std::vector<BinaryMask>> gts(scene_ids.size());
    for (size_t k = 0; k < scene_ids.size(); ++k) {
      for (const auto& o : ds.scenes[scene_ids[k]].objects)
        gts[k].push_back(o.object_mask.mask);
      for (const auto& m : survivors[k]) preds[k].push_back({m, 1.0});
    }
    report.segmentation = mask_ap(preds, gts, cfg);
  }

  // Aggregates, all in deterministic key order.
  std::map<std::pair<std::string, std::string>, std::pair<int, int>> by_obj_task;
  std::map<std::string, std::pair<int, int>> by_split;
  std::map<std::string, int> by_stage;
  std::vector<std::pair<int, int>> rec_pairs;
  int tg = 0;
  double f1_sum = 0;
  for (size_t i = 0; i < report.trials.size(); ++i) {
    const TrialRecord& r = report.trials[i];
    const std::string& split = ds.scenes[scene_ids[specs[i].scene_idx]].split;
    auto& ot = by_obj_task[{r.object, r.task}];
    auto& sp = by_split[split];
    ++ot.first;
    ++sp.first;
    if (r.tg_success) {
      ++tg;
      ++ot.second;
      ++sp.second;
    }
    if (!r.failure_stage.empty()) ++by_stage[r.failure_stage];
    if (r.completed) {
      ++report.completed_count;
      rec_pairs.push_back({r.recognition_pred, r.recognition_true});
      f1_sum += r.region_f1;
    }
  }
  report.tg_accuracy =
      report.trial_count == 0 ? 0 : static_cast<double>(tg) / report.trial_count;
  for (const auto& [key, val] : by_obj_task)
    report.per_object_task.push_back(
        {key.first, key.second, val.first, val.second,
         static_cast<double>(val.second) / val.first});
  for (const auto& [key, val] : by_split)
    report.per_split.push_back({key, "", val.first, val.second,
                                static_cast<double>(val.second) / val.first});
  for (const auto& [stage, count] : by_stage)
    report.failures_by_stage.push_back({stage, count});
  report.recognition_trials = static_cast<int>(rec_pairs.size());
  if (!rec_pairs.empty()) report.recognition = f1_recognition(rec_pairs);
  report.affordance_trials = report.completed_count;
  report.affordance_f1 =
      report.completed_count == 0 ? 0 : f1_sum / report.completed_count;
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json row_to_json(const GroupRow& r) {
  json j;
  j["key"] = r.key;
  j["task"] = r.task;
  j["trials"] = r.trials;
  j["successes"] = r.successes;
  j["accuracy"] = r.accuracy;
  return j;
}

GroupRow row_from_json(const json& j) {
  GroupRow r;
  r.key = j.at("key").get<std::string>();
  r.task = j.at("task").get<std::string>();
  r.trials = j.at("trials").get<int>();
  r.successes = j.at("successes").get<int>();
  r.accuracy = j.at("accuracy").get<double>();
  return r;
}

json ap_to_json(const ApTable& t) {
  json j;
  j["ap"] = t.ap;
  j["ap50"] = t.ap50;
  j["ap75"] = t.ap75;
  j["ap_small"] = t.ap_small;
  j["ap_medium"] = t.ap_medium;
  j["ap_large"] = t.ap_large;
  j["mean_iou"] = t.mean_iou;
  return j;
}

ApTable ap_from_json(const json& j) {
  ApTable t;
  t.ap = j.at("ap").get<double>();
  t.ap50 = j.at("ap50").get<double>();
  t.ap75 = j.at("ap75").get<double>();
  t.ap_small = j.at("ap_small").get<double>();
  t.ap_medium = j.at("ap_medium").get<double>();
  t.ap_large = j.at("ap_large").get<double>();
  t.mean_iou = j.at("mean_iou").get<double>();
  return t;
}

json trial_to_json(const TrialRecord& r) {
  json j;
  j["scene_id"] = r.scene_id;
  j["object"] = r.object;
  j["category"] = r.category;
  j["task"] = r.task;
  j["completed"] = r.completed;
  j["tg_success"] = r.tg_success;
  j["grasp_success"] = r.grasp_ok;
  j["region_hit"] = r.region_hit;
  j["recognition_pred"] = r.recognition_pred;
  j["recognition_true"] = r.recognition_true;
  j["region_f1"] = r.region_f1;
  j["failure_stage"] = r.failure_stage;
  j["error"] = r.error;
  j["grasp"] = r.grasp ? grasp_to_json(*r.grasp) : json(nullptr);
  j["manual_override"] = r.manual_override ? json(*r.manual_override) : json(nullptr);
  return j;
}

TrialRecord trial_from_json(const json& j) {
  TrialRecord r;
  r.scene_id = j.at("scene_id").get<std::string>();
  r.object = j.at("object").get<std::string>();
  r.category = j.at("category").get<std::string>();
  r.task = j.at("task").get<std::string>();
  r.completed = j.at("completed").get<bool>();
  r.tg_success = j.at("tg_success").get<bool>();
  r.grasp_ok = j.at("grasp_success").get<bool>();
  r.region_hit = j.at("region_hit").get<bool>();
  r.recognition_pred = j.at("recognition_pred").get<int>();
  r.recognition_true = j.at("recognition_true").get<int>();
  r.region_f1 = j.at("region_f1").get<double>();
  r.failure_stage = j.at("failure_stage").get<std::string>();
  r.error = j.at("error").get<std::string>();
  if (!j.at("grasp").is_null()) r.grasp = grasp_from_json(j.at("grasp"));
  if (!j.at("manual_override").is_null())
    r.manual_override = j.at("manual_override").get<double>();
  return r;
}

std::string fmt3(double v) {
  if (v < 0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// Shortest round-trip double text, shared by JSON and CSV output.
std::string num_text(double v) { return json(v).dump(); }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::IoError, "short write to " + path.string());
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json j;
  j["split"] = report.split;
  j["mode"] = report.mode;
  j["scene_count"] = report.scene_count;
  j["trial_count"] = report.trial_count;
  j["completed_count"] = report.completed_count;
  j["tg_accuracy"] = report.tg_accuracy;
  j["per_object_task"] = json::array();
  for (const auto& r : report.per_object_task)
    j["per_object_task"].push_back(row_to_json(r));
  j["per_split"] = json::array();
  for (const auto& r : report.per_split) j["per_split"].push_back(row_to_json(r));
  j["recognition_trials"] = report.recognition_trials;
  j["recognition"] = {{"accuracy", report.recognition.accuracy},
                      {"macro_f1", report.recognition.macro_f1},
                      {"micro_f1", report.recognition.micro_f1}};
  j["class_names"] = report.class_names;
  j["affordance_trials"] = report.affordance_trials;
  j["affordance_f1"] = report.affordance_f1;
  j["segmentation"] = ap_to_json(report.segmentation);
  j["failures_by_stage"] = json::object();
  for (const auto& s : report.failures_by_stage)
    j["failures_by_stage"][s.stage] = s.count;
  j["trials"] = json::array();
  for (const auto& t : report.trials) j["trials"].push_back(trial_to_json(t));
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.split = j.at("split").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.scene_count = j.at("scene_count").get<int>();
  r.trial_count = j.at("trial_count").get<int>();
  r.completed_count = j.at("completed_count").get<int>();
  r.tg_accuracy = j.at("tg_accuracy").get<double>();
  for (const auto& row : j.at("per_object_task"))
    r.per_object_task.push_back(row_from_json(row));
  for (const auto& row : j.at("per_split"))
    r.per_split.push_back(row_from_json(row));
  r.recognition_trials = j.at("recognition_trials").get<int>();
  r.recognition.accuracy = j.at("recognition").at("accuracy").get<double>();
  r.recognition.macro_f1 = j.at("recognition").at("macro_f1").get<double>();
  r.recognition.micro_f1 = j.at("recognition").at("micro_f1").get<double>();
  r.class_names = j.at("class_names").get<std::vector<std::string>>();
  r.affordance_trials = j.at("affordance_trials").get<int>();
  r.affordance_f1 = j.at("affordance_f1").get<double>();
  r.segmentation = ap_from_json(j.at("segmentation"));
  for (const auto& [stage, count] : j.at("failures_by_stage").items())
    r.failures_by_stage.push_back({stage, count.get<int>()});
  for (const auto& t : j.at("trials")) r.trials.push_back(trial_from_json(t));
  return r;
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(Errc::SchemaError, "invalid report JSON: " + path.string());
  try {
    return report_from_json(j);
  } catch (const json::exception& e) {
    fail(Errc::SchemaError, std::string("report schema: ") + e.what());
  }
}

namespace {

std::string render_markdown(const EvalReport& r) {
  std::string md;
  md += "# Evaluation report\n\n";
  md += "Split `" + r.split + "`, mode `" + r.mode + "`: " +
        std::to_string(r.scene_count) + " scenes, " +
        std::to_string(r.trial_count) + " trials (" +
        std::to_string(r.completed_count) + " completed).\n\n";

  md += "## Task-oriented grasping\n\n";
  md += "| Object | Task | Trials | TG accuracy |\n|---|---|---:|---:|\n";
  for (const auto& row : r.per_object_task)
    md += "| " + row.key + " | " + row.task + " | " + std::to_string(row.trials) +
          " | " + fmt3(row.accuracy) + " |\n";
  md += "\n**Overall TG accuracy:** " + fmt3(r.tg_accuracy) + "\n\n";

  md += "## Per-split TG accuracy\n\n";
  md += "| Split | Trials | TG accuracy |\n|---|---:|---:|\n";
  for (const auto& row : r.per_split)
    md += "| " + row.key + " | " + std::to_string(row.trials) + " | " +
          fmt3(row.accuracy) + " |\n";
  md += "\n";

  md += "## Object recognition\n\n";
  md += "| Trials | Accuracy | Macro F1 | Micro F1 |\n|---:|---:|---:|---:|\n";
  md += "| " + std::to_string(r.recognition_trials) + " | " +
        fmt3(r.recognition.accuracy) + " | " + fmt3(r.recognition.macro_f1) +
        " | " + fmt3(r.recognition.micro_f1) + " |\n\n";

  md += "## Affordance recognition\n\n";
  md += "| Trials | Mean pixel F1 |\n|---:|---:|\n";
  md += "| " + std::to_string(r.affordance_trials) + " | " +
        fmt3(r.affordance_f1) + " |\n\n";

  md += "## Object segmentation\n\n";
  md += "| AP | AP50 | AP75 | AP_s | AP_m | AP_l | Mean IoU |\n"
        "|---:|---:|---:|---:|---:|---:|---:|\n";
  const ApTable& s = r.segmentation;
  md += "| " + fmt3(s.ap) + " | " + fmt3(s.ap50) + " | " + fmt3(s.ap75) + " | " +
        fmt3(s.ap_small) + " | " + fmt3(s.ap_medium) + " | " + fmt3(s.ap_large) +
        " | " + fmt3(s.mean_iou) + " |\n\n";

  md += "## Failures by stage\n\n";
  if (r.failures_by_stage.empty()) {
    md += "none\n";
  } else {
    md += "| Stage | Count |\n|---|---:|\n";
    for (const auto& fs : r.failures_by_stage)
      md += "| " + fs.stage + " | " + std::to_string(fs.count) + " |\n";
  }
  return md;
}

std::string render_summary_csv(const EvalReport& r) {
  std::string csv = "section,key,task,trials,successes,value\n";
  auto line = [&](const std::string& sec, const std::string& key,
                  const std::string& task, const std::string& trials,
                  const std::string& succ, const std::string& value) {
    csv += csv_cell(sec) + "," + csv_cell(key) + "," + csv_cell(task) + "," +
           trials + "," + succ + "," + value + "\n";
  };
  line("overall", "tg_accuracy", "", std::to_string(r.trial_count), "",
       num_text(r.tg_accuracy));
  for (const auto& row : r.per_object_task)
    line("object_task", row.key, row.task, std::to_string(row.trials),
         std::to_string(row.successes), num_text(row.accuracy));
  for (const auto& row : r.per_split)
    line("split", row.key, "", std::to_string(row.trials),
         std::to_string(row.successes), num_text(row.accuracy));
  line("recognition", "accuracy", "", std::to_string(r.recognition_trials), "",
       num_text(r.recognition.accuracy));
  line("recognition", "macro_f1", "", std::to_string(r.recognition_trials), "",
       num_text(r.recognition.macro_f1));
  line("recognition", "micro_f1", "", std::to_string(r.recognition_trials), "",
       num_text(r.recognition.micro_f1));
  line("affordance", "mean_f1", "", std::to_string(r.affordance_trials), "",
       num_text(r.affordance_f1));
  const ApTable& s = r.segmentation;
  line("segmentation", "ap", "", "", "", num_text(s.ap));
  line("segmentation", "ap50", "", "", "", num_text(s.ap50));
  line("segmentation", "ap75", "", "", "", num_text(s.ap75));
  line("segmentation", "ap_small", "", "", "", num_text(s.ap_small));
  line("segmentation", "ap_medium", "", "", "", num_text(s.ap_medium));
  line("segmentation", "ap_large", "", "", "", num_text(s.ap_large));
  line("segmentation", "mean_iou", "", "", "", num_text(s.mean_iou));
  for (const auto& fs : r.failures_by_stage)
    line("failures", fs.stage, "", std::to_string(fs.count), "", "");
  return csv;
}

std::string render_trials_csv(const EvalReport& r) {
  std::string csv =
      "scene_id,object,category,task,completed,tg_success,grasp_success,"
      "region_hit,recognition_pred,recognition_true,region_f1,failure_stage,"
      "error,grasp_x,grasp_y,grasp_w,grasp_h,grasp_theta,grasp_confidence,"
      "manual_override\n";
  for (const auto& t : r.trials) {
    csv += csv_cell(t.scene_id) + "," + csv_cell(t.object) + "," +
           csv_cell(t.category) + "," + csv_cell(t.task) + ",";
    csv += std::string(t.completed ? "1" : "0") + "," +
           (t.tg_success ? "1" : "0") + "," + (t.grasp_ok ? "1" : "0") + "," +
           (t.region_hit ? "1" : "0") + ",";
    csv += std::to_string(t.recognition_pred) + "," +
           std::to_string(t.recognition_true) + "," + num_text(t.region_f1) +
           "," + csv_cell(t.failure_stage) + "," + csv_cell(t.error) + ",";
    if (t.grasp) {
      csv += num_text(t.grasp->x) + "," + num_text(t.grasp->y) + "," +
             num_text(t.grasp->w) + "," + num_text(t.grasp->h) + "," +
             num_text(t.grasp->theta) + "," +
             (t.grasp->confidence ? num_text(*t.grasp->confidence) : "");
    } else {
      csv += ",,,,,";
    }
    csv += ",";
    csv += t.manual_override ? num_text(*t.manual_override) : "";
    csv += "\n";
  }
  return csv;
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const EvalReport& report,
                                               const std::string& format,
                                               const std::filesystem::path& dir) {
  if (format != "json" && format != "csv" && format != "markdown")
    fail(Errc::UnknownFormat, "unknown report format: " + format);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::IoError, "cannot create " + dir.string());

  std::vector<std::filesystem::path> written;
  if (format == "json") {
    auto path = dir / "report.json";
    write_text(path, report_to_json(report).dump(2) + "\n");
    written.push_back(path);
  } else if (format == "csv") {
    auto summary = dir / "summary.csv";
    write_text(summary, render_summary_csv(report));
    written.push_back(summary);
    auto trials = dir / "trials.csv";
    write_text(trials, render_trials_csv(report));
    written.push_back(trials);
  } else {
    auto path = dir / "report.md";
    write_text(path, render_markdown(report));
    written.push_back(path);
  }
  return written;
}

}  // namespace tog
