#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tog/pipeline.hpp"

namespace tog {

// Default AP threshold grid 0.50:0.05:0.95 (ten thresholds).
std::vector<double> default_ap_grid();

struct EvalConfig {
  std::string split = "KC-KSC";
  Mode mode = Mode::Binary;
  BackendSet backends;
  TogParams params;

  double iou_threshold = 0.25;        // grasp success: rotated IoU strictly >
  double angle_threshold_deg = 30.0;  // grasp success: angle diff <=
  std::vector<double> ap_grid = default_ap_grid();
  double area_small = 32.0 * 32.0;    // bucket cuts on GT pixel area
  double area_large = 96.0 * 96.0;
  int workers = 1;
};

// Errors with InvariantViolation on non-positive thresholds or a grid that
// is empty or not strictly increasing.
void validate_eval_config(const EvalConfig& cfg);

// True iff some ground-truth grasp satisfies both rules at once:
// rotated_iou(pred, gt) > iou_threshold and angle_diff <= angle threshold.
// Errors with NoGroundTruth on an empty list.
bool grasp_success(const GraspRect& pred, const std::vector<GraspRect>& gts,
                   const EvalConfig& cfg);

// grasp_success plus the rounded prediction center landing on a set pixel of
// the ground-truth task region. Errors: NoGroundTruth, EmptyRegion.
bool tog_success(const GraspRect& pred, const std::vector<GraspRect>& gts,
                 const BinaryMask& gt_region, const EvalConfig& cfg);

struct ScoredMask {
  BinaryMask mask;
  double confidence = 0;
};

// COCO-style AP table. Bucket entries are -1 when no ground truth falls in
// the bucket anywhere in the batch.
struct ApTable {
  double ap = 0;
  double ap50 = 0;
  double ap75 = 0;
  double ap_small = -1;
  double ap_medium = -1;
  double ap_large = -1;
  double mean_iou = 0;  // over matches at threshold 0.50, all sizes

  bool operator==(const ApTable&) const = default;
};

// Greedy confidence-descending matching per threshold, 101-point
// interpolated AP averaged over the grid; size buckets use COCO ignore
// semantics on GT mask area.
ApTable mask_ap(const std::vector<std::vector<ScoredMask>>& predictions,
                const std::vector<std::vector<BinaryMask>>& gts,
                const EvalConfig& cfg);

struct RecognitionScore {
  double accuracy = 0;
  double macro_f1 = 0;  // averaged over classes that appear as true labels
  double micro_f1 = 0;

  bool operator==(const RecognitionScore&) const = default;
};

// Single-label trials as (predicted id, true id); a negative prediction
// counts as wrong without forming a class. Errors with EmptyTrials.
RecognitionScore f1_recognition(const std::vector<std::pair<int, int>>& trials);

// Pixelwise F1 = 2|P AND G| / (|P| + |G|); both empty -> 0.
double pixel_f1(const BinaryMask& pred, const BinaryMask& gt);

struct TrialRecord {
  std::string scene_id;
  std::string object;    // target subcategory
  std::string category;
  std::string task;
  bool completed = false;    // pipeline produced a grasp
  bool tg_success = false;
  bool grasp_ok = false;     // grasp rule alone
  bool region_hit = false;   // center inside the GT task region
  int recognition_pred = -1;  // index into EvalReport::class_names, -1 = none
  int recognition_true = -1;
  double region_f1 = 0;
  std::string failure_stage;  // empty on success
  std::string error;          // diagnostic when the pipeline raised
  std::optional<GraspRect> grasp;
  std::optional<double> manual_override;  // reserved for human scoring

  bool operator==(const TrialRecord&) const = default;
};

struct GroupRow {
  std::string key;     // object subcategory or split tag
  std::string task;    // empty for split rows
  int trials = 0;
  int successes = 0;
  double accuracy = 0;

  bool operator==(const GroupRow&) const = default;
};

struct StageCount {
  std::string stage;
  int count = 0;

  bool operator==(const StageCount&) const = default;
};

struct EvalReport {
  std::string split;
  std::string mode;
  int scene_count = 0;
  int trial_count = 0;
  int completed_count = 0;

  double tg_accuracy = 0;
  std::vector<GroupRow> per_object_task;  // sorted by (object, task)
  std::vector<GroupRow> per_split;        // sorted by split tag

  int recognition_trials = 0;
  RecognitionScore recognition;
  std::vector<std::string> class_names;  // recognition id space

  int affordance_trials = 0;
  double affordance_f1 = 0;  // mean pixelwise F1 over completed trials

  ApTable segmentation;      // SSF survivors vs GT object masks, per scene

  std::vector<StageCount> failures_by_stage;  // sorted by stage name
  std::vector<TrialRecord> trials;

  bool operator==(const EvalReport&) const = default;
};

// One run_tog per (scene in split, object in scene, applicable task).
// Individual trial errors become failure records, never aborts. Errors:
// EmptySplit when no scene carries the split tag, plus configuration errors.
EvalReport evaluate_split(const Dataset& ds, const EvalConfig& cfg);

json report_to_json(const EvalReport& report);
EvalReport report_from_json(const json& j);
EvalReport load_report(const std::filesystem::path& path);

// Writes report files under `dir` and returns their paths: report.json,
// summary.csv + trials.csv, or report.md. Errors with UnknownFormat.
std::vector<std::filesystem::path> emit_report(const EvalReport& report,
                                               const std::string& format,
                                               const std::filesystem::path& dir);

}  // namespace tog
