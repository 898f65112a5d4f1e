#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tog/backends.hpp"
#include "tog/dataset.hpp"

namespace tog {

enum class Mode { Binary, OneShot, Standard };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct TogParams {
  double min_area = 400;      // segment size window, exclusive bounds
  double max_area = 50000;
  double tau = 0.75;          // subset-overlap threshold
  int n_rots = 36;            // alignment rotation steps
  double affordance_conf = 0.5;  // min confidence for stacked predictions
  int crop_target = 256;
  bool empty_region_fallback = false;  // fall back to the object mask
};

struct PipelineScene {
  std::string id;
  ImageU8 rgb;
};

struct TogRequest {
  PipelineScene scene;
  std::string target_subcategory;
  std::string task;
  Mode mode = Mode::Binary;
  TogParams params;
};

struct StageTiming {
  std::string stage;
  double ms = 0;
};

struct TogResult {
  Mode mode = Mode::Binary;
  std::string scene_id;
  std::string target_subcategory;
  std::string task;

  int raw_segment_count = 0;
  std::vector<BinaryMask> candidates;   // SSF survivors, input order
  std::vector<double> scores;           // recognition scores (empty for os)
  int selected_index = -1;
  BinaryMask selected_mask;
  BinaryMask task_region;
  int align_degrees = 0;                // one-shot affordance alignment
  std::vector<GraspRect> grasp_candidates;
  int selected_grasp_index = -1;
  GraspRect selected_grasp;

  // Wall-clock only; never serialized (outputs must be run-to-run identical).
  std::vector<StageTiming> timings;
};

// Size window then subset suppression: a mask is dropped when a larger
// later-sorted survivor covers more than tau of it. Survivors keep input
// order.
std::vector<BinaryMask> ssf_filter(const std::vector<BinaryMask>& masks,
                                   double min_area, double max_area,
                                   double tau);

// Scene pixels kept where the mask is set, zero elsewhere.
ImageU8 make_masked_image(const ImageU8& scene, const BinaryMask& mask);
std::vector<ImageU8> make_masked_images(const ImageU8& scene,
                                        const std::vector<BinaryMask>& masks);

// softmax(100 * cosine) over candidates against one text feature; returns
// (argmax index, score vector). Ties resolve to the lowest index.
std::pair<int, std::vector<double>> recognize_zero_shot(
    const std::vector<std::vector<double>>& image_features,
    const std::vector<double>& text_feature);

// Minimum L2 distance against the reference feature.
int recognize_one_shot(const std::vector<std::vector<double>>& features,
                       const std::vector<double>& reference);

// Row-wise softmax of an N x M logit matrix, argmax over the target column.
std::pair<int, std::vector<std::vector<double>>> recognize_standard(
    const std::vector<std::vector<double>>& logits, int target_column);

// Reference-side task region from a knowledge entry and a rule.
BinaryMask reference_task_region(const KnowledgeEntry& entry,
                                 const TaskRule& rule);

struct AlignResult {
  ImageU8 ref_crop;
  BinaryMask ref_region;
  int degrees = 0;
};

// Rotation search: compares the scene crop against the masked reference crop
// rotated by i*(360 div n_rots) for i in [0, n_rots), keeping the first
// minimum of the summed squared pixel difference. A zero winner leaves both
// reference rasters untouched.
AlignResult affordance_align(const ImageU8& scene_crop, const ImageU8& ref_crop,
                             const BinaryMask& ref_region, int n_rots);

// One-shot path: crops both sides, aligns, queries the backend, and maps the
// predicted crop region back onto the full frame. None-polarity rules skip
// inference and return the candidate mask. Empty predictions raise
// EmptyRegion unless params.empty_region_fallback is set.
BinaryMask predict_task_region_oneshot(const PipelineScene& scene,
                                       const BinaryMask& candidate,
                                       const ImageU8& ref_image,
                                       const KnowledgeEntry& entry,
                                       const TaskRule& rule,
                                       const TogParams& params,
                                       AffordanceOneShot& backend,
                                       int* align_degrees = nullptr);

// Standard path building block: stacks predictions matching the rule's
// affordance at confidence >= threshold, then applies the polarity formula
// against the candidate mask. Prediction masks are full-frame here.
BinaryMask stack_task_region(const BinaryMask& candidate,
                             const std::vector<AffordancePrediction>& preds,
                             const TaskRule& rule, double conf_threshold);

BinaryMask predict_task_region_standard(const PipelineScene& scene,
                                        const BinaryMask& candidate,
                                        const TaskRule& rule,
                                        const TogParams& params,
                                        AffordanceSegmenter& backend);

// Keeps candidates whose rounded center lands on a set region pixel, then
// takes the highest confidence (lowest index on ties). Errors:
// EmptyCandidates, EmptyRegion, NoGraspInRegion.
std::pair<GraspRect, int> select_grasp(const std::vector<GraspRect>& candidates,
                                       const BinaryMask& region);

// Errors with BackendFailure when a slot the mode needs is missing.
void require_backends(Mode mode, const BackendSet& backends);

// Full pipeline: segment -> filter -> recognize -> task region -> grasp.
// Errors escaping a stage carry that stage's name (Error::stage()).
TogResult run_tog(const TogRequest& request, const BackendSet& backends,
                  const Dataset& ds);

}  // namespace tog
