#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tog/dataset.hpp"
#include "tog/geometry.hpp"
#include "tog/image.hpp"
#include "tog/maskops.hpp"

namespace tog {

enum class BackendKind {
  Segmenter,
  ImageEmbedder,
  TextEmbedder,
  PairEmbedder,
  Classifier,
  AffordanceOneShot,
  AffordanceSegmenter,
  GraspProposer,
};

const char* backend_kind_name(BackendKind k);

// Degradations the oracle backends can apply on top of ground truth. All
// draws are pure functions of (inputs, seed): repeated calls agree bit for
// bit regardless of call order or thread count.
struct NoiseConfig {
  double segment_dropout = 0;      // per-object drop probability
  int fragment_injection = 0;      // strict sub-rectangles per GT mask
  int background_blobs = 0;        // distractor rects sized outside (400, 50000)
  double boundary_jitter_px = 0;   // random mask translation, per axis
  double embedding_sigma = 0;      // gaussian noise on embeddings / logits
  double grasp_jitter_px = 0;      // grasp center translation
  double grasp_jitter_deg = 0;     // grasp angle perturbation
  double confidence_sigma = 0;     // gaussian noise on confidences

  bool any() const {
    return segment_dropout > 0 || fragment_injection > 0 ||
           background_blobs > 0 || boundary_jitter_px > 0 ||
           embedding_sigma > 0 || grasp_jitter_px > 0 ||
           grasp_jitter_deg > 0 || confidence_sigma > 0;
  }
};

// Scene identity forwarded to backends; oracle transports use it to look up
// ground truth, external transports forward it on the wire.
struct SceneContext {
  std::string scene_id;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<BinaryMask> segment(const SceneContext& ctx,
                                          const ImageU8& scene) = 0;
};

class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  // `candidate` is the full-frame mask the crop was cut from.
  virtual std::vector<double> embed_image(const SceneContext& ctx,
                                          const BinaryMask& candidate,
                                          const ImageU8& crop) = 0;
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::vector<double> embed_text(const std::string& description) = 0;
};

class PairEmbedder {
 public:
  virtual ~PairEmbedder() = default;
  virtual std::vector<double> embed_scene(const SceneContext& ctx,
                                          const BinaryMask& candidate,
                                          const ImageU8& crop) = 0;
  virtual std::vector<double> embed_reference(const std::string& subcategory,
                                              const ImageU8& crop) = 0;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::vector<std::string> labels() = 0;
  // One logit row per candidate, columns follow labels().
  virtual std::vector<std::vector<double>> classify(
      const SceneContext& ctx, const std::vector<const BinaryMask*>& candidates,
      const std::vector<ImageU8>& crops) = 0;
};

struct AffordanceOneShotQuery {
  SceneContext scene;
  const BinaryMask* candidate_mask = nullptr;   // full-frame
  const CropTransform* scene_crop_tf = nullptr; // frame -> crop square
  const ImageU8* scene_crop = nullptr;
  const ImageU8* ref_crop = nullptr;            // aligned reference
  const BinaryMask* ref_region = nullptr;       // aligned reference region
  Polarity polarity = Polarity::None;
  std::string affordance;
};

class AffordanceOneShot {
 public:
  virtual ~AffordanceOneShot() = default;
  // Returns the predicted task region in crop coordinates.
  virtual BinaryMask predict(const AffordanceOneShotQuery& q) = 0;
};

struct AffordancePrediction {
  BinaryMask mask;  // crop coordinates
  std::string label;
  double confidence = 0;
};

class AffordanceSegmenter {
 public:
  virtual ~AffordanceSegmenter() = default;
  virtual std::vector<AffordancePrediction> predict(const SceneContext& ctx,
                                                    const BinaryMask& candidate,
                                                    const CropTransform& tf,
                                                    const ImageU8& crop) = 0;
};

class GraspProposer {
 public:
  virtual ~GraspProposer() = default;
  // Scene-wide candidates, each with a confidence.
  virtual std::vector<GraspRect> propose(const SceneContext& ctx,
                                         const ImageU8& scene) = 0;
};

// The full complement a pipeline run can draw from. Unused slots may be null
// as long as the selected mode never touches them.
struct BackendSet {
  std::shared_ptr<Segmenter> segmenter;
  std::shared_ptr<ImageEmbedder> image_embedder;
  std::shared_ptr<TextEmbedder> text_embedder;
  std::shared_ptr<PairEmbedder> pair_embedder;
  std::shared_ptr<Classifier> classifier;
  std::shared_ptr<AffordanceOneShot> affordance_oneshot;
  std::shared_ptr<AffordanceSegmenter> affordance_segmenter;
  std::shared_ptr<GraspProposer> grasp_proposer;
  bool concurrent_safe = true;
};

// Unit-sphere anchor embeddings, one per subcategory, drawn deterministically
// from (seed, sorted vocabulary) with pairwise |cosine| kept below 0.3.
class AnchorTable {
 public:
  AnchorTable(std::vector<std::string> subcategories, uint64_t seed,
              int dim = 64);
  const std::vector<double>& anchor(const std::string& subcategory) const;
  int dim() const { return dim_; }

 private:
  int dim_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> vectors_;
};

// Backends that answer from dataset ground truth, optionally degraded by
// NoiseConfig. The Dataset must outlive the returned set.
BackendSet make_oracle_backends(const Dataset& ds, const NoiseConfig& noise,
                                uint64_t seed);

// Builds a set from a configuration object (the CLI's --backend file):
//   {"transport": "oracle", "seed": 7, "noise": {...}}            in-process
//   {"transport": "process", "command": [...], "timeout_s": 30}   external
// Unknown keys or transports error with SchemaError.
BackendSet make_backends_from_config(const json& config, const Dataset& ds);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// FNV-1a over arbitrary strings/ints; stable across platforms, used to key
// oracle RNG streams.
uint64_t stable_hash(uint64_t seed, std::initializer_list<std::string> parts);

}  // namespace tog
