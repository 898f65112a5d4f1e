#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tog/geometry.hpp"
#include "tog/maskops.hpp"

namespace tog {

using json = nlohmann::json;

enum class Polarity { Require, Avoid, None };

const char* polarity_name(Polarity p);
Polarity polarity_from_name(const std::string& s);

// One row of the task rule table: which affordance a task needs or must
// avoid, and which object categories the task applies to (empty applies_to
// means every category, minus explicit excludes).
struct TaskRule {
  std::string task;
  Polarity polarity = Polarity::None;
  std::string affordance;  // empty for None polarity
  std::vector<std::string> applies_to;
  std::vector<std::string> excludes;

  bool applicable(const std::string& category) const;
  bool operator==(const TaskRule&) const = default;
};

// The 21-row rule table shipped with the library.
const std::vector<TaskRule>& standard_task_rules();

// Errors with UnknownTask when absent.
const TaskRule& rule_lookup(const std::vector<TaskRule>& rules,
                            const std::string& task);

// Task-suitable region: Require -> M AND F, Avoid -> M minus F,
// None -> M (affordance ignored; may be null).
BinaryMask task_region_formula(const BinaryMask& object_mask,
                               const BinaryMask* affordance, Polarity polarity);

// Mask plus its serialized form, so a manifest round-trips byte-identically.
struct AnnotatedMask {
  enum class Source { Polygons, Bits };
  Source source = Source::Polygons;
  PolygonRegion region;  // when source == Polygons
  BinaryMask mask;
};

struct ImageInfo {
  int id = 0;
  std::string file_name;
  std::optional<std::string> depth_file_name;
  int width = 0;
  int height = 0;
  std::string split;
};

struct CategoryInfo {
  int id = 0;
  std::string name;         // object category, e.g. "hammer"
  std::string subcategory;  // instance-level id, e.g. "hammer_01"
};

struct SceneObject {
  int annotation_id = 0;
  int category_id = 0;
  std::string category;
  std::string subcategory;
  AnnotatedMask object_mask;
  std::map<std::string, AnnotatedMask> affordances;
  std::vector<GraspRect> grasps;
  std::string description;  // may be empty outside the reference split
  json properties;          // optional free-form semantic fields
};

struct SceneAnnotation {
  int image_id = 0;
  std::string scene_id;  // stringified image id, used as the backend GT key
  std::string file_name;
  std::optional<std::string> depth_file_name;
  int width = 0;
  int height = 0;
  std::string split;
  std::vector<SceneObject> objects;
};

// Knowledge-base entry derived from a single-object reference scene.
struct KnowledgeEntry {
  std::string category;
  std::string subcategory;
  std::string scene_id;
  std::string file_name;  // relative to dataset root
  BinaryMask object_mask;
  std::map<std::string, BinaryMask> affordances;
  std::vector<GraspRect> grasps;
  std::string description;
  json properties;
};

struct Dataset {
  std::filesystem::path root;  // manifest directory; file paths are relative
  std::vector<ImageInfo> images;
  std::vector<CategoryInfo> categories;
  std::vector<SceneAnnotation> scenes;     // one per image, same order
  std::vector<KnowledgeEntry> entries;     // derived from split == "reference"
  std::vector<TaskRule> rules;
  std::vector<std::string> affordance_vocab;

  const SceneAnnotation* find_scene(const std::string& scene_id) const;
  const KnowledgeEntry* find_entry(const std::string& subcategory) const;
  const CategoryInfo* find_subcategory(const std::string& subcategory) const;
};

// Parses and fully materializes a manifest: strict key checking
// (SchemaError), id and affordance-name resolution (DanglingReference),
// value invariants (InvariantViolation), image files checked for existence.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Canonical serialization; save -> load -> save is byte-identical.
void save_dataset(const Dataset& ds, const std::filesystem::path& manifest_path);

struct ValidationIssue {
  enum class Severity { Warning, Error };
  Severity severity = Severity::Warning;
  std::string message;
  std::string context;  // e.g. "scene 3 / annotation 7"
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool has_errors() const;
  bool empty() const { return issues.empty(); }
};

// Cross-checks annotation content: affordances escaping object masks,
// grasp centers off-object, split cardinality rules, missing reference
// descriptions. Empty report means every checked invariant holds.
ValidationReport validate_dataset(const Dataset& ds);

// Clips a rough affordance mask to the object mask (their intersection).
BinaryMask refine_affordance(const BinaryMask& rough,
                             const BinaryMask& object_mask);

// Similarity transform estimated between a reference entry and a scene mask:
// translation from centroids, scale from the area ratio, rotation from an
// n_rots exhaustive search minimizing mask symmetric difference.
struct AutoLabelResult {
  std::vector<GraspRect> grasps;
  std::map<std::string, BinaryMask> rough_affordances;
  double rotation_deg = 0;
  double scale = 1;
  Vec2 translation;
  double aligned_iou = 0;  // IoU of the transformed reference mask vs scene
};

// Errors: EmptySceneMask; AlignmentFailure when the best IoU < min_iou.
AutoLabelResult auto_label(const BinaryMask& scene_mask,
                           const KnowledgeEntry& ref, int n_rots,
                           double min_iou = 0.3);

// Wire/manifest codec for masks, shared with the backend protocol:
// {"polygons": [[x1,y1,...]], "holes": [[...]]} or
// {"width": W, "height": H, "bits": "<base64>"}.
json mask_to_json(const AnnotatedMask& m);
AnnotatedMask mask_from_json(const json& j, int width, int height);

json grasp_to_json(const GraspRect& g);
GraspRect grasp_from_json(const json& j);

}  // namespace tog
