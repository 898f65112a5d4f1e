#include "tog/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tog/base64.hpp"

namespace tog {

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::Require: return "require";
    case Polarity::Avoid: return "avoid";
    case Polarity::None: return "none";
  }
  return "none";
}

Polarity polarity_from_name(const std::string& s) {
  if (s == "require") return Polarity::Require;
  if (s == "avoid") return Polarity::Avoid;
  if (s == "none") return Polarity::None;
  fail(Errc::SchemaError, "unknown polarity: " + s);
}

bool TaskRule::applicable(const std::string& category) const {
  for (const auto& ex : excludes)
    if (ex == category) return false;
  if (applies_to.empty()) return true;
  return std::find(applies_to.begin(), applies_to.end(), category) !=
         applies_to.end();
}

const std::vector<TaskRule>& standard_task_rules() {
  static const std::vector<TaskRule> rules = {
      {"transport", Polarity::None, "", {}, {}},
      {"handover", Polarity::Avoid, "grasp", {}, {"cable"}},
      {"brushing", Polarity::Require, "grasp", {"hairbrush", "toothbrush"}, {}},
      {"clamping", Polarity::Require, "grasp", {"clip", "tongs"}, {}},
      {"connecting", Polarity::Require, "connect", {"cable"}, {}},
      {"cutting", Polarity::Require, "grasp", {"pizza_cutter", "scissors"}, {}},
      {"flipping", Polarity::Require, "grasp", {"spatula"}, {}},
      {"frying", Polarity::Require, "grasp", {"pan"}, {}},
      {"gluing", Polarity::Require, "grasp", {"glue"}, {}},
      {"grating", Polarity::Require, "grasp", {"grater"}, {}},
      {"hitting", Polarity::Require, "grasp", {"hammer", "tenderizer"}, {}},
      {"measuring", Polarity::Require, "grasp", {"thermometer"}, {}},
      {"opening", Polarity::Require, "open", {"toothpaste", "vitamin"}, {}},
      {"painting", Polarity::Avoid, "paint", {"paint_brush", "paint_roller"}, {}},
      {"peeling", Polarity::Require, "grasp", {"peeler"}, {}},
      {"scooping", Polarity::Require, "grasp", {"measuring_cup", "spoon"}, {}},
      {"screwing", Polarity::Avoid, "screw", {"screw", "screwdriver"}, {}},
      {"scrubbing", Polarity::Require, "grasp", {"dish_brush"}, {}},
      {"shaving", Polarity::Require, "grasp", {"razor"}, {}},
      {"sweeping", Polarity::Avoid, "contain", {"dustpan"}, {}},
      {"writing", Polarity::Require, "grasp", {"marker", "pen"}, {}},
  };
  return rules;
}

const TaskRule& rule_lookup(const std::vector<TaskRule>& rules,
                            const std::string& task) {
  for (const auto& r : rules)
    if (r.task == task) return r;
  fail(Errc::UnknownTask, "no rule for task: " + task);
}

BinaryMask task_region_formula(const BinaryMask& object_mask,
                               const BinaryMask* affordance,
                               Polarity polarity) {
  switch (polarity) {
    case Polarity::Require:
      if (!affordance) fail(Errc::MissingAffordance, "require rule without affordance mask");
      return mask_and(object_mask, *affordance);
    case Polarity::Avoid:
      if (!affordance) fail(Errc::MissingAffordance, "avoid rule without affordance mask");
      return mask_sub(object_mask, *affordance);
    case Polarity::None:
      return object_mask;
  }
  return object_mask;
}

namespace {

const std::set<std::string> kSplits = {"train",          "KC-KSC",
                                       "KC-USC",         "UC-USC",
                                       "subcategory-KC", "subcategory-UC",
                                       "reference"};

bool is_category_split(const std::string& s) {
  return s == "train" || s == "KC-KSC" || s == "KC-USC" || s == "UC-USC";
}
bool is_subcategory_split(const std::string& s) {
  return s == "subcategory-KC" || s == "subcategory-UC";
}

// Strict key check: every required key present, no keys outside
// required+optional.
void check_keys(const json& j, const std::string& what,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional = {}) {
  if (!j.is_object()) fail(Errc::SchemaError, what + " must be a JSON object");
  for (const auto& k : required)
    if (!j.contains(k))
      fail(Errc::SchemaError, what + " missing required field '" + k + "'");
  for (const auto& [k, v] : j.items()) {
    bool known =
        std::find(required.begin(), required.end(), k) != required.end() ||
        std::find(optional.begin(), optional.end(), k) != optional.end();
    if (!known) fail(Errc::SchemaError, what + " has unknown field '" + k + "'");
  }
}

int get_int(const json& j, const std::string& key, const std::string& what) {
  if (!j.at(key).is_number_integer())
    fail(Errc::SchemaError, what + " field '" + key + "' must be an integer");
  return j.at(key).get<int>();
}

std::string get_str(const json& j, const std::string& key,
                    const std::string& what) {
  if (!j.at(key).is_string())
    fail(Errc::SchemaError, what + " field '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

double get_num(const json& j, const std::string& key, const std::string& what) {
  if (!j.at(key).is_number())
    fail(Errc::SchemaError, what + " field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

std::vector<Vec2> ring_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() % 2 != 0)
    fail(Errc::SchemaError, what + " ring must be a flat [x1,y1,...] array");
  std::vector<Vec2> ring;
  ring.reserve(j.size() / 2);
  for (size_t i = 0; i < j.size(); i += 2) {
    if (!j[i].is_number() || !j[i + 1].is_number())
      fail(Errc::SchemaError, what + " ring coordinates must be numbers");
    ring.push_back({j[i].get<double>(), j[i + 1].get<double>()});
  }
  if (ring.size() < 3) fail(Errc::MalformedPolygon, what + " ring needs >= 3 points");
  return ring;
}

json ring_to_json(const std::vector<Vec2>& ring) {
  json out = json::array();
  for (const auto& p : ring) {
    out.push_back(p.x);
    out.push_back(p.y);
  }
  return out;
}

}  // namespace

json mask_to_json(const AnnotatedMask& m) {
  json out;
  if (m.source == AnnotatedMask::Source::Bits) {
    out["width"] = m.mask.width;
    out["height"] = m.mask.height;
    out["bits"] = base64_encode(pack_bits(m.mask.bits));
    return out;
  }
  json polys = json::array();
  for (const auto& r : m.region.outers) polys.push_back(ring_to_json(r));
  out["polygons"] = polys;
  if (!m.region.holes.empty()) {
    json holes = json::array();
    for (const auto& r : m.region.holes) holes.push_back(ring_to_json(r));
    out["holes"] = holes;
  }
  return out;
}

AnnotatedMask mask_from_json(const json& j, int width, int height) {
  AnnotatedMask out;
  if (j.is_object() && j.contains("bits")) {
    check_keys(j, "bitmask", {"bits", "width", "height"});
    int w = get_int(j, "width", "bitmask");
    int h = get_int(j, "height", "bitmask");
    if (w != width || h != height)
      fail(Errc::SchemaError, "bitmask size disagrees with image size");
    out.source = AnnotatedMask::Source::Bits;
    out.mask.width = w;
    out.mask.height = h;
    out.mask.bits = unpack_bits(base64_decode(get_str(j, "bits", "bitmask")),
                                static_cast<size_t>(w) * h);
    return out;
  }
  check_keys(j, "polygon mask", {"polygons"}, {"holes"});
  if (!j.at("polygons").is_array())
    fail(Errc::SchemaError, "'polygons' must be an array of rings");
  out.source = AnnotatedMask::Source::Polygons;
  for (const auto& r : j.at("polygons"))
    out.region.outers.push_back(ring_from_json(r, "polygon"));
  if (j.contains("holes")) {
    if (!j.at("holes").is_array())
      fail(Errc::SchemaError, "'holes' must be an array of rings");
    for (const auto& r : j.at("holes"))
      out.region.holes.push_back(ring_from_json(r, "hole"));
  }
  out.mask = rasterize(out.region, width, height);
  return out;
}

json grasp_to_json(const GraspRect& g) {
  json out;
  out["x"] = g.x;
  out["y"] = g.y;
  out["w"] = g.w;
  out["h"] = g.h;
  out["theta"] = g.theta;
  if (g.confidence) out["confidence"] = *g.confidence;
  return out;
}

GraspRect grasp_from_json(const json& j) {
  check_keys(j, "grasp", {"x", "y", "w", "h", "theta"}, {"confidence"});
  GraspRect g;
  g.x = get_num(j, "x", "grasp");
  g.y = get_num(j, "y", "grasp");
  g.w = get_num(j, "w", "grasp");
  g.h = get_num(j, "h", "grasp");
  g.theta = get_num(j, "theta", "grasp");
  if (j.contains("confidence")) g.confidence = get_num(j, "confidence", "grasp");
  return g;
}

const SceneAnnotation* Dataset::find_scene(const std::string& scene_id) const {
  for (const auto& s : scenes)
    if (s.scene_id == scene_id) return &s;
  return nullptr;
}

const KnowledgeEntry* Dataset::find_entry(const std::string& subcategory) const {
  for (const auto& e : entries)
    if (e.subcategory == subcategory) return &e;
  return nullptr;
}

const CategoryInfo* Dataset::find_subcategory(const std::string& subcategory) const {
  for (const auto& c : categories)
    if (c.subcategory == subcategory) return &c;
  return nullptr;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) fail(Errc::IoError, "cannot open manifest: " + manifest_path.string());
  json root;
  try {
    root = json::parse(f);
  } catch (const json::parse_error& e) {
    fail(Errc::SchemaError, std::string("manifest is not valid JSON: ") + e.what());
  }
  check_keys(root, "manifest",
             {"affordances", "annotations", "categories", "images", "tasks"});

  Dataset ds;
  ds.root = manifest_path.parent_path();

  // affordance vocabulary
  if (!root.at("affordances").is_array())
    fail(Errc::SchemaError, "'affordances' must be an array of names");
  std::set<std::string> vocab;
  for (const auto& a : root.at("affordances")) {
    if (!a.is_string()) fail(Errc::SchemaError, "affordance names must be strings");
    if (!vocab.insert(a.get<std::string>()).second)
      fail(Errc::SchemaError, "duplicate affordance name: " + a.get<std::string>());
  }
  ds.affordance_vocab.assign(vocab.begin(), vocab.end());

  // images
  std::map<int, size_t> image_index;
  for (const auto& j : root.at("images")) {
    check_keys(j, "image", {"id", "file_name", "width", "height", "split"},
               {"depth_file_name"});
    ImageInfo info;
    info.id = get_int(j, "id", "image");
    info.file_name = get_str(j, "file_name", "image");
    info.width = get_int(j, "width", "image");
    info.height = get_int(j, "height", "image");
    info.split = get_str(j, "split", "image");
    if (j.contains("depth_file_name"))
      info.depth_file_name = get_str(j, "depth_file_name", "image");
    if (info.width <= 0 || info.height <= 0)
      fail(Errc::InvariantViolation, "image dimensions must be positive");
    if (!kSplits.count(info.split))
      fail(Errc::SchemaError, "unknown split tag: " + info.split);
    if (!image_index.emplace(info.id, ds.images.size()).second)
      fail(Errc::SchemaError, "duplicate image id " + std::to_string(info.id));
    if (!std::filesystem::exists(ds.root / info.file_name))
      fail(Errc::DanglingReference, "image file not found: " + info.file_name);
    if (info.depth_file_name &&
        !std::filesystem::exists(ds.root / *info.depth_file_name))
      fail(Errc::DanglingReference, "depth file not found: " + *info.depth_file_name);
    ds.images.push_back(std::move(info));
  }

  // categories
  std::map<int, size_t> category_index;
  std::set<std::string> subcats;
  for (const auto& j : root.at("categories")) {
    check_keys(j, "category", {"id", "name", "subcategory"});
    CategoryInfo info;
    info.id = get_int(j, "id", "category");
    info.name = get_str(j, "name", "category");
    info.subcategory = get_str(j, "subcategory", "category");
    if (info.name.empty() || info.subcategory.empty())
      fail(Errc::InvariantViolation, "category names must be non-empty");
    if (!category_index.emplace(info.id, ds.categories.size()).second)
      fail(Errc::SchemaError, "duplicate category id " + std::to_string(info.id));
    if (!subcats.insert(info.subcategory).second)
      fail(Errc::SchemaError, "duplicate subcategory: " + info.subcategory);
    ds.categories.push_back(std::move(info));
  }

  // tasks
  std::set<std::string> task_names;
  for (const auto& j : root.at("tasks")) {
    check_keys(j, "task", {"name", "polarity"},
               {"affordance", "applies_to", "excludes"});
    TaskRule r;
    r.task = get_str(j, "name", "task");
    r.polarity = polarity_from_name(get_str(j, "polarity", "task"));
    if (j.contains("affordance")) r.affordance = get_str(j, "affordance", "task");
    if (r.polarity == Polarity::None) {
      if (!r.affordance.empty())
        fail(Errc::InvariantViolation,
             "task '" + r.task + "' has polarity none but names an affordance");
    } else {
      if (r.affordance.empty())
        fail(Errc::SchemaError, "task '" + r.task + "' needs an affordance");
      if (!vocab.count(r.affordance))
        fail(Errc::DanglingReference,
             "task '" + r.task + "' names unknown affordance '" + r.affordance + "'");
    }
    // Applicability may reference world categories absent from this manifest.
    if (j.contains("applies_to"))
      for (const auto& c : j.at("applies_to")) r.applies_to.push_back(c.get<std::string>());
    if (j.contains("excludes"))
      for (const auto& c : j.at("excludes")) r.excludes.push_back(c.get<std::string>());
    if (!task_names.insert(r.task).second)
      fail(Errc::SchemaError, "duplicate task name: " + r.task);
    ds.rules.push_back(std::move(r));
  }

  // annotations, grouped into scenes
  ds.scenes.resize(ds.images.size());
  for (size_t i = 0; i < ds.images.size(); ++i) {
    const auto& im = ds.images[i];
    auto& sc = ds.scenes[i];
    sc.image_id = im.id;
    sc.scene_id = std::to_string(im.id);
    sc.file_name = im.file_name;
    sc.depth_file_name = im.depth_file_name;
    sc.width = im.width;
    sc.height = im.height;
    sc.split = im.split;
  }
  std::set<int> annotation_ids;
  for (const auto& j : root.at("annotations")) {
    check_keys(j, "annotation", {"id", "image_id", "category_id", "object_mask"},
               {"affordances", "grasps", "description", "properties"});
    int id = get_int(j, "id", "annotation");
    const std::string ctx = "annotation " + std::to_string(id);
    if (!annotation_ids.insert(id).second)
      fail(Errc::SchemaError, "duplicate annotation id " + std::to_string(id));
    int image_id = get_int(j, "image_id", ctx);
    auto img_it = image_index.find(image_id);
    if (img_it == image_index.end())
      fail(Errc::DanglingReference, ctx + " references unknown image " +
                                        std::to_string(image_id));
    int category_id = get_int(j, "category_id", ctx);
    auto cat_it = category_index.find(category_id);
    if (cat_it == category_index.end())
      fail(Errc::DanglingReference, ctx + " references unknown category " +
                                        std::to_string(category_id));
    const ImageInfo& im = ds.images[img_it->second];
    const CategoryInfo& cat = ds.categories[cat_it->second];

    SceneObject obj;
    obj.annotation_id = id;
    obj.category_id = category_id;
    obj.category = cat.name;
    obj.subcategory = cat.subcategory;
    obj.object_mask = mask_from_json(j.at("object_mask"), im.width, im.height);
    if (j.contains("affordances")) {
      for (const auto& aj : j.at("affordances")) {
        if (!aj.is_object() || !aj.contains("name"))
          fail(Errc::SchemaError, ctx + " affordance entry needs a 'name'");
        std::string name = get_str(aj, "name", ctx);
        if (!vocab.count(name))
          fail(Errc::DanglingReference,
               ctx + " names unknown affordance '" + name + "'");
        if (obj.affordances.count(name))
          fail(Errc::SchemaError, ctx + " repeats affordance '" + name + "'");
        json mj = aj;
        mj.erase("name");
        obj.affordances.emplace(name, mask_from_json(mj, im.width, im.height));
      }
    }
    if (j.contains("grasps")) {
      for (const auto& gj : j.at("grasps")) {
        GraspRect g = grasp_from_json(gj);
        try {
          validate_grasp(g);
        } catch (const Error& e) {
          fail(Errc::InvariantViolation, ctx + ": " + e.what());
        }
        if (g.x < 0 || g.y < 0 || g.x >= im.width || g.y >= im.height)
          fail(Errc::InvariantViolation, ctx + ": grasp center outside image");
        obj.grasps.push_back(g);
      }
    }
    if (j.contains("description")) obj.description = get_str(j, "description", ctx);
    if (j.contains("properties")) obj.properties = j.at("properties");
    ds.scenes[img_it->second].objects.push_back(std::move(obj));
  }
  for (auto& sc : ds.scenes)
    std::sort(sc.objects.begin(), sc.objects.end(),
              [](const SceneObject& a, const SceneObject& b) {
                return a.annotation_id < b.annotation_id;
              });

  // knowledge-base entries from the reference split
  for (const auto& sc : ds.scenes) {
    if (sc.split != "reference") continue;
    if (sc.objects.size() != 1)
      fail(Errc::InvariantViolation,
           "reference scene " + sc.scene_id + " must hold exactly one object");
    const SceneObject& obj = sc.objects[0];
    KnowledgeEntry e;
    e.category = obj.category;
    e.subcategory = obj.subcategory;
    e.scene_id = sc.scene_id;
    e.file_name = sc.file_name;
    e.object_mask = obj.object_mask.mask;
    for (const auto& [name, m] : obj.affordances) e.affordances.emplace(name, m.mask);
    e.grasps = obj.grasps;
    e.description = obj.description;
    e.properties = obj.properties;
    ds.entries.push_back(std::move(e));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& manifest_path) {
  json root;

  json affordances = json::array();
  std::vector<std::string> vocab = ds.affordance_vocab;
  std::sort(vocab.begin(), vocab.end());
  for (const auto& a : vocab) affordances.push_back(a);
  root["affordances"] = affordances;

  std::vector<ImageInfo> images = ds.images;
  std::sort(images.begin(), images.end(),
            [](const ImageInfo& a, const ImageInfo& b) { return a.id < b.id; });
  json jimages = json::array();
  for (const auto& im : images) {
    json j;
    j["id"] = im.id;
    j["file_name"] = im.file_name;
    if (im.depth_file_name) j["depth_file_name"] = *im.depth_file_name;
    j["width"] = im.width;
    j["height"] = im.height;
    j["split"] = im.split;
    jimages.push_back(j);
  }
  root["images"] = jimages;

  std::vector<CategoryInfo> cats = ds.categories;
  std::sort(cats.begin(), cats.end(),
            [](const CategoryInfo& a, const CategoryInfo& b) { return a.id < b.id; });
  json jcats = json::array();
  for (const auto& c : cats) {
    json j;
    j["id"] = c.id;
    j["name"] = c.name;
    j["subcategory"] = c.subcategory;
    jcats.push_back(j);
  }
  root["categories"] = jcats;

  json jtasks = json::array();
  for (const auto& r : ds.rules) {
    json j;
    j["name"] = r.task;
    j["polarity"] = polarity_name(r.polarity);
    if (!r.affordance.empty()) j["affordance"] = r.affordance;
    if (!r.applies_to.empty()) j["applies_to"] = r.applies_to;
    if (!r.excludes.empty()) j["excludes"] = r.excludes;
    jtasks.push_back(j);
  }
  root["tasks"] = jtasks;

  // Flatten scene objects back into one annotation array ordered by id.
  struct Flat {
    const SceneAnnotation* scene;
    const SceneObject* obj;
  };
  std::vector<Flat> flat;
  for (const auto& sc : ds.scenes)
    for (const auto& obj : sc.objects) flat.push_back({&sc, &obj});
  std::sort(flat.begin(), flat.end(), [](const Flat& a, const Flat& b) {
    return a.obj->annotation_id < b.obj->annotation_id;
  });
  json janns = json::array();
  for (const auto& [scene, obj] : flat) {
    json j;
    j["id"] = obj->annotation_id;
    j["image_id"] = scene->image_id;
    j["category_id"] = obj->category_id;
    j["object_mask"] = mask_to_json(obj->object_mask);
    if (!obj->affordances.empty()) {
      json affs = json::array();
      for (const auto& [name, m] : obj->affordances) {
        json a = mask_to_json(m);
        a["name"] = name;
        affs.push_back(a);
      }
      j["affordances"] = affs;
    }
    if (!obj->grasps.empty()) {
      json grasps = json::array();
      for (const auto& g : obj->grasps) grasps.push_back(grasp_to_json(g));
      j["grasps"] = grasps;
    }
    if (!obj->description.empty()) j["description"] = obj->description;
    if (!obj->properties.is_null() && !obj->properties.empty())
      j["properties"] = obj->properties;
    janns.push_back(j);
  }
  root["annotations"] = janns;

  std::ofstream f(manifest_path, std::ios::binary);
  if (!f) fail(Errc::IoError, "cannot write manifest: " + manifest_path.string());
  f << root.dump(2) << "\n";
  if (!f) fail(Errc::IoError, "short write: " + manifest_path.string());
}

bool ValidationReport::has_errors() const {
  for (const auto& i : issues)
    if (i.severity == ValidationIssue::Severity::Error) return true;
  return false;
}

ValidationReport validate_dataset(const Dataset& ds) {
  ValidationReport report;
  auto add = [&](ValidationIssue::Severity sev, std::string msg, std::string ctx) {
    report.issues.push_back({sev, std::move(msg), std::move(ctx)});
  };
  using Sev = ValidationIssue::Severity;

  for (const auto& sc : ds.scenes) {
    const std::string sctx = "scene " + sc.scene_id;
    // split cardinality
    size_t n = sc.objects.size();
    std::set<std::string> cats, subs;
    for (const auto& o : sc.objects) {
      cats.insert(o.category);
      subs.insert(o.subcategory);
    }
    if (is_category_split(sc.split)) {
      if (n < 1 || n > 5)
        add(Sev::Error, "category-split scene must hold 1..5 objects, has " +
                            std::to_string(n), sctx);
      else if (cats.size() != n)
        add(Sev::Error, "category-split scene repeats an object category", sctx);
    } else if (is_subcategory_split(sc.split)) {
      if (n < 2 || n > 4)
        add(Sev::Error, "subcategory-split scene must hold 2..4 objects, has " +
                            std::to_string(n), sctx);
      else {
        if (cats.size() != 1)
          add(Sev::Error, "subcategory-split scene must stay in one category", sctx);
        if (subs.size() != n)
          add(Sev::Error, "subcategory-split scene repeats a subcategory", sctx);
      }
    }

    for (const auto& obj : sc.objects) {
      const std::string ctx = sctx + " / annotation " + std::to_string(obj.annotation_id);
      if (mask_area(obj.object_mask.mask) == 0) {
        add(Sev::Error, "object mask is empty", ctx);
        continue;
      }
      for (const auto& [name, am] : obj.affordances) {
        int64_t area = mask_area(am.mask);
        if (area == 0) {
          add(Sev::Warning, "affordance '" + name + "' mask is empty", ctx);
          continue;
        }
        int64_t escaped = area - mask_intersection_area(am.mask, obj.object_mask.mask);
        if (escaped > 0)
          add(Sev::Warning,
              "affordance '" + name + "' escapes the object mask by " +
                  std::to_string(escaped) + " px", ctx);
      }
      for (size_t gi = 0; gi < obj.grasps.size(); ++gi) {
        const auto& g = obj.grasps[gi];
        int gx = static_cast<int>(std::lround(g.x));
        int gy = static_cast<int>(std::lround(g.y));
        if (!obj.object_mask.mask.in_bounds(gx, gy) ||
            !obj.object_mask.mask.at(gx, gy))
          add(Sev::Warning,
              "grasp " + std::to_string(gi) + " is centered off the object", ctx);
      }
      if (sc.split == "reference" && obj.description.empty())
        add(Sev::Error, "reference entry is missing a description", ctx);
    }
  }
  return report;
}

}  // namespace tog
