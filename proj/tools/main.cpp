#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tog/backends.hpp"
#include "tog/dataset.hpp"
#include "tog/eval.hpp"
#include "tog/pipeline.hpp"
#include "tog/trace.hpp"

namespace {

using tog::json;

json load_json_file(const std::string& path, const char* what) {
  std::ifstream f(path);
  if (!f)
    tog::fail(tog::Errc::IoError,
              std::string("cannot open ") + what + ": " + path);
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded())
    tog::fail(tog::Errc::SchemaError,
              std::string(what) + " is not valid JSON: " + path);
  return j;
}

struct PipelineFlags {
  double min_area = 400;
  double max_area = 50000;
  double tau = 0.75;
  int n_rots = 36;
  int crop_target = 256;

  void attach(CLI::App* cmd) {
    cmd->add_option("--min-area", min_area,
                    "Smallest accepted segment area, exclusive (px^2)")
        ->capture_default_str();
    cmd->add_option("--max-area", max_area,
                    "Largest accepted segment area, exclusive (px^2)")
        ->capture_default_str();
    cmd->add_option("--tau", tau, "Subset-overlap suppression threshold, (0, 1]")
        ->capture_default_str();
    cmd->add_option("--n-rots", n_rots, "Alignment rotation steps (>= 1)")
        ->capture_default_str();
    cmd->add_option("--crop-target", crop_target, "Crop square side (px)")
        ->capture_default_str();
  }

  // Returns a usage-error message, or empty when every override is sane.
  std::string check() const {
    if (!(tau > 0 && tau <= 1)) return "--tau must lie in (0, 1]";
    if (min_area < 0 || max_area <= min_area)
      return "--min-area/--max-area must satisfy 0 <= min < max";
    if (n_rots < 1) return "--n-rots must be at least 1";
    if (crop_target < 8) return "--crop-target must be at least 8";
    return "";
  }

  tog::TogParams params() const {
    tog::TogParams p;
    p.min_area = min_area;
    p.max_area = max_area;
    p.tau = tau;
    p.n_rots = n_rots;
    p.crop_target = crop_target;
    return p;
  }
};

json result_to_json(const tog::TogResult& res) {
  json j;
  j["scene_id"] = res.scene_id;
  j["mode"] = tog::mode_name(res.mode);
  j["target"] = res.target_subcategory;
  j["task"] = res.task;
  j["raw_segment_count"] = res.raw_segment_count;
  j["candidate_count"] = static_cast<int>(res.candidates.size());
  j["scores"] = res.scores;
  j["selected_index"] = res.selected_index;
  j["align_degrees"] = res.align_degrees;
  j["grasp_count"] = static_cast<int>(res.grasp_candidates.size());
  j["selected_grasp_index"] = res.selected_grasp_index;
  j["selected_grasp"] = tog::grasp_to_json(res.selected_grasp);
  return j;
}

int run_validate(const std::string& manifest) {
  tog::Dataset ds = tog::load_dataset(manifest);
  tog::ValidationReport report = tog::validate_dataset(ds);
  for (const auto& issue : report.issues) {
    const char* sev =
        issue.severity == tog::ValidationIssue::Severity::Error ? "error"
                                                                : "warning";
    std::cout << sev << ": " << issue.message;
    if (!issue.context.empty()) std::cout << " [" << issue.context << "]";
    std::cout << "\n";
  }
  std::cerr << report.issues.size() << " issue(s), "
            << (report.has_errors() ? "errors present" : "no errors") << "\n";
  return report.has_errors() ? 1 : 0;
}

int run_refine(const std::string& manifest, const std::string& out) {
  tog::Dataset ds = tog::load_dataset(manifest);
  int changed = 0;
  for (auto& scene : ds.scenes) {
    for (auto& obj : scene.objects) {
      for (auto& [name, am] : obj.affordances) {
        tog::BinaryMask clipped =
            tog::refine_affordance(am.mask, obj.object_mask.mask);
        if (clipped == am.mask) continue;
        am.mask = std::move(clipped);
        am.source = tog::AnnotatedMask::Source::Bits;
        am.region = {};
        ++changed;
      }
    }
  }
  tog::save_dataset(ds, out);
  std::cerr << "clipped " << changed << " affordance mask(s) -> " << out << "\n";
  return 0;
}

int run_autolabel(const std::string& manifest, const std::string& reference,
                  int n_rots, double min_iou, const std::string& out) {
  tog::Dataset ds = tog::load_dataset(manifest);
  tog::Dataset ref = tog::load_dataset(reference);
  int labeled = 0, skipped = 0;
  for (auto& scene : ds.scenes) {
    if (scene.split == "reference") continue;
    for (auto& obj : scene.objects) {
      const tog::KnowledgeEntry* entry = ref.find_entry(obj.subcategory);
      if (!entry) {
        std::cerr << "warning: no reference entry for '" << obj.subcategory
                  << "' (scene " << scene.scene_id << ")\n";
        ++skipped;
        continue;
      }
      bool need_grasps = obj.grasps.empty();
      std::vector<std::string> missing;
      for (const auto& [name, m] : entry->affordances)
        if (!obj.affordances.count(name)) missing.push_back(name);
      if (!need_grasps && missing.empty()) continue;

      tog::AutoLabelResult res;
      try {
        res = tog::auto_label(obj.object_mask.mask, *entry, n_rots, min_iou);
      } catch (const tog::Error& e) {
        std::cerr << "warning: alignment failed for '" << obj.subcategory
                  << "' in scene " << scene.scene_id << ": " << e.what() << "\n";
        ++skipped;
        continue;
      }
      if (need_grasps) obj.grasps = res.grasps;
      for (const auto& name : missing) {
        auto it = res.rough_affordances.find(name);
        if (it == res.rough_affordances.end()) continue;
        tog::AnnotatedMask am;
        am.source = tog::AnnotatedMask::Source::Bits;
        am.mask = tog::refine_affordance(it->second, obj.object_mask.mask);
        obj.affordances.emplace(name, std::move(am));
      }
      ++labeled;
    }
  }
  tog::save_dataset(ds, out);
  std::cerr << "auto-labeled " << labeled << " object(s), skipped " << skipped
            << " -> " << out << "\n";
  return 0;
}

int run_single(const std::string& manifest, const std::string& scene_id,
               const std::string& object, const std::string& task,
               const std::string& mode, const std::string& backend_cfg,
               const PipelineFlags& flags, const std::string& trace_dir) {
  tog::Dataset ds = tog::load_dataset(manifest);
  const tog::SceneAnnotation* scene = ds.find_scene(scene_id);
  if (!scene)
    tog::fail(tog::Errc::DanglingReference, "unknown scene id: " + scene_id);

  tog::BackendSet backends =
      tog::make_backends_from_config(load_json_file(backend_cfg, "backend config"), ds);

  tog::TogRequest req;
  req.scene.id = scene->scene_id;
  req.scene.rgb = tog::load_image(ds.root / scene->file_name);
  req.target_subcategory = object;
  req.task = task;
  req.mode = tog::mode_from_name(mode);
  req.params = flags.params();

  tog::TogResult res = tog::run_tog(req, backends, ds);
  std::cout << result_to_json(res).dump(2) << "\n";
  if (!trace_dir.empty()) {
    auto files = tog::write_trace(res, req.scene.rgb, trace_dir);
    std::cerr << "trace: " << files.size() << " file(s) in " << trace_dir << "\n";
  }
  return 0;
}

int run_eval(const std::string& manifest, const std::string& split,
             const std::string& mode, const std::string& backend_cfg,
             const std::string& report_dir, const std::string& format,
             const PipelineFlags& flags, int workers, double iou_thresh,
             double angle_thresh) {
  tog::Dataset ds = tog::load_dataset(manifest);

  tog::EvalConfig cfg;
  cfg.split = split;
  cfg.mode = tog::mode_from_name(mode);
  cfg.backends =
      tog::make_backends_from_config(load_json_file(backend_cfg, "backend config"), ds);
  cfg.params = flags.params();
  cfg.iou_threshold = iou_thresh;
  cfg.angle_threshold_deg = angle_thresh;
  cfg.workers = workers;

  tog::EvalReport report = tog::evaluate_split(ds, cfg);
  auto files = tog::emit_report(report, format, report_dir);
  for (const auto& f : files) std::cout << f.string() << "\n";
  return 0;
}

int run_report(const std::string& in, const std::string& format,
               const std::string& out) {
  tog::EvalReport report = tog::load_report(in);
  auto files = tog::emit_report(report, format, out);
  for (const auto& f : files) std::cout << f.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-oriented grasping toolkit"};
  app.require_subcommand(1);

  // validate
  auto* validate = app.add_subcommand("validate", "Check a dataset manifest");
  std::string v_manifest;
  validate->add_option("manifest", v_manifest, "Manifest path")->required();

  // refine-affordances
  auto* refine = app.add_subcommand(
      "refine-affordances", "Clip affordance masks to their object masks");
  std::string r_manifest, r_out;
  refine->add_option("manifest", r_manifest, "Manifest path")->required();
  refine->add_option("-o,--out", r_out, "Output manifest path")->required();

  // auto-label
  auto* autolabel = app.add_subcommand(
      "auto-label", "Transfer grasps and rough affordances from references");
  std::string a_manifest, a_reference, a_out;
  int a_n_rots = 36;
  double a_min_iou = 0.3;
  autolabel->add_option("manifest", a_manifest, "Manifest path")->required();
  autolabel->add_option("--reference", a_reference, "Reference manifest path")
      ->required();
  autolabel->add_option("--n-rots", a_n_rots, "Rotation search steps")
      ->capture_default_str();
  autolabel->add_option("--min-iou", a_min_iou, "Minimum alignment IoU")
      ->capture_default_str();
  autolabel->add_option("-o,--out", a_out, "Output manifest path")->required();

  // run
  auto* run = app.add_subcommand("run", "Run one task-oriented grasping query");
  std::string run_manifest, run_scene, run_object, run_task, run_backend;
  std::string run_mode = "binary", run_trace;
  PipelineFlags run_flags;
  run->add_option("--manifest", run_manifest, "Manifest path")->required();
  run->add_option("--scene", run_scene, "Scene id")->required();
  run->add_option("--object", run_object, "Target object subcategory")->required();
  run->add_option("--task", run_task, "Task name")->required();
  run->add_option("--mode", run_mode, "Framework mode")
      ->check(CLI::IsMember({"binary", "os", "standard"}))
      ->capture_default_str();
  run->add_option("--backend", run_backend, "Backend configuration JSON")
      ->envname("TOG_BACKEND_CONFIG")
      ->required();
  run_flags.attach(run);
  run->add_option("--dump-trace", run_trace, "Write per-stage artifacts here");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a dataset split");
  std::string e_manifest, e_split, e_backend, e_report_dir;
  std::string e_mode = "binary", e_format = "json";
  PipelineFlags e_flags;
  int e_workers = 1;
  double e_iou = 0.25, e_angle = 30.0;
  eval->add_option("--manifest", e_manifest, "Manifest path")->required();
  eval->add_option("--split", e_split, "Split tag to evaluate")->required();
  eval->add_option("--mode", e_mode, "Framework mode")
      ->check(CLI::IsMember({"binary", "os", "standard"}))
      ->capture_default_str();
  eval->add_option("--backend", e_backend, "Backend configuration JSON")
      ->envname("TOG_BACKEND_CONFIG")
      ->required();
  eval->add_option("--report-dir", e_report_dir, "Report output directory")
      ->required();
  eval->add_option("--format", e_format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "markdown"}))
      ->capture_default_str();
  eval->add_option("--workers", e_workers, "Parallel trial workers")
      ->capture_default_str();
  eval->add_option("--iou-thresh", e_iou,
                   "Grasp success requires rotated IoU strictly above this")
      ->capture_default_str();
  eval->add_option("--angle-thresh", e_angle,
                   "Grasp success requires angle difference at most this (deg)")
      ->capture_default_str();
  e_flags.attach(eval);

  // report
  auto* report = app.add_subcommand("report", "Re-emit a saved report");
  std::string rep_in, rep_out;
  std::string rep_format = "markdown";
  report->add_option("--in", rep_in, "report.json produced by eval")->required();
  report->add_option("--format", rep_format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "markdown"}))
      ->capture_default_str();
  report->add_option("--out", rep_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(validate)) return run_validate(v_manifest);
    if (app.got_subcommand(refine)) return run_refine(r_manifest, r_out);
    if (app.got_subcommand(autolabel)) {
      if (a_n_rots < 1 || a_min_iou <= 0 || a_min_iou > 1) {
        std::cerr << "usage error: --n-rots must be >= 1 and --min-iou in (0, 1]\n";
        return 2;
      }
      return run_autolabel(a_manifest, a_reference, a_n_rots, a_min_iou, a_out);
    }
    if (app.got_subcommand(run)) {
      if (auto msg = run_flags.check(); !msg.empty()) {
        std::cerr << "usage error: " << msg << "\n";
        return 2;
      }
      return run_single(run_manifest, run_scene, run_object, run_task, run_mode,
                        run_backend, run_flags, run_trace);
    }
    if (app.got_subcommand(eval)) {
      if (auto msg = e_flags.check(); !msg.empty()) {
        std::cerr << "usage error: " << msg << "\n";
        return 2;
      }
      if (e_workers < 1 || e_iou <= 0 || e_angle <= 0) {
        std::cerr << "usage error: --workers must be >= 1 and thresholds positive\n";
        return 2;
      }
      return run_eval(e_manifest, e_split, e_mode, e_backend, e_report_dir,
                      e_format, e_flags, e_workers, e_iou, e_angle);
    }
    if (app.got_subcommand(report)) return run_report(rep_in, rep_format, rep_out);
  } catch (const tog::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
