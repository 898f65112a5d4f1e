#pragma once

#include <filesystem>
#include <vector>

#include "tog/pipeline.hpp"

namespace tog {

// Writes the per-stage overlays for one pipeline run into `dir`:
//   01_segments.png        SSF survivors, palette-tinted
//   02_recognition.png     the selected candidate highlighted
//   03_task_region.png     the predicted task region
//   04_grasp_candidates.png  every proposed rectangle
//   05_final_grasp.png     the chosen rectangle on the task region
// plus trace.json (stage log without timings, so dumps are run-to-run
// identical). Returns the written paths.
std::vector<std::filesystem::path> write_trace(const TogResult& result,
                                               const ImageU8& scene,
                                               const std::filesystem::path& dir);

}  // namespace tog
