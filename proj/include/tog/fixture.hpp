#pragma once

#include <filesystem>

#include "tog/dataset.hpp"

namespace tog {

struct FixtureOptions {
  int eval_scenes = 12;    // KC-KSC split
  int subcat_scenes = 2;   // subcategory-KC split
  int image_w = 480;
  int image_h = 360;
};

// Builds the synthetic benchmark under `root`: PPM images plus
// manifest.json, which is returned. 10 categories x 2 subcategories of
// two-rectangle objects; bounding-box long sides are powers of two so
// crop/uncrop round-trips are exact, every object area sits inside the
// default segment size window, and each object carries a grasp inside every
// applicable task's region. One reference scene per subcategory feeds the
// knowledge base.
std::filesystem::path write_fixture(const std::filesystem::path& root,
                                    const FixtureOptions& opts = {});

}  // namespace tog
