#include "tog/trace.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

namespace tog {

namespace {

struct Rgb {
  uint8_t r, g, b;
};

const Rgb kPalette[] = {{230, 80, 80},  {80, 190, 90},  {90, 120, 230},
                        {230, 190, 60}, {180, 90, 210}, {70, 200, 200},
                        {230, 140, 60}, {150, 150, 150}};

ImageU8 as_rgb(const ImageU8& scene) {
  if (scene.channels == 3) return scene;
  ImageU8 out(scene.width, scene.height, 3);
  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = scene.at(x, y, 0);
  return out;
}

void tint(ImageU8& img, const BinaryMask& mask, Rgb color) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (!mask.in_bounds(x, y) || !mask.at(x, y)) continue;
      img.at(x, y, 0) = static_cast<uint8_t>((img.at(x, y, 0) + color.r) / 2);
      img.at(x, y, 1) = static_cast<uint8_t>((img.at(x, y, 1) + color.g) / 2);
      img.at(x, y, 2) = static_cast<uint8_t>((img.at(x, y, 2) + color.b) / 2);
    }
}

void put(ImageU8& img, int x, int y, Rgb color) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  img.at(x, y, 0) = color.r;
  img.at(x, y, 1) = color.g;
  img.at(x, y, 2) = color.b;
}

void draw_line(ImageU8& img, Vec2 a, Vec2 b, Rgb color) {
  int x0 = static_cast<int>(std::lround(a.x));
  int y0 = static_cast<int>(std::lround(a.y));
  int x1 = static_cast<int>(std::lround(b.x));
  int y1 = static_cast<int>(std::lround(b.y));
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put(img, x0, y0, color);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_rect(ImageU8& img, const GraspRect& g, Rgb color) {
  auto c = rect_corners(g);
  for (int i = 0; i < 4; ++i) draw_line(img, c[i], c[(i + 1) % 4], color);
}

void save(const ImageU8& img, const std::filesystem::path& path,
          std::vector<std::filesystem::path>& written) {
  save_png(img, path);
  written.push_back(path);
}

}  // namespace

std::vector<std::filesystem::path> write_trace(const TogResult& result,
                                               const ImageU8& scene,
                                               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::IoError, "cannot create " + dir.string());

  std::vector<std::filesystem::path> written;
  ImageU8 base = as_rgb(scene);

  ImageU8 segments = base;
  for (size_t i = 0; i < result.candidates.size(); ++i)
    tint(segments, result.candidates[i], kPalette[i % std::size(kPalette)]);
  save(segments, dir / "01_segments.png", written);

  ImageU8 recognition = base;
  for (size_t i = 0; i < result.candidates.size(); ++i)
    if (static_cast<int>(i) != result.selected_index)
      tint(recognition, result.candidates[i], {90, 90, 90});
  if (result.selected_index >= 0)
    tint(recognition, result.selected_mask, {60, 220, 60});
  save(recognition, dir / "02_recognition.png", written);

  ImageU8 region = base;
  if (result.selected_index >= 0) tint(region, result.selected_mask, {90, 90, 90});
  tint(region, result.task_region, {240, 220, 40});
  save(region, dir / "03_task_region.png", written);

  ImageU8 proposals = base;
  for (const auto& g : result.grasp_candidates) draw_rect(proposals, g, {80, 120, 240});
  save(proposals, dir / "04_grasp_candidates.png", written);

  ImageU8 final_grasp = base;
  tint(final_grasp, result.task_region, {240, 220, 40});
  if (result.selected_grasp_index >= 0)
    draw_rect(final_grasp, result.selected_grasp, {40, 230, 40});
  save(final_grasp, dir / "05_final_grasp.png", written);

  json j;
  j["scene_id"] = result.scene_id;
  j["mode"] = mode_name(result.mode);
  j["target"] = result.target_subcategory;
  j["task"] = result.task;
  j["raw_segment_count"] = result.raw_segment_count;
  j["candidate_count"] = static_cast<int>(result.candidates.size());
  j["scores"] = result.scores;
  j["selected_index"] = result.selected_index;
  j["align_degrees"] = result.align_degrees;
  j["grasp_count"] = static_cast<int>(result.grasp_candidates.size());
  j["selected_grasp_index"] = result.selected_grasp_index;
  j["selected_grasp"] = grasp_to_json(result.selected_grasp);
  json files = json::array();
  for (const auto& p : written) files.push_back(p.filename().string());
  j["files"] = files;

  auto log_path = dir / "trace.json";
  std::ofstream out(log_path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + log_path.string());
  out << j.dump(2) << "\n";
  written.push_back(log_path);
  return written;
}

}  // namespace tog
