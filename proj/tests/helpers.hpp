#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "tog/maskops.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
struct TempDir {
  fs::path path;

  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "togtestXXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline tog::BinaryMask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
  tog::BinaryMask m(w, h);
  for (int y = y0; y < y0 + rh; ++y)
    for (int x = x0; x < x0 + rw; ++x)
      if (m.in_bounds(x, y)) m.set(x, y);
  return m;
}

inline tog::BinaryMask random_rect_mask(std::mt19937_64& rng, int w, int h,
                                        int max_side) {
  std::uniform_int_distribution<int> side(1, max_side);
  int rw = side(rng), rh = side(rng);
  rw = std::min(rw, w);
  rh = std::min(rh, h);
  std::uniform_int_distribution<int> px(0, w - rw), py(0, h - rh);
  return rect_mask(w, h, px(rng), py(rng), rw, rh);
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout only unless the command redirects
};

// Runs a shell command, capturing stdout; caller appends 2>&1 when stderr
// matters. Paths used in tests never contain shell metacharacters.
inline CmdResult run_cmd(const std::string& cmd) {
  CmdResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed: " + cmd);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace testutil
