#include "tog/image.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "tog/error.hpp"

namespace tog {

namespace {

// Skips PNM whitespace and '#' comments, returns next integer token.
int next_pnm_int(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) fail(Errc::IoError, "bad PNM header token");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  return v;
}

void put_be32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::ofstream& f, const char type[4], const std::string& body) {
  std::string head;
  put_be32(head, static_cast<uint32_t>(body.size()));
  head.append(type, 4);
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  uint32_t crc = crc32(0, nullptr, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(body.data()),
              static_cast<uInt>(body.size()));
  std::string tail;
  put_be32(tail, crc);
  f.write(tail.data(), 4);
}

}  // namespace

ImageU8 load_image(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::IoError, "cannot open image: " + path.string());
  char magic[2] = {0, 0};
  f.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    fail(Errc::IoError, "unsupported image format (want P5/P6 PNM): " + path.string());
  int channels = magic[1] == '6' ? 3 : 1;
  int w = next_pnm_int(f);
  int h = next_pnm_int(f);
  int maxval = next_pnm_int(f);
  if (w <= 0 || h <= 0 || maxval != 255)
    fail(Errc::IoError, "unsupported PNM geometry in " + path.string());
  ImageU8 img(w, h, channels);
  f.read(reinterpret_cast<char*>(img.data.data()),
         static_cast<std::streamsize>(img.data.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.data.size()))
    fail(Errc::IoError, "truncated image: " + path.string());
  return img;
}

void save_ppm(const ImageU8& img, const std::filesystem::path& path) {
  if (img.channels != 3 && img.channels != 1)
    fail(Errc::IoError, "save_ppm wants 1 or 3 channels");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::IoError, "cannot write image: " + path.string());
  f << (img.channels == 3 ? "P6" : "P5") << "\n"
    << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (!f) fail(Errc::IoError, "short write: " + path.string());
}

void save_png(const ImageU8& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    fail(Errc::IoError, "save_png wants 1 or 3 channels");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::IoError, "cannot write image: " + path.string());
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  f.write(reinterpret_cast<const char*>(sig), 8);

  std::string ihdr;
  put_be32(ihdr, static_cast<uint32_t>(img.width));
  put_be32(ihdr, static_cast<uint32_t>(img.height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(img.channels == 3 ? 2 : 0);           // color type
  ihdr.push_back(0);                                   // compression
  ihdr.push_back(0);                                   // filter
  ihdr.push_back(0);                                   // interlace
  put_chunk(f, "IHDR", ihdr);

  // Filter byte 0 per scanline, then one zlib stream.
  const size_t stride = static_cast<size_t>(img.width) * img.channels;
  std::vector<uint8_t> raw((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw[static_cast<size_t>(y) * (stride + 1)] = 0;
    std::memcpy(&raw[static_cast<size_t>(y) * (stride + 1) + 1],
                &img.data[static_cast<size_t>(y) * stride], stride);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string idat(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(idat.data()), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    fail(Errc::IoError, "zlib compression failed");
  idat.resize(bound);
  put_chunk(f, "IDAT", idat);
  put_chunk(f, "IEND", "");
  if (!f) fail(Errc::IoError, "short write: " + path.string());
}

double sample_bilinear(const ImageU8& img, double x, double y, int c) {
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  double fx = x - x0, fy = y - y0;
  auto px = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= img.width || yi >= img.height) return 0.0;
    return img.at(xi, yi, c);
  };
  return px(x0, y0) * (1 - fx) * (1 - fy) + px(x0 + 1, y0) * fx * (1 - fy) +
         px(x0, y0 + 1) * (1 - fx) * fy + px(x0 + 1, y0 + 1) * fx * fy;
}

}  // namespace tog
