#include "icps/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "icps/errors.hpp"

namespace icps {

void write_ppm(const ImageRGB& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write image: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoFailure("short write: " + path);
}

ImageRGB read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read image: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw IoFailure("not a P6 PPM: " + path);
  auto next_token = [&in, &path]() {
    // Skips whitespace and '#' comment lines.
    std::string tok;
    for (;;) {
      if (!(in >> tok)) throw IoFailure("truncated PPM header: " + path);
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
  };
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw IoFailure("bad PPM header: " + path);
  }
  if (w <= 0 || h <= 0 || maxval != 255)
    throw IoFailure("unsupported PPM header: " + path);
  in.get();  // single whitespace after maxval
  ImageRGB img = ImageRGB::create(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw IoFailure("truncated PPM pixel data: " + path);
  return img;
}

std::string image_hash_hex(const ImageRGB& img) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : img.pixels) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

double mean_abs_diff(const ImageRGB& a, const ImageRGB& b) {
  if (a.width != b.width || a.height != b.height)
    throw IoFailure("image size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    sum += std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]);
  return sum / static_cast<double>(a.pixels.size());
}

}  // namespace icps
