#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace icps {

/// 8-bit RGB image, row-major, top row first.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width*height*3 bytes

  static ImageRGB create(int w, int h) {
    return {w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 0)};
  }
  std::uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

/// Binary PPM (P6, maxval 255).
void write_ppm(const ImageRGB& img, const std::string& path);
ImageRGB read_ppm(const std::string& path);

/// FNV-1a 64-bit over the pixel buffer, as a 16-digit lowercase hex
/// string. Used for golden-image regression files.
std::string image_hash_hex(const ImageRGB& img);

/// Mean absolute per-channel difference on the 8-bit scale.
double mean_abs_diff(const ImageRGB& a, const ImageRGB& b);

}  // namespace icps
