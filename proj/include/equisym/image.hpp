#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "equisym/field.hpp"

namespace equisym {

/// 8-bit interleaved image with 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, 0) {}

  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Binary PGM (P5) or PPM (P6) with maxval 255.
Image read_pnm(const std::string& path);
void write_pnm(const std::string& path, const Image& image);

/// Size with the longer side scaled to `max_side` (aspect preserved, sides >= 1).
std::pair<int, int> fit_size(int width, int height, int max_side);

/// Bilinear resize with half-pixel centers.
Image resize_image(const Image& image, int width, int height);

/// Nearest-neighbour resize of a row-major label map.
template <typename T>
std::vector<T> resize_nearest(const std::vector<T>& map, int width, int height, int new_width, int new_height) {
  std::vector<T> out(static_cast<std::size_t>(new_width) * new_height);
  for (int y = 0; y < new_height; ++y) {
    const int sy = std::min(height - 1, static_cast<int>((y + 0.5) * height / new_height));
    for (int x = 0; x < new_width; ++x) {
      const int sx = std::min(width - 1, static_cast<int>((x + 0.5) * width / new_width));
      out[static_cast<std::size_t>(y) * new_width + x] = map[static_cast<std::size_t>(sy) * width + sx];
    }
  }
  return out;
}

/// Resize of a float score map (bilinear, half-pixel centers).
std::vector<float> resize_scores(const std::vector<float>& scores, int width, int height, int new_width,
                                 int new_height);

/// Three trivial channels, each standardized to zero mean and unit variance.
template <typename Scalar>
FeatureField<Scalar> image_to_field(const Image& image, const DihedralGroup& group);

/// Scores in [0,1] as an 8-bit gray image.
Image scores_to_gray(const std::vector<float>& scores, int width, int height);

/// Score map alpha-blended on the image in red (alpha = score).
Image overlay_scores(const Image& image, const std::vector<float>& scores);

}  // namespace equisym
