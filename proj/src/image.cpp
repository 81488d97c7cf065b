#include "equisym/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "equisym/errors.hpp"

namespace equisym {

namespace {

int read_header_int(std::istream& in, const std::string& path) {
  int c = in.peek();
  while (c == '#' || std::isspace(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int value = 0;
  if (!(in >> value)) throw DataError(path + ": malformed PNM header");
  return value;
}

struct Tap {
  int i0, i1;
  double w1;
};

std::vector<Tap> linear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    taps[o] = {i0, std::min(i0 + 1, in - 1), src - i0};
  }
  return taps;
}

}  // namespace

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw DataError(path + ": only binary PGM (P5) and PPM (P6) are supported");
  const int w = read_header_int(in, path);
  const int h = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (w <= 0 || h <= 0 || maxval != 255) throw DataError(path + ": unsupported size or maxval");
  in.get();
  Image image(w, h, magic == "P5" ? 1 : 3);
  in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) throw DataError(path + ": truncated pixel data");
  return image;
}

void write_pnm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path);
  out << (image.channels == 1 ? "P5" : "P6") << '\n' << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw DataError("failed writing " + path);
}

std::pair<int, int> fit_size(int width, int height, int max_side) {
  if (max_side < 1) throw UsageError("resize target must be positive");
  const double scale = static_cast<double>(max_side) / std::max(width, height);
  return {std::max(1, static_cast<int>(std::lround(width * scale))),
          std::max(1, static_cast<int>(std::lround(height * scale)))};
}

Image resize_image(const Image& image, int width, int height) {
  if (width == image.width && height == image.height) return image;
  const auto tx = linear_taps(image.width, width);
  const auto ty = linear_taps(image.height, height);
  Image out(width, height, image.channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < image.channels; ++c) {
        const auto& a = tx[x];
        const auto& b = ty[y];
        const double top = image.at(a.i0, b.i0, c) * (1 - a.w1) + image.at(a.i1, b.i0, c) * a.w1;
        const double bottom = image.at(a.i0, b.i1, c) * (1 - a.w1) + image.at(a.i1, b.i1, c) * a.w1;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(top * (1 - b.w1) + bottom * b.w1), 0L, 255L));
      }
  return out;
}

std::vector<float> resize_scores(const std::vector<float>& scores, int width, int height, int new_width,
                                 int new_height) {
  if (width == new_width && height == new_height) return scores;
  const auto tx = linear_taps(width, new_width);
  const auto ty = linear_taps(height, new_height);
  std::vector<float> out(static_cast<std::size_t>(new_width) * new_height);
  auto at = [&](int x, int y) { return static_cast<double>(scores[static_cast<std::size_t>(y) * width + x]); };
  for (int y = 0; y < new_height; ++y)
    for (int x = 0; x < new_width; ++x) {
      const auto& a = tx[x];
      const auto& b = ty[y];
      const double top = at(a.i0, b.i0) * (1 - a.w1) + at(a.i1, b.i0) * a.w1;
      const double bottom = at(a.i0, b.i1) * (1 - a.w1) + at(a.i1, b.i1) * a.w1;
      out[static_cast<std::size_t>(y) * new_width + x] = static_cast<float>(top * (1 - b.w1) + bottom * b.w1);
    }
  return out;
}

template <typename Scalar>
FeatureField<Scalar> image_to_field(const Image& image, const DihedralGroup& group) {
  FeatureField<Scalar> f(FieldType::trivial(group, 3), image.height, image.width);
  const int n = image.width * image.height;
  for (int c = 0; c < 3; ++c) {
    const int src = image.channels == 1 ? 0 : c;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = image.pixels[static_cast<std::size_t>(i) * image.channels + src];
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    const double inv = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
    for (int i = 0; i < n; ++i)
      f.data(c, i) = static_cast<Scalar>((image.pixels[static_cast<std::size_t>(i) * image.channels + src] - mean) * inv);
  }
  return f;
}

Image scores_to_gray(const std::vector<float>& scores, int width, int height) {
  Image out(width, height, 1);
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(scores[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

Image overlay_scores(const Image& image, const std::vector<float>& scores) {
  Image out(image.width, image.height, 3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double a = std::clamp(static_cast<double>(scores[static_cast<std::size_t>(y) * image.width + x]), 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double base = image.at(x, y, image.channels == 1 ? 0 : c);
        const double tint = c == 0 ? 255.0 : 0.0;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround((1 - a) * base + a * tint));
      }
    }
  return out;
}

template FeatureField<float> image_to_field(const Image&, const DihedralGroup&);
template FeatureField<double> image_to_field(const Image&, const DihedralGroup&);

}  // namespace equisym
