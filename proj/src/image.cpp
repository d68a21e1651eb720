#include "lidarflow/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lidarflow/error.hpp"
#include "lidarflow/random.hpp"

namespace lidarflow {

Image::Image(int w, int h, int c, float fill) : width(w), height(h), channels(c) {
  if (w < 0 || h < 0 || (c != 1 && c != 3)) {
    throw Error(ErrorCode::kInvalidArgument, "image must have non-negative size and 1 or 3 channels");
  }
  data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width) + "x" + std::to_string(a.height) + "x" +
                    std::to_string(a.channels) + " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                    "x" + std::to_string(b.channels));
  }
}

void clamp_unit(Image& image) {
  for (float& s : image.data) s = std::clamp(s, 0.0f, 1.0f);
}

Image to_luma(const Image& image) {
  if (image.channels == 1) return image;
  Image out(image.width, image.height, 1);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const float* p = &image.data[i * 3];
    out.data[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
  }
  return out;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0.0) return image;
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = image.width, h = image.height, c = image.channels;
  Image tmp(w, h, c), out(w, h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * image.at(std::clamp(x + i, 0, w - 1), y, ch);
        tmp.at(x, y, ch) = static_cast<float>(acc);
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(x, std::clamp(y + i, 0, h - 1), ch);
        out.at(x, y, ch) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Image downsample_box(const Image& image, int factor) {
  if (factor < 1) throw Error(ErrorCode::kInvalidArgument, "downsample factor must be >= 1");
  if (factor == 1) return image;
  Image out(image.width / factor, image.height / factor, image.channels);
  const double norm = 1.0 / (factor * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int ch = 0; ch < image.channels; ++ch) {
        double acc = 0.0;
        for (int j = 0; j < factor; ++j) {
          for (int i = 0; i < factor; ++i) acc += image.at(x * factor + i, y * factor + j, ch);
        }
        out.at(x, y, ch) = static_cast<float>(acc * norm);
      }
    }
  }
  return out;
}

namespace {

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

}  // namespace

Image upsample_bicubic(const Image& image, int factor) {
  if (factor < 1) throw Error(ErrorCode::kInvalidArgument, "upsample factor must be >= 1");
  if (factor == 1) return image;
  const int w = image.width, h = image.height, c = image.channels;
  Image out(w * factor, h * factor, c);
  for (int yy = 0; yy < out.height; ++yy) {
    const double sy = (yy + 0.5) / factor - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    for (int xx = 0; xx < out.width; ++xx) {
      const double sx = (xx + 0.5) / factor - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int j = -1; j <= 2; ++j) {
          const double wy = cubic_weight(sy - (y0 + j));
          const int yi = std::clamp(y0 + j, 0, h - 1);
          for (int i = -1; i <= 2; ++i) {
            const double wx = cubic_weight(sx - (x0 + i));
            acc += wx * wy * image.at(std::clamp(x0 + i, 0, w - 1), yi, ch);
          }
        }
        out.at(xx, yy, ch) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

Image add_gaussian_noise(const Image& image, double sigma, Rng& rng) {
  Image out = image;
  for (float& s : out.data) s = static_cast<float>(std::clamp(s + sigma * rng.normal(), 0.0, 1.0));
  return out;
}

double laplacian_energy(const Image& image, int x0, int y0, int x1, int y1) {
  const Image luma = to_luma(image);
  const int w = luma.width, h = luma.height;
  double energy = 0.0;
  for (int y = std::max(0, y0); y < std::min(h, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(w, x1); ++x) {
      const double lap = luma.at(std::max(x - 1, 0), y) + luma.at(std::min(x + 1, w - 1), y) +
                         luma.at(x, std::max(y - 1, 0)) + luma.at(x, std::min(y + 1, h - 1)) - 4.0 * luma.at(x, y);
      energy += lap * lap;
    }
  }
  return energy;
}

double laplacian_energy(const Image& image) { return laplacian_energy(image, 0, 0, image.width, image.height); }

double mean_absolute_error(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_absolute_error");
  if (a.data.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
  return acc / static_cast<double>(a.data.size());
}

Image hconcat(const std::vector<Image>& images) {
  if (images.empty()) return {};
  int w = 0, h = 0;
  const int c = images.front().channels;
  for (const Image& im : images) {
    if (im.channels != c) throw Error(ErrorCode::kDimensionMismatch, "hconcat needs equal channel counts");
    w += im.width;
    h = std::max(h, im.height);
  }
  Image out(w, h, c);
  int x_off = 0;
  for (const Image& im : images) {
    for (int y = 0; y < im.height; ++y) {
      std::copy_n(&im.data[im.index(0, y)], static_cast<std::size_t>(im.width) * c, &out.data[out.index(x_off, y)]);
    }
    x_off += im.width;
  }
  return out;
}

}  // namespace lidarflow
