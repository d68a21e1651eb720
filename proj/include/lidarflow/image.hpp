#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lidarflow {

class Rng;

/// Row-major, channel-interleaved f32 image with samples nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }

  friend bool operator==(const Image& a, const Image& b) = default;
};

/// Throws DimensionMismatch unless both images share width, height and channels.
void require_same_shape(const Image& a, const Image& b, const char* what);

void clamp_unit(Image& image);

/// ITU-R BT.601 luma for RGB, copy for single-channel input.
Image to_luma(const Image& image);

/// Separable Gaussian blur with a kernel radius of ceil(3 sigma) and clamped borders.
Image gaussian_blur(const Image& image, double sigma);

/// Averages each factor x factor block; trailing rows/columns that do not fill a block are dropped.
Image downsample_box(const Image& image, int factor);

/// Bicubic (Keys, a = -0.5) resampling by an integer factor with pixel-center
/// alignment and clamped borders. Output is clamped to [0, 1].
Image upsample_bicubic(const Image& image, int factor);

/// Additive i.i.d. Gaussian noise, clamped to [0, 1].
Image add_gaussian_noise(const Image& image, double sigma, Rng& rng);

/// Sum of squared 4-neighbor Laplacian responses over the luma of a region
/// [x0, x1) x [y0, y1); border pixels use clamped neighbors.
double laplacian_energy(const Image& image, int x0, int y0, int x1, int y1);
double laplacian_energy(const Image& image);

/// Mean absolute difference over all samples.
double mean_absolute_error(const Image& a, const Image& b);

/// Places images left to right, top-aligned; unused area is 0.
Image hconcat(const std::vector<Image>& images);

}  // namespace lidarflow
