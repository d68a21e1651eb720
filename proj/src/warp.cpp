#include "lidarflow/warp.hpp"

#include <string>

#include "lidarflow/error.hpp"

namespace lidarflow {
namespace {

constexpr std::int64_t kNone = -1;

void require_field_shape(const Image& src, const MotionField& field, const char* what) {
  if (src.width != field.width() || src.height != field.height()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": image " + std::to_string(src.width) + "x" +
                                                   std::to_string(src.height) + " vs field " +
                                                   std::to_string(field.width()) + "x" +
                                                   std::to_string(field.height()));
  }
}

struct Splat {
  std::vector<std::int64_t> winner;  // source pixel per destination
  std::vector<std::uint8_t> collided;
};

// Single pass over sources in pixel order; a strict depth comparison keeps the
// earlier (smaller-index) source on ties.
Splat splat(const MotionField& field) {
  const int w = field.width(), h = field.height();
  Splat s{std::vector<std::int64_t>(field.size(), kNone), std::vector<std::uint8_t>(field.size(), 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = field.index(x, y);
      if (!field.valid(i)) continue;
      const long dx = nearest_pixel(x + field.du(i));
      const long dy = nearest_pixel(y + field.dv(i));
      if (dx < 0 || dy < 0 || dx >= w || dy >= h) continue;
      const std::size_t d = field.index(static_cast<int>(dx), static_cast<int>(dy));
      if (s.winner[d] == kNone) {
        s.winner[d] = static_cast<std::int64_t>(i);
        continue;
      }
      s.collided[d] = 1;
      if (field.depth(i) < field.depth(static_cast<std::size_t>(s.winner[d]))) {
        s.winner[d] = static_cast<std::int64_t>(i);
      }
    }
  }
  return s;
}

}  // namespace

WarpedImage forward_warp(const Image& src, const MotionField& field) {
  require_field_shape(src, field, "forward_warp");
  const Splat s = splat(field);
  WarpedImage out{Image(src.width, src.height, src.channels, 0.0f), std::vector<std::uint8_t>(field.size(), 0), 0};
  for (std::size_t d = 0; d < field.size(); ++d) {
    if (s.winner[d] == kNone) {
      ++out.hole_count;
      continue;
    }
    out.coverage[d] = 1;
    const auto from = static_cast<std::size_t>(s.winner[d]);
    for (int c = 0; c < src.channels; ++c) {
      out.image.data[d * src.channels + c] = src.data[from * src.channels + c];
    }
  }
  return out;
}

Image compensate(const Image& src, const MotionField& field, const Image& fallback) {
  require_same_shape(src, fallback, "compensate");
  WarpedImage warped = forward_warp(src, field);
  for (std::size_t d = 0; d < warped.coverage.size(); ++d) {
    if (warped.coverage[d]) continue;
    for (int c = 0; c < src.channels; ++c) {
      warped.image.data[d * src.channels + c] = fallback.data[d * src.channels + c];
    }
  }
  return std::move(warped.image);
}

Image compensate(const Image& src, const MotionField& field) { return compensate(src, field, src); }

std::vector<std::uint8_t> occlusion_mask(const MotionField& field) { return splat(field).collided; }

}  // namespace lidarflow
