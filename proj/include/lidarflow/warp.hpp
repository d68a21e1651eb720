#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lidarflow/image.hpp"
#include "lidarflow/motion.hpp"

namespace lidarflow {

struct WarpedImage {
  Image image;
  /// 1 where a source pixel landed.
  std::vector<std::uint8_t> coverage;
  std::size_t hole_count = 0;

  double coverage_ratio() const {
    return coverage.empty() ? 0.0 : 1.0 - static_cast<double>(hole_count) / coverage.size();
  }
};

/// Forward (splat) warp of `src` along `field`.
///
/// Every valid field pixel sends its source sample to the rounded displaced
/// position. Destination conflicts keep the smaller source depth, then the
/// smaller source pixel index. Uncovered pixels are 0.
WarpedImage forward_warp(const Image& src, const MotionField& field);

/// forward_warp followed by filling every hole from `fallback`.
Image compensate(const Image& src, const MotionField& field, const Image& fallback);

/// compensate with the unwarped source as fallback.
Image compensate(const Image& src, const MotionField& field);

/// 1 at destinations where the forward-warp conflict rule discarded at least one source.
std::vector<std::uint8_t> occlusion_mask(const MotionField& field);

}  // namespace lidarflow
