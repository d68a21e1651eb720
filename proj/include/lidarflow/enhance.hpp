#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "lidarflow/image.hpp"
#include "lidarflow/motion.hpp"

namespace lidarflow {

enum class TaskKind { kDenoise, kSuperres, kDeblurProxy };

std::string_view task_name(TaskKind kind);
/// Accepts "denoise", "superres", "deblur" / "deblur_proxy".
TaskKind parse_task(std::string_view name);

struct EnhanceTask {
  TaskKind kind = TaskKind::kDenoise;
  int window = 5;
  int sr_factor = 2;

  void validate() const;
  /// Patch side used when none is configured: 3 for super-resolution, 7 otherwise.
  int default_patch() const { return kind == TaskKind::kSuperres ? 3 : 7; }
};

// All backends take one motion field per frame, mapping that frame onto the
// center frame; fields[center] is ignored. Frames must share one shape.

/// Motion-compensated temporal mean. Each neighbor is forward-warped onto the
/// center; its pixels count only where they are covered and not flagged by
/// the occlusion mask. The center frame always contributes.
Image denoise_temporal(std::span<const Image> frames, std::span<const MotionField> fields, std::size_t center);

/// Shift-and-add super-resolution. Every low-res sample is splatted with
/// bilinear weights around its motion-corrected high-res position, the
/// accumulation is normalized by the summed weight, and pixels without weight
/// take the bicubic upsample of the center frame.
Image superres_shift_add(std::span<const Image> frames, std::span<const MotionField> fields, std::size_t center,
                         int factor);

/// Sharpest-tile fusion: neighbors are compensated onto the center, each 8x8
/// tile takes the candidate with the highest Laplacian energy, and tiles are
/// blended with a 4-pixel linear feather. Splat holes in a compensated neighbor
/// take the mean of its covered 8-neighbors (kDeblurFillPasses rounds); what
/// is left comes from the center.
Image deblur_proxy(std::span<const Image> frames, std::span<const MotionField> fields, std::size_t center);

/// Dispatches on task.kind.
Image enhance(const EnhanceTask& task, std::span<const Image> frames, std::span<const MotionField> fields,
              std::size_t center);

inline constexpr int kDeblurTile = 8;
inline constexpr int kDeblurFeather = 4;
inline constexpr int kDeblurFillPasses = 2;
/// High-res pixels with less accumulated splat weight count as unhit.
inline constexpr double kSuperresMinWeight = 1e-9;

}  // namespace lidarflow
