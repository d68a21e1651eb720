#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lidarflow/egomotion.hpp"
#include "lidarflow/geometry.hpp"

namespace lidarflow {

/// Per-pixel displacement from frame t to frame t+1, anchored at frame-t pixels.
///
/// Invalid pixels hold the sentinel triple (0, 0, +inf). The valid count is
/// maintained on every write so density() is exact and O(1).
class MotionField {
 public:
  static constexpr double kInvalidDepth = std::numeric_limits<double>::infinity();

  MotionField() = default;
  MotionField(int width, int height);

  /// Fully valid field with zero motion and the given depth everywhere.
  static MotionField zero(int width, int height, double depth = 1.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return valid_.size(); }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  bool valid(std::size_t i) const { return valid_[i] != 0; }
  double du(std::size_t i) const { return du_[i]; }
  double dv(std::size_t i) const { return dv_[i]; }
  double depth(std::size_t i) const { return depth_[i]; }

  void set(std::size_t i, double du, double dv, double depth);
  void reset(std::size_t i);

  std::size_t valid_count() const { return valid_count_; }
  double density() const { return size() == 0 ? 0.0 : static_cast<double>(valid_count_) / size(); }

  std::span<const double> du_values() const { return du_; }
  std::span<const double> dv_values() const { return dv_; }
  std::span<const double> depth_values() const { return depth_; }
  std::span<const std::uint8_t> valid_mask() const { return valid_; }

  friend bool operator==(const MotionField& a, const MotionField& b) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> du_;
  std::vector<double> dv_;
  std::vector<double> depth_;
  std::vector<std::uint8_t> valid_;
  std::size_t valid_count_ = 0;
};

/// Odd number of clouds in a window centered on the target frame.
struct MergeSpec {
  int num_clouds = 5;
  void validate() const;
};

/// Odd side length of the square patch a motion vector is copied into.
struct PatchSpec {
  int patch = 3;
  void validate() const;
};

/// Motion of every cloud point between two frames under a rigid scene.
///
/// Each point is projected at t and, after applying `ego`, at t+1; the
/// difference is stored at the rounded frame-t pixel. Only the frame-t
/// projection must land inside the image; points leaving the frame at t+1
/// keep their motion. Pixel conflicts keep the nearest frame-t depth, then the
/// lexicographically smaller (du, dv), so the result does not depend on point order.
MotionField sparse_motion(const PointCloud& cloud, const RigidTransform& lidar_to_cam, const RigidTransform& ego,
                          const CameraIntrinsics& intrinsics);

/// Concatenates the clouds of a window centered on `center`, each mapped into
/// the center LiDAR frame through lidar_to_cam, the chained egomotion, and
/// back. `egomotions[i]` maps camera frame i to i+1. The center cloud comes
/// first, then neighbors by increasing distance (earlier frame first).
///
/// A window reaching past the sequence is shrunk symmetrically with a warning.
/// Throws MissingNeighbor when `center` is out of range and MissingStep when
/// an egomotion in the window is missing.
PointCloud merge_clouds(std::span<const PointCloud> clouds, std::span<const EgomotionEstimate> egomotions,
                        std::size_t center, const MergeSpec& spec, const RigidTransform& lidar_to_cam);

/// Copies every valid vector into its k x k neighborhood. Conflicts keep the
/// smaller source depth, then the smaller source pixel index.
MotionField densify_patched(const MotionField& field, const PatchSpec& spec);

}  // namespace lidarflow
