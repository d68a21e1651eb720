#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "lidarflow/egomotion.hpp"
#include "lidarflow/motion.hpp"

namespace lidarflow {

/// How the egomotion is obtained and whether neighboring clouds are merged.
enum class Variant {
  kSpcImu,  // single cloud, IMU egomotion
  kSpcR,    // single cloud, ICP egomotion
  kMpcImu,  // merged clouds, IMU egomotion
};

std::string_view variant_name(Variant v);
/// Accepts "SPC_IMU", "SPC_R", "MPC_IMU" (case-insensitive, '+' or '_').
Variant parse_variant(std::string_view name);

struct Calibration {
  CameraIntrinsics intrinsics;
  RigidTransform lidar_to_cam;
  RigidTransform imu_to_cam;
};

/// Synchronized sensor data for a sequence; clouds are in their own LiDAR frame.
struct SequenceContext {
  Calibration calib;
  std::vector<double> timestamps;
  std::vector<PointCloud> clouds;
  std::vector<ImuRecord> imu;

  std::size_t frame_count() const { return timestamps.size(); }
};

struct EstimateOptions {
  Variant variant = Variant::kMpcImu;
  MergeSpec merge;
  PatchSpec patch;
  IcpOptions icp;
  /// Seed ICP with the IMU egomotion when IMU records are available.
  bool icp_init_from_imu = true;
};

/// Motion fields between arbitrary frame pairs of one sequence.
///
/// Per-step IMU egomotions are integrated once on construction; fields for
/// non-adjacent frames use the chained egomotion.
class MotionEstimator {
 public:
  MotionEstimator(const SequenceContext& context, EstimateOptions options);

  /// Camera-frame egomotion mapping frame `source` to frame `target` for the configured variant.
  EgomotionEstimate egomotion(std::size_t source, std::size_t target) const;

  /// Dense motion field anchored at `source` pixels, pointing into `target`.
  MotionField estimate(std::size_t source, std::size_t target) const;

  const std::vector<EgomotionEstimate>& imu_steps() const { return imu_steps_; }
  const EstimateOptions& options() const { return options_; }

 private:
  RigidTransform imu_chain(std::size_t source, std::size_t target) const;

  const SequenceContext& context_;
  EstimateOptions options_;
  std::vector<EgomotionEstimate> imu_steps_;
};

/// One-shot convenience over MotionEstimator.
MotionField estimate(const SequenceContext& context, std::size_t source, std::size_t target,
                     const EstimateOptions& options);

}  // namespace lidarflow
