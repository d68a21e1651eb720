#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lidarflow/estimate.hpp"
#include "lidarflow/image.hpp"
#include "lidarflow/motion.hpp"

namespace lidarflow {

/// Procedural albedo: a sum of three oriented sinusoids around `base`.
struct Texture {
  double base = 0.5;
  double contrast = 0.3;
  /// Dominant wavelength in meters.
  double scale = 1.0;
};

/// Rectangle origin + s * u + t * v for s in [0, size_u], t in [0, size_v].
/// u and v are normalized on use and must be orthogonal.
struct PlanePrimitive {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
  double size_u = 1.0;
  double size_v = 1.0;
  Texture texture;
};

/// Axis-aligned box in world (first camera) coordinates.
struct BoxPrimitive {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  Texture texture;
};

enum class BlurPattern { kUniform, kAlternate, kRandom };

/// Scene, rig trajectory and degradations of a synthetic sequence. The world
/// frame is the first camera frame (x right, y down, z forward).
struct SyntheticSceneSpec {
  std::uint64_t seed = 1;
  /// LiDAR rays per frame; rays that hit nothing produce no point.
  int num_points = 20000;
  int frames = 9;
  int width = 320;
  int height = 160;
  double focal = 240.0;
  int channels = 1;
  /// Sub-samples per pixel side when rendering.
  int supersample = 2;
  double frame_interval = 0.1;

  /// Camera displacement per frame, in camera coordinates.
  Vec3 rig_translation{0.04, 0.0, 0.5};
  /// Yaw, pitch, roll per frame (radians) about the IMU z, y, x axes.
  Vec3 rig_rotation{0.008, 0.0, 0.0};

  /// Both empty selects the built-in street scene.
  std::vector<PlanePrimitive> planes;
  std::vector<BoxPrimitive> boxes;

  double noise_sigma = 0.0;
  double blur_sigma = 0.0;
  /// kUniform blurs every frame by blur_sigma, kAlternate only even frames,
  /// kRandom each frame by blur_sigma times a uniform draw.
  BlurPattern blur_pattern = BlurPattern::kRandom;
  int downsample = 1;

  double imu_gyro_noise = 0.0;
  double imu_velocity_noise = 0.0;

  double lidar_azimuth_fov_deg = 100.0;
  double lidar_min_elevation_deg = -24.0;
  double lidar_max_elevation_deg = 20.0;
  double lidar_max_range = 120.0;

  /// When false, frames and clean images are left empty (geometry only).
  bool render_images = true;

  /// Throws InvalidSpec.
  void validate() const;
};

/// Parses a JSON object; absent keys keep their defaults, unknown keys are
/// rejected. Throws InvalidSpec.
SyntheticSceneSpec parse_synthetic_spec(std::string_view json);
std::string synthetic_spec_to_json(const SyntheticSceneSpec& spec);

/// One textured rectangle of the resolved scene.
struct Surface {
  Vec3 origin;
  Vec3 u;
  Vec3 v;
  Vec3 normal;
  double size_u;
  double size_v;
  Texture texture;
  double phase[4];
  double tint[3];
};

struct SyntheticSequence {
  SyntheticSceneSpec spec;
  /// Calibration at output resolution, clouds in LiDAR frames, one IMU record per frame.
  SequenceContext context;
  /// Degraded frames at output resolution.
  std::vector<Image> frames;
  /// Undegraded renders at full resolution.
  std::vector<Image> clean;
  CameraIntrinsics clean_intrinsics;
  /// Analytic fields from frame k to k+1 at output resolution.
  std::vector<MotionField> gt_fields;
  /// Exact camera-frame egomotion from frame k to k+1.
  std::vector<EgomotionEstimate> gt_egomotion;
  std::vector<Surface> surfaces;
  /// World (first camera) to camera k.
  std::vector<RigidTransform> world_to_cam;
};

/// Ray-traced sequence with exact ground truth. All randomness comes from
/// spec.seed; degradations are applied after ground truth is captured.
SyntheticSequence generate_synthetic(const SyntheticSceneSpec& spec);

/// Analytic motion of the visible surface at every pixel center of `source`
/// into frame `target`; pixels seeing nothing, or whose point falls behind
/// the near plane at `target`, are invalid.
MotionField ground_truth_field(const SyntheticSequence& seq, std::size_t source, std::size_t target,
                               const CameraIntrinsics& intrinsics);
MotionField ground_truth_field(const SyntheticSequence& seq, std::size_t source, std::size_t target);

/// Renders frame `frame` with the given camera and sub-sampling (no degradation).
Image render_view(const SyntheticSequence& seq, std::size_t frame, const CameraIntrinsics& intrinsics,
                  int supersample);

struct SyntheticWriteOptions {
  /// Also write gt/clean/*.png, gt/flow/*.lfmf, gt/egomotion.json.
  bool ground_truth = true;
};

/// KITTI raw layout under `root` (image_02, velodyne_points, oxts, calib_*.txt)
/// plus spec.json. Loadable with load_kitti_sequence.
void write_synthetic_kitti(const SyntheticSequence& seq, const std::filesystem::path& root,
                           const SyntheticWriteOptions& options = {});

}  // namespace lidarflow
