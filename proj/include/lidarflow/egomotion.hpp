#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "lidarflow/geometry.hpp"

namespace lidarflow {

enum class ImuPayload { kAcceleration, kVelocity };

/// One inertial sample in the IMU body frame.
///
/// `linear` holds either an acceleration (m/s^2) or a velocity (m/s) depending
/// on `payload`. Its integral is the translation block of the egomotion, i.e.
/// the displacement of static scene points relative to the rig. `gyro` is the
/// body angular rate (rad/s) about x, y, z.
struct ImuRecord {
  double timestamp = 0.0;
  Vec3 linear = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
  ImuPayload payload = ImuPayload::kVelocity;
};

enum class EgomotionSource { kImu, kRegistration };

/// Rigid motion mapping camera-frame coordinates at frame t to frame t+1.
struct EgomotionEstimate {
  RigidTransform transform;
  EgomotionSource source = EgomotionSource::kImu;
  double residual = 0.0;
};

/// Rotation built from integrated angular displacements about z (alpha),
/// y (beta) and x (gamma), as the product Z * Y * X of the transposed
/// elementary rotations.
Mat3 euler_rotation(double alpha, double beta, double gamma);

/// Angles (alpha, beta, gamma) such that euler_rotation reproduces r.
/// Valid away from |beta| = pi/2.
Vec3 euler_angles(const Mat3& r);

struct ImuIntegrationOptions {
  /// Rig velocity at t_start, used only for acceleration payloads.
  Vec3 initial_velocity = Vec3::Zero();
  RigidTransform imu_to_cam = RigidTransform::identity();
};

/// Trapezoidal integration of the records over [t_start, t_end].
///
/// Samples at the interval ends are linearly interpolated from the bracketing
/// records (held constant beyond the first/last record). Velocity payloads are
/// integrated once, acceleration payloads twice. The IMU-frame result is
/// conjugated into the camera frame with `imu_to_cam`.
///
/// Throws EmptyWindow when no record lies in the interval and none brackets
/// it, NonMonotonicTimestamps on non-increasing timestamps, InvalidArgument
/// when t_end <= t_start.
EgomotionEstimate integrate_imu(std::span<const ImuRecord> records, double t_start, double t_end,
                                const ImuIntegrationOptions& options = {});

struct IcpOptions {
  int max_iters = 50;
  /// Stop once the residual changes by less than this (meters).
  double tol = 1e-7;
  /// Correspondences farther apart than this are ignored.
  double max_correspondence_distance = std::numeric_limits<double>::infinity();
};

struct IcpReport {
  EgomotionEstimate estimate;
  /// RMS correspondence distance at the start of each iteration plus the final value.
  std::vector<double> residuals;
  int iterations = 0;
};

/// Point-to-point ICP aligning `source` onto `target`, starting from `init`.
/// The returned transform maps source coordinates into target coordinates;
/// residual is the final RMS nearest-neighbor distance.
///
/// Throws EmptyCloud, DegenerateGeometry (collinear correspondence set) and
/// InvalidArgument (max_iters < 1).
IcpReport register_icp_report(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                              const IcpOptions& options = {});

EgomotionEstimate register_icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                               int max_iters, double tol);

/// Closed-form least-squares rigid alignment (Kabsch, no scale) of paired points.
RigidTransform kabsch(std::span<const Vec3> source, std::span<const Vec3> target);

/// Composes per-step estimates (steps[i] maps frame i to i+1) into the
/// transform mapping frame `from` to frame `to`. Reversed intervals give the
/// inverse chain. Throws MissingStep when a step is out of range.
RigidTransform chain_egomotion(std::span<const EgomotionEstimate> steps, std::size_t from, std::size_t to);

}  // namespace lidarflow
