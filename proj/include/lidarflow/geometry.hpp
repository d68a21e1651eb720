#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace lidarflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
using Mat4 = Eigen::Matrix<double, 4, 4, Eigen::RowMajor>;

/// Near-plane cutoff in meters. Points at or in front of it are never projected.
inline constexpr double kMinDepth = 0.1;

/// Tolerance used when validating rigid transforms.
inline constexpr double kRigidTolerance = 1e-9;

/// Nearest integer pixel with halves rounded up. Every module that anchors a
/// continuous coordinate to the pixel grid goes through this.
inline long nearest_pixel(double x) { return static_cast<long>(std::floor(x + 0.5)); }

/// Element of SE(3) stored as a row-major 4x4 homogeneous matrix.
///
/// Construction from a raw matrix validates orthonormality, det(R) = 1 and the
/// bottom row; the factory functions build valid transforms by construction.
class RigidTransform {
 public:
  RigidTransform() : m_(Mat4::Identity()) {}

  /// Throws Error(kInvalidTransform) if m is not a rigid transform.
  explicit RigidTransform(const Mat4& m);
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(double x, double y, double z);
  /// Right-handed rotation by `angle` radians about a unit axis.
  static RigidTransform rotation(const Vec3& axis, double angle);
  static RigidTransform rotation_x(double angle) { return rotation(Vec3::UnitX(), angle); }
  static RigidTransform rotation_y(double angle) { return rotation(Vec3::UnitY(), angle); }
  static RigidTransform rotation_z(double angle) { return rotation(Vec3::UnitZ(), angle); }

  const Mat4& matrix() const { return m_; }
  Mat3 rotation() const { return m_.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return m_.topRightCorner<3, 1>(); }

  Vec3 apply(const Vec3& p) const { return m_.topLeftCorner<3, 3>() * p + m_.topRightCorner<3, 1>(); }

  bool is_valid(double tol = kRigidTolerance) const;

  /// Angle of the rotation block in radians, in [0, pi].
  double rotation_angle() const;

 private:
  struct Unchecked {};
  RigidTransform(const Mat4& m, Unchecked) : m_(m) {}

  friend RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
  friend RigidTransform inverse(const RigidTransform& a);

  Mat4 m_;
};

/// a.m * b.m: apply b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& a);

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) { return compose(a, b); }

/// Largest absolute entry difference between two transforms.
double max_abs_diff(const RigidTransform& a, const RigidTransform& b);

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws Error(kInvalidArgument) on fx, fy <= 0 or principal point outside the image.
  void validate() const;

  /// Intrinsics of the same camera after box-downsampling by an integer factor.
  CameraIntrinsics downsampled(int factor) const;
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<float> intensity;
  double timestamp = 0.0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void push_back(const Vec3& p, float i) {
    points.push_back(p);
    intensity.push_back(i);
  }

  /// Throws Error(kInvalidArgument) on mismatched lengths or non-finite coordinates.
  void validate() const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  std::size_t source_index = 0;
};

/// p' = R p + t for every point; intensity, order and timestamp are kept.
PointCloud transform_cloud(const RigidTransform& transform, const PointCloud& cloud);

/// Pinhole projection of camera-frame points. Points with z <= kMinDepth or
/// landing outside [0, width) x [0, height) are dropped; output keeps input order.
std::vector<PixelPoint> project(const CameraIntrinsics& intrinsics, const PointCloud& cloud_cam);

/// Inverse of the projection for one pixel and depth.
Vec3 unproject(const CameraIntrinsics& intrinsics, const PixelPoint& pixel);

}  // namespace lidarflow
