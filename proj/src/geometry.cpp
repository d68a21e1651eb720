#include "lidarflow/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <sstream>

#include "lidarflow/error.hpp"

namespace lidarflow {

RigidTransform::RigidTransform(const Mat4& m) : m_(m) {
  if (!is_valid()) {
    std::ostringstream os;
    os << "matrix is not a rigid transform:\n" << m;
    throw Error(ErrorCode::kInvalidTransform, os.str());
  }
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation) {
  m_.setIdentity();
  m_.topLeftCorner<3, 3>() = rotation;
  m_.topRightCorner<3, 1>() = translation;
  if (!is_valid()) {
    std::ostringstream os;
    os << "rotation block is not orthonormal with det 1:\n" << rotation;
    throw Error(ErrorCode::kInvalidTransform, os.str());
  }
}

RigidTransform RigidTransform::translation(double x, double y, double z) {
  Mat4 m = Mat4::Identity();
  m(0, 3) = x;
  m(1, 3) = y;
  m(2, 3) = z;
  return {m, Unchecked{}};
}

RigidTransform RigidTransform::rotation(const Vec3& axis, double angle) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  return {m, Unchecked{}};
}

bool RigidTransform::is_valid(double tol) const {
  if (!m_.allFinite()) return false;
  if (m_(3, 0) != 0.0 || m_(3, 1) != 0.0 || m_(3, 2) != 0.0 || m_(3, 3) != 1.0) return false;
  const Mat3 r = rotation();
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(r.determinant() - 1.0) < tol;
}

double RigidTransform::rotation_angle() const {
  const double c = std::clamp((rotation().trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  Mat4 m = a.m_ * b.m_;
  m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return {m, RigidTransform::Unchecked{}};
}

RigidTransform inverse(const RigidTransform& a) {
  const Mat3 rt = a.rotation().transpose();
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rt;
  m.topRightCorner<3, 1>() = -rt * a.translation();
  return {m, RigidTransform::Unchecked{}};
}

double max_abs_diff(const RigidTransform& a, const RigidTransform& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

CameraIntrinsics CameraIntrinsics::downsampled(int factor) const {
  if (factor < 1) throw Error(ErrorCode::kInvalidArgument, "downsample factor must be >= 1");
  // Low-res pixel x covers high-res pixels [f x, f x + f); its center sits at f x + (f - 1) / 2.
  const double f = factor;
  const double shift = (f - 1.0) / 2.0;
  CameraIntrinsics k;
  k.fx = fx / f;
  k.fy = fy / f;
  k.cx = (cx - shift) / f;
  k.cy = (cy - shift) / f;
  k.width = width / factor;
  k.height = height / factor;
  return k;
}

void PointCloud::validate() const {
  if (intensity.size() != points.size()) {
    throw Error(ErrorCode::kInvalidArgument, "intensity length differs from point count");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite coordinate at point " + std::to_string(i));
    }
  }
}

PointCloud transform_cloud(const RigidTransform& transform, const PointCloud& cloud) {
  PointCloud out;
  out.timestamp = cloud.timestamp;
  out.intensity = cloud.intensity;
  out.points.resize(cloud.points.size());
  const Mat3 r = transform.rotation();
  const Vec3 t = transform.translation();
  for (std::size_t i = 0; i < cloud.points.size(); ++i) out.points[i] = r * cloud.points[i] + t;
  return out;
}

std::vector<PixelPoint> project(const CameraIntrinsics& k, const PointCloud& cloud_cam) {
  std::vector<PixelPoint> out;
  out.reserve(cloud_cam.size());
  for (std::size_t i = 0; i < cloud_cam.points.size(); ++i) {
    const Vec3& p = cloud_cam.points[i];
    if (!(p.z() > kMinDepth)) continue;
    const double u = k.fx * p.x() / p.z() + k.cx;
    const double v = k.fy * p.y() / p.z() + k.cy;
    if (u < 0.0 || u >= k.width || v < 0.0 || v >= k.height) continue;
    out.push_back({u, v, p.z(), i});
  }
  return out;
}

Vec3 unproject(const CameraIntrinsics& k, const PixelPoint& px) {
  return {(px.u - k.cx) * px.depth / k.fx, (px.v - k.cy) * px.depth / k.fy, px.depth};
}

}  // namespace lidarflow
