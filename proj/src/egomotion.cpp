#include "lidarflow/egomotion.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "lidarflow/error.hpp"
#include "voxel_grid.hpp"

namespace lidarflow {

Mat3 euler_rotation(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  Mat3 rz, ry, rx;
  rz << ca, sa, 0.0,
       -sa, ca, 0.0,
        0.0, 0.0, 1.0;
  ry << cb, 0.0, -sb,
        0.0, 1.0, 0.0,
        sb, 0.0, cb;
  rx << 1.0, 0.0, 0.0,
        0.0, cg, sg,
        0.0, -sg, cg;
  return rz * ry * rx;
}

Vec3 euler_angles(const Mat3& r) {
  // r^T = Rx(gamma) Ry(beta) Rz(alpha) in the usual right-handed convention.
  const double beta = std::asin(std::clamp(r(2, 0), -1.0, 1.0));
  const double alpha = std::atan2(-r(1, 0), r(0, 0));
  const double gamma = std::atan2(-r(2, 1), r(2, 2));
  return {alpha, beta, gamma};
}

namespace {

struct Sample {
  double t;
  Vec3 linear;
  Vec3 gyro;
};

Sample sample_at(std::span<const ImuRecord> records, double t) {
  if (t <= records.front().timestamp) return {t, records.front().linear, records.front().gyro};
  if (t >= records.back().timestamp) return {t, records.back().linear, records.back().gyro};
  auto hi = std::upper_bound(records.begin(), records.end(), t,
                             [](double value, const ImuRecord& r) { return value < r.timestamp; });
  auto lo = hi - 1;
  const double w = (t - lo->timestamp) / (hi->timestamp - lo->timestamp);
  return {t, (1.0 - w) * lo->linear + w * hi->linear, (1.0 - w) * lo->gyro + w * hi->gyro};
}

}  // namespace

EgomotionEstimate integrate_imu(std::span<const ImuRecord> records, double t_start, double t_end,
                                const ImuIntegrationOptions& options) {
  if (!(t_end > t_start)) {
    throw Error(ErrorCode::kInvalidArgument, "integration interval must have t_end > t_start");
  }
  if (records.empty()) throw Error(ErrorCode::kEmptyWindow, "no IMU records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ImuRecord& r = records[i];
    if (!std::isfinite(r.timestamp) || !r.linear.allFinite() || !r.gyro.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite IMU record " + std::to_string(i));
    }
    if (i > 0 && !(r.timestamp > records[i - 1].timestamp)) {
      throw Error(ErrorCode::kNonMonotonicTimestamps,
                  "record " + std::to_string(i) + " at t=" + std::to_string(r.timestamp) +
                      " does not follow t=" + std::to_string(records[i - 1].timestamp));
    }
    if (r.payload != records.front().payload) {
      throw Error(ErrorCode::kInvalidArgument, "mixed acceleration and velocity payloads");
    }
  }
  if (records.back().timestamp < t_start || records.front().timestamp > t_end) {
    throw Error(ErrorCode::kEmptyWindow, "no IMU record overlaps [" + std::to_string(t_start) + ", " +
                                             std::to_string(t_end) + "]");
  }

  std::vector<Sample> nodes;
  nodes.push_back(sample_at(records, t_start));
  for (const ImuRecord& r : records) {
    if (r.timestamp > t_start && r.timestamp < t_end) nodes.push_back({r.timestamp, r.linear, r.gyro});
  }
  nodes.push_back(sample_at(records, t_end));

  Vec3 angle = Vec3::Zero();
  Vec3 displacement = Vec3::Zero();
  const bool accel = records.front().payload == ImuPayload::kAcceleration;
  Vec3 velocity = options.initial_velocity;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double dt = nodes[i].t - nodes[i - 1].t;
    angle += 0.5 * dt * (nodes[i - 1].gyro + nodes[i].gyro);
    if (accel) {
      const Vec3 next_velocity = velocity + 0.5 * dt * (nodes[i - 1].linear + nodes[i].linear);
      displacement += 0.5 * dt * (velocity + next_velocity);
      velocity = next_velocity;
    } else {
      displacement += 0.5 * dt * (nodes[i - 1].linear + nodes[i].linear);
    }
  }

  // alpha about z, beta about y, gamma about x.
  const RigidTransform imu_motion(euler_rotation(angle.z(), angle.y(), angle.x()), displacement);
  const RigidTransform& c = options.imu_to_cam;
  return {compose(c, compose(imu_motion, inverse(c))), EgomotionSource::kImu, 0.0};
}

RigidTransform kabsch(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size() || source.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "kabsch needs equally sized, non-empty point sets");
  }
  Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= static_cast<double>(source.size());
  ct /= static_cast<double>(source.size());
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) h += (source[i] - cs) * (target[i] - ct).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Mat3 r = v * d * u.transpose();
  // Re-orthonormalize to keep the RigidTransform invariant tight.
  Eigen::JacobiSVD<Eigen::Matrix3d> polish(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r = polish.matrixU() * polish.matrixV().transpose();
  return RigidTransform(r, ct - r * cs);
}

namespace {

void check_not_collinear(std::span<const Vec3> points) {
  if (points.size() < 3) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "only " + std::to_string(points.size()) + " correspondences");
  }
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : points) c += p;
  c /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3& p : points) cov += (p - c) * (p - c).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov);
  const Eigen::Vector3d s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "correspondence set is collinear (rank < 3)");
  }
}

}  // namespace

IcpReport register_icp_report(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                              const IcpOptions& options) {
  if (source.empty() || target.empty()) throw Error(ErrorCode::kEmptyCloud, "ICP needs non-empty clouds");
  if (options.max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");

  const detail::VoxelGrid grid(target.points);
  const double max_dist = options.max_correspondence_distance;

  IcpReport report;
  RigidTransform current = init;
  std::vector<Vec3> moved(source.size());
  std::vector<Vec3> src_pairs, dst_pairs;
  src_pairs.reserve(source.size());
  dst_pairs.reserve(source.size());

  auto correspond = [&]() {
    src_pairs.clear();
    dst_pairs.clear();
    double sum_sq = 0.0;
    const Mat3 r = current.rotation();
    const Vec3 t = current.translation();
    for (std::size_t i = 0; i < source.size(); ++i) {
      moved[i] = r * source.points[i] + t;
      const auto hit = grid.nearest(moved[i], max_dist);
      if (!hit) continue;
      src_pairs.push_back(moved[i]);
      dst_pairs.push_back(target.points[hit->index]);
      sum_sq += hit->distance_sq;
    }
    return src_pairs.empty() ? std::numeric_limits<double>::infinity()
                             : std::sqrt(sum_sq / static_cast<double>(src_pairs.size()));
  };

  double residual = correspond();
  for (int iter = 0; iter < options.max_iters; ++iter) {
    report.residuals.push_back(residual);
    check_not_collinear(src_pairs);
    const RigidTransform step = kabsch(src_pairs, dst_pairs);
    current = compose(step, current);
    ++report.iterations;
    const double next = correspond();
    const bool converged = std::abs(residual - next) < options.tol;
    residual = next;
    if (converged) break;
  }
  report.residuals.push_back(residual);
  report.estimate = {current, EgomotionSource::kRegistration, residual};
  return report;
}

EgomotionEstimate register_icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                               int max_iters, double tol) {
  IcpOptions options;
  options.max_iters = max_iters;
  options.tol = tol;
  return register_icp_report(source, target, init, options).estimate;
}

RigidTransform chain_egomotion(std::span<const EgomotionEstimate> steps, std::size_t from, std::size_t to) {
  if (from == to) return RigidTransform::identity();
  const std::size_t lo = std::min(from, to);
  const std::size_t hi = std::max(from, to);
  if (hi > steps.size()) {
    throw Error(ErrorCode::kMissingStep, "no egomotion step " + std::to_string(hi - 1) + " -> " +
                                             std::to_string(hi) + " (have " + std::to_string(steps.size()) +
                                             ")");
  }
  RigidTransform forward = RigidTransform::identity();
  for (std::size_t i = lo; i < hi; ++i) forward = compose(steps[i].transform, forward);
  return from < to ? forward : inverse(forward);
}

}  // namespace lidarflow
