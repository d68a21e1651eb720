#include "lidarflow/estimate.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "lidarflow/error.hpp"

namespace lidarflow {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kSpcImu: return "SPC_IMU";
    case Variant::kSpcR: return "SPC_R";
    case Variant::kMpcImu: return "MPC_IMU";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string norm;
  for (char c : name) norm += c == '+' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (norm == "SPC_IMU") return Variant::kSpcImu;
  if (norm == "SPC_R") return Variant::kSpcR;
  if (norm == "MPC_IMU") return Variant::kMpcImu;
  throw Error(ErrorCode::kInvalidArgument, "unknown variant '" + std::string(name) + "'");
}

MotionEstimator::MotionEstimator(const SequenceContext& context, EstimateOptions options)
    : context_(context), options_(options) {
  options_.merge.validate();
  options_.patch.validate();
  context_.calib.intrinsics.validate();
  if (context_.clouds.size() != context_.timestamps.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cloud count differs from frame count");
  }
  const bool needs_imu = options_.variant != Variant::kSpcR || (options_.icp_init_from_imu && !context_.imu.empty());
  if (needs_imu) {
    ImuIntegrationOptions imu_options;
    imu_options.imu_to_cam = context_.calib.imu_to_cam;
    for (std::size_t i = 0; i + 1 < context_.timestamps.size(); ++i) {
      imu_steps_.push_back(
          integrate_imu(context_.imu, context_.timestamps[i], context_.timestamps[i + 1], imu_options));
    }
  }
}

RigidTransform MotionEstimator::imu_chain(std::size_t source, std::size_t target) const {
  return chain_egomotion(imu_steps_, source, target);
}

EgomotionEstimate MotionEstimator::egomotion(std::size_t source, std::size_t target) const {
  const std::size_t n = context_.frame_count();
  if (source >= n || target >= n) {
    throw Error(ErrorCode::kMissingStep, "frame pair " + std::to_string(source) + " -> " + std::to_string(target) +
                                             " outside sequence of " + std::to_string(n));
  }
  if (options_.variant != Variant::kSpcR) return {imu_chain(source, target), EgomotionSource::kImu, 0.0};

  const RigidTransform& l = context_.calib.lidar_to_cam;
  const RigidTransform init_cam = imu_steps_.empty() ? RigidTransform::identity() : imu_chain(source, target);
  const RigidTransform init = compose(inverse(l), compose(init_cam, l));
  const IcpReport report = register_icp_report(context_.clouds[source], context_.clouds[target], init, options_.icp);
  EgomotionEstimate est = report.estimate;
  est.transform = compose(l, compose(est.transform, inverse(l)));
  return est;
}

MotionField MotionEstimator::estimate(std::size_t source, std::size_t target) const {
  const EgomotionEstimate ego = egomotion(source, target);
  const Calibration& calib = context_.calib;
  MotionField sparse;
  if (options_.variant == Variant::kMpcImu) {
    const PointCloud merged = merge_clouds(context_.clouds, imu_steps_, source, options_.merge, calib.lidar_to_cam);
    sparse = sparse_motion(merged, calib.lidar_to_cam, ego.transform, calib.intrinsics);
  } else {
    sparse = sparse_motion(context_.clouds[source], calib.lidar_to_cam, ego.transform, calib.intrinsics);
  }
  return densify_patched(sparse, options_.patch);
}

MotionField estimate(const SequenceContext& context, std::size_t source, std::size_t target,
                     const EstimateOptions& options) {
  return MotionEstimator(context, options).estimate(source, target);
}

}  // namespace lidarflow
