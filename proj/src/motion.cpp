#include "lidarflow/motion.hpp"

#include <algorithm>
#include <string>

#include "lidarflow/error.hpp"
#include "lidarflow/log.hpp"

namespace lidarflow {

MotionField::MotionField(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::kInvalidArgument, "negative field size");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  du_.assign(n, 0.0);
  dv_.assign(n, 0.0);
  depth_.assign(n, kInvalidDepth);
  valid_.assign(n, 0);
}

MotionField MotionField::zero(int width, int height, double depth) {
  MotionField f(width, height);
  for (std::size_t i = 0; i < f.size(); ++i) f.set(i, 0.0, 0.0, depth);
  return f;
}

void MotionField::set(std::size_t i, double du, double dv, double depth) {
  if (!valid_[i]) ++valid_count_;
  valid_[i] = 1;
  du_[i] = du;
  dv_[i] = dv;
  depth_[i] = depth;
}

void MotionField::reset(std::size_t i) {
  if (valid_[i]) --valid_count_;
  valid_[i] = 0;
  du_[i] = 0.0;
  dv_[i] = 0.0;
  depth_[i] = kInvalidDepth;
}

void MergeSpec::validate() const {
  if (num_clouds < 1 || num_clouds % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "num_clouds must be odd and >= 1, got " + std::to_string(num_clouds));
  }
}

void PatchSpec::validate() const {
  if (patch < 1 || patch % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch must be odd and >= 1, got " + std::to_string(patch));
  }
}

MotionField sparse_motion(const PointCloud& cloud, const RigidTransform& lidar_to_cam, const RigidTransform& ego,
                          const CameraIntrinsics& k) {
  k.validate();
  MotionField field(k.width, k.height);
  const Mat3 rl = lidar_to_cam.rotation();
  const Vec3 tl = lidar_to_cam.translation();
  const Mat3 re = ego.rotation();
  const Vec3 te = ego.translation();

  for (const Vec3& point : cloud.points) {
    const Vec3 p = rl * point + tl;
    if (!(p.z() > kMinDepth)) continue;
    const double u0 = k.fx * p.x() / p.z() + k.cx;
    const double v0 = k.fy * p.y() / p.z() + k.cy;
    if (u0 < 0.0 || u0 >= k.width || v0 < 0.0 || v0 >= k.height) continue;
    const long px = nearest_pixel(u0);
    const long py = nearest_pixel(v0);
    if (px >= k.width || py >= k.height) continue;

    const Vec3 q = re * p + te;
    if (!(q.z() > kMinDepth)) continue;
    const double du = k.fx * q.x() / q.z() + k.cx - u0;
    const double dv = k.fy * q.y() / q.z() + k.cy - v0;

    const std::size_t idx = field.index(static_cast<int>(px), static_cast<int>(py));
    if (field.valid(idx)) {
      const double d = field.depth(idx);
      if (p.z() > d) continue;
      if (p.z() == d) {
        if (du > field.du(idx)) continue;
        if (du == field.du(idx) && dv >= field.dv(idx)) continue;
      }
    }
    field.set(idx, du, dv, p.z());
  }
  return field;
}

PointCloud merge_clouds(std::span<const PointCloud> clouds, std::span<const EgomotionEstimate> egomotions,
                        std::size_t center, const MergeSpec& spec, const RigidTransform& lidar_to_cam) {
  spec.validate();
  if (center >= clouds.size()) {
    throw Error(ErrorCode::kMissingNeighbor,
                "center frame " + std::to_string(center) + " outside sequence of " + std::to_string(clouds.size()));
  }
  std::size_t half = static_cast<std::size_t>(spec.num_clouds / 2);
  const std::size_t room = std::min(center, clouds.size() - 1 - center);
  if (room < half) {
    warn("merge window of " + std::to_string(spec.num_clouds) + " clouds around frame " + std::to_string(center) +
         " exceeds the sequence; using " + std::to_string(2 * room + 1));
    half = room;
  }

  const RigidTransform cam_to_lidar = inverse(lidar_to_cam);
  PointCloud merged = clouds[center];
  for (std::size_t offset = 1; offset <= half; ++offset) {
    for (const std::size_t neighbor : {center - offset, center + offset}) {
      const RigidTransform cam_motion = chain_egomotion(egomotions, neighbor, center);
      const RigidTransform to_center = compose(cam_to_lidar, compose(cam_motion, lidar_to_cam));
      const PointCloud moved = transform_cloud(to_center, clouds[neighbor]);
      merged.points.insert(merged.points.end(), moved.points.begin(), moved.points.end());
      merged.intensity.insert(merged.intensity.end(), moved.intensity.begin(), moved.intensity.end());
    }
  }
  return merged;
}

MotionField densify_patched(const MotionField& field, const PatchSpec& spec) {
  spec.validate();
  if (spec.patch == 1) return field;
  const int w = field.width();
  const int h = field.height();
  const int r = spec.patch / 2;
  constexpr std::int64_t kNone = -1;
  std::vector<std::int64_t> source(field.size(), kNone);

  // Sources are visited in increasing pixel index, so equal depths keep the earlier source.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t s = field.index(x, y);
      if (!field.valid(s)) continue;
      const double depth = field.depth(s);
      for (int ty = std::max(0, y - r); ty <= std::min(h - 1, y + r); ++ty) {
        for (int tx = std::max(0, x - r); tx <= std::min(w - 1, x + r); ++tx) {
          const std::size_t t = field.index(tx, ty);
          if (source[t] == kNone || depth < field.depth(static_cast<std::size_t>(source[t]))) {
            source[t] = static_cast<std::int64_t>(s);
          }
        }
      }
    }
  }

  MotionField out(w, h);
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (source[t] == kNone) continue;
    const auto s = static_cast<std::size_t>(source[t]);
    out.set(t, field.du(s), field.dv(s), field.depth(s));
  }
  return out;
}

}  // namespace lidarflow
