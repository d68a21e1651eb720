#include "lidarflow/synthetic.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <optional>
#include <set>

#include "lidarflow/error.hpp"
#include "lidarflow/io.hpp"
#include "lidarflow/kitti.hpp"
#include "lidarflow/random.hpp"

namespace lidarflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kSkyAlbedo = 0.75;

bool finite_vec(const Vec3& v) { return v.allFinite(); }

void check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidSpec, what);
}

void check_texture(const Texture& t, const std::string& what) {
  check(std::isfinite(t.base) && std::isfinite(t.contrast) && t.contrast >= 0.0, what + ": texture base/contrast");
  check(std::isfinite(t.scale) && t.scale > 0.0, what + ": texture scale must be > 0");
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  check(num_points >= 1, "num_points must be >= 1");
  check(frames >= 2, "frames must be >= 2, got " + std::to_string(frames));
  check(width >= 1 && height >= 1, "image size must be positive");
  check(downsample >= 1, "downsample must be >= 1");
  check(width % downsample == 0 && height % downsample == 0, "image size must be divisible by downsample");
  check(std::isfinite(focal) && focal > 0.0, "focal must be > 0");
  check(channels == 1 || channels == 3, "channels must be 1 or 3");
  check(supersample >= 1 && supersample <= 8, "supersample must be in [1, 8]");
  check(std::isfinite(frame_interval) && frame_interval > 0.0, "frame_interval must be > 0");
  check(finite_vec(rig_translation) && finite_vec(rig_rotation), "trajectory must be finite");
  check(std::abs(rig_rotation.y()) < 1.0, "pitch per frame must be below 1 rad");
  for (double s : {noise_sigma, blur_sigma, imu_gyro_noise, imu_velocity_noise}) {
    check(std::isfinite(s) && s >= 0.0, "noise and blur parameters must be >= 0");
  }
  check(std::isfinite(lidar_azimuth_fov_deg) && lidar_azimuth_fov_deg > 0.0 && lidar_azimuth_fov_deg <= 360.0,
        "lidar_azimuth_fov_deg must be in (0, 360]");
  check(std::isfinite(lidar_min_elevation_deg) && std::isfinite(lidar_max_elevation_deg) &&
            lidar_min_elevation_deg < lidar_max_elevation_deg && lidar_min_elevation_deg >= -90.0 &&
            lidar_max_elevation_deg <= 90.0,
        "lidar elevation range is invalid");
  check(std::isfinite(lidar_max_range) && lidar_max_range > 0.0, "lidar_max_range must be > 0");
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const PlanePrimitive& p = planes[i];
    const std::string what = "plane " + std::to_string(i);
    check(finite_vec(p.origin) && finite_vec(p.u) && finite_vec(p.v), what + ": non-finite geometry");
    check(p.u.norm() > 1e-12 && p.v.norm() > 1e-12, what + ": zero axis");
    check(std::abs(p.u.normalized().dot(p.v.normalized())) < 1e-9, what + ": axes must be orthogonal");
    check(std::isfinite(p.size_u) && std::isfinite(p.size_v) && p.size_u > 0.0 && p.size_v > 0.0,
          what + ": sizes must be > 0");
    check_texture(p.texture, what);
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BoxPrimitive& b = boxes[i];
    const std::string what = "box " + std::to_string(i);
    check(finite_vec(b.min) && finite_vec(b.max) && (b.max - b.min).minCoeff() > 0.0, what + ": needs min < max");
    check_texture(b.texture, what);
  }
}

// JSON ------------------------------------------------------------------------

namespace {

std::string_view blur_pattern_name(BlurPattern p) {
  switch (p) {
    case BlurPattern::kUniform: return "uniform";
    case BlurPattern::kAlternate: return "alternate";
    case BlurPattern::kRandom: return "random";
  }
  return "random";
}

Vec3 vec_from(const json& j, const std::string& key) {
  check(j.is_array() && j.size() == 3, key + " must be an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    check(j[static_cast<std::size_t>(i)].is_number(), key + " must be an array of 3 numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

json vec_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& what) {
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& [key, _] : j.items()) check(names.count(key) > 0, what + ": unknown key '" + key + "'");
}

template <typename T>
void read_number(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    check(v.is_boolean(), std::string(key) + " must be a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    check(v.is_number_integer(), std::string(key) + " must be an integer");
    if constexpr (std::is_unsigned_v<T>) check(v.is_number_unsigned(), std::string(key) + " must be non-negative");
  } else {
    check(v.is_number(), std::string(key) + " must be a number");
  }
  out = v.get<T>();
}

Texture texture_from(const json& j, const std::string& what) {
  Texture t;
  if (j.is_null()) return t;
  check(j.is_object(), what + ": texture must be an object");
  reject_unknown(j, {"base", "contrast", "scale"}, what + " texture");
  read_number(j, "base", t.base);
  read_number(j, "contrast", t.contrast);
  read_number(j, "scale", t.scale);
  return t;
}

json texture_to(const Texture& t) { return {{"base", t.base}, {"contrast", t.contrast}, {"scale", t.scale}}; }

}  // namespace

SyntheticSceneSpec parse_synthetic_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("spec is not valid JSON: ") + e.what());
  }
  check(j.is_object(), "spec must be a JSON object");
  reject_unknown(j,
                 {"seed", "num_points", "frames", "width", "height", "focal", "channels", "supersample",
                  "frame_interval", "rig_translation", "rig_rotation", "planes", "boxes", "noise_sigma",
                  "blur_sigma", "blur_pattern", "downsample", "imu_gyro_noise", "imu_velocity_noise",
                  "lidar_azimuth_fov_deg", "lidar_min_elevation_deg", "lidar_max_elevation_deg", "lidar_max_range",
                  "render_images"},
                 "spec");
  SyntheticSceneSpec s;
  try {
    read_number(j, "seed", s.seed);
    read_number(j, "num_points", s.num_points);
    read_number(j, "frames", s.frames);
    read_number(j, "width", s.width);
    read_number(j, "height", s.height);
    read_number(j, "focal", s.focal);
    read_number(j, "channels", s.channels);
    read_number(j, "supersample", s.supersample);
    read_number(j, "frame_interval", s.frame_interval);
    read_number(j, "noise_sigma", s.noise_sigma);
    read_number(j, "blur_sigma", s.blur_sigma);
    read_number(j, "downsample", s.downsample);
    read_number(j, "imu_gyro_noise", s.imu_gyro_noise);
    read_number(j, "imu_velocity_noise", s.imu_velocity_noise);
    read_number(j, "lidar_azimuth_fov_deg", s.lidar_azimuth_fov_deg);
    read_number(j, "lidar_min_elevation_deg", s.lidar_min_elevation_deg);
    read_number(j, "lidar_max_elevation_deg", s.lidar_max_elevation_deg);
    read_number(j, "lidar_max_range", s.lidar_max_range);
    read_number(j, "render_images", s.render_images);
    if (j.contains("rig_translation")) s.rig_translation = vec_from(j["rig_translation"], "rig_translation");
    if (j.contains("rig_rotation")) s.rig_rotation = vec_from(j["rig_rotation"], "rig_rotation");
    if (j.contains("blur_pattern")) {
      check(j["blur_pattern"].is_string(), "blur_pattern must be a string");
      const std::string name = j["blur_pattern"].get<std::string>();
      if (name == "uniform") {
        s.blur_pattern = BlurPattern::kUniform;
      } else if (name == "alternate") {
        s.blur_pattern = BlurPattern::kAlternate;
      } else if (name == "random") {
        s.blur_pattern = BlurPattern::kRandom;
      } else {
        check(false, "blur_pattern must be uniform, alternate or random");
      }
    }
    if (j.contains("planes")) {
      check(j["planes"].is_array(), "planes must be an array");
      for (const json& p : j["planes"]) {
        check(p.is_object(), "plane entries must be objects");
        reject_unknown(p, {"origin", "u", "v", "size", "texture"}, "plane");
        PlanePrimitive plane;
        plane.origin = vec_from(p.value("origin", json()), "plane origin");
        plane.u = vec_from(p.value("u", json()), "plane u");
        plane.v = vec_from(p.value("v", json()), "plane v");
        const json size = p.value("size", json());
        check(size.is_array() && size.size() == 2 && size[0].is_number() && size[1].is_number(),
              "plane size must be [size_u, size_v]");
        plane.size_u = size[0].get<double>();
        plane.size_v = size[1].get<double>();
        plane.texture = texture_from(p.value("texture", json()), "plane");
        s.planes.push_back(plane);
      }
    }
    if (j.contains("boxes")) {
      check(j["boxes"].is_array(), "boxes must be an array");
      for (const json& b : j["boxes"]) {
        check(b.is_object(), "box entries must be objects");
        reject_unknown(b, {"min", "max", "texture"}, "box");
        BoxPrimitive box;
        box.min = vec_from(b.value("min", json()), "box min");
        box.max = vec_from(b.value("max", json()), "box max");
        box.texture = texture_from(b.value("texture", json()), "box");
        s.boxes.push_back(box);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string synthetic_spec_to_json(const SyntheticSceneSpec& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["num_points"] = s.num_points;
  j["frames"] = s.frames;
  j["width"] = s.width;
  j["height"] = s.height;
  j["focal"] = s.focal;
  j["channels"] = s.channels;
  j["supersample"] = s.supersample;
  j["frame_interval"] = s.frame_interval;
  j["rig_translation"] = vec_to(s.rig_translation);
  j["rig_rotation"] = vec_to(s.rig_rotation);
  j["planes"] = json::array();
  for (const PlanePrimitive& p : s.planes) {
    j["planes"].push_back({{"origin", vec_to(p.origin)},
                           {"u", vec_to(p.u)},
                           {"v", vec_to(p.v)},
                           {"size", {p.size_u, p.size_v}},
                           {"texture", texture_to(p.texture)}});
  }
  j["boxes"] = json::array();
  for (const BoxPrimitive& b : s.boxes) {
    j["boxes"].push_back({{"min", vec_to(b.min)}, {"max", vec_to(b.max)}, {"texture", texture_to(b.texture)}});
  }
  j["noise_sigma"] = s.noise_sigma;
  j["blur_sigma"] = s.blur_sigma;
  j["blur_pattern"] = blur_pattern_name(s.blur_pattern);
  j["downsample"] = s.downsample;
  j["imu_gyro_noise"] = s.imu_gyro_noise;
  j["imu_velocity_noise"] = s.imu_velocity_noise;
  j["lidar_azimuth_fov_deg"] = s.lidar_azimuth_fov_deg;
  j["lidar_min_elevation_deg"] = s.lidar_min_elevation_deg;
  j["lidar_max_elevation_deg"] = s.lidar_max_elevation_deg;
  j["lidar_max_range"] = s.lidar_max_range;
  j["render_images"] = s.render_images;
  return j.dump(2) + "\n";
}

// Scene -----------------------------------------------------------------------

namespace {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  std::size_t surface = 0;
  double s = 0.0;
  double r = 0.0;
};

void default_scene(std::vector<PlanePrimitive>& planes, std::vector<BoxPrimitive>& boxes) {
  const double ground = 1.65;
  planes.push_back({Vec3(-20, ground, 0.0), Vec3::UnitX(), Vec3::UnitZ(), 40, 80, {0.45, 0.3, 1.2}});
  planes.push_back({Vec3(-7, -8, 0.0), Vec3::UnitZ(), Vec3::UnitY(), 80, 8 + ground, {0.55, 0.35, 1.6}});
  planes.push_back({Vec3(7, -8, 0.0), Vec3::UnitZ(), Vec3::UnitY(), 80, 8 + ground, {0.5, 0.35, 1.5}});
  planes.push_back({Vec3(-20, -15, 45), Vec3::UnitX(), Vec3::UnitY(), 40, 15 + ground, {0.5, 0.3, 2.5}});
  boxes.push_back({Vec3(-3.5, -0.2, 9), Vec3(-1.5, ground, 11), {0.6, 0.35, 0.8}});
  boxes.push_back({Vec3(1.0, -0.8, 14), Vec3(3.5, ground, 16), {0.4, 0.3, 0.9}});
  boxes.push_back({Vec3(-5.5, -1.5, 18), Vec3(-3.0, ground, 22), {0.55, 0.3, 1.0}});
  boxes.push_back({Vec3(1.2, 0.3, 6.0), Vec3(2.4, ground, 7.2), {0.35, 0.3, 0.6}});
  boxes.push_back({Vec3(-1.0, -2.5, 26), Vec3(1.5, ground, 30), {0.5, 0.35, 1.2}});
}

Surface make_surface(const Vec3& origin, const Vec3& u, const Vec3& v, double su, double sv, const Texture& tex,
                     Rng& rng, int channels) {
  Surface s;
  s.origin = origin;
  s.u = u.normalized();
  s.v = v.normalized();
  s.normal = s.u.cross(s.v);
  s.size_u = su;
  s.size_v = sv;
  s.texture = tex;
  for (double& p : s.phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (double& t : s.tint) t = channels == 3 ? rng.uniform(0.7, 1.0) : 1.0;
  return s;
}

std::vector<Surface> build_surfaces(const SyntheticSceneSpec& spec, Rng& rng) {
  std::vector<PlanePrimitive> planes = spec.planes;
  std::vector<BoxPrimitive> boxes = spec.boxes;
  if (planes.empty() && boxes.empty()) default_scene(planes, boxes);
  std::vector<Surface> out;
  for (const PlanePrimitive& p : planes) {
    out.push_back(make_surface(p.origin, p.u, p.v, p.size_u, p.size_v, p.texture, rng, spec.channels));
  }
  for (const BoxPrimitive& b : boxes) {
    const Vec3 lo = b.min, hi = b.max, d = hi - lo;
    const Vec3 x = Vec3::UnitX(), y = Vec3::UnitY(), z = Vec3::UnitZ();
    for (double fx : {lo.x(), hi.x()}) {
      out.push_back(make_surface(Vec3(fx, lo.y(), lo.z()), z, y, d.z(), d.y(), b.texture, rng, spec.channels));
    }
    for (double fy : {lo.y(), hi.y()}) {
      out.push_back(make_surface(Vec3(lo.x(), fy, lo.z()), x, z, d.x(), d.z(), b.texture, rng, spec.channels));
    }
    for (double fz : {lo.z(), hi.z()}) {
      out.push_back(make_surface(Vec3(lo.x(), lo.y(), fz), x, y, d.x(), d.y(), b.texture, rng, spec.channels));
    }
  }
  return out;
}

std::optional<Hit> trace(const std::vector<Surface>& surfaces, const Vec3& origin, const Vec3& dir) {
  Hit best;
  bool found = false;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const Surface& s = surfaces[i];
    const double denom = s.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = s.normal.dot(s.origin - origin) / denom;
    if (!(t > 1e-9) || t >= best.t) continue;
    const Vec3 rel = origin + t * dir - s.origin;
    const double a = s.u.dot(rel), b = s.v.dot(rel);
    if (a < 0.0 || a > s.size_u || b < 0.0 || b > s.size_v) continue;
    best = {t, i, a, b};
    found = true;
  }
  if (!found) return std::nullopt;
  return best;
}

double albedo(const Surface& s, double a, double b, int channel) {
  constexpr double k2pi = 2.0 * std::numbers::pi;
  const double l = s.texture.scale;
  const double pattern = 0.55 * std::sin(k2pi * a / l + s.phase[0]) * std::sin(k2pi * b / l + s.phase[1]) +
                         0.3 * std::sin(k2pi * (a + 0.6 * b) / (0.5 * l) + s.phase[2]) +
                         0.15 * std::sin(k2pi * (0.7 * a - b) / (0.3 * l) + s.phase[3]);
  return std::clamp((s.texture.base + s.texture.contrast * pattern) * s.tint[channel], 0.02, 0.98);
}

Vec3 pixel_ray(const CameraIntrinsics& k, double x, double y) { return Vec3((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0); }

const Mat3& axis_swap() {
  // IMU / LiDAR axes (x forward, y left, z up) expressed in camera axes.
  static const Mat3 r = (Mat3() << 0, -1, 0, 0, 0, -1, 1, 0, 0).finished();
  return r;
}

}  // namespace

Image render_view(const SyntheticSequence& seq, std::size_t frame, const CameraIntrinsics& k, int supersample) {
  if (frame >= seq.world_to_cam.size()) throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  const int c = seq.spec.channels;
  const RigidTransform cam_to_world = inverse(seq.world_to_cam[frame]);
  const Vec3 origin = cam_to_world.translation();
  const Mat3 rot = cam_to_world.rotation();
  Image out(k.width, k.height, c);
  const double inv = 1.0 / (supersample * supersample);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int sy = 0; sy < supersample; ++sy) {
        for (int sx = 0; sx < supersample; ++sx) {
          const double px = x - 0.5 + (sx + 0.5) / supersample;
          const double py = y - 0.5 + (sy + 0.5) / supersample;
          const auto hit = trace(seq.surfaces, origin, rot * pixel_ray(k, px, py));
          for (int ch = 0; ch < c; ++ch) {
            acc[ch] += hit ? albedo(seq.surfaces[hit->surface], hit->s, hit->r, ch) : kSkyAlbedo;
          }
        }
      }
      for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) = static_cast<float>(acc[ch] * inv);
    }
  }
  return out;
}

MotionField ground_truth_field(const SyntheticSequence& seq, std::size_t source, std::size_t target,
                               const CameraIntrinsics& k) {
  const std::size_t n = seq.world_to_cam.size();
  if (source >= n || target >= n) throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  const RigidTransform motion = chain_egomotion(seq.gt_egomotion, source, target);
  const RigidTransform cam_to_world = inverse(seq.world_to_cam[source]);
  const Vec3 origin = cam_to_world.translation();
  const Mat3 rot = cam_to_world.rotation();
  MotionField field(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const Vec3 ray = pixel_ray(k, x, y);
      const auto hit = trace(seq.surfaces, origin, rot * ray);
      if (!hit) continue;
      const Vec3 p = hit->t * ray;
      const Vec3 q = motion.apply(p);
      if (p.z() <= kMinDepth || q.z() <= kMinDepth) continue;
      const double du = (k.fx * q.x() / q.z() + k.cx) - (k.fx * p.x() / p.z() + k.cx);
      const double dv = (k.fy * q.y() / q.z() + k.cy) - (k.fy * p.y() / p.z() + k.cy);
      field.set(field.index(x, y), du, dv, p.z());
    }
  }
  return field;
}

MotionField ground_truth_field(const SyntheticSequence& seq, std::size_t source, std::size_t target) {
  return ground_truth_field(seq, source, target, seq.context.calib.intrinsics);
}

SyntheticSequence generate_synthetic(const SyntheticSceneSpec& spec) {
  spec.validate();
  SyntheticSequence seq;
  seq.spec = spec;

  Rng master(spec.seed);
  Rng texture_rng(master.next_u64());
  Rng lidar_rng(master.next_u64());
  Rng imu_rng(master.next_u64());
  Rng image_rng(master.next_u64());

  seq.surfaces = build_surfaces(spec, texture_rng);

  // Calibration.
  Calibration& calib = seq.context.calib;
  calib.imu_to_cam = RigidTransform(axis_swap(), Vec3(0.32, 0.72, -1.08));
  calib.lidar_to_cam = RigidTransform(axis_swap(), Vec3(0.0, -0.08, -0.27));
  seq.clean_intrinsics = {spec.focal, spec.focal, (spec.width - 1) / 2.0, (spec.height - 1) / 2.0, spec.width,
                          spec.height};
  calib.intrinsics = seq.clean_intrinsics.downsampled(spec.downsample);

  // Constant per-frame egomotion. The IMU-frame rotation is the Euler product
  // of the per-frame angles; the camera moves by rig_translation in its own frame.
  const RigidTransform& c = calib.imu_to_cam;
  const Mat3 r_imu = euler_rotation(spec.rig_rotation.x(), spec.rig_rotation.y(), spec.rig_rotation.z());
  const Mat3 r_cam = c.rotation() * r_imu * c.rotation().transpose();
  const RigidTransform ego_cam(r_cam, -(r_cam * spec.rig_translation));
  const RigidTransform ego_imu = inverse(c) * ego_cam * c;

  const auto frames = static_cast<std::size_t>(spec.frames);
  seq.gt_egomotion.assign(frames - 1, {ego_cam, EgomotionSource::kImu, 0.0});
  RigidTransform pose;
  for (std::size_t k = 0; k < frames; ++k) {
    seq.world_to_cam.push_back(pose);
    pose = ego_cam * pose;
  }

  const double dt = spec.frame_interval;
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) * dt;
    seq.context.timestamps.push_back(t);
    ImuRecord r;
    r.timestamp = t;
    r.payload = ImuPayload::kVelocity;
    r.linear = ego_imu.translation() / dt;
    r.gyro = Vec3(spec.rig_rotation.z(), spec.rig_rotation.y(), spec.rig_rotation.x()) / dt;
    if (spec.imu_velocity_noise > 0.0) {
      for (int i = 0; i < 3; ++i) r.linear[i] += imu_rng.normal(0.0, spec.imu_velocity_noise);
    }
    if (spec.imu_gyro_noise > 0.0) {
      for (int i = 0; i < 3; ++i) r.gyro[i] += imu_rng.normal(0.0, spec.imu_gyro_noise);
    }
    seq.context.imu.push_back(r);
  }

  // LiDAR: seeded random rays within the scanner's field of view.
  const double deg = std::numbers::pi / 180.0;
  const double half_az = 0.5 * spec.lidar_azimuth_fov_deg * deg;
  const double el_lo = spec.lidar_min_elevation_deg * deg, el_hi = spec.lidar_max_elevation_deg * deg;
  for (std::size_t k = 0; k < frames; ++k) {
    const RigidTransform world_from_lidar = inverse(seq.world_to_cam[k]) * calib.lidar_to_cam;
    const Vec3 origin = world_from_lidar.translation();
    const Mat3 rot = world_from_lidar.rotation();
    PointCloud cloud;
    cloud.timestamp = seq.context.timestamps[k];
    for (int i = 0; i < spec.num_points; ++i) {
      const double az = lidar_rng.uniform(-half_az, half_az);
      // Uniform in sin(elevation) so rays are uniform on the sphere band.
      const double el = std::asin(lidar_rng.uniform(std::sin(el_lo), std::sin(el_hi)));
      const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const auto hit = trace(seq.surfaces, origin, rot * dir);
      if (!hit || hit->t > spec.lidar_max_range) continue;
      const Surface& s = seq.surfaces[hit->surface];
      cloud.push_back(hit->t * dir, static_cast<float>(albedo(s, hit->s, hit->r, 0)));
    }
    seq.context.clouds.push_back(std::move(cloud));
  }

  for (std::size_t k = 0; k + 1 < frames; ++k) seq.gt_fields.push_back(ground_truth_field(seq, k, k + 1));

  if (spec.render_images) {
    for (std::size_t k = 0; k < frames; ++k) {
      seq.clean.push_back(render_view(seq, k, seq.clean_intrinsics, spec.supersample));
    }
    for (std::size_t k = 0; k < frames; ++k) {
      double sigma = 0.0;
      switch (spec.blur_pattern) {
        case BlurPattern::kUniform: sigma = spec.blur_sigma; break;
        case BlurPattern::kAlternate: sigma = k % 2 == 0 ? spec.blur_sigma : 0.0; break;
        case BlurPattern::kRandom: sigma = spec.blur_sigma * image_rng.uniform(); break;
      }
      Image frame = gaussian_blur(seq.clean[k], sigma);
      if (spec.downsample > 1) frame = downsample_box(frame, spec.downsample);
      if (spec.noise_sigma > 0.0) frame = add_gaussian_noise(frame, spec.noise_sigma, image_rng);
      seq.frames.push_back(std::move(frame));
    }
  }
  return seq;
}

void write_synthetic_kitti(const SyntheticSequence& seq, const fs::path& root, const SyntheticWriteOptions& options) {
  if (!seq.spec.render_images) {
    throw Error(ErrorCode::kInvalidSpec, "writing a KITTI layout requires render_images");
  }
  const std::int64_t day = std::chrono::sys_days(std::chrono::year{2011} / 9 / 26).time_since_epoch().count();
  auto name = [](std::size_t k, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%010zu%s", k, ext);
    return std::string(buf);
  };
  std::string stamps;
  for (double t : seq.context.timestamps) stamps += format_timestamp(t, day) + "\n";

  const std::size_t n = seq.context.timestamps.size();
  for (std::size_t k = 0; k < n; ++k) {
    write_image(seq.frames[k], root / "image_02" / "data" / name(k, ".png"));
    write_file_atomic(root / "velodyne_points" / "data" / name(k, ".bin"), encode_velodyne(seq.context.clouds[k]));
    write_file_atomic(root / "oxts" / "data" / name(k, ".txt"), format_oxts_line(seq.context.imu[k]) + "\n");
  }
  write_file_atomic(root / "image_02" / "timestamps.txt", stamps);
  write_file_atomic(root / "velodyne_points" / "timestamps.txt", stamps);
  write_file_atomic(root / "oxts" / "timestamps.txt", stamps);
  write_kitti_calibration(root, seq.context.calib);
  write_file_atomic(root / "spec.json", synthetic_spec_to_json(seq.spec));

  if (!options.ground_truth) return;
  for (std::size_t k = 0; k < n; ++k) write_image(seq.clean[k], root / "gt" / "clean" / name(k, ".png"));
  for (std::size_t k = 0; k < seq.gt_fields.size(); ++k) {
    write_lfmf(seq.gt_fields[k], root / "gt" / "flow" / name(k, ".lfmf"));
  }
  nlohmann::ordered_json ego = nlohmann::ordered_json::array();
  for (const EgomotionEstimate& e : seq.gt_egomotion) {
    nlohmann::ordered_json m = nlohmann::ordered_json::array();
    for (int r = 0; r < 4; ++r) {
      m.push_back({e.transform.matrix()(r, 0), e.transform.matrix()(r, 1), e.transform.matrix()(r, 2),
                   e.transform.matrix()(r, 3)});
    }
    ego.push_back(m);
  }
  write_file_atomic(root / "gt" / "egomotion.json", ego.dump(2) + "\n");
}

}  // namespace lidarflow
