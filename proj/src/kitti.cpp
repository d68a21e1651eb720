#include "lidarflow/kitti.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <json.hpp>
#include <optional>

#include "lidarflow/error.hpp"
#include "lidarflow/io.hpp"
#include "lidarflow/log.hpp"

namespace lidarflow {

namespace fs = std::filesystem;

namespace {

std::optional<double> parse_double(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = end + 1;
  }
  while (!out.empty() && split_ws(out.back()).empty()) out.pop_back();
  return out;
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string location(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

}  // namespace

// Velodyne --------------------------------------------------------------------

PointCloud parse_velodyne(std::span<const std::uint8_t> bytes, std::string_view source) {
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::kMalformedRecord, std::string(source) + ": length " + std::to_string(bytes.size()) +
                                                 " is not a multiple of 16; trailing record at byte offset " +
                                                 std::to_string(bytes.size() - bytes.size() % 16));
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.points.reserve(n);
  cloud.intensity.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float v[4];
    for (int k = 0; k < 4; ++k) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= std::uint32_t{bytes[16 * i + 4 * k + b]} << (8 * b);
      v[k] = std::bit_cast<float>(u);
      if (!std::isfinite(v[k])) {
        throw Error(ErrorCode::kMalformedRecord,
                    std::string(source) + ": non-finite value at byte offset " + std::to_string(16 * i + 4 * k));
      }
    }
    cloud.push_back(Vec3(v[0], v[1], v[2]), v[3]);
  }
  return cloud;
}

std::vector<std::uint8_t> encode_velodyne(const PointCloud& cloud) {
  cloud.validate();
  std::vector<std::uint8_t> out;
  out.reserve(cloud.size() * 16);
  auto put = [&](float f) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    put(static_cast<float>(cloud.points[i].x()));
    put(static_cast<float>(cloud.points[i].y()));
    put(static_cast<float>(cloud.points[i].z()));
    put(cloud.intensity[i]);
  }
  return out;
}

// OXTS ------------------------------------------------------------------------

namespace {

constexpr std::size_t kVf = 8, kAf = 14, kWf = 20;

}  // namespace

ImuRecord parse_oxts_line(std::string_view line, double timestamp, bool acceleration, std::string_view source) {
  const auto tokens = split_ws(line);
  if (tokens.size() != kOxtsFieldCount) {
    throw Error(ErrorCode::kMalformedRecord, std::string(source) + ": expected " + std::to_string(kOxtsFieldCount) +
                                                 " fields, got " + std::to_string(tokens.size()));
  }
  double values[kOxtsFieldCount];
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto v = parse_double(tokens[i]);
    if (!v || !std::isfinite(*v)) {
      throw Error(ErrorCode::kMalformedRecord,
                  std::string(source) + ": field " + std::to_string(i + 1) + " is not a finite number");
    }
    values[i] = *v;
  }
  ImuRecord r;
  r.timestamp = timestamp;
  const std::size_t lin = acceleration ? kAf : kVf;
  r.linear = -Vec3(values[lin], values[lin + 1], values[lin + 2]);
  r.gyro = Vec3(values[kWf], values[kWf + 1], values[kWf + 2]);
  r.payload = acceleration ? ImuPayload::kAcceleration : ImuPayload::kVelocity;
  return r;
}

std::string format_oxts_line(const ImuRecord& record) {
  double values[kOxtsFieldCount] = {};
  const std::size_t lin = record.payload == ImuPayload::kAcceleration ? kAf : kVf;
  for (int k = 0; k < 3; ++k) {
    values[lin + k] = -record.linear[k];
    values[kWf + k] = record.gyro[k];
  }
  std::string out;
  for (std::size_t i = 0; i < kOxtsFieldCount; ++i) {
    if (i) out += ' ';
    out += format_number(values[i] == 0.0 ? 0.0 : values[i]);
  }
  return out;
}

// Calibration -----------------------------------------------------------------

std::map<std::string, std::vector<double>> parse_calibration_text(std::string_view text, std::string_view source) {
  std::map<std::string, std::vector<double>> out;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string_view line = lines[n];
    if (split_ws(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::kCalibrationParseError, location(source, n + 1) + ": expected 'key: values'");
    }
    const auto key_tokens = split_ws(line.substr(0, colon));
    if (key_tokens.size() != 1) {
      throw Error(ErrorCode::kCalibrationParseError, location(source, n + 1) + ": malformed key");
    }
    const auto tokens = split_ws(line.substr(colon + 1));
    // Text-valued entries such as calib_time are skipped.
    if (tokens.empty() || !parse_double(tokens.front())) continue;
    std::vector<double> values;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto v = parse_double(tokens[i]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::kCalibrationParseError, location(source, n + 1) + ": value " + std::to_string(i + 1) +
                                                           " of '" + std::string(key_tokens[0]) +
                                                           "' is not a finite number");
      }
      values.push_back(*v);
    }
    out[std::string(key_tokens[0])] = std::move(values);
  }
  return out;
}

Mat3 orthonormalize(const Mat3& r, std::string_view what) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(Eigen::Matrix3d(r), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() < 0.0 || (q - Eigen::Matrix3d(r)).cwiseAbs().maxCoeff() > 1e-3) {
    throw Error(ErrorCode::kCalibrationParseError, std::string(what) + ": not a rotation matrix");
  }
  return q;
}

// Timestamps ------------------------------------------------------------------

namespace {

// Days since 1970-01-01 for a "YYYY-MM-DD" token.
std::optional<std::int64_t> parse_date(std::string_view token) {
  if (token.size() != 10 || token[4] != '-' || token[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [](std::string_view s, auto& v) {
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && end == s.data() + s.size();
  };
  if (!num(token.substr(0, 4), y) || !num(token.substr(5, 2), m) || !num(token.substr(8, 2), d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days(ymd).time_since_epoch().count();
}

// Seconds since midnight for "HH:MM:SS.fff".
std::optional<double> parse_clock(std::string_view token) {
  if (token.size() < 8 || token[2] != ':' || token[5] != ':') return std::nullopt;
  int h = 0, m = 0;
  auto num = [](std::string_view s, int& v) {
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && end == s.data() + s.size();
  };
  if (!num(token.substr(0, 2), h) || !num(token.substr(3, 2), m)) return std::nullopt;
  const auto s = parse_double(token.substr(6));
  if (!s || h < 0 || h > 23 || m < 0 || m > 59 || !(*s >= 0.0 && *s < 61.0)) return std::nullopt;
  return h * 3600.0 + m * 60.0 + *s;
}

}  // namespace

std::vector<double> parse_timestamps(std::string_view text, std::int64_t& reference_day, std::string_view source) {
  std::vector<double> out;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto tokens = split_ws(lines[n]);
    if (tokens.size() == 1) {
      const auto v = parse_double(tokens[0]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::kMalformedRecord, location(source, n + 1) + ": not a timestamp");
      }
      out.push_back(*v);
      continue;
    }
    if (tokens.size() != 2) throw Error(ErrorCode::kMalformedRecord, location(source, n + 1) + ": not a timestamp");
    const auto day = parse_date(tokens[0]);
    const auto secs = parse_clock(tokens[1]);
    if (!day || !secs) throw Error(ErrorCode::kMalformedRecord, location(source, n + 1) + ": not a timestamp");
    if (reference_day < 0) reference_day = *day;
    out.push_back(static_cast<double>(*day - reference_day) * 86400.0 + *secs);
  }
  return out;
}

std::string format_timestamp(double seconds_since_reference, std::int64_t reference_day) {
  const auto total_ns = static_cast<std::int64_t>(std::llround(seconds_since_reference * 1e9));
  constexpr std::int64_t kDayNs = 86'400'000'000'000;
  std::int64_t day = reference_day + total_ns / kDayNs;
  std::int64_t rem = total_ns % kDayNs;
  if (rem < 0) {
    rem += kDayNs;
    --day;
  }
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  const std::int64_t secs = rem / 1'000'000'000, ns = rem % 1'000'000'000;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02lld:%02lld:%02lld.%09lld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60), static_cast<long long>(ns));
  return buf;
}

// Sequence loading ------------------------------------------------------------

namespace {

using CalibMap = std::map<std::string, std::vector<double>>;

const std::vector<double>& require_key(const CalibMap& map, const std::string& key, std::size_t count,
                                       const fs::path& file) {
  const auto it = map.find(key);
  if (it == map.end()) {
    throw Error(ErrorCode::kCalibrationParseError, file.string() + ": missing key '" + key + "'");
  }
  if (it->second.size() != count) {
    throw Error(ErrorCode::kCalibrationParseError, file.string() + ": '" + key + "' has " +
                                                       std::to_string(it->second.size()) + " values, expected " +
                                                       std::to_string(count));
  }
  return it->second;
}

Mat3 mat3_from(const std::vector<double>& v) {
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[static_cast<std::size_t>(i)];
  return m;
}

fs::path find_calib(const fs::path& root, const std::string& name) {
  for (const fs::path& dir : {root, root.parent_path()}) {
    const fs::path p = dir / name;
    if (fs::is_regular_file(p)) return p;
  }
  throw Error(ErrorCode::kMissingFile, "calibration file " + name + " not found in " + root.string() + " or its parent");
}

CalibMap read_calib(const fs::path& path) { return parse_calibration_text(read_text_file(path), path.string()); }

RigidTransform rigid_from(const std::vector<double>& r, const std::vector<double>& t, const fs::path& file) {
  return RigidTransform(orthonormalize(mat3_from(r), file.string()), Vec3(t[0], t[1], t[2]));
}

std::vector<fs::path> list_files(const fs::path& dir, std::string_view extension) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kMissingFile, "directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::vector<double>> read_timestamps_if_present(const fs::path& path, std::int64_t& reference_day) {
  if (!fs::is_regular_file(path)) return std::nullopt;
  return parse_timestamps(read_text_file(path), reference_day, path.string());
}

void require_count(const std::vector<double>& ts, std::size_t count, const fs::path& path) {
  if (ts.size() != count) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + std::to_string(ts.size()) + " timestamps for " +
                                                 std::to_string(count) + " files");
  }
}

void require_increasing(const std::vector<double>& ts, const std::string& what) {
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (!(ts[i] > ts[i - 1])) {
      throw Error(ErrorCode::kNonMonotonicTimestamps, what + ": timestamp " + std::to_string(i + 1) +
                                                          " does not increase");
    }
  }
}

Calibration load_calibration(const fs::path& root, const std::string& camera, const std::string& first_image) {
  const std::string cam = camera.size() >= 2 ? camera.substr(camera.size() - 2) : camera;
  const fs::path c2c_path = find_calib(root, "calib_cam_to_cam.txt");
  const fs::path v2c_path = find_calib(root, "calib_velo_to_cam.txt");
  const CalibMap c2c = read_calib(c2c_path);
  const CalibMap v2c = read_calib(v2c_path);

  const auto& p = require_key(c2c, "P_rect_" + cam, 12, c2c_path);
  Calibration calib;
  CameraIntrinsics& k = calib.intrinsics;
  k.fx = p[0];
  k.cx = p[2];
  k.fy = p[5];
  k.cy = p[6];
  if (std::abs(p[1]) > 1e-9 || std::abs(p[4]) > 1e-9 || std::abs(p[8]) > 1e-9 || std::abs(p[9]) > 1e-9 ||
      std::abs(p[10] - 1.0) > 1e-9) {
    throw Error(ErrorCode::kCalibrationParseError, c2c_path.string() + ": P_rect_" + cam + " is not a pinhole matrix");
  }
  if (const auto it = c2c.find("S_rect_" + cam); it != c2c.end() && it->second.size() == 2) {
    k.width = static_cast<int>(std::lround(it->second[0]));
    k.height = static_cast<int>(std::lround(it->second[1]));
  } else {
    std::tie(k.width, k.height) = png_size(first_image);
  }
  try {
    k.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCalibrationParseError, c2c_path.string() + ": " + e.what());
  }

  // Rectification and the projection offset (stereo baseline) are folded into
  // the extrinsics so that K applies to rectified camera coordinates.
  Mat3 r_rect = Mat3::Identity();
  if (const auto it = c2c.find("R_rect_00"); it != c2c.end()) {
    if (it->second.size() != 9) {
      throw Error(ErrorCode::kCalibrationParseError, c2c_path.string() + ": 'R_rect_00' needs 9 values");
    }
    r_rect = orthonormalize(mat3_from(it->second), c2c_path.string() + " R_rect_00");
  }
  const double tz = p[11];
  const Vec3 offset((p[3] - k.cx * tz) / k.fx, (p[7] - k.cy * tz) / k.fy, tz);
  const RigidTransform rect(r_rect, offset);

  const RigidTransform velo_to_cam =
      rigid_from(require_key(v2c, "R", 9, v2c_path), require_key(v2c, "T", 3, v2c_path), v2c_path);
  calib.lidar_to_cam = rect * velo_to_cam;

  RigidTransform imu_to_velo;
  fs::path i2v_path;
  try {
    i2v_path = find_calib(root, "calib_imu_to_velo.txt");
  } catch (const Error&) {
    warn("calib_imu_to_velo.txt not found under " + root.string() + "; assuming identity IMU-to-LiDAR transform");
  }
  if (!i2v_path.empty()) {
    const CalibMap i2v = read_calib(i2v_path);
    imu_to_velo = rigid_from(require_key(i2v, "R", 9, i2v_path), require_key(i2v, "T", 3, i2v_path), i2v_path);
  }
  calib.imu_to_cam = calib.lidar_to_cam * imu_to_velo;
  return calib;
}

}  // namespace

SequenceManifest load_kitti_sequence(const fs::path& root, const KittiOptions& options) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::kMissingFile, "dataset root not found: " + root.string());
  SequenceManifest m;
  m.root = root;
  m.camera = options.camera;

  const fs::path image_dir = root / options.camera / "data";
  const fs::path velo_dir = root / "velodyne_points" / "data";
  const fs::path oxts_dir = root / "oxts" / "data";
  const auto images = list_files(image_dir, ".png");
  if (images.empty()) throw Error(ErrorCode::kMissingFile, "no PNG frames in " + image_dir.string());
  if (!fs::is_directory(velo_dir)) throw Error(ErrorCode::kMissingFile, "directory not found: " + velo_dir.string());

  std::int64_t reference_day = -1;
  const fs::path frame_ts_path = root / options.camera / "timestamps.txt";
  std::vector<double> frame_ts;
  if (auto ts = read_timestamps_if_present(frame_ts_path, reference_day)) {
    frame_ts = std::move(*ts);
    require_count(frame_ts, images.size(), frame_ts_path);
  } else {
    warn(frame_ts_path.string() + " not found; assuming uniform 10 Hz frame timestamps");
    for (std::size_t i = 0; i < images.size(); ++i) frame_ts.push_back(0.1 * static_cast<double>(i));
  }
  require_increasing(frame_ts, frame_ts_path.string());
  if (reference_day < 0) reference_day = 0;
  m.reference_day = reference_day;

  for (std::size_t i = 0; i < images.size(); ++i) {
    FrameEntry e;
    e.image = images[i];
    e.cloud = velo_dir / (images[i].stem().string() + ".bin");
    if (!fs::is_regular_file(e.cloud)) throw Error(ErrorCode::kMissingFile, "missing point cloud " + e.cloud.string());
    e.timestamp = frame_ts[i];
    m.frames.push_back(std::move(e));
  }

  const auto oxts_files = list_files(oxts_dir, ".txt");
  const fs::path oxts_ts_path = root / "oxts" / "timestamps.txt";
  std::vector<double> oxts_ts;
  if (auto ts = read_timestamps_if_present(oxts_ts_path, reference_day)) {
    oxts_ts = std::move(*ts);
    require_count(oxts_ts, oxts_files.size(), oxts_ts_path);
  } else {
    warn(oxts_ts_path.string() + " not found; assuming OXTS records share the frame timestamps");
    if (oxts_files.size() != frame_ts.size()) {
      throw Error(ErrorCode::kMalformedRecord, oxts_dir.string() + ": record count differs from frame count");
    }
    oxts_ts = frame_ts;
  }
  require_increasing(oxts_ts, oxts_ts_path.string());
  for (std::size_t i = 0; i < oxts_files.size(); ++i) {
    const std::string text = read_text_file(oxts_files[i]);
    const auto lines = split_lines(text);
    if (lines.empty()) throw Error(ErrorCode::kMalformedRecord, location(oxts_files[i].string(), 1) + ": empty record");
    m.imu.push_back(parse_oxts_line(lines.front(), oxts_ts[i], options.use_acceleration,
                                    location(oxts_files[i].string(), 1)));
  }

  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    const double t0 = m.frames[i].timestamp;
    const double t1 = i + 1 < m.frames.size() ? m.frames[i + 1].timestamp : t0;
    const auto by_time = [](const ImuRecord& r, double t) { return r.timestamp < t; };
    m.frames[i].imu_begin =
        static_cast<std::size_t>(std::lower_bound(m.imu.begin(), m.imu.end(), t0, by_time) - m.imu.begin());
    m.frames[i].imu_end = static_cast<std::size_t>(
        std::upper_bound(m.imu.begin(), m.imu.end(), t1,
                         [](double t, const ImuRecord& r) { return t < r.timestamp; }) -
        m.imu.begin());
  }

  m.calib = load_calibration(root, options.camera, images.front().string());
  return m;
}

KittiSequence::KittiSequence(const fs::path& root, KittiOptions options)
    : manifest_(load_kitti_sequence(root, options)) {}

PointCloud KittiSequence::cloud(std::size_t frame) const {
  if (frame >= size()) throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  const FrameEntry& e = manifest_.frames[frame];
  PointCloud c = parse_velodyne(read_file_bytes(e.cloud), e.cloud.string());
  c.timestamp = e.timestamp;
  return c;
}

Image KittiSequence::image(std::size_t frame) const {
  if (frame >= size()) throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  return read_image(manifest_.frames[frame].image);
}

SequenceContext KittiSequence::context(std::size_t first, std::size_t last) const {
  if (first > last || last >= size()) throw Error(ErrorCode::kInvalidArgument, "frame range out of bounds");
  SequenceContext ctx;
  ctx.calib = manifest_.calib;
  ctx.imu = manifest_.imu;
  for (std::size_t i = first; i <= last; ++i) {
    ctx.timestamps.push_back(manifest_.frames[i].timestamp);
    ctx.clouds.push_back(cloud(i));
  }
  return ctx;
}

std::string manifest_to_json(const SequenceManifest& m) {
  using nlohmann::ordered_json;
  auto mat = [](const RigidTransform& t) {
    ordered_json rows = ordered_json::array();
    for (int r = 0; r < 4; ++r) {
      ordered_json row = ordered_json::array();
      for (int c = 0; c < 4; ++c) row.push_back(t.matrix()(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  const CameraIntrinsics& k = m.calib.intrinsics;
  ordered_json j;
  j["root"] = m.root.string();
  j["camera"] = m.camera;
  j["reference_day"] = m.reference_day;
  j["calibration"] = {
      {"intrinsics",
       {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
      {"lidar_to_cam", mat(m.calib.lidar_to_cam)},
      {"imu_to_cam", mat(m.calib.imu_to_cam)}};
  ordered_json frames = ordered_json::array();
  for (const FrameEntry& e : m.frames) {
    frames.push_back({{"image", e.image.string()},
                      {"cloud", e.cloud.string()},
                      {"timestamp", e.timestamp},
                      {"imu", {e.imu_begin, e.imu_end}}});
  }
  j["frames"] = std::move(frames);
  j["imu_records"] = m.imu.size();
  return j.dump(2) + "\n";
}

void write_kitti_calibration(const fs::path& root, const Calibration& calib, std::string_view camera) {
  const std::string cam = camera.size() >= 2 ? std::string(camera.substr(camera.size() - 2)) : std::string(camera);
  auto row = [](std::initializer_list<double> values) {
    std::string s;
    for (double v : values) s += " " + format_number(v);
    return s;
  };
  auto rt = [&](const RigidTransform& t) {
    const Mat3 r = t.rotation();
    const Vec3 p = t.translation();
    return "R:" + row({r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)}) +
           "\nT:" + row({p.x(), p.y(), p.z()}) + "\n";
  };
  const CameraIntrinsics& k = calib.intrinsics;
  const std::string stamp = "calib_time: 01-Jan-2000 00:00:00\n";
  write_file_atomic(root / "calib_cam_to_cam.txt",
                    stamp + "S_rect_" + cam + ":" + row({double(k.width), double(k.height)}) + "\nR_rect_00:" +
                        row({1, 0, 0, 0, 1, 0, 0, 0, 1}) + "\nP_rect_" + cam + ":" +
                        row({k.fx, 0, k.cx, 0, 0, k.fy, k.cy, 0, 0, 0, 1, 0}) + "\n");
  write_file_atomic(root / "calib_velo_to_cam.txt", stamp + rt(calib.lidar_to_cam));
  write_file_atomic(root / "calib_imu_to_velo.txt", stamp + rt(inverse(calib.lidar_to_cam) * calib.imu_to_cam));
}

}  // namespace lidarflow
