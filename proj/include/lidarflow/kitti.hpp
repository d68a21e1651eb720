#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lidarflow/estimate.hpp"
#include "lidarflow/image.hpp"

namespace lidarflow {

// Buffer-level parsers. They never crash on arbitrary input; every failure is
// an Error carrying the byte offset, line or key at fault.

/// Velodyne scan: little-endian f32 quadruples (x, y, z, reflectance).
PointCloud parse_velodyne(std::span<const std::uint8_t> bytes, std::string_view source = "velodyne");
std::vector<std::uint8_t> encode_velodyne(const PointCloud& cloud);

inline constexpr std::size_t kOxtsFieldCount = 30;

/// One OXTS text record (30 whitespace-separated values). The IMU payload is
/// the negated body velocity (vf, vl, vu), or the negated acceleration
/// (af, al, au) when `acceleration` is set, so that its integral is the
/// displacement of static points relative to the rig. The gyro is (wf, wl, wu).
ImuRecord parse_oxts_line(std::string_view line, double timestamp, bool acceleration = false,
                          std::string_view source = "oxts");
/// Inverse of parse_oxts_line for the fields it reads; everything else is 0.
std::string format_oxts_line(const ImuRecord& record);

/// "key: v0 v1 ..." lines. Lines without a colon are rejected; values that are
/// not numbers (e.g. calib_time) are kept out of the map.
std::map<std::string, std::vector<double>> parse_calibration_text(std::string_view text,
                                                                  std::string_view source = "calib");

/// KITTI timestamp lines ("YYYY-MM-DD HH:MM:SS.fffffffff") or plain seconds.
/// Dated values are returned as seconds since midnight of `reference_day`
/// (days since 1970-01-01); pass -1 to use the first line's day.
std::vector<double> parse_timestamps(std::string_view text, std::int64_t& reference_day,
                                     std::string_view source = "timestamps");
std::string format_timestamp(double seconds_since_reference, std::int64_t reference_day);

/// Nearest rotation (SVD projection). Throws CalibrationParseError if the
/// input is further than 1e-3 from orthonormal.
Mat3 orthonormalize(const Mat3& r, std::string_view what);

struct FrameEntry {
  std::filesystem::path image;
  std::filesystem::path cloud;
  /// Records with timestamps in [timestamp, next frame timestamp].
  std::size_t imu_begin = 0;
  std::size_t imu_end = 0;
  double timestamp = 0.0;
};

struct SequenceManifest {
  std::filesystem::path root;
  std::string camera = "image_02";
  std::vector<FrameEntry> frames;
  Calibration calib;
  std::vector<ImuRecord> imu;
  /// Days since 1970-01-01 that timestamps are measured from.
  std::int64_t reference_day = 0;
};

struct KittiOptions {
  std::string camera = "image_02";
  /// Use OXTS accelerations instead of velocities.
  bool use_acceleration = false;
};

/// Parses a KITTI raw drive directory: <camera>/data/*.png,
/// velodyne_points/data/*.bin, oxts/data/*.txt and timestamps, with the
/// calib_*.txt files in the root or its parent.
///
/// The camera model comes from P_rect_xx; R_rect_00 and the P_rect offset are
/// folded into lidar_to_cam so that intrinsics apply to the rectified frame.
/// imu_to_cam = lidar_to_cam * imu_to_velo.
class KittiSequence {
 public:
  explicit KittiSequence(const std::filesystem::path& root, KittiOptions options = {});

  const SequenceManifest& manifest() const { return manifest_; }
  std::size_t size() const { return manifest_.frames.size(); }

  PointCloud cloud(std::size_t frame) const;
  Image image(std::size_t frame) const;

  /// Calibration, timestamps and clouds for frames [first, last], plus all IMU records.
  SequenceContext context(std::size_t first, std::size_t last) const;
  SequenceContext context() const { return context(0, size() - 1); }

 private:
  SequenceManifest manifest_;
};

SequenceManifest load_kitti_sequence(const std::filesystem::path& root, const KittiOptions& options = {});

std::string manifest_to_json(const SequenceManifest& manifest);

/// Writes calib_cam_to_cam.txt, calib_velo_to_cam.txt and calib_imu_to_velo.txt
/// for an unrectified camera (R_rect_00 = I, no P offset).
void write_kitti_calibration(const std::filesystem::path& root, const Calibration& calib,
                             std::string_view camera = "image_02");

}  // namespace lidarflow
