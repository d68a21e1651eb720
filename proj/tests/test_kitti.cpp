#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "lidarflow/error.hpp"
#include "lidarflow/io.hpp"
#include "lidarflow/kitti.hpp"
#include "lidarflow/log.hpp"
#include "support/oracles.hpp"

using namespace lidarflow;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

fs::path kitti_min() { return oracle::data_dir() / "kitti_min"; }

fs::path copy_fixture(const std::string& tag) {
  const fs::path dir = oracle::temp_dir(tag);
  fs::copy(kitti_min(), dir / "drive", fs::copy_options::recursive);
  return dir / "drive";
}

struct WarningCapture {
  std::vector<std::string> messages;
  WarningSink previous;
  WarningCapture() {
    previous = set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_sink(previous); }
};

std::vector<std::uint8_t> le_floats(std::initializer_list<float> values) {
  std::vector<std::uint8_t> out;
  for (float v : values) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  return out;
}

}  // namespace

TEST(Velodyne, DecodesLittleEndianQuadruples) {
  // 1.0f = 0x3f800000, 2.0f = 0x40000000, 3.0f = 0x40400000, 0.5f = 0x3f000000.
  const std::vector<std::uint8_t> bytes = {0, 0, 0x80, 0x3f, 0, 0, 0, 0x40, 0, 0, 0x40, 0x40, 0, 0, 0, 0x3f};
  const PointCloud pc = parse_velodyne(bytes);
  ASSERT_EQ(pc.size(), 1u);
  EXPECT_EQ(pc.points[0], Vec3(1, 2, 3));
  EXPECT_EQ(pc.intensity[0], 0.5f);
  EXPECT_EQ(encode_velodyne(pc), bytes);
  EXPECT_TRUE(parse_velodyne({}).empty());
}

TEST(Velodyne, TruncatedRecordReportsOffset) {
  auto bytes = le_floats({1, 2, 3, 0.5f, 4, 5, 6, 0.25f});
  bytes.resize(27);
  EXPECT_EQ(code_of([&] { parse_velodyne(bytes); }), ErrorCode::kMalformedRecord);
  EXPECT_NE(message_of([&] { parse_velodyne(bytes); }).find("offset 16"), std::string::npos);
  const auto nan_bytes = le_floats({1, std::nanf(""), 3, 0.5f});
  EXPECT_EQ(code_of([&] { parse_velodyne(nan_bytes); }), ErrorCode::kMalformedRecord);
}

TEST(Velodyne, RoundTripIsByteExact) {
  Rng rng(120);
  std::vector<std::uint8_t> bytes;
  for (int i = 0; i < 500; ++i) {
    const auto rec = le_floats({static_cast<float>(rng.uniform(-80, 80)), static_cast<float>(rng.uniform(-80, 80)),
                                static_cast<float>(rng.uniform(-3, 3)), static_cast<float>(rng.uniform())});
    bytes.insert(bytes.end(), rec.begin(), rec.end());
  }
  EXPECT_EQ(encode_velodyne(parse_velodyne(bytes)), bytes);
}

TEST(Oxts, ParsesVelocityAndGyroFields) {
  std::string line;
  for (int i = 0; i < 30; ++i) line += std::to_string(i + 1) + ".5 ";
  const ImuRecord r = parse_oxts_line(line, 12.0);
  EXPECT_EQ(r.timestamp, 12.0);
  // Velocities vf, vl, vu are fields 9..11; the payload is their negation.
  EXPECT_EQ(r.linear, Vec3(-9.5, -10.5, -11.5));
  EXPECT_EQ(r.gyro, Vec3(21.5, 22.5, 23.5));
  EXPECT_EQ(r.payload, ImuPayload::kVelocity);
  const ImuRecord a = parse_oxts_line(line, 12.0, true);
  EXPECT_EQ(a.linear, Vec3(-15.5, -16.5, -17.5));
  EXPECT_EQ(a.payload, ImuPayload::kAcceleration);
}

TEST(Oxts, FormatParsesBack) {
  Rng rng(121);
  for (bool accel : {false, true}) {
    ImuRecord r;
    r.timestamp = 3.25;
    r.linear = Vec3(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9));
    r.gyro = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    r.payload = accel ? ImuPayload::kAcceleration : ImuPayload::kVelocity;
    const ImuRecord back = parse_oxts_line(format_oxts_line(r), 3.25, accel);
    EXPECT_EQ(back.linear, r.linear);
    EXPECT_EQ(back.gyro, r.gyro);
  }
}

TEST(Oxts, Errors) {
  EXPECT_EQ(code_of([] { parse_oxts_line("1 2 3", 0); }), ErrorCode::kMalformedRecord);
  std::string line;
  for (int i = 0; i < 30; ++i) line += i == 7 ? "abc " : "0 ";
  EXPECT_NE(message_of([&] { parse_oxts_line(line, 0); }).find("field 8"), std::string::npos);
  std::string inf_line;
  for (int i = 0; i < 30; ++i) inf_line += i == 8 ? "inf " : "0 ";
  EXPECT_EQ(code_of([&] { parse_oxts_line(inf_line, 0); }), ErrorCode::kMalformedRecord);
}

TEST(Calibration, ParsesKeysAndSkipsText) {
  const auto m = parse_calibration_text("calib_time: 09-Jan-2012 13:57:47\nR: 1 0 0 0 1 0 0 0 1\r\n\nT: 0.5 -1e-3 +2\n");
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.at("T"), (std::vector<double>{0.5, -1e-3, 2}));
  EXPECT_EQ(m.at("R").size(), 9u);
}

TEST(Calibration, ErrorsNameTheLine) {
  const std::string no_colon = message_of([] { parse_calibration_text("R: 1 2\nT 1 2 3\n", "calib.txt"); });
  EXPECT_NE(no_colon.find("calib.txt:2"), std::string::npos);
  EXPECT_EQ(code_of([] { parse_calibration_text("T: 1 x 3\n"); }), ErrorCode::kCalibrationParseError);
  EXPECT_EQ(code_of([] { parse_calibration_text("a b: 1\n"); }), ErrorCode::kCalibrationParseError);
}

TEST(Calibration, OrthonormalizeToleratesRoundedDigits) {
  const Mat3 truth = oracle::rodrigues(Vec3(1, 2, 3).normalized(), 0.7);
  Mat3 printed = truth;
  for (int i = 0; i < 9; ++i) printed(i / 3, i % 3) = std::round(truth(i / 3, i % 3) * 1e5) / 1e5;
  const Mat3 fixed = orthonormalize(printed, "R");
  EXPECT_LT((fixed.transpose() * fixed - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((fixed - truth).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_EQ(code_of([] { orthonormalize(Mat3::Identity() * 2.0, "R"); }), ErrorCode::kCalibrationParseError);
  EXPECT_EQ(code_of([] { orthonormalize(-Mat3::Identity(), "R"); }), ErrorCode::kCalibrationParseError);
}

TEST(Timestamps, DatedAndPlain) {
  std::int64_t day = -1;
  const auto ts = parse_timestamps("2011-09-26 13:02:25.123456789\n2011-09-27 00:00:01.5\n", day);
  EXPECT_EQ(day, 15243);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_NEAR(ts[0], 13 * 3600 + 2 * 60 + 25.123456789, 1e-9);
  EXPECT_NEAR(ts[1], 86401.5, 1e-9);
  EXPECT_EQ(format_timestamp(ts[0], day), "2011-09-26 13:02:25.123456789");
  EXPECT_EQ(format_timestamp(ts[1], day), "2011-09-27 00:00:01.500000000");

  std::int64_t unused = -1;
  EXPECT_EQ(parse_timestamps("0.1\n0.2\n", unused), (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(unused, -1);
}

TEST(Timestamps, Errors) {
  std::int64_t day = -1;
  EXPECT_EQ(code_of([&] { parse_timestamps("2011-13-01 00:00:00.0\n", day); }), ErrorCode::kMalformedRecord);
  EXPECT_EQ(code_of([&] { parse_timestamps("2011-09-26 25:00:00.0\n", day); }), ErrorCode::kMalformedRecord);
  EXPECT_NE(message_of([&] { parse_timestamps("1.0\nnope\n", day, "ts.txt"); }).find("ts.txt:2"), std::string::npos);
}

TEST(KittiSequence, LoadsMinimalDrive) {
  WarningCapture warnings;
  const KittiSequence seq(kitti_min());
  EXPECT_TRUE(warnings.messages.empty());
  const SequenceManifest& m = seq.manifest();
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(m.reference_day, 15243);
  EXPECT_NEAR(m.frames[0].timestamp, 46945.0, 1e-9);
  EXPECT_NEAR(m.frames[1].timestamp - m.frames[0].timestamp, 0.1, 1e-9);

  const CameraIntrinsics& k = m.calib.intrinsics;
  EXPECT_EQ(k.fx, 50);
  EXPECT_EQ(k.fy, 50);
  EXPECT_EQ(k.cx, 4);
  EXPECT_EQ(k.cy, 3);
  EXPECT_EQ(k.width, 8);
  EXPECT_EQ(k.height, 6);

  Mat3 r;
  r << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  EXPECT_LT(max_abs_diff(m.calib.lidar_to_cam, RigidTransform(r, Vec3(0.1, -0.2, -0.3))), 1e-15);
  EXPECT_LT(max_abs_diff(m.calib.imu_to_cam, RigidTransform(r, Vec3(-0.2, 0.7, -1.1))), 1e-15);

  ASSERT_EQ(m.imu.size(), 2u);
  EXPECT_EQ(m.imu[0].linear, Vec3(-5, 0, 0));
  EXPECT_EQ(m.frames[0].imu_begin, 0u);
  EXPECT_EQ(m.frames[0].imu_end, 2u);

  const PointCloud c0 = seq.cloud(0), c1 = seq.cloud(1);
  ASSERT_EQ(c0.size(), 4u);
  ASSERT_EQ(c1.size(), 4u);
  EXPECT_EQ(c0.points[1], Vec3(6, 1, 0.5));
  EXPECT_EQ(c0.intensity[2], 1.0f);
  EXPECT_EQ(c1.points[0], Vec3(4.5, 0, 0));

  const Image img = seq.image(1);
  EXPECT_EQ(img.width, 8);
  EXPECT_EQ(img.channels, 1);
  EXPECT_EQ(img.at(2, 1), static_cast<float>((16 * 2 + 40 + 60) % 256) / 255.0f);

  const SequenceContext ctx = seq.context();
  EXPECT_EQ(ctx.frame_count(), 2u);
  EXPECT_EQ(ctx.clouds[1].timestamp, m.frames[1].timestamp);
  EXPECT_THROW(seq.context(1, 2), Error);
  EXPECT_THROW(seq.cloud(2), Error);

  const auto j = nlohmann::json::parse(manifest_to_json(m));
  EXPECT_EQ(j["frames"].size(), 2u);
  EXPECT_EQ(j["calibration"]["intrinsics"]["width"], 8);
}

TEST(KittiSequence, CloudsReEncodeByteIdentically) {
  const KittiSequence seq(kitti_min());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_EQ(encode_velodyne(seq.cloud(i)), read_file_bytes(seq.manifest().frames[i].cloud));
  }
}

TEST(KittiSequence, MissingImuCalibrationWarnsAndUsesIdentity) {
  const fs::path drive = copy_fixture("kitti_noimu");
  fs::remove(drive / "calib_imu_to_velo.txt");
  WarningCapture warnings;
  const SequenceManifest m = load_kitti_sequence(drive);
  ASSERT_EQ(warnings.messages.size(), 1u);
  EXPECT_NE(warnings.messages[0].find("calib_imu_to_velo"), std::string::npos);
  EXPECT_LT(max_abs_diff(m.calib.imu_to_cam, m.calib.lidar_to_cam), 1e-15);
  fs::remove_all(drive.parent_path());
}

TEST(KittiSequence, CalibrationInParentDirectory) {
  const fs::path drive = copy_fixture("kitti_parent");
  for (const char* name : {"calib_cam_to_cam.txt", "calib_velo_to_cam.txt", "calib_imu_to_velo.txt"}) {
    fs::rename(drive / name, drive.parent_path() / name);
  }
  EXPECT_EQ(load_kitti_sequence(drive).calib.intrinsics.fx, 50);
  fs::remove_all(drive.parent_path());
}

TEST(KittiSequence, LoadErrors) {
  EXPECT_EQ(code_of([] { load_kitti_sequence("/nonexistent/drive"); }), ErrorCode::kMissingFile);

  const fs::path drive = copy_fixture("kitti_err");
  fs::remove(drive / "velodyne_points" / "data" / "0000000001.bin");
  EXPECT_EQ(code_of([&] { load_kitti_sequence(drive); }), ErrorCode::kMissingFile);
  fs::remove_all(drive.parent_path());

  const fs::path ts = copy_fixture("kitti_ts");
  write_file_atomic(ts / "image_02" / "timestamps.txt",
                    std::string_view("2011-09-26 13:02:25.1\n2011-09-26 13:02:25.0\n"));
  EXPECT_EQ(code_of([&] { load_kitti_sequence(ts); }), ErrorCode::kNonMonotonicTimestamps);
  fs::remove_all(ts.parent_path());

  const fs::path calib = copy_fixture("kitti_calib");
  write_file_atomic(calib / "calib_velo_to_cam.txt", std::string_view("R: 1 0 0 0 1 0 0 0 1\n"));
  const std::string msg = message_of([&] { load_kitti_sequence(calib); });
  EXPECT_NE(msg.find("missing key 'T'"), std::string::npos) << msg;
  fs::remove_all(calib.parent_path());
}

TEST(KittiSequence, WrittenCalibrationLoadsBack) {
  Rng rng(122);
  Calibration calib;
  calib.intrinsics = {120, 118, 80.5, 47.25, 160, 96};
  calib.lidar_to_cam = oracle::random_rigid(rng, 3.0, 2.0);
  calib.imu_to_cam = oracle::random_rigid(rng, 3.0, 2.0);
  const fs::path drive = copy_fixture("kitti_write");
  write_kitti_calibration(drive, calib);
  // S_rect wins over the PNG size, so the fixture images still load.
  const SequenceManifest m = load_kitti_sequence(drive);
  EXPECT_EQ(m.calib.intrinsics.fx, 120);
  EXPECT_EQ(m.calib.intrinsics.cy, 47.25);
  EXPECT_EQ(m.calib.intrinsics.width, 160);
  EXPECT_LT(max_abs_diff(m.calib.lidar_to_cam, calib.lidar_to_cam), 1e-12);
  EXPECT_LT(max_abs_diff(m.calib.imu_to_cam, calib.imu_to_cam), 1e-12);
  fs::remove_all(drive.parent_path());
}

TEST(Parsers, SurviveRandomMutations) {
  // Every outcome is a value or a lidarflow::Error; anything else escapes the test.
  const std::string oxts = read_text_file(kitti_min() / "oxts" / "data" / "0000000000.txt");
  const std::string calib = read_text_file(kitti_min() / "calib_cam_to_cam.txt");
  const std::string stamps = read_text_file(kitti_min() / "oxts" / "timestamps.txt");
  const auto velo = read_file_bytes(kitti_min() / "velodyne_points" / "data" / "0000000000.bin");
  const auto png = read_file_bytes(oracle::data_dir() / "rgb_3x2.png");
  Rng rng(123);
  auto mutate = [&](auto input) {
    const int edits = 1 + static_cast<int>(rng.below(4));
    for (int e = 0; e < edits; ++e) {
      const auto op = rng.below(3);
      if (op == 0 && !input.empty()) {
        input[rng.below(input.size())] = static_cast<typename decltype(input)::value_type>(rng.below(256));
      } else if (op == 1 && !input.empty()) {
        input.erase(input.begin() + static_cast<std::ptrdiff_t>(rng.below(input.size())));
      } else {
        input.insert(input.begin() + static_cast<std::ptrdiff_t>(rng.below(input.size() + 1)),
                     static_cast<typename decltype(input)::value_type>(rng.below(256)));
      }
    }
    return input;
  };
  std::size_t errors = 0;
  for (int i = 0; i < 4000; ++i) {
    try {
      switch (i % 5) {
        case 0: parse_oxts_line(mutate(oxts), 0); break;
        case 1: parse_calibration_text(mutate(calib)); break;
        case 2: {
          std::int64_t day = -1;
          parse_timestamps(mutate(stamps), day);
          break;
        }
        case 3: parse_velodyne(mutate(velo)); break;
        case 4: decode_png(mutate(png)); break;
      }
    } catch (const Error&) {
      ++errors;
    }
  }
  EXPECT_GT(errors, 0u);
}
