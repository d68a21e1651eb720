#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>
#include <vector>

#include "lidarflow/error.hpp"
#include "lidarflow/log.hpp"
#include "lidarflow/motion.hpp"
#include "support/oracles.hpp"

using namespace lidarflow;

namespace {

CameraIntrinsics kitti_camera() { return {721.5377, 721.5377, 609.5593, 172.854, 1242, 375}; }

// KITTI-like LiDAR mounting: x forward, y left, z up.
RigidTransform velo_to_cam() {
  Mat3 r;
  r << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  return RigidTransform(r, Vec3(0.0, -0.08, -0.27));
}

PointCloud lidar_scene(Rng& rng, std::size_t n) {
  return oracle::random_cloud(rng, n, Vec3(1, -25, -2), Vec3(60, 25, 3));
}

void expect_matches_oracle(const MotionField& f, const oracle::BruteMotion& b, double tol) {
  ASSERT_EQ(f.width(), b.width);
  ASSERT_EQ(f.height(), b.height);
  for (std::size_t i = 0; i < f.size(); ++i) {
    ASSERT_EQ(f.valid(i), b.valid[i] != 0) << "pixel " << i;
    if (!f.valid(i)) continue;
    EXPECT_NEAR(f.du(i), b.du[i], tol);
    EXPECT_NEAR(f.dv(i), b.dv[i], tol);
    EXPECT_NEAR(f.depth(i), b.depth[i], 1e-12);
  }
}

template <typename Fn>
double best_ms(int runs, Fn fn) {
  double best = 1e30;
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

struct WarningCapture {
  std::vector<std::string> messages;
  WarningSink previous;
  WarningCapture() {
    previous = set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_sink(previous); }
};

}  // namespace

TEST(MotionField, DensityTracksWrites) {
  MotionField f(4, 3);
  EXPECT_EQ(f.density(), 0.0);
  f.set(0, 1, 2, 3);
  f.set(0, 1, 2, 2);
  f.set(5, 0, 0, 1);
  EXPECT_EQ(f.valid_count(), 2u);
  EXPECT_DOUBLE_EQ(f.density(), 2.0 / 12.0);
  f.reset(0);
  f.reset(0);
  EXPECT_EQ(f.valid_count(), 1u);
  EXPECT_EQ(f.du(0), 0.0);
  EXPECT_EQ(f.depth(0), MotionField::kInvalidDepth);
  const auto mask = f.valid_mask();
  EXPECT_EQ(std::count(mask.begin(), mask.end(), 1), 1);
}

TEST(MotionField, Specs) {
  EXPECT_NO_THROW(MergeSpec{7}.validate());
  EXPECT_THROW(MergeSpec{4}.validate(), Error);
  EXPECT_THROW(MergeSpec{0}.validate(), Error);
  EXPECT_NO_THROW(PatchSpec{1}.validate());
  EXPECT_THROW(PatchSpec{2}.validate(), Error);
  EXPECT_THROW(PatchSpec{-3}.validate(), Error);
}

TEST(SparseMotion, IdentityEgomotionIsZero) {
  Rng rng(40);
  const MotionField f = sparse_motion(lidar_scene(rng, 20000), velo_to_cam(), RigidTransform::identity(), kitti_camera());
  EXPECT_GT(f.valid_count(), 1000u);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.valid(i)) continue;
    EXPECT_EQ(f.du(i), 0.0);
    EXPECT_EQ(f.dv(i), 0.0);
  }
}

TEST(SparseMotion, HandComputedTranslation) {
  CameraIntrinsics k{100, 100, 50, 50, 100, 100};
  PointCloud pc;
  pc.push_back(Vec3(0, 0, 10), 1);
  const MotionField f = sparse_motion(pc, RigidTransform::identity(), RigidTransform::translation(1, 0, 0), k);
  EXPECT_EQ(f.valid_count(), 1u);
  const std::size_t i = f.index(50, 50);
  ASSERT_TRUE(f.valid(i));
  EXPECT_DOUBLE_EQ(f.du(i), 10.0);
  EXPECT_DOUBLE_EQ(f.dv(i), 0.0);
  EXPECT_DOUBLE_EQ(f.depth(i), 10.0);
}

TEST(SparseMotion, AnchorsAtRoundedPixel) {
  CameraIntrinsics k{100, 100, 50, 50, 100, 100};
  PointCloud pc;
  pc.push_back(Vec3(0.124, -0.126, 10), 1);  // u = 51.24, v = 48.74
  pc.push_back(Vec3(0.25, 0, 10), 1);        // u = 52.5 rounds up
  const MotionField f = sparse_motion(pc, RigidTransform::identity(), RigidTransform::identity(), k);
  EXPECT_TRUE(f.valid(f.index(51, 49)));
  EXPECT_TRUE(f.valid(f.index(53, 50)));
  EXPECT_EQ(f.valid_count(), 2u);
}

TEST(SparseMotion, ExitingPointsKeepMotionEnteringPointsDont) {
  CameraIntrinsics k{100, 100, 50, 50, 100, 100};
  PointCloud pc;
  pc.push_back(Vec3(4, 0, 10), 1);   // u = 90 at t, 140 at t+1
  pc.push_back(Vec3(-6, 0, 10), 1);  // u = -10 at t
  pc.push_back(Vec3(0, 0, 0.5), 1);  // behind the near plane after moving
  const RigidTransform ego = RigidTransform::translation(5, 0, -0.45);
  const MotionField f = sparse_motion(pc, RigidTransform::identity(), ego, k);
  EXPECT_EQ(f.valid_count(), 1u);
  const std::size_t i = f.index(90, 50);
  ASSERT_TRUE(f.valid(i));
  EXPECT_NEAR(f.du(i), 100 * 9 / 9.55 + 50 - 90, 1e-9);
}

TEST(SparseMotion, NearestDepthWins) {
  CameraIntrinsics k{100, 100, 50, 50, 100, 100};
  PointCloud pc;
  pc.push_back(Vec3(0, 0, 20), 1);
  pc.push_back(Vec3(0, 0, 10), 1);
  pc.push_back(Vec3(0, 0, 30), 1);
  const MotionField f = sparse_motion(pc, RigidTransform::identity(), RigidTransform::translation(1, 0, 0), k);
  const std::size_t i = f.index(50, 50);
  EXPECT_DOUBLE_EQ(f.depth(i), 10);
  EXPECT_DOUBLE_EQ(f.du(i), 10);
}

TEST(SparseMotion, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed);
    const RigidTransform l2c = compose(oracle::random_rigid(rng, 0.05, 0.3), velo_to_cam());
    const RigidTransform ego = oracle::random_rigid(rng, 0.1, 1.5);
    CameraIntrinsics k{rng.uniform(200, 800), rng.uniform(200, 800), 0, 0, 400 + static_cast<int>(rng.below(400)),
                       200 + static_cast<int>(rng.below(200))};
    k.cx = rng.uniform(0.3, 0.7) * k.width;
    k.cy = rng.uniform(0.3, 0.7) * k.height;
    const PointCloud pc = lidar_scene(rng, 30000);
    expect_matches_oracle(sparse_motion(pc, l2c, ego, k), oracle::brute_force_motion(pc, l2c, ego, k), 1e-9);
  }
}

TEST(SparseMotion, PermutationInvariant) {
  Rng rng(41);
  PointCloud pc = lidar_scene(rng, 20000);
  // Duplicate points with different intensities create exact depth ties.
  for (int i = 0; i < 500; ++i) pc.push_back(pc.points[i], 0.25f);
  const RigidTransform ego = oracle::random_rigid(rng, 0.05, 1);
  const MotionField ref = sparse_motion(pc, velo_to_cam(), ego, kitti_camera());
  std::vector<std::size_t> order(pc.size());
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 5; ++trial) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    PointCloud shuffled;
    for (std::size_t i : order) shuffled.push_back(pc.points[i], pc.intensity[i]);
    EXPECT_TRUE(sparse_motion(shuffled, velo_to_cam(), ego, kitti_camera()) == ref);
  }
}

TEST(SparseMotion, EmptyCloudGivesEmptyField) {
  const MotionField f = sparse_motion(PointCloud{}, velo_to_cam(), RigidTransform::identity(), kitti_camera());
  EXPECT_EQ(f.valid_count(), 0u);
  EXPECT_EQ(f.size(), 1242u * 375u);
}

TEST(SparseMotion, RuntimeAndLinearScaling) {
  Rng rng(42);
  const PointCloud big = lidar_scene(rng, 260000);
  PointCloud half, frame;
  half.points.assign(big.points.begin(), big.points.begin() + 130000);
  half.intensity.assign(big.intensity.begin(), big.intensity.begin() + 130000);
  const RigidTransform ego = oracle::random_rigid(rng, 0.02, 1);
  const double t130 = best_ms(7, [&] { sparse_motion(half, velo_to_cam(), ego, kitti_camera()); });
  EXPECT_LT(t130, 50.0);

  PointCloud n1, n2;
  n1.points.assign(big.points.begin(), big.points.begin() + 100000);
  n1.intensity.assign(big.intensity.begin(), big.intensity.begin() + 100000);
  n2.points.assign(big.points.begin(), big.points.begin() + 200000);
  n2.intensity.assign(big.intensity.begin(), big.intensity.begin() + 200000);
  const double t1 = best_ms(9, [&] { sparse_motion(n1, velo_to_cam(), ego, kitti_camera()); });
  const double t2 = best_ms(9, [&] { sparse_motion(n2, velo_to_cam(), ego, kitti_camera()); });
  // The field allocation is a fixed cost; subtract the time for an empty cloud.
  const double t0 = best_ms(9, [&] { sparse_motion(PointCloud{}, velo_to_cam(), ego, kitti_camera()); });
  const double ratio = (t2 - t0) / (t1 - t0);
  RecordProperty("ms_130k", std::to_string(t130));
  RecordProperty("ratio_2n_n", std::to_string(ratio));
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 3.0);
}

TEST(MergeClouds, SingleCloudIsCenter) {
  Rng rng(43);
  std::vector<PointCloud> clouds;
  for (int i = 0; i < 3; ++i) clouds.push_back(lidar_scene(rng, 100));
  const std::vector<EgomotionEstimate> steps(2, {oracle::random_rigid(rng, 0.1, 1)});
  const PointCloud out = merge_clouds(clouds, steps, 1, MergeSpec{1}, velo_to_cam());
  EXPECT_EQ(out.points, clouds[1].points);
  EXPECT_EQ(out.intensity, clouds[1].intensity);
}

TEST(MergeClouds, StaticRigConcatenatesCopies) {
  Rng rng(44);
  const PointCloud pc = lidar_scene(rng, 50);
  const std::vector<PointCloud> clouds(3, pc);
  const std::vector<EgomotionEstimate> steps(2);
  const PointCloud out = merge_clouds(clouds, steps, 1, MergeSpec{3}, velo_to_cam());
  ASSERT_EQ(out.size(), 150u);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < pc.size(); ++i) {
      EXPECT_LT((out.points[c * 50 + i] - pc.points[i]).norm(), 1e-12);
      EXPECT_EQ(out.intensity[c * 50 + i], pc.intensity[i]);
    }
  }
}

TEST(MergeClouds, NeighborsLandOnCenterGeometry) {
  // World points observed from a moving rig: every merged cloud must coincide
  // with the center frame's view of the same world points.
  Rng rng(45);
  const PointCloud world = lidar_scene(rng, 200);
  const RigidTransform l2c = velo_to_cam();
  std::vector<EgomotionEstimate> steps;
  for (int i = 0; i < 4; ++i) steps.push_back({oracle::random_rigid(rng, 0.05, 0.8)});
  // Cloud i sees the world through the chain from frame 0 to i.
  std::vector<PointCloud> clouds;
  for (std::size_t i = 0; i < 5; ++i) {
    const RigidTransform cam_motion = chain_egomotion(steps, 0, i);
    clouds.push_back(transform_cloud(compose(inverse(l2c), compose(cam_motion, l2c)), world));
  }
  const PointCloud merged = merge_clouds(clouds, steps, 2, MergeSpec{5}, l2c);
  ASSERT_EQ(merged.size(), 1000u);
  for (std::size_t c = 0; c < 5; ++c) {
    for (std::size_t i = 0; i < world.size(); ++i) {
      EXPECT_LT((merged.points[c * 200 + i] - clouds[2].points[i]).norm(), 1e-9);
    }
  }
}

TEST(MergeClouds, ShrinksWindowAtSequenceEnds) {
  Rng rng(46);
  std::vector<PointCloud> clouds;
  for (int i = 0; i < 4; ++i) clouds.push_back(lidar_scene(rng, 10 + i));
  const std::vector<EgomotionEstimate> steps(3);
  WarningCapture capture;
  const PointCloud out = merge_clouds(clouds, steps, 1, MergeSpec{5}, velo_to_cam());
  EXPECT_EQ(out.size(), 10u + 11u + 12u);
  ASSERT_EQ(capture.messages.size(), 1u);
  EXPECT_NE(capture.messages[0].find("using 3"), std::string::npos);
}

TEST(MergeClouds, Errors) {
  std::vector<PointCloud> clouds(3);
  const std::vector<EgomotionEstimate> steps(1);
  try {
    merge_clouds(clouds, steps, 5, MergeSpec{1}, velo_to_cam());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingNeighbor);
  }
  try {
    merge_clouds(clouds, steps, 1, MergeSpec{3}, velo_to_cam());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingStep);
  }
}

TEST(DensifyPatched, PatchOneIsIdentity) {
  Rng rng(47);
  const MotionField f = sparse_motion(lidar_scene(rng, 5000), velo_to_cam(), oracle::random_rigid(rng, 0.05, 1),
                                      kitti_camera());
  EXPECT_TRUE(densify_patched(f, PatchSpec{1}) == f);
}

TEST(DensifyPatched, SinglePixelFillsBlock) {
  MotionField f(9, 9);
  f.set(f.index(4, 4), 1.5, -2.0, 7.0);
  const MotionField out = densify_patched(f, PatchSpec{3});
  EXPECT_EQ(out.valid_count(), 9u);
  for (int y = 3; y <= 5; ++y) {
    for (int x = 3; x <= 5; ++x) {
      const std::size_t i = out.index(x, y);
      EXPECT_TRUE(out.valid(i));
      EXPECT_EQ(out.du(i), 1.5);
      EXPECT_EQ(out.dv(i), -2.0);
      EXPECT_EQ(out.depth(i), 7.0);
    }
  }
}

TEST(DensifyPatched, ClipsAtBorders) {
  MotionField f(6, 5);
  f.set(f.index(0, 0), 1, 1, 1);
  EXPECT_EQ(densify_patched(f, PatchSpec{5}).valid_count(), 9u);
}

TEST(DensifyPatched, NearerDepthWinsOverlap) {
  MotionField f(12, 5);
  f.set(f.index(4, 2), 1.0, 0.0, 5.0);
  f.set(f.index(6, 2), 2.0, 0.0, 10.0);
  const MotionField out = densify_patched(f, PatchSpec{5});
  // Columns 2..6 are reached by the 5 m pixel, 7..8 only by the 10 m pixel.
  for (int y = 0; y < 5; ++y) {
    for (int x = 2; x <= 6; ++x) EXPECT_EQ(out.du(out.index(x, y)), 1.0) << x << "," << y;
    for (int x = 7; x <= 8; ++x) EXPECT_EQ(out.du(out.index(x, y)), 2.0) << x << "," << y;
  }
  // The 10 m pixel's own location was overwritten by the nearer neighbor.
  EXPECT_EQ(out.depth(out.index(6, 2)), 5.0);
  EXPECT_EQ(out.valid_count(), 7u * 5u);
}

TEST(DensifyPatched, EqualDepthKeepsLowerSourceIndex) {
  MotionField f(7, 7);
  f.set(f.index(3, 4), 2.0, 0.0, 5.0);
  f.set(f.index(3, 2), 1.0, 0.0, 5.0);  // lower linear index
  const MotionField out = densify_patched(f, PatchSpec{3});
  EXPECT_EQ(out.du(out.index(3, 3)), 1.0);
  EXPECT_EQ(out.du(out.index(3, 4)), 2.0);
}

TEST(DensifyPatched, DensityNonDecreasingInPatch) {
  Rng rng(48);
  for (int trial = 0; trial < 10; ++trial) {
    MotionField f(64, 48);
    const int n = 5 + static_cast<int>(rng.below(200));
    for (int i = 0; i < n; ++i) f.set(rng.below(f.size()), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(1, 50));
    double prev = f.density();
    for (int k : {1, 3, 5, 7, 9, 11}) {
      const MotionField d = densify_patched(f, PatchSpec{k});
      EXPECT_GE(d.density(), prev);
      prev = d.density();
      // Every output vector is a copy of some input vector at Chebyshev distance <= k / 2.
      for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 64; ++x) {
          const std::size_t i = d.index(x, y);
          if (!d.valid(i)) continue;
          bool found = false;
          for (int sy = std::max(0, y - k / 2); sy <= std::min(47, y + k / 2) && !found; ++sy) {
            for (int sx = std::max(0, x - k / 2); sx <= std::min(63, x + k / 2) && !found; ++sx) {
              const std::size_t s = f.index(sx, sy);
              found = f.valid(s) && f.du(s) == d.du(i) && f.dv(s) == d.dv(i) && f.depth(s) == d.depth(i);
            }
          }
          EXPECT_TRUE(found);
        }
      }
    }
  }
}
