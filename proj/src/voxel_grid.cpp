#include "voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lidarflow::detail {
namespace {

constexpr std::int64_t kKeyOffset = std::int64_t{1} << 20;
constexpr int kMaxShell = 6;

}  // namespace

double median_spacing(std::span<const Vec3> points, std::size_t max_samples) {
  if (points.size() < 2) return 0.0;
  const std::size_t samples = std::min(max_samples, points.size());
  const std::size_t stride = points.size() / samples;
  std::vector<double> nn;
  nn.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = s * stride;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      const double d = (points[j] - points[i]).squaredNorm();
      if (d > 0.0) best = std::min(best, d);
    }
    if (std::isfinite(best)) nn.push_back(std::sqrt(best));
  }
  if (nn.empty()) return 0.0;
  auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  return *mid;
}

VoxelGrid::VoxelGrid(std::span<const Vec3> points) : points_(points) {
  if (points.empty()) return;
  Vec3 lo = points.front(), hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = (hi - lo).maxCoeff();
  cell_ = 2.0 * median_spacing(points);
  // Keep every cell index inside the 21-bit packing range.
  cell_ = std::max(cell_, extent / 1.0e6);
  if (!(cell_ > 0.0)) cell_ = 1.0;

  std::vector<std::uint64_t> keys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) keys[i] = hash_key(key_of(points[i]));
  min_ = key_of(lo);
  max_ = key_of(hi);

  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), 0u);
  std::stable_sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
  cells_.reserve(points.size());
  std::uint32_t begin = 0;
  for (std::uint32_t i = 1; i <= order_.size(); ++i) {
    if (i == order_.size() || keys[order_[i]] != keys[order_[begin]]) {
      cells_.emplace(keys[order_[begin]], Cell{begin, i});
      begin = i;
    }
  }
}

VoxelGrid::Key VoxelGrid::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_))};
}

std::uint64_t VoxelGrid::hash_key(const Key& k) {
  auto part = [](std::int64_t v) {
    return static_cast<std::uint64_t>(std::clamp<std::int64_t>(v + kKeyOffset, 0, 2 * kKeyOffset - 1));
  };
  return (part(k[0]) << 42) | (part(k[1]) << 21) | part(k[2]);
}

void VoxelGrid::scan_cell(const Key& k, const Vec3& query, Hit& best) const {
  for (int a = 0; a < 3; ++a) {
    if (k[a] < min_[a] || k[a] > max_[a]) return;
  }
  const auto it = cells_.find(hash_key(k));
  if (it == cells_.end()) return;
  for (std::uint32_t i = it->second.begin; i < it->second.end; ++i) {
    const std::uint32_t idx = order_[i];
    const double d = (points_[idx] - query).squaredNorm();
    if (d < best.distance_sq || (d == best.distance_sq && idx < best.index)) best = {idx, d};
  }
}

std::optional<VoxelGrid::Hit> VoxelGrid::brute_force(const Vec3& query) const {
  Hit best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double d = (points_[i] - query).squaredNorm();
    if (d < best.distance_sq) best = {i, d};
  }
  if (!std::isfinite(best.distance_sq)) return std::nullopt;
  return best;
}

std::optional<VoxelGrid::Hit> VoxelGrid::nearest(const Vec3& query, double max_distance) const {
  if (points_.empty()) return std::nullopt;
  const double max_sq = max_distance * max_distance;
  const Key q = key_of(query);
  std::int64_t reach = 0;
  for (int a = 0; a < 3; ++a) reach = std::max({reach, std::abs(q[a] - min_[a]), std::abs(q[a] - max_[a])});

  Hit best{0, std::numeric_limits<double>::infinity()};
  for (std::int64_t r = 0; r <= reach; ++r) {
    if (r > kMaxShell) {
      auto hit = brute_force(query);
      if (!hit || hit->distance_sq > max_sq) return std::nullopt;
      return hit;
    }
    for (std::int64_t dx = -r; dx <= r; ++dx) {
      for (std::int64_t dy = -r; dy <= r; ++dy) {
        const bool edge = std::abs(dx) == r || std::abs(dy) == r;
        for (std::int64_t dz = -r; dz <= r; dz += edge ? 1 : std::max<std::int64_t>(1, 2 * r)) {
          scan_cell({q[0] + dx, q[1] + dy, q[2] + dz}, query, best);
        }
      }
    }
    // Unvisited cells are at least r cells away from the query.
    const double bound = static_cast<double>(r) * cell_;
    if (best.distance_sq <= bound * bound) break;
    if (bound * bound > max_sq) break;
  }
  if (!std::isfinite(best.distance_sq) || best.distance_sq > max_sq) return std::nullopt;
  return best;
}

}  // namespace lidarflow::detail
