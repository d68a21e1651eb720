#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lidarflow/geometry.hpp"

namespace lidarflow::detail {

// Uniform hash grid for exact nearest-neighbor queries. Cell size is twice
// the median nearest-neighbor spacing of the indexed points.
class VoxelGrid {
 public:
  struct Hit {
    std::size_t index;
    double distance_sq;
  };

  explicit VoxelGrid(std::span<const Vec3> points);

  /// Exact nearest neighbor within max_distance, if any.
  std::optional<Hit> nearest(const Vec3& query, double max_distance) const;

  double cell_size() const { return cell_; }

 private:
  struct Cell {
    std::uint32_t begin;
    std::uint32_t end;
  };
  using Key = std::array<std::int64_t, 3>;

  Key key_of(const Vec3& p) const;
  static std::uint64_t hash_key(const Key& k);
  void scan_cell(const Key& k, const Vec3& query, Hit& best) const;
  std::optional<Hit> brute_force(const Vec3& query) const;

  std::span<const Vec3> points_;
  double cell_ = 1.0;
  Key min_{}, max_{};
  std::vector<std::uint32_t> order_;
  std::unordered_map<std::uint64_t, Cell> cells_;
};

/// Median distance from a deterministic sample of points to their nearest neighbor.
double median_spacing(std::span<const Vec3> points, std::size_t max_samples = 256);

}  // namespace lidarflow::detail
