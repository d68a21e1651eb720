#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <system_error>

#include <unistd.h>

namespace oracle {

namespace fs = std::filesystem;

Mat3 rodrigues(const Vec3& axis, double angle) {
  const Vec3 n = axis.normalized();
  Mat3 k;
  k << 0, -n.z(), n.y(), n.z(), 0, -n.x(), -n.y(), n.x(), 0;
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
}

double rotation_distance(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near 0; use the skew part for small angles.
  const Mat3 d = a.transpose() * b;
  const double s = 0.5 * Vec3(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)).norm();
  return std::atan2(s, c);
}

Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

RigidTransform random_rigid(Rng& rng, double max_angle, double max_translation) {
  const Vec3 axis = random_unit(rng);
  const double angle = rng.uniform(0.0, max_angle);
  const Vec3 t(rng.uniform(-max_translation, max_translation), rng.uniform(-max_translation, max_translation),
               rng.uniform(-max_translation, max_translation));
  return RigidTransform(rodrigues(axis, angle), t);
}

PointCloud random_cloud(Rng& rng, std::size_t n, const Vec3& lo, const Vec3& hi) {
  PointCloud pc;
  for (std::size_t i = 0; i < n; ++i) {
    pc.push_back(Vec3(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), rng.uniform(lo.z(), hi.z())),
                 static_cast<float>(rng.uniform()));
  }
  return pc;
}

PointCloud structured_cloud(Rng& rng, std::size_t n) {
  struct Box {
    Vec3 lo, hi;
  };
  const Box boxes[] = {{{2, -3, -1}, {4, -1, 1.5}}, {{5, 1, -1}, {6.5, 3.5, 0.5}}, {{-4, -2, -1}, {-2.5, 0.5, 2.5}}};
  PointCloud pc;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t pick = rng.below(4);
    Vec3 p;
    if (pick == 3) {
      p = Vec3(rng.uniform(-8, 8), rng.uniform(-8, 8), -1.0);
    } else {
      const Box& b = boxes[pick];
      p = Vec3(rng.uniform(b.lo.x(), b.hi.x()), rng.uniform(b.lo.y(), b.hi.y()), rng.uniform(b.lo.z(), b.hi.z()));
      const int axis = static_cast<int>(rng.below(3));
      p[axis] = rng.below(2) ? b.hi[axis] : b.lo[axis];
    }
    pc.push_back(p, static_cast<float>(rng.uniform()));
  }
  return pc;
}

namespace {

void apply_h(const lidarflow::Mat4& m, const double in[3], double out[3]) {
  for (int r = 0; r < 3; ++r) {
    double acc = m(r, 3);
    for (int c = 0; c < 3; ++c) acc += m(r, c) * in[c];
    out[r] = acc;
  }
}

}  // namespace

BruteMotion brute_force_motion(const PointCloud& cloud, const RigidTransform& lidar_to_cam, const RigidTransform& ego,
                               const CameraIntrinsics& k) {
  BruteMotion out;
  out.width = k.width;
  out.height = k.height;
  const std::size_t n = static_cast<std::size_t>(k.width) * k.height;
  out.du.assign(n, 0);
  out.dv.assign(n, 0);
  out.depth.assign(n, 0);
  out.valid.assign(n, 0);
  for (const Vec3& pt : cloud.points) {
    const double in[3] = {pt.x(), pt.y(), pt.z()};
    double a[3], b[3];
    apply_h(lidar_to_cam.matrix(), in, a);
    apply_h(ego.matrix(), a, b);
    if (a[2] <= 0.1 || b[2] <= 0.1) continue;
    const double u0 = k.fx * (a[0] / a[2]) + k.cx, v0 = k.fy * (a[1] / a[2]) + k.cy;
    const double u1 = k.fx * (b[0] / b[2]) + k.cx, v1 = k.fy * (b[1] / b[2]) + k.cy;
    if (!(u0 >= 0 && u0 < k.width && v0 >= 0 && v0 < k.height)) continue;
    const double rx = std::round(u0), ry = std::round(v0);
    // Halves round up, matching the documented anchoring.
    const long px = static_cast<long>(u0 - std::floor(u0) == 0.5 ? std::ceil(u0) : rx);
    const long py = static_cast<long>(v0 - std::floor(v0) == 0.5 ? std::ceil(v0) : ry);
    if (px >= k.width || py >= k.height) continue;
    const std::size_t i = static_cast<std::size_t>(py) * k.width + px;
    const double du = u1 - u0, dv = v1 - v0;
    bool take = !out.valid[i];
    if (!take) {
      take = a[2] < out.depth[i] ||
             (a[2] == out.depth[i] && (du < out.du[i] || (du == out.du[i] && dv < out.dv[i])));
    }
    if (take) {
      out.valid[i] = 1;
      out.du[i] = du;
      out.dv[i] = dv;
      out.depth[i] = a[2];
    }
  }
  return out;
}

std::vector<int> splat_counts(const MotionField& field) {
  const int w = field.width(), h = field.height();
  std::vector<int> counts(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!field.valid_mask()[i]) continue;
      const double tx = std::floor(x + field.du_values()[i] + 0.5);
      const double ty = std::floor(y + field.dv_values()[i] + 0.5);
      if (tx < 0 || ty < 0 || tx >= w || ty >= h) continue;
      ++counts[static_cast<std::size_t>(ty) * w + static_cast<std::size_t>(tx)];
    }
  }
  return counts;
}

double reference_mse(const Image& a, const Image& b) {
  long double sum = 0, comp = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const long double d = static_cast<long double>(a.data[i]) - b.data[i];
    const long double y = d * d - comp;
    const long double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return static_cast<double>(sum / a.data.size());
}

namespace {

std::vector<double> luma(const Image& img) {
  std::vector<double> out(img.pixel_count());
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (img.channels == 1) {
      out[p] = img.data[p];
    } else {
      const float* s = &img.data[p * 3];
      out[p] = 0.299 * s[0] + 0.587 * s[1] + 0.114 * s[2];
    }
  }
  return out;
}

}  // namespace

double reference_ssim(const Image& a, const Image& b) {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  double win[kSize][kSize];
  double total = 0;
  for (int j = 0; j < kSize; ++j) {
    for (int i = 0; i < kSize; ++i) {
      const double dx = i - 5, dy = j - 5;
      win[j][i] = std::exp(-(dx * dx + dy * dy) / (2 * kSigma * kSigma));
      total += win[j][i];
    }
  }
  for (auto& row : win) {
    for (double& v : row) v /= total;
  }
  const std::vector<double> la = luma(a), lb = luma(b);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const int w = a.width, h = a.height;
  double acc = 0;
  int count = 0;
  for (int y0 = 0; y0 + kSize <= h; ++y0) {
    for (int x0 = 0; x0 + kSize <= w; ++x0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = 0; j < kSize; ++j) {
        for (int i = 0; i < kSize; ++i) {
          const std::size_t p = static_cast<std::size_t>(y0 + j) * w + (x0 + i);
          const double g = win[j][i];
          ma += g * la[p];
          mb += g * lb[p];
          saa += g * la[p] * la[p];
          sbb += g * lb[p] * lb[p];
          sab += g * la[p] * lb[p];
        }
      }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return acc / count;
}

Image random_image(Rng& rng, int width, int height, int channels) {
  Image img(width, height, channels);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

Image smooth_image(Rng& rng, int width, int height, int channels) {
  Image img(width, height, channels);
  for (int c = 0; c < channels; ++c) {
    double fx[3], fy[3], ph[3];
    for (int k = 0; k < 3; ++k) {
      fx[k] = rng.uniform(0.02, 0.3);
      fy[k] = rng.uniform(0.02, 0.3);
      ph[k] = rng.uniform(0, 2 * std::numbers::pi);
    }
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += std::sin(fx[k] * x + fy[k] * y + ph[k]);
        img.at(x, y, c) = static_cast<float>(0.5 + 0.4 * s / 3.0);
      }
    }
  }
  return img;
}

fs::path temp_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("lidarflow_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                   std::to_string(counter++));
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  return dir;
}

fs::path data_dir() { return LIDARFLOW_TEST_DATA; }

std::uint64_t directory_hash(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const fs::path& rel : files) {
    for (char c : rel.generic_string()) mix(static_cast<unsigned char>(c));
    mix(0);
    std::ifstream in(root / rel, std::ios::binary);
    for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) mix(static_cast<unsigned char>(*it));
  }
  return h;
}

}  // namespace oracle
