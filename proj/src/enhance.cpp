#include "lidarflow/enhance.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "lidarflow/error.hpp"
#include "lidarflow/warp.hpp"

namespace lidarflow {

std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kDenoise: return "denoise";
    case TaskKind::kSuperres: return "superres";
    case TaskKind::kDeblurProxy: return "deblur";
  }
  return "?";
}

TaskKind parse_task(std::string_view name) {
  std::string norm;
  for (char c : name) norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (norm == "denoise") return TaskKind::kDenoise;
  if (norm == "superres" || norm == "sr") return TaskKind::kSuperres;
  if (norm == "deblur" || norm == "deblur_proxy") return TaskKind::kDeblurProxy;
  throw Error(ErrorCode::kInvalidArgument, "unknown task '" + std::string(name) + "'");
}

void EnhanceTask::validate() const {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "window must be odd and >= 1, got " + std::to_string(window));
  }
  if (sr_factor < 1) throw Error(ErrorCode::kInvalidArgument, "sr_factor must be >= 1");
}

namespace {

void check_window(std::span<const Image> frames, std::span<const MotionField> fields, std::size_t center,
                  std::size_t min_frames, const char* what) {
  if (frames.size() < min_frames) {
    throw Error(ErrorCode::kWindowTooSmall, std::string(what) + " needs at least " + std::to_string(min_frames) +
                                                " frames, got " + std::to_string(frames.size()));
  }
  if (fields.size() != frames.size()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": one motion field per frame required");
  }
  if (center >= frames.size()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": center out of range");
  for (const Image& f : frames) require_same_shape(f, frames[center], what);
}

// Pinholes from the nearest-pixel splat are filled from the warped image
// itself; center pixels dropped into them read as edges to the tile selection.
Image compensate_filled(const Image& src, const MotionField& field, const Image& fallback) {
  WarpedImage warped = forward_warp(src, field);
  Image& img = warped.image;
  std::vector<std::uint8_t>& covered = warped.coverage;
  const int w = img.width, h = img.height, c = img.channels;
  std::vector<double> acc(static_cast<std::size_t>(c));
  for (int pass = 0; pass < kDeblurFillPasses && warped.hole_count > 0; ++pass) {
    std::vector<std::uint8_t> next = covered;
    Image filled = img;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t d = static_cast<std::size_t>(y) * w + x;
        if (covered[d]) continue;
        std::fill(acc.begin(), acc.end(), 0.0);
        int n = 0;
        for (int yy = std::max(0, y - 1); yy <= std::min(h - 1, y + 1); ++yy) {
          for (int xx = std::max(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
            const std::size_t e = static_cast<std::size_t>(yy) * w + xx;
            if (!covered[e]) continue;
            for (int ch = 0; ch < c; ++ch) acc[ch] += img.data[e * c + ch];
            ++n;
          }
        }
        if (n == 0) continue;
        for (int ch = 0; ch < c; ++ch) filled.data[d * c + ch] = static_cast<float>(acc[ch] / n);
        next[d] = 1;
        --warped.hole_count;
      }
    }
    img = std::move(filled);
    covered = std::move(next);
  }
  for (std::size_t d = 0; d < covered.size(); ++d) {
    if (covered[d]) continue;
    for (int ch = 0; ch < c; ++ch) img.data[d * c + ch] = fallback.data[d * c + ch];
  }
  return std::move(img);
}

}  // namespace

Image denoise_temporal(std::span<const Image> frames, std::span<const MotionField> fields, std::size_t center) {
  check_window(frames, fields, center, 1, "denoise_temporal");
  const Image& ref = frames[center];
  const int c = ref.channels;
  std::vector<double> acc(ref.data.begin(), ref.data.end());
  std::vector<int> count(ref.pixel_count(), 1);

  for (std::size_t j = 0; j < frames.size(); ++j) {
    if (j == center) continue;
    const WarpedImage warped = forward_warp(frames[j], fields[j]);
    const std::vector<std::uint8_t> occluded = occlusion_mask(fields[j]);
    for (std::size_t p = 0; p < ref.pixel_count(); ++p) {
      if (!warped.coverage[p] || occluded[p]) continue;
      for (int ch = 0; ch < c; ++ch) acc[p * c + ch] += warped.image.data[p * c + ch];
      ++count[p];
    }
  }

  Image out(ref.width, ref.height, c);
  for (std::size_t p = 0; p < ref.pixel_count(); ++p) {
    for (int ch = 0; ch < c; ++ch) {
      out.data[p * c + ch] = static_cast<float>(std::clamp(acc[p * c + ch] / count[p], 0.0, 1.0));
    }
  }
  return out;
}

Image superres_shift_add(std::span<const Image> frames, std::span<const MotionField> fields, std::size_t center,
                         int factor) {
  check_window(frames, fields, center, 1, "superres_shift_add");
  if (factor < 1) throw Error(ErrorCode::kInvalidArgument, "superres factor must be >= 1");
  const Image& ref = frames[center];
  const int c = ref.channels;
  const int hw = ref.width * factor, hh = ref.height * factor;
  const double f = factor;
  const double center_shift = (f - 1.0) / 2.0;
  std::vector<double> acc(static_cast<std::size_t>(hw) * hh * c, 0.0);
  std::vector<double> weight(static_cast<std::size_t>(hw) * hh, 0.0);

  for (std::size_t j = 0; j < frames.size(); ++j) {
    const MotionField& field = fields[j];
    if (j != center && (field.width() != ref.width || field.height() != ref.height)) {
      throw Error(ErrorCode::kDimensionMismatch, "superres_shift_add: field size differs from frames");
    }
    for (int y = 0; y < ref.height; ++y) {
      for (int x = 0; x < ref.width; ++x) {
        double du = 0.0, dv = 0.0;
        if (j != center) {
          const std::size_t i = field.index(x, y);
          if (!field.valid(i)) continue;
          du = field.du(i);
          dv = field.dv(i);
        }
        const double px = f * (x + du) + center_shift;
        const double py = f * (y + dv) + center_shift;
        const double fx0 = std::floor(px), fy0 = std::floor(py);
        const double ax = px - fx0, ay = py - fy0;
        const long x0 = static_cast<long>(fx0), y0 = static_cast<long>(fy0);
        for (int b = 0; b < 2; ++b) {
          for (int a = 0; a < 2; ++a) {
            const double w = (a ? ax : 1.0 - ax) * (b ? ay : 1.0 - ay);
            const long hx = x0 + a, hy = y0 + b;
            if (w <= 0.0 || hx < 0 || hy < 0 || hx >= hw || hy >= hh) continue;
            const std::size_t hp = static_cast<std::size_t>(hy) * hw + hx;
            for (int ch = 0; ch < c; ++ch) acc[hp * c + ch] += w * frames[j].at(x, y, ch);
            weight[hp] += w;
          }
        }
      }
    }
  }

  const Image fill = upsample_bicubic(ref, factor);
  Image out(hw, hh, c);
  for (std::size_t p = 0; p < weight.size(); ++p) {
    for (int ch = 0; ch < c; ++ch) {
      out.data[p * c + ch] = weight[p] < kSuperresMinWeight
                                 ? fill.data[p * c + ch]
                                 : static_cast<float>(std::clamp(acc[p * c + ch] / weight[p], 0.0, 1.0));
    }
  }
  return out;
}

namespace {

// Squared 4-neighbor Laplacian of the luma, per pixel.
std::vector<double> laplacian_map(const Image& image) {
  const Image luma = to_luma(image);
  const int w = luma.width, h = luma.height;
  std::vector<double> out(luma.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double lap = luma.at(std::max(x - 1, 0), y) + luma.at(std::min(x + 1, w - 1), y) +
                         luma.at(x, std::max(y - 1, 0)) + luma.at(x, std::min(y + 1, h - 1)) - 4.0 * luma.at(x, y);
      out[static_cast<std::size_t>(y) * w + x] = lap * lap;
    }
  }
  return out;
}

// Linear feather: 1 inside [lo, hi), falling by 1/(feather+1) per pixel outside.
double feather_weight(int p, int lo, int hi) {
  const int dist = p < lo ? lo - p : (p >= hi ? p - hi + 1 : 0);
  return std::max(0.0, 1.0 - static_cast<double>(dist) / (kDeblurFeather + 1));
}

}  // namespace

Image deblur_proxy(std::span<const Image> frames, std::span<const MotionField> fields, std::size_t center) {
  check_window(frames, fields, center, 3, "deblur_proxy");
  const Image& ref = frames[center];
  const int w = ref.width, h = ref.height, c = ref.channels;

  std::vector<Image> candidates{ref};
  for (std::size_t j = 0; j < frames.size(); ++j) {
    if (j != center) candidates.push_back(compensate_filled(frames[j], fields[j], ref));
  }

  const int tiles_x = (w + kDeblurTile - 1) / kDeblurTile;
  const int tiles_y = (h + kDeblurTile - 1) / kDeblurTile;
  std::vector<std::vector<double>> tile_energy(candidates.size(),
                                               std::vector<double>(static_cast<std::size_t>(tiles_x) * tiles_y, 0.0));
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const std::vector<double> lap = laplacian_map(candidates[k]);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        tile_energy[k][static_cast<std::size_t>(y / kDeblurTile) * tiles_x + x / kDeblurTile] +=
            lap[static_cast<std::size_t>(y) * w + x];
      }
    }
  }
  // Ties keep the earliest candidate, i.e. the center frame first.
  std::vector<std::size_t> choice(static_cast<std::size_t>(tiles_x) * tiles_y, 0);
  for (std::size_t t = 0; t < choice.size(); ++t) {
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      if (tile_energy[k][t] > tile_energy[choice[t]][t]) choice[t] = k;
    }
  }

  Image out(w, h, c);
  const int reach = kDeblurFeather;
  for (int y = 0; y < h; ++y) {
    const int ty0 = std::max(0, (y - reach) / kDeblurTile);
    const int ty1 = std::min(tiles_y - 1, (y + reach) / kDeblurTile);
    for (int x = 0; x < w; ++x) {
      const int tx0 = std::max(0, (x - reach) / kDeblurTile);
      const int tx1 = std::min(tiles_x - 1, (x + reach) / kDeblurTile);
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0, wsum = 0.0;
        bool uniform = true;
        float first = 0.0f;
        for (int ty = ty0; ty <= ty1; ++ty) {
          const double wy = feather_weight(y, ty * kDeblurTile, (ty + 1) * kDeblurTile);
          if (wy <= 0.0) continue;
          for (int tx = tx0; tx <= tx1; ++tx) {
            const double wx = feather_weight(x, tx * kDeblurTile, (tx + 1) * kDeblurTile);
            if (wx <= 0.0) continue;
            const float v = candidates[choice[static_cast<std::size_t>(ty) * tiles_x + tx]].at(x, y, ch);
            if (wsum == 0.0) first = v;
            uniform = uniform && v == first;
            acc += wx * wy * v;
            wsum += wx * wy;
          }
        }
        // Exact passthrough where every contributing tile agrees.
        out.at(x, y, ch) = uniform ? first : static_cast<float>(std::clamp(acc / wsum, 0.0, 1.0));
      }
    }
  }
  return out;
}

Image enhance(const EnhanceTask& task, std::span<const Image> frames, std::span<const MotionField> fields,
              std::size_t center) {
  task.validate();
  switch (task.kind) {
    case TaskKind::kDenoise: return denoise_temporal(frames, fields, center);
    case TaskKind::kSuperres: return superres_shift_add(frames, fields, center, task.sr_factor);
    case TaskKind::kDeblurProxy: return deblur_proxy(frames, fields, center);
  }
  return frames[center];
}

}  // namespace lidarflow
