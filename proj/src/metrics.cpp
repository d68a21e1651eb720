#include "lidarflow/metrics.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <string>

#include "lidarflow/error.hpp"

namespace lidarflow {

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  if (a.data.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

namespace {

double psnr_from_mse(double m) {
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

}  // namespace

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

double psnr_masked(const Image& a, const Image& b, std::span<const std::uint8_t> mask) {
  require_same_shape(a, b, "psnr_masked");
  if (mask.size() != a.pixel_count()) throw Error(ErrorCode::kDimensionMismatch, "psnr_masked: mask size");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    for (int c = 0; c < a.channels; ++c) {
      const std::size_t i = p * a.channels + c;
      const double d = static_cast<double>(a.data[i]) - b.data[i];
      acc += d * d;
      ++n;
    }
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return psnr_from_mse(acc / static_cast<double>(n));
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - kSsimWindow / 2;
    k[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-mode separable filtering of a w x h plane.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h) {
  static const auto k = ssim_kernel();
  const int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (std::min(a.width, a.height) < kSsimWindow) {
    throw Error(ErrorCode::kImageTooSmall, "ssim needs at least 11x11 pixels, got " + std::to_string(a.width) + "x" +
                                               std::to_string(a.height));
  }
  const Image la = to_luma(a), lb = to_luma(b);
  const int w = a.width, h = a.height;
  const std::size_t n = la.data.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = la.data[i];
    y[i] = lb.data[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, w, h), my = filter_valid(y, w, h);
  const auto sxx = filter_valid(xx, w, h), syy = filter_valid(yy, w, h), sxy = filter_valid(xy, w, h);

  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

QualityReport endpoint_error(const MotionField& est, const MotionField& gt) {
  if (est.width() != gt.width() || est.height() != gt.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "endpoint_error: field sizes differ");
  }
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!est.valid(i) || !gt.valid(i)) continue;
    acc += std::hypot(est.du(i) - gt.du(i), est.dv(i) - gt.dv(i));
    ++n;
  }
  QualityReport r;
  r.epe = n == 0 ? 0.0 : acc / static_cast<double>(n);
  r.density = est.density();
  return r;
}

QualityReport image_quality(const Image& result, const Image& reference) {
  QualityReport r;
  r.psnr_db = psnr(result, reference);
  r.ssim = ssim(result, reference);
  return r;
}

namespace {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

nlohmann::ordered_json json_value(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (!std::isfinite(*v)) return format_number(*v);
  return *v;
}

nlohmann::ordered_json to_json_object(const QualityReport& r) {
  nlohmann::ordered_json j;
  j["psnr_db"] = json_value(r.psnr_db);
  j["ssim"] = json_value(r.ssim);
  j["epe"] = json_value(r.epe);
  j["density"] = json_value(r.density);
  return j;
}

}  // namespace

std::string csv_header() { return "psnr_db,ssim,epe,density"; }

std::string to_csv_row(const QualityReport& r) {
  std::string row;
  const std::optional<double>* fields[] = {&r.psnr_db, &r.ssim, &r.epe, &r.density};
  for (std::size_t i = 0; i < 4; ++i) {
    if (i > 0) row += ',';
    if (*fields[i]) row += format_number(**fields[i]);
  }
  return row;
}

std::string to_json(const QualityReport& report) { return to_json_object(report).dump(); }

std::string to_json(const std::vector<QualityReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(to_json_object(r));
  return arr.dump(2);
}

}  // namespace lidarflow
