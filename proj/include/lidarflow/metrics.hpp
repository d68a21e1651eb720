#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidarflow/image.hpp"
#include "lidarflow/motion.hpp"

namespace lidarflow {

/// Mean squared error over all samples of all channels.
double mse(const Image& a, const Image& b);

/// 10 log10(1 / MSE) with a peak of 1.0, over all channels jointly.
/// Identical images give +infinity. Throws DimensionMismatch.
double psnr(const Image& a, const Image& b);

/// PSNR restricted to pixels where mask != 0 (all channels of those pixels).
double psnr_masked(const Image& a, const Image& b, std::span<const std::uint8_t> mask);

/// Single-scale SSIM on luma with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, averaged over all full-window
/// positions. Throws DimensionMismatch and ImageTooSmall (min side < 11).
double ssim(const Image& a, const Image& b);

/// Metric bundle; absent entries were not measured.
struct QualityReport {
  std::optional<double> psnr_db;
  std::optional<double> ssim;
  std::optional<double> epe;
  std::optional<double> density;
};

/// Mean endpoint error over pixels valid in both fields, plus the density of
/// `est`. With no shared pixel the epe is 0.
QualityReport endpoint_error(const MotionField& est, const MotionField& gt);

QualityReport image_quality(const Image& result, const Image& reference);

/// Column order is fixed: psnr_db, ssim, epe, density.
std::string csv_header();
std::string to_csv_row(const QualityReport& report);
std::string to_json(const QualityReport& report);
std::string to_json(const std::vector<QualityReport>& reports);

}  // namespace lidarflow
