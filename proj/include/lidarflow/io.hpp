#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lidarflow/image.hpp"
#include "lidarflow/motion.hpp"

namespace lidarflow {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it into
/// place, creating parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

// PNG (8-bit gray or RGB). Reading maps samples to [0, 1]; other PNG color
// types are converted to gray (no alpha) or RGB. Writing rounds to nearest.
Image decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& image);
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

/// Width and height from a PNG header without decoding pixels.
std::pair<int, int> png_size(const std::filesystem::path& path);

// MotionField container "LFMF": magic, u32 version, u32 width, u32 height,
// then du, dv, depth as f32 planes (row-major) and one byte per pixel for
// validity; all little-endian.
inline constexpr std::uint32_t kLfmfVersion = 1;
std::vector<std::uint8_t> encode_lfmf(const MotionField& field);
MotionField decode_lfmf(std::span<const std::uint8_t> bytes);
void write_lfmf(const MotionField& field, const std::filesystem::path& path);
MotionField read_lfmf(const std::filesystem::path& path);

// Middlebury ".flo": "PIEH", i32 width, i32 height, interleaved f32 (u, v).
// Invalid pixels are written as 1e9 and read back as invalid; depth is not
// stored, so valid pixels read back with depth 1.
inline constexpr float kFloUnknown = 1e9f;
std::vector<std::uint8_t> encode_flo(const MotionField& field);
MotionField decode_flo(std::span<const std::uint8_t> bytes);
void write_flo(const MotionField& field, const std::filesystem::path& path);
MotionField read_flo(const std::filesystem::path& path);

}  // namespace lidarflow
