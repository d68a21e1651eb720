#include "lidarflow/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>

#include "lidarflow/error.hpp"

namespace lidarflow {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed: " + path.string());
  return bytes;
}

std::string read_text_file(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create directory " + path.parent_path().string());
  static thread_local std::mt19937_64 salt{std::random_device{}()};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(salt() & 0xffffff);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot rename into " + path.string());
  }
}

void write_file_atomic(const fs::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// PNG ------------------------------------------------------------------------

namespace {

struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

}  // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&png};
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kDecodeError, std::string("PNG: ") + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::kDecodeError, std::string("PNG: ") + png.message);
  }
  Image out(static_cast<int>(png.width), static_cast<int>(png.height), channels);
  for (std::size_t i = 0; i < raw.size(); ++i) out.data[i] = static_cast<float>(raw[i]) / 255.0f;
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> raw(image.data.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const float s = std::isfinite(image.data[i]) ? image.data[i] : 0.0f;
    raw[i] = static_cast<std::uint8_t>(std::lround(std::clamp(s, 0.0f, 1.0f) * 255.0f));
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  PngImageGuard guard{&png};
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, std::string("PNG encode: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, std::string("PNG encode: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image read_image(const fs::path& path) {
  try {
    return decode_png(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDecodeError) throw Error(e.code(), path.string() + ": " + e.what());
    throw;
  }
}

void write_image(const Image& image, const fs::path& path) { write_file_atomic(path, encode_png(image)); }

std::pair<int, int> png_size(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::uint8_t header[24] = {};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (in.gcount() != 24 || std::memcmp(header, kSig, 8) != 0 || std::memcmp(header + 12, "IHDR", 4) != 0) {
    throw Error(ErrorCode::kDecodeError, path.string() + ": not a PNG file");
  }
  auto be32 = [&](int off) {
    return static_cast<int>((std::uint32_t{header[off]} << 24) | (std::uint32_t{header[off + 1]} << 16) |
                            (std::uint32_t{header[off + 2]} << 8) | std::uint32_t{header[off + 3]});
  };
  return {be32(16), be32(20)};
}

// Little-endian helpers --------------------------------------------------------

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[offset + i]} << (8 * i);
  return v;
}

float get_f32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return std::bit_cast<float>(get_u32(bytes, offset));
}

constexpr std::uint32_t kMaxDimension = 1u << 16;

}  // namespace

// LFMF ------------------------------------------------------------------------

std::vector<std::uint8_t> encode_lfmf(const MotionField& field) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + field.size() * 13);
  out.insert(out.end(), {'L', 'F', 'M', 'F'});
  put_u32(out, kLfmfVersion);
  put_u32(out, static_cast<std::uint32_t>(field.width()));
  put_u32(out, static_cast<std::uint32_t>(field.height()));
  for (double v : field.du_values()) put_f32(out, static_cast<float>(v));
  for (double v : field.dv_values()) put_f32(out, static_cast<float>(v));
  for (double v : field.depth_values()) put_f32(out, static_cast<float>(v));
  for (std::uint8_t v : field.valid_mask()) out.push_back(v ? 1 : 0);
  return out;
}

MotionField decode_lfmf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "LFMF", 4) != 0) {
    throw Error(ErrorCode::kDecodeError, "LFMF: bad magic");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kLfmfVersion) throw Error(ErrorCode::kDecodeError, "LFMF: unsupported version " + std::to_string(version));
  const std::uint32_t w = get_u32(bytes, 8), h = get_u32(bytes, 12);
  if (w > kMaxDimension || h > kMaxDimension) throw Error(ErrorCode::kDecodeError, "LFMF: implausible size");
  const std::size_t n = std::size_t{w} * h;
  if (bytes.size() != 16 + n * 13) {
    throw Error(ErrorCode::kDecodeError, "LFMF: expected " + std::to_string(16 + n * 13) + " bytes, got " +
                                             std::to_string(bytes.size()));
  }
  MotionField field(static_cast<int>(w), static_cast<int>(h));
  const std::size_t du_off = 16, dv_off = du_off + 4 * n, depth_off = dv_off + 4 * n, valid_off = depth_off + 4 * n;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t valid = bytes[valid_off + i];
    if (valid > 1) throw Error(ErrorCode::kDecodeError, "LFMF: validity byte at pixel " + std::to_string(i));
    if (!valid) continue;
    field.set(i, get_f32(bytes, du_off + 4 * i), get_f32(bytes, dv_off + 4 * i), get_f32(bytes, depth_off + 4 * i));
  }
  return field;
}

void write_lfmf(const MotionField& field, const fs::path& path) { write_file_atomic(path, encode_lfmf(field)); }

MotionField read_lfmf(const fs::path& path) { return decode_lfmf(read_file_bytes(path)); }

// .flo ------------------------------------------------------------------------

std::vector<std::uint8_t> encode_flo(const MotionField& field) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + field.size() * 8);
  out.insert(out.end(), {'P', 'I', 'E', 'H'});
  put_u32(out, static_cast<std::uint32_t>(field.width()));
  put_u32(out, static_cast<std::uint32_t>(field.height()));
  for (std::size_t i = 0; i < field.size(); ++i) {
    put_f32(out, field.valid(i) ? static_cast<float>(field.du(i)) : kFloUnknown);
    put_f32(out, field.valid(i) ? static_cast<float>(field.dv(i)) : kFloUnknown);
  }
  return out;
}

MotionField decode_flo(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "PIEH", 4) != 0) {
    throw Error(ErrorCode::kDecodeError, ".flo: bad tag");
  }
  const std::uint32_t w = get_u32(bytes, 4), h = get_u32(bytes, 8);
  if (w < 1 || h < 1 || w > kMaxDimension || h > kMaxDimension) {
    throw Error(ErrorCode::kDecodeError, ".flo: implausible size");
  }
  const std::size_t n = std::size_t{w} * h;
  if (bytes.size() != 12 + 8 * n) throw Error(ErrorCode::kDecodeError, ".flo: wrong file length");
  MotionField field(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < n; ++i) {
    const float u = get_f32(bytes, 12 + 8 * i), v = get_f32(bytes, 16 + 8 * i);
    if (!std::isfinite(u) || !std::isfinite(v) || std::abs(u) >= kFloUnknown || std::abs(v) >= kFloUnknown) continue;
    field.set(i, u, v, 1.0);
  }
  return field;
}

void write_flo(const MotionField& field, const fs::path& path) { write_file_atomic(path, encode_flo(field)); }

MotionField read_flo(const fs::path& path) { return decode_flo(read_file_bytes(path)); }

}  // namespace lidarflow
