#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "palmline/image.hpp"

namespace palmline {

/// Decodes PNG or JPEG (detected from the leading bytes) to 8-bit RGB.
/// Throws IoError for unsupported or corrupt data.
ImageRgb decode_image(std::span<const std::uint8_t> bytes);
ImageRgb read_image(const std::filesystem::path& path);

/// 8-bit PNG encoders; image values are rounded and clamped to [0, 255],
/// masks are written as 0 / 255 grayscale.
std::vector<std::uint8_t> encode_png(const ImageRgb& image);
std::vector<std::uint8_t> encode_png(const BinaryMask& mask);

}  // namespace palmline
