#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vhm/raster.hpp"

namespace vhm::codec {

using Bytes = std::vector<std::uint8_t>;

/// Decodes PNG or JPEG (detected by signature). Grayscale is promoted to RGB,
/// alpha is dropped, 16-bit samples are reduced to 8 bits.
ImageBuffer decode(std::span<const std::uint8_t> encoded);

/// Lossless PNG, RGB 8-bit, fixed compression settings (output is deterministic).
Bytes encode_png(const ImageBuffer& image);

Bytes read_file(const std::filesystem::path& path);
ImageBuffer read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

}  // namespace vhm::codec
