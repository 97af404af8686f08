#pragma once

#include <filesystem>

#include "irstd/image.hpp"

namespace irstd::io {

/// Read an 8- or 16-bit single-channel PNG or binary PGM (P5). Values are
/// divided by 255 or 65535. Multi-channel PNGs are rejected.
/// Throws LoadError naming the path on any failure.
GrayImage read_image(const std::filesystem::path& path);

/// Read a mask image; any nonzero pixel is foreground.
BinaryMask read_mask(const std::filesystem::path& path);

enum class BitDepth { Eight = 8, Sixteen = 16 };

/// Write values clamped to [0,1] and quantized to the chosen depth. The
/// format follows the extension: .png or .pgm.
void write_image(const std::filesystem::path& path, const GrayImage& img,
                 BitDepth depth = BitDepth::Sixteen);

/// Write a mask as an 8-bit image with values {0,255}.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace irstd::io
