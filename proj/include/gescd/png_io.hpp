#pragma once

#include <string>

#include "gescd/image.hpp"

namespace gescd {

/// Reads an 8-bit PNG as RGB (grayscale and palette inputs are expanded,
/// alpha is stripped). Throws Error{Io} on unreadable or garbled files.
Image read_image(const std::string& path);

void write_image(const Image& image, const std::string& path);

/// Reads an 8-bit PNG as a binary mask: intensity > 127 becomes 1.
BinaryMask read_mask(const std::string& path);

/// Writes a mask as single-channel PNG with values {0, 255}.
void write_mask(const BinaryMask& mask, const std::string& path);

}  // namespace gescd
