#pragma once

#include <cstdint>
#include <vector>

#include "gescd/error.hpp"

namespace gescd {

/// 8-bit RGB image, row-major, interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // size = width * height * 3

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {
        if (w <= 0 || h <= 0)
            throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }

    std::uint8_t* at(int x, int y) {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    bool same_size(const Image& other) const {
        return width == other.width && height == other.height;
    }
};

/// Binary mask, one byte per pixel, values restricted to {0, 1}.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // size = width * height

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::int64_t area() const {
        std::int64_t n = 0;
        for (std::uint8_t v : data) n += v != 0;
        return n;
    }

    bool same_size(const BinaryMask& other) const {
        return width == other.width && height == other.height;
    }
};

/// Dense real-valued map used for similarity maps and intermediate float
/// imagery. Double precision so downstream statistics keep full accuracy.
struct FloatMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    FloatMap() = default;
    FloatMap(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

double luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Bilinear resize with half-pixel centers (matches the usual image-resize
/// convention). Returns the input unchanged when sizes already match.
Image resize_bilinear(const Image& src, int out_width, int out_height);

/// Nearest-neighbor resize for masks; keeps values in {0,1}.
BinaryMask resize_mask_nearest(const BinaryMask& src, int out_width, int out_height);

/// Bilinear upscale/downscale of a real-valued map (half-pixel centers).
FloatMap resize_map_bilinear(const FloatMap& src, int out_width, int out_height);

}  // namespace gescd
